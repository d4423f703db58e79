//! Benchmark generators.
//!
//! * Benchmark 1: a random letter word `s`, the equation `s = s`, then rounds
//!   of replacing a substring on one side by 1 to 5 fresh variables. The
//!   values removed become the witness, so every instance is SAT.
//! * Benchmark 2: the chain equation
//!   `Xn a Xn b Xn-1 ... b X1 = a Xn Xn-1 Xn-1 b ... b X1 X1 b a a`, with each
//!   `b` replaced by one side of a Benchmark 1 equation.
//! * Benchmark 3: a conjunction of Benchmark 1 equations over one variable
//!   pool.
//!
//! Every generator is a pure function of its configuration and seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::format::Problem;
use crate::terms::{Assignment, Equation, Formula, Symbol, SymbolTable, Term, Word};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Alphabet size |C|; letters are `a`, `b`, ...
    pub letters: usize,
    /// Variable pool size |V|; variables are `V1`, `V2`, ...
    pub vars: usize,
    /// Maximum length of the initial word.
    pub k: usize,
    pub rounds: usize,
    pub conjuncts: usize,
    /// Chain length for Benchmark 2.
    pub n: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            letters: 2,
            vars: 8,
            k: 12,
            rounds: 3,
            conjuncts: 2,
            n: 3,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(GenError::Config(what.into()))
            }
        };
        check(
            self.letters >= 1 && self.letters <= 26,
            "letters must be in 1..=26",
        )?;
        check(self.vars >= 1, "vars must be at least 1")?;
        check(self.k >= 1, "k must be at least 1")?;
        check(self.conjuncts >= 1, "conjuncts must be at least 1")?;
        check(self.n >= 1, "n must be at least 1")
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GenConfig {
            seed,
            ..self.clone()
        }
    }
}

/// A generated instance: the problem and, for Benchmark 1, a witness.
#[derive(Clone, Debug)]
pub struct Instance {
    pub problem: Problem,
    pub witness: Option<Assignment>,
}

fn alphabet(symbols: &mut SymbolTable, n: usize) -> Vec<Symbol> {
    (0..n)
        .map(|i| symbols.letter(&((b'a' + i as u8) as char).to_string()))
        .collect()
}

/// Generates one Benchmark 1 equation into `symbols`, drawing fresh variables
/// from the pool `V1..V{vars}`.
fn bench1_equation<R: Rng>(
    rng: &mut R,
    cfg: &GenConfig,
    symbols: &mut SymbolTable,
    letters: &[Symbol],
) -> (Equation, Assignment) {
    let len = rng.gen_range(1..=cfg.k);
    let s: Word = (0..len)
        .map(|_| Term::Letter(letters[rng.gen_range(0..letters.len())]))
        .collect();
    let mut sides = [s.clone(), s];
    let mut witness = Assignment::new();
    let mut next_var = 0usize;
    for _ in 0..cfg.rounds {
        if next_var >= cfg.vars {
            break;
        }
        let side = &mut sides[rng.gen_range(0..2)];
        if side.is_empty() {
            continue;
        }
        let i = rng.gen_range(0..side.len());
        let j = rng.gen_range(i + 1..=side.len());
        let value: Word = side[i..j]
            .iter()
            .flat_map(|&t| match t {
                Term::Var(x) => witness.get(x).cloned().unwrap_or_default(),
                letter => vec![letter],
            })
            .collect();
        let count = rng.gen_range(1..=5).min(cfg.vars - next_var);
        let mut cuts: Vec<usize> = (1..count).map(|_| rng.gen_range(0..=value.len())).collect();
        cuts.sort_unstable();
        cuts.insert(0, 0);
        cuts.push(value.len());
        let mut fresh = Vec::with_capacity(count);
        for c in cuts.windows(2) {
            next_var += 1;
            let v = symbols.var(&format!("V{next_var}"));
            witness.set(v, value[c[0]..c[1]].to_vec());
            fresh.push(Term::Var(v));
        }
        side.splice(i..j, fresh);
    }
    let [lhs, rhs] = sides;
    let eq = Equation::new(lhs, rhs);
    let present = Formula::new(vec![eq.clone()]).variables();
    (eq, witness.restrict(&present))
}

pub fn gen_benchmark1(cfg: &GenConfig) -> Result<Instance, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut symbols = SymbolTable::new();
    let letters = alphabet(&mut symbols, cfg.letters);
    let (eq, witness) = bench1_equation(&mut rng, cfg, &mut symbols, &letters);
    Ok(Instance {
        problem: Problem::new(symbols, Formula::new(vec![eq])),
        witness: Some(witness),
    })
}

/// The chain equation for `n` over the given `a`, `b` and variables `X1..Xn`.
pub fn track02(n: usize, symbols: &mut SymbolTable) -> Equation {
    let a = Term::Letter(symbols.letter("a"));
    let b = Term::Letter(symbols.letter("b"));
    let x: Vec<Term> = (1..=n)
        .map(|i| Term::Var(symbols.var(&format!("X{i}"))))
        .collect();
    let xi = |i: usize| x[i - 1];
    let mut lhs = vec![xi(n), a, xi(n)];
    for i in (1..n).rev() {
        lhs.extend([b, xi(i)]);
    }
    let mut rhs = vec![a, xi(n)];
    for i in (1..n).rev() {
        if i < n - 1 {
            rhs.push(b);
        }
        rhs.extend([xi(i), xi(i)]);
    }
    rhs.extend([b, a, a]);
    Equation::new(lhs, rhs)
}

pub fn gen_benchmark2(cfg: &GenConfig) -> Result<Instance, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut symbols = SymbolTable::new();
    let letters = alphabet(&mut symbols, cfg.letters.max(2));
    let chain = track02(cfg.n, &mut symbols);
    let (e, _) = bench1_equation(&mut rng, cfg, &mut symbols, &letters);
    let b = Term::Letter(letters[1]);
    let mut replace = |w: &Word| -> Word {
        w.iter()
            .flat_map(|&t| {
                if t == b {
                    if rng.gen_bool(0.5) {
                        e.lhs.clone()
                    } else {
                        e.rhs.clone()
                    }
                } else {
                    vec![t]
                }
            })
            .collect()
    };
    let eq = Equation::new(replace(&chain.lhs), replace(&chain.rhs));
    Ok(Instance {
        problem: Problem::new(symbols, Formula::new(vec![eq])),
        witness: None,
    })
}

/// Each conjunct draws from the same pool `V1..V{vars}`, so later conjuncts
/// reuse the variable names of earlier ones.
pub fn gen_benchmark3(cfg: &GenConfig) -> Result<Instance, GenError> {
    cfg.validate()?;
    if cfg.conjuncts < 2 {
        return Err(GenError::Config(
            "Benchmark 3 needs at least 2 conjuncts".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut symbols = SymbolTable::new();
    let letters = alphabet(&mut symbols, cfg.letters);
    let equations = (0..cfg.conjuncts)
        .map(|_| bench1_equation(&mut rng, cfg, &mut symbols, &letters).0)
        .collect();
    Ok(Instance {
        problem: Problem::new(symbols, Formula::new(equations)),
        witness: None,
    })
}

pub fn generate(benchmark: u8, cfg: &GenConfig) -> Result<Instance, GenError> {
    match benchmark {
        1 => gen_benchmark1(cfg),
        2 => gen_benchmark2(cfg),
        3 => gen_benchmark3(cfg),
        other => Err(GenError::Config(format!("unknown benchmark {other}"))),
    }
}

/// Uniform random formula for tests: sides of length `0..=max_side` over
/// letters `a..` and variables `X, Y, Z` (then `V4, V5, ...`).
pub fn random_formula<R: Rng>(
    rng: &mut R,
    n_letters: usize,
    n_vars: usize,
    max_side: usize,
    n_eqs: usize,
) -> (SymbolTable, Formula) {
    let mut symbols = SymbolTable::new();
    let mut pool: Vec<Term> = alphabet(&mut symbols, n_letters)
        .into_iter()
        .map(Term::Letter)
        .collect();
    for i in 0..n_vars {
        let name = match i {
            0 => "X".to_string(),
            1 => "Y".to_string(),
            2 => "Z".to_string(),
            _ => format!("V{}", i + 1),
        };
        pool.push(Term::Var(symbols.var(&name)));
    }
    let word = |rng: &mut R| -> Word {
        let len = rng.gen_range(0..=max_side);
        (0..len)
            .map(|_| pool[rng.gen_range(0..pool.len())])
            .collect()
    };
    let equations = (0..n_eqs)
        .map(|_| {
            let lhs = word(rng);
            Equation::new(lhs, word(rng))
        })
        .collect();
    (symbols, Formula::new(equations))
}

/// Witness file text: one `name = value` line per variable, `ε` for empty.
pub fn witness_text(a: &Assignment, symbols: &SymbolTable) -> String {
    let mut out = String::new();
    for (v, w) in a.iter() {
        let value = if w.is_empty() {
            "ε".to_string()
        } else {
            symbols.word_string(w)
        };
        out.push_str(&format!("{} = {}\n", symbols.var_name(v), value));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::check_assignment;

    fn text(inst: &Instance) -> String {
        inst.problem.to_text()
    }

    #[test]
    fn bench1_witness_checks() {
        for seed in 0..300 {
            let cfg = GenConfig {
                seed,
                rounds: 4,
                ..GenConfig::default()
            };
            let inst = gen_benchmark1(&cfg).unwrap();
            let w = inst.witness.as_ref().unwrap();
            assert!(
                check_assignment(&inst.problem.formula, w).unwrap(),
                "seed {seed}: {}",
                text(&inst)
            );
        }
    }

    #[test]
    fn bench1_without_rounds_is_trivial() {
        let inst = gen_benchmark1(&GenConfig {
            rounds: 0,
            ..GenConfig::default()
        })
        .unwrap();
        let eq = &inst.problem.formula.equations[0];
        assert_eq!(eq.lhs, eq.rhs);
        assert!(inst.witness.unwrap().is_empty());
    }

    #[test]
    fn bench1_deterministic() {
        let cfg = GenConfig {
            seed: 42,
            k: 8,
            rounds: 2,
            ..GenConfig::default()
        };
        assert_eq!(
            text(&gen_benchmark1(&cfg).unwrap()),
            text(&gen_benchmark1(&cfg).unwrap())
        );
    }

    #[test]
    fn bench1_respects_pool() {
        for seed in 0..50 {
            let cfg = GenConfig {
                seed,
                vars: 3,
                rounds: 10,
                ..GenConfig::default()
            };
            let inst = gen_benchmark1(&cfg).unwrap();
            assert!(inst.problem.symbols.variable_count() <= 3);
        }
    }

    #[test]
    fn chain_instances() {
        let mut st = SymbolTable::new();
        let eq = track02(2, &mut st);
        assert_eq!(st.word_string(&eq.lhs), "X2aX2bX1");
        assert_eq!(st.word_string(&eq.rhs), "aX2X1X1baa");
        let mut st = SymbolTable::new();
        let eq = track02(1, &mut st);
        assert_eq!(st.word_string(&eq.lhs), "X1aX1");
        assert_eq!(st.word_string(&eq.rhs), "aX1baa");
        let mut st = SymbolTable::new();
        let eq = track02(4, &mut st);
        assert_eq!(st.word_string(&eq.lhs), "X4aX4bX3bX2bX1");
        assert_eq!(st.word_string(&eq.rhs), "aX4X3X3bX2X2bX1X1baa");
    }

    #[test]
    fn chain_has_one_trailing_baa() {
        for n in 1..8 {
            let mut st = SymbolTable::new();
            let eq = track02(n, &mut st);
            let rhs = st.word_string(&eq.rhs);
            assert!(rhs.ends_with("baa"));
            assert_eq!(rhs.matches("baa").count(), 1);
        }
    }

    #[test]
    fn bench2_replaces_every_b() {
        for seed in 0..20 {
            let cfg = GenConfig {
                seed,
                n: 3,
                ..GenConfig::default()
            };
            let a = gen_benchmark2(&cfg).unwrap();
            assert_eq!(text(&a), text(&gen_benchmark2(&cfg).unwrap()));
            let f = &a.problem.formula;
            assert_eq!(f.equations.len(), 1);
            let x3 = a.problem.symbols.lookup_var("X3").unwrap();
            assert!(f.variables().contains(&x3));
        }
    }

    #[test]
    fn bench3_shares_pool() {
        let cfg = GenConfig {
            seed: 7,
            conjuncts: 3,
            vars: 4,
            rounds: 3,
            ..GenConfig::default()
        };
        let inst = gen_benchmark3(&cfg).unwrap();
        assert_eq!(inst.problem.formula.equations.len(), 3);
        assert!(inst.problem.symbols.variable_count() <= 4);
        assert!(inst.witness.is_none());
        assert!(gen_benchmark3(&GenConfig {
            conjuncts: 1,
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn round_trips_through_text() {
        for b in 1..=3 {
            let inst = generate(
                b,
                &GenConfig {
                    seed: 3,
                    ..GenConfig::default()
                },
            )
            .unwrap();
            let back = Problem::parse(&text(&inst)).unwrap();
            assert_eq!(back.formula, inst.problem.formula);
        }
    }

    #[test]
    fn invalid_config() {
        assert!(gen_benchmark1(&GenConfig {
            k: 0,
            ..GenConfig::default()
        })
        .is_err());
        assert!(generate(4, &GenConfig::default()).is_err());
    }
}
