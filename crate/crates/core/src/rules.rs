//! Split rules R1–R9.
//!
//! Only the first equation of a formula is ever rewritten. Dispatch is a total
//! case analysis on the heads of its two sides:
//!
//! | first equation | rule |
//! |---|---|
//! | none (`true`) | R1 → SAT |
//! | `ε = ε` | R2 |
//! | `X·u = ε` (mirrored `ε = X·u`) | R3 |
//! | `a·u = ε` (mirrored `ε = a·u`) | R4 → UNSAT |
//! | `a·u = a·v` | R5 |
//! | `a·u = b·v` | R6 → UNSAT |
//! | `a·u = X·v` (mirrored `X·u = a·v`) | R7, two branches |
//! | `X·u = Y·v` | R8, three branches |
//! | `X·u = X·v` | R9 |
//!
//! R7 and R8 cancel the shared leading term inside the rule, so every
//! conclusion's first equation is already stripped of it.

use std::fmt;

use crate::oracle::{BruteForce, OracleError};
use crate::terms::{
    check_assignment, Assignment, Equation, Formula, Substitution, Symbol, SymbolTable, Term, Word,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseRule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
}

impl BaseRule {
    pub const ALL: [BaseRule; 9] = [
        BaseRule::R1,
        BaseRule::R2,
        BaseRule::R3,
        BaseRule::R4,
        BaseRule::R5,
        BaseRule::R6,
        BaseRule::R7,
        BaseRule::R8,
        BaseRule::R9,
    ];

    pub fn has_mirror(self) -> bool {
        matches!(self, BaseRule::R3 | BaseRule::R4 | BaseRule::R7)
    }

    /// Rules whose only conclusions are SAT/UNSAT verdicts.
    pub fn is_terminal(self) -> bool {
        matches!(self, BaseRule::R1 | BaseRule::R4 | BaseRule::R6)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId {
    pub base: BaseRule,
    pub mirrored: bool,
}

impl RuleId {
    /// Panics if `mirrored` is requested for a rule without a symmetric variant.
    pub fn new(base: BaseRule, mirrored: bool) -> Self {
        assert!(
            !mirrored || base.has_mirror(),
            "{base:?} has no mirrored variant"
        );
        RuleId { base, mirrored }
    }

    pub fn direct(base: BaseRule) -> Self {
        RuleId::new(base, false)
    }

    pub fn mirrored(base: BaseRule) -> Self {
        RuleId::new(base, true)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.base)?;
        if self.mirrored {
            f.write_str("/mirrored")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conclusion {
    Formula(Formula),
    Sat,
    Unsat,
}

impl Conclusion {
    pub fn formula(&self) -> Option<&Formula> {
        match self {
            Conclusion::Formula(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub conclusion: Conclusion,
    /// Binds at most one variable.
    pub cond: Substitution,
    pub fresh: Vec<Symbol>,
}

impl Branch {
    fn plain(conclusion: Conclusion) -> Self {
        Branch {
            conclusion,
            cond: Substitution::new(),
            fresh: Vec::new(),
        }
    }
}

/// A rule applied to a premise. `branches` is in the fixed presentation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleApplication {
    pub rule: RuleId,
    pub branches: Vec<Branch>,
}

impl RuleApplication {
    pub fn is_split(&self) -> bool {
        self.branches.len() > 1
    }
}

pub fn match_rule(phi: &Formula) -> RuleId {
    use BaseRule::*;
    let Some(eq) = phi.first() else {
        return RuleId::direct(R1);
    };
    match (eq.lhs.first(), eq.rhs.first()) {
        (None, None) => RuleId::direct(R2),
        (Some(Term::Var(_)), None) => RuleId::direct(R3),
        (None, Some(Term::Var(_))) => RuleId::mirrored(R3),
        (Some(Term::Letter(_)), None) => RuleId::direct(R4),
        (None, Some(Term::Letter(_))) => RuleId::mirrored(R4),
        (Some(Term::Letter(a)), Some(Term::Letter(b))) => {
            RuleId::direct(if a == b { R5 } else { R6 })
        }
        (Some(Term::Letter(_)), Some(Term::Var(_))) => RuleId::direct(R7),
        (Some(Term::Var(_)), Some(Term::Letter(_))) => RuleId::mirrored(R7),
        (Some(Term::Var(x)), Some(Term::Var(y))) => RuleId::direct(if x == y { R9 } else { R8 }),
    }
}

/// Builds `(first ∧ rest)` with `cond` applied to everything.
fn conclude(first: Equation, rest: &[Equation], cond: &Substitution) -> Formula {
    let mut eqs = Vec::with_capacity(rest.len() + 1);
    eqs.push(cond.apply_equation(&first));
    eqs.extend(rest.iter().map(|e| cond.apply_equation(e)));
    Formula::new(eqs)
}

fn swap_first(mut phi: Formula) -> Formula {
    if let Some(first) = phi.equations.first_mut() {
        std::mem::swap(&mut first.lhs, &mut first.rhs);
    }
    phi
}

/// Applies the unique matching rule. Fresh variables are drawn from `symbols`.
pub fn apply_rule(phi: &Formula, symbols: &mut SymbolTable) -> RuleApplication {
    use BaseRule::*;
    let rule = match_rule(phi);
    if rule.base == R1 {
        return RuleApplication {
            rule,
            branches: vec![Branch::plain(Conclusion::Sat)],
        };
    }
    let first = &phi.equations[0];
    let rest = &phi.equations[1..];
    // Orient the first equation so that the rule's defining shape is on the
    // left: the nonempty side for R3/R4, the variable side for R7.
    let swap = matches!(
        rule,
        RuleId {
            base: R3 | R4,
            mirrored: true
        } | RuleId {
            base: R7,
            mirrored: false
        }
    );
    let (lhs, rhs) = if swap {
        (&first.rhs, &first.lhs)
    } else {
        (&first.lhs, &first.rhs)
    };
    let orient = |f: Formula| if swap { swap_first(f) } else { f };

    let branches = match rule.base {
        R1 => unreachable!(),
        R2 => vec![Branch::plain(Conclusion::Formula(Formula::new(
            rest.to_vec(),
        )))],
        R3 => {
            let Term::Var(x) = lhs[0] else { unreachable!() };
            let cond = Substitution::single(x, vec![]);
            let c = conclude(Equation::new(lhs[1..].to_vec(), vec![]), rest, &cond);
            vec![Branch {
                conclusion: Conclusion::Formula(orient(c)),
                cond,
                fresh: vec![],
            }]
        }
        R4 | R6 => vec![Branch::plain(Conclusion::Unsat)],
        R5 | R9 => {
            let eq = Equation::new(lhs[1..].to_vec(), rhs[1..].to_vec());
            let c = conclude(eq, rest, &Substitution::new());
            vec![Branch::plain(Conclusion::Formula(c))]
        }
        R7 => {
            let (Term::Var(x), a @ Term::Letter(_)) = (lhs[0], rhs[0]) else {
                unreachable!()
            };
            let (u, v) = (&lhs[1..], &rhs[1..]);
            let eps = Substitution::single(x, vec![]);
            let first_branch = conclude(Equation::new(u.to_vec(), rhs.to_vec()), rest, &eps);

            let x1 = symbols.fresh_var(x);
            let prefix = Substitution::single(x, vec![a, Term::Var(x1)]);
            let mut lhs2 = vec![Term::Var(x1)];
            lhs2.extend_from_slice(u);
            let second_branch = conclude(Equation::new(lhs2, v.to_vec()), rest, &prefix);
            vec![
                Branch {
                    conclusion: Conclusion::Formula(orient(first_branch)),
                    cond: eps,
                    fresh: vec![],
                },
                Branch {
                    conclusion: Conclusion::Formula(orient(second_branch)),
                    cond: prefix,
                    fresh: vec![x1],
                },
            ]
        }
        R8 => {
            let (Term::Var(x), Term::Var(y)) = (lhs[0], rhs[0]) else {
                unreachable!()
            };
            let (u, v) = (&lhs[1..], &rhs[1..]);

            let same = Substitution::single(x, vec![Term::Var(y)]);
            let c1 = conclude(Equation::new(u.to_vec(), v.to_vec()), rest, &same);

            let x1 = symbols.fresh_var(x);
            let x_longer = Substitution::single(x, vec![Term::Var(y), Term::Var(x1)]);
            let mut l2 = vec![Term::Var(x1)];
            l2.extend_from_slice(u);
            let c2 = conclude(Equation::new(l2, v.to_vec()), rest, &x_longer);

            let y1 = symbols.fresh_var(y);
            let y_longer = Substitution::single(y, vec![Term::Var(x), Term::Var(y1)]);
            let mut r3 = vec![Term::Var(y1)];
            r3.extend_from_slice(v);
            let c3 = conclude(Equation::new(u.to_vec(), r3), rest, &y_longer);

            vec![
                Branch {
                    conclusion: Conclusion::Formula(c1),
                    cond: same,
                    fresh: vec![],
                },
                Branch {
                    conclusion: Conclusion::Formula(c2),
                    cond: x_longer,
                    fresh: vec![x1],
                },
                Branch {
                    conclusion: Conclusion::Formula(c3),
                    cond: y_longer,
                    fresh: vec![y1],
                },
            ]
        }
    };
    RuleApplication { rule, branches }
}

/// Premise values induced by a witness of `branch`'s conclusion: variables
/// bound by the branch condition take the value of their image, the others
/// keep their value (ε when the conclusion does not mention them).
pub fn lift_witness(premise: &Formula, branch: &Branch, w: &Assignment) -> Assignment {
    let value = |t: Term| -> Word {
        match t {
            Term::Var(v) => w.get(v).cloned().unwrap_or_default(),
            letter => vec![letter],
        }
    };
    let mut a = Assignment::new();
    for v in premise.variables() {
        let val = match branch.cond.get(v) {
            Some(image) => image.iter().flat_map(|&t| value(t)).collect(),
            None => value(Term::Var(v)),
        };
        a.set(v, val);
    }
    a
}

/// Sound and locally complete, checked against the brute-force oracle.
///
/// Soundness: premise SAT within `max_len` ⇒ some conclusion SAT within
/// `max_len + 1`. Local completeness: a conclusion SAT within `max_len` ⇒
/// premise SAT, shown either by lifting the conclusion's witness through the
/// branch condition or by the oracle within `max_len + 1`. Lifting matters for
/// R8, whose conditions can double the length of a value.
pub fn check_rule_soundness(
    premise: &Formula,
    app: &RuleApplication,
    max_len: usize,
) -> Result<bool, OracleError> {
    let sat = |phi: &Formula, bound: usize| -> Result<bool, OracleError> {
        Ok(BruteForce::new(bound).solve(phi)?.is_some())
    };
    if sat(premise, max_len)? {
        let mut any = false;
        for b in &app.branches {
            any = match &b.conclusion {
                Conclusion::Sat => true,
                Conclusion::Unsat => false,
                Conclusion::Formula(f) => sat(f, max_len + 1)?,
            };
            if any {
                break;
            }
        }
        if !any {
            return Ok(false);
        }
    }
    for b in &app.branches {
        let lifted = match &b.conclusion {
            Conclusion::Unsat => continue,
            Conclusion::Sat => None,
            Conclusion::Formula(f) => match BruteForce::new(max_len).solve(f)? {
                Some(w) => Some(lift_witness(premise, b, &w)),
                None => continue,
            },
        };
        let lifted_ok = lifted.is_some_and(|a| check_assignment(premise, &a) == Ok(true));
        if !lifted_ok && !sat(premise, max_len + 1)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_formula, parse_formula_with};

    fn formula_strings(app: &RuleApplication, st: &SymbolTable) -> Vec<String> {
        app.branches
            .iter()
            .map(|b| match &b.conclusion {
                Conclusion::Formula(f) => f.display(st).to_string(),
                Conclusion::Sat => "SAT".into(),
                Conclusion::Unsat => "UNSAT".into(),
            })
            .collect()
    }

    #[test]
    fn dispatch_examples() {
        use BaseRule::*;
        let cases = [
            ("true", RuleId::direct(R1)),
            ("=", RuleId::direct(R2)),
            ("XY=", RuleId::direct(R3)),
            ("=Xa", RuleId::mirrored(R3)),
            ("aX=", RuleId::direct(R4)),
            ("=aX", RuleId::mirrored(R4)),
            ("aX=aY", RuleId::direct(R5)),
            ("aU=bV", RuleId::direct(R6)),
            ("aU=XV", RuleId::direct(R7)),
            ("XbY=bXXZ", RuleId::mirrored(R7)),
            ("Xab=YaZ", RuleId::direct(R8)),
            ("Xu=Xv", RuleId::direct(R9)),
        ];
        for (text, expected) in cases {
            let (_, phi) = parse_formula(text).unwrap();
            assert_eq!(match_rule(&phi), expected, "{text}");
        }
    }

    #[test]
    fn figure_root_split() {
        let (mut st, phi) = parse_formula("XbY=bXXZ").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert_eq!(app.rule.to_string(), "R7/mirrored");
        assert_eq!(formula_strings(&app, &st), ["bY=bZ", "X'bY=bX'bX'Z"]);
        let x = st.lookup_var("X").unwrap();
        assert_eq!(app.branches[0].cond, Substitution::single(x, vec![]));
        assert_eq!(app.branches[1].fresh, vec![st.lookup_var("X'").unwrap()]);
    }

    #[test]
    fn letter_left_variant_keeps_orientation() {
        let (mut st, phi) = parse_formula("bXXZ=XbY").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert_eq!(app.rule, RuleId::direct(BaseRule::R7));
        assert_eq!(formula_strings(&app, &st), ["bZ=bY", "bX'bX'Z=X'bY"]);
    }

    #[test]
    fn r8_three_branches() {
        let (mut st, phi) = parse_formula("Xab=YaZ").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert_eq!(app.rule, RuleId::direct(BaseRule::R8));
        assert_eq!(formula_strings(&app, &st), ["ab=aZ", "X'ab=aZ", "ab=Y'aZ"]);
    }

    #[test]
    fn r3_substitutes_in_rest() {
        let (mut st, phi) = parse_formula("XaX= & bX=Yb").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert_eq!(formula_strings(&app, &st), ["a=ε ∧ b=Yb"]);
        let (mut st, phi) = parse_formula("=XaX & bX=Yb").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert_eq!(app.rule, RuleId::mirrored(BaseRule::R3));
        assert_eq!(formula_strings(&app, &st), ["ε=a ∧ b=Yb"]);
    }

    #[test]
    fn terminal_and_simplifying_rules() {
        let mut st = SymbolTable::new();
        let cases = [
            ("true", vec!["SAT"]),
            ("= & aX=Xa", vec!["aX=Xa"]),
            ("aU=", vec!["UNSAT"]),
            ("=aU", vec!["UNSAT"]),
            ("aU=aV", vec!["U=V"]),
            ("aU=bV", vec!["UNSAT"]),
            ("XUa=XbV", vec!["Ua=bV"]),
        ];
        for (text, expected) in cases {
            let phi = parse_formula_with(text, &mut st).unwrap();
            let app = apply_rule(&phi, &mut st);
            assert_eq!(formula_strings(&app, &st), expected, "{text}");
        }
    }

    #[test]
    fn fresh_variables_are_new() {
        let (mut st, phi) = parse_formula("XX'=X'X & X'1=a").unwrap();
        let before = phi.variables();
        let app = apply_rule(&phi, &mut st);
        for b in &app.branches {
            for f in &b.fresh {
                assert!(!before.contains(f));
            }
        }
    }

    #[test]
    fn soundness_examples() {
        let (mut st, phi) = parse_formula("ab=ab").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert!(check_rule_soundness(&phi, &app, 3).unwrap());
        let (mut st, phi) = parse_formula("aU=bV").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert_eq!(app.branches[0].conclusion, Conclusion::Unsat);
        assert!(check_rule_soundness(&phi, &app, 3).unwrap());
    }

    #[test]
    fn r8_growth_beyond_bound_plus_one() {
        // the X ↦ ZX' branch has a solution with |X'| = 3, |Z| = 2 while the
        // premise needs |X| = 5
        let (mut st, phi) = parse_formula("XX=ZaXaa & ZXZa=ZaXaa").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert_eq!(app.rule, RuleId::direct(BaseRule::R8));
        assert!(check_rule_soundness(&phi, &app, 3).unwrap());
        let b = &app.branches[1];
        let w = crate::oracle::brute_force_solve(b.conclusion.formula().unwrap(), 3)
            .unwrap()
            .unwrap();
        let lifted = lift_witness(&phi, b, &w);
        assert_eq!(check_assignment(&phi, &lifted), Ok(true));
    }

    #[test]
    fn tampered_applications_are_caught() {
        let (mut st, phi) = parse_formula("XbY=bXXZ").unwrap();
        let mut app = apply_rule(&phi, &mut st);
        for b in &mut app.branches {
            b.conclusion = Conclusion::Unsat;
        }
        assert!(!check_rule_soundness(&phi, &app, 3).unwrap());

        let (_, phi) = parse_formula("aX=bX").unwrap();
        let fake = RuleApplication {
            rule: RuleId::direct(BaseRule::R6),
            branches: vec![Branch::plain(Conclusion::Sat)],
        };
        assert!(!check_rule_soundness(&phi, &fake, 3).unwrap());
    }

    #[test]
    fn intro_example_branches_cover_premise() {
        let (mut st, phi) = parse_formula("Xab=YaZ").unwrap();
        let app = apply_rule(&phi, &mut st);
        assert!(check_rule_soundness(&phi, &app, 2).unwrap());
        let any_sat = app.branches.iter().any(|b| {
            crate::oracle::brute_force_solve(b.conclusion.formula().unwrap(), 3)
                .unwrap()
                .is_some()
        });
        assert!(any_sat);
    }

    #[test]
    #[should_panic]
    fn mirrored_r5_is_rejected() {
        RuleId::mirrored(BaseRule::R5);
    }
}
