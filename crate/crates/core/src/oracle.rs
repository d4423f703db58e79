//! Bounded brute-force satisfiability oracle, used as ground truth in tests.
//!
//! Variables are assigned in order of first occurrence and candidate values
//! are enumerated in shortlex order over the formula's own letters, so the
//! returned assignment is the lexicographically first one within the bound.
//! Partial assignments are cut as soon as a prefix, suffix or length check
//! shows that no completion can work; this never changes which assignment is
//! found first.

use thiserror::Error;

use crate::terms::{Assignment, Formula, Symbol, Term, Word};

pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration exceeded the cap of {0} candidate assignments")]
    CapExceeded(u64),
}

/// Some satisfying assignment with every value of length at most `max_len`,
/// or `None` if there is none within the bound.
pub fn brute_force_solve(phi: &Formula, max_len: usize) -> Result<Option<Assignment>, OracleError> {
    BruteForce::new(max_len).solve(phi)
}

#[derive(Clone, Copy, Debug)]
pub struct BruteForce {
    pub max_len: usize,
    pub cap: u64,
}

impl BruteForce {
    pub fn new(max_len: usize) -> Self {
        BruteForce {
            max_len,
            cap: DEFAULT_CAP,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn solve(&self, phi: &Formula) -> Result<Option<Assignment>, OracleError> {
        let vars = phi.variables();
        let mut letters = phi.letters();
        letters.sort();
        let words = shortlex_words(&letters, self.max_len);
        let mut state = Search {
            phi,
            vars: &vars,
            words: &words,
            values: vec![None; vars.len()],
            max_len: self.max_len,
            visited: 0,
            cap: self.cap,
        };
        if !state.consistent() {
            return Ok(None);
        }
        if state.descend(0)? {
            let mut a = Assignment::new();
            for (v, w) in vars.iter().zip(state.values) {
                a.set(*v, w.expect("complete assignment"));
            }
            Ok(Some(a))
        } else {
            Ok(None)
        }
    }
}

/// All words over `letters` of length ≤ `max_len`, shortest first, then
/// lexicographic by letter order.
fn shortlex_words(letters: &[Symbol], max_len: usize) -> Vec<Word> {
    let mut out: Vec<Word> = vec![Vec::new()];
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..max_len {
        if letters.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for &c in letters {
                let mut w2 = w.clone();
                w2.push(Term::Letter(c));
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

struct Search<'a> {
    phi: &'a Formula,
    vars: &'a [Symbol],
    words: &'a [Word],
    values: Vec<Option<Word>>,
    max_len: usize,
    visited: u64,
    cap: u64,
}

#[derive(Clone, Copy, PartialEq)]
enum Item {
    Letter(Term),
    Hole,
}

impl Search<'_> {
    fn descend(&mut self, i: usize) -> Result<bool, OracleError> {
        if i == self.vars.len() {
            return Ok(true);
        }
        for w in self.words {
            self.visited += 1;
            if self.visited > self.cap {
                return Err(OracleError::CapExceeded(self.cap));
            }
            self.values[i] = Some(w.clone());
            if self.consistent() && self.descend(i + 1)? {
                return Ok(true);
            }
        }
        self.values[i] = None;
        Ok(false)
    }

    fn expand(&self, word: &[Term], out: &mut Vec<Item>) -> usize {
        out.clear();
        let mut holes = 0;
        for &t in word {
            match t {
                Term::Letter(_) => out.push(Item::Letter(t)),
                Term::Var(v) => {
                    let idx = self
                        .vars
                        .iter()
                        .position(|&x| x == v)
                        .expect("known variable");
                    match &self.values[idx] {
                        Some(w) => out.extend(w.iter().map(|&c| Item::Letter(c))),
                        None => {
                            out.push(Item::Hole);
                            holes += 1;
                        }
                    }
                }
            }
        }
        holes
    }

    /// False if no extension of the current partial assignment can satisfy phi.
    fn consistent(&self) -> bool {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for eq in &self.phi.equations {
            let hl = self.expand(&eq.lhs, &mut l);
            let hr = self.expand(&eq.rhs, &mut r);
            if hl == 0 && hr == 0 {
                if l != r {
                    return false;
                }
                continue;
            }
            // Length bounds: a hole contributes between 0 and max_len letters.
            let (kl, kr) = (l.len() - hl, r.len() - hr);
            let (maxl, maxr) = (kl + hl * self.max_len, kr + hr * self.max_len);
            if maxl < kr || maxr < kl {
                return false;
            }
            for (a, b) in l.iter().zip(r.iter()) {
                if *a == Item::Hole || *b == Item::Hole {
                    break;
                }
                if a != b {
                    return false;
                }
            }
            for (a, b) in l.iter().rev().zip(r.iter().rev()) {
                if *a == Item::Hole || *b == Item::Hole {
                    break;
                }
                if a != b {
                    return false;
                }
            }
        }
        true
    }
}
