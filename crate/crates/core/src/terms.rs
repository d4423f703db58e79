//! Word equations: terms, words, equations, formulas and substitutions.
//!
//! Symbols are interned into a [`SymbolTable`]; a [`Term`] only carries the
//! integer id, so equality checks in the search loop are integer compares.
//! Variables and letters live in separate namespaces.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

/// Interned symbol id. Whether it names a variable or a letter is decided by
/// the [`Term`] that wraps it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    /// The reserved separator letter `#` used when flattening conjunctions.
    pub const SHARP: Symbol = Symbol(u32::MAX);

    pub fn from_index(index: usize) -> Self {
        Symbol(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Symbol),
    Letter(Symbol),
}

impl Term {
    pub const SHARP: Term = Term::Letter(Symbol::SHARP);

    pub fn is_var(self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_letter(self) -> bool {
        matches!(self, Term::Letter(_))
    }
}

/// A word is a finite sequence of terms; the empty sequence is ε.
pub type Word = Vec<Term>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Equation {
    pub lhs: Word,
    pub rhs: Word,
}

impl Equation {
    pub fn new(lhs: Word, rhs: Word) -> Self {
        Equation { lhs, rhs }
    }

    /// Same equation with sides exchanged.
    pub fn swapped(self) -> Self {
        Equation {
            lhs: self.rhs,
            rhs: self.lhs,
        }
    }

    pub fn len(&self) -> usize {
        self.lhs.len() + self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lhs.is_empty() && self.rhs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.lhs.iter().chain(self.rhs.iter()).copied()
    }
}

/// Ordered conjunction of equations. The empty conjunction is `true`.
///
/// Order matters: rules only ever rewrite the first equation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Formula {
    pub equations: Vec<Equation>,
}

impl Formula {
    pub fn new(equations: Vec<Equation>) -> Self {
        Formula { equations }
    }

    pub fn truth() -> Self {
        Formula::default()
    }

    pub fn single(lhs: Word, rhs: Word) -> Self {
        Formula::new(vec![Equation::new(lhs, rhs)])
    }

    pub fn is_true(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn first(&self) -> Option<&Equation> {
        self.equations.first()
    }

    /// Total number of term occurrences over all equations.
    pub fn symbol_count(&self) -> usize {
        self.equations.iter().map(Equation::len).sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.equations.iter().flat_map(Equation::terms)
    }

    /// Variables in order of first occurrence (left to right, equation by equation).
    pub fn variables(&self) -> Vec<Symbol> {
        let mut seen = Vec::new();
        for t in self.terms() {
            if let Term::Var(v) = t {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
        }
        seen
    }

    /// Letters in order of first occurrence.
    pub fn letters(&self) -> Vec<Symbol> {
        let mut seen = Vec::new();
        for t in self.terms() {
            if let Term::Letter(c) = t {
                if !seen.contains(&c) {
                    seen.push(c);
                }
            }
        }
        seen
    }

    pub fn display<'a>(&'a self, symbols: &'a SymbolTable) -> FormulaDisplay<'a> {
        FormulaDisplay {
            formula: self,
            symbols,
        }
    }
}

/// Map from variables to words. Rule conditions bind a single variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Symbol, Word>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn single(var: Symbol, image: Word) -> Self {
        let mut s = Substitution::new();
        s.bind(var, image);
        s
    }

    pub fn bind(&mut self, var: Symbol, image: Word) {
        self.bindings.insert(var, image);
    }

    pub fn get(&self, var: Symbol) -> Option<&Word> {
        self.bindings.get(&var)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &Word)> {
        self.bindings.iter().map(|(k, v)| (*k, v))
    }

    pub fn apply_word(&self, word: &[Term]) -> Word {
        if self.bindings.is_empty() {
            return word.to_vec();
        }
        let mut out = Vec::with_capacity(word.len());
        for &t in word {
            match t {
                Term::Var(v) => match self.bindings.get(&v) {
                    Some(image) => out.extend_from_slice(image),
                    None => out.push(t),
                },
                Term::Letter(_) => out.push(t),
            }
        }
        out
    }

    pub fn apply_equation(&self, eq: &Equation) -> Equation {
        Equation::new(self.apply_word(&eq.lhs), self.apply_word(&eq.rhs))
    }
}

/// Replace every bound variable in every equation by its image.
pub fn apply_substitution(phi: &Formula, s: &Substitution) -> Formula {
    Formula::new(phi.equations.iter().map(|e| s.apply_equation(e)).collect())
}

/// Total map from variables to letter-only words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<Symbol, Word>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    /// Panics if `value` contains a variable.
    pub fn set(&mut self, var: Symbol, value: Word) {
        assert!(
            value.iter().all(|t| t.is_letter()),
            "assignment values must be letter-only"
        );
        self.values.insert(var, value);
    }

    pub fn get(&self, var: Symbol) -> Option<&Word> {
        self.values.get(&var)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &Word)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    pub fn remove(&mut self, var: Symbol) -> Option<Word> {
        self.values.remove(&var)
    }

    /// Keep only the given variables.
    pub fn restrict(&self, vars: &[Symbol]) -> Assignment {
        Assignment {
            values: self
                .values
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    fn eval(&self, word: &[Term], out: &mut Word) -> Result<(), TermError> {
        out.clear();
        for &t in word {
            match t {
                Term::Var(v) => {
                    out.extend_from_slice(self.values.get(&v).ok_or(TermError::MissingVariable(v))?)
                }
                Term::Letter(_) => out.push(t),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("assignment has no value for variable #{}", .0.index())]
    MissingVariable(Symbol),
}

/// True iff every equation of `phi` becomes an identity of letter sequences under `a`.
pub fn check_assignment(phi: &Formula, a: &Assignment) -> Result<bool, TermError> {
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut ok = true;
    for eq in &phi.equations {
        a.eval(&eq.lhs, &mut lhs)?;
        a.eval(&eq.rhs, &mut rhs)?;
        ok &= lhs == rhs;
    }
    Ok(ok)
}

/// Interned names for variables and letters.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    variables: Vec<String>,
    letters: Vec<String>,
    var_ids: HashMap<String, Symbol>,
    letter_ids: HashMap<String, Symbol>,
    fresh_counter: u64,
}

impl SymbolTable {
    pub fn new() -> Self {
        SymbolTable::default()
    }

    pub fn var(&mut self, name: &str) -> Symbol {
        if let Some(&s) = self.var_ids.get(name) {
            return s;
        }
        let s = Symbol::from_index(self.variables.len());
        self.variables.push(name.to_string());
        self.var_ids.insert(name.to_string(), s);
        s
    }

    /// Interns a letter. `#` is always the reserved separator.
    pub fn letter(&mut self, name: &str) -> Symbol {
        if name == "#" {
            return Symbol::SHARP;
        }
        if let Some(&s) = self.letter_ids.get(name) {
            return s;
        }
        let s = Symbol::from_index(self.letters.len());
        self.letters.push(name.to_string());
        self.letter_ids.insert(name.to_string(), s);
        s
    }

    pub fn lookup_var(&self, name: &str) -> Option<Symbol> {
        self.var_ids.get(name).copied()
    }

    pub fn lookup_letter(&self, name: &str) -> Option<Symbol> {
        if name == "#" {
            return Some(Symbol::SHARP);
        }
        self.letter_ids.get(name).copied()
    }

    pub fn var_name(&self, s: Symbol) -> &str {
        &self.variables[s.index()]
    }

    pub fn letter_name(&self, s: Symbol) -> &str {
        if s == Symbol::SHARP {
            "#"
        } else {
            &self.letters[s.index()]
        }
    }

    pub fn term_name(&self, t: Term) -> &str {
        match t {
            Term::Var(v) => self.var_name(v),
            Term::Letter(c) => self.letter_name(c),
        }
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = (Symbol, &str)> {
        self.variables
            .iter()
            .enumerate()
            .map(|(i, n)| (Symbol::from_index(i), n.as_str()))
    }

    pub fn letters(&self) -> impl Iterator<Item = (Symbol, &str)> {
        self.letters
            .iter()
            .enumerate()
            .map(|(i, n)| (Symbol::from_index(i), n.as_str()))
    }

    /// A variable name never used before, derived from `base`.
    ///
    /// `X` yields `X'`; later requests from `X` or any `X'...` yield `X'1`,
    /// `X'2`, ... from a table-wide counter.
    pub fn fresh_var(&mut self, base: Symbol) -> Symbol {
        let root = {
            let name = self.var_name(base);
            name.split('\'').next().unwrap_or(name).to_string()
        };
        let mut candidate = format!("{root}'");
        while self.var_ids.contains_key(&candidate) {
            self.fresh_counter += 1;
            candidate = format!("{root}'{}", self.fresh_counter);
        }
        self.var(&candidate)
    }

    pub fn word_string(&self, word: &[Term]) -> String {
        word.iter().map(|&t| self.term_name(t)).collect()
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    symbols: &'a SymbolTable,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.formula.is_true() {
            return f.write_str("true");
        }
        let side = |w: &[Term]| {
            if w.is_empty() {
                "ε".to_string()
            } else {
                self.symbols.word_string(w)
            }
        };
        for (i, eq) in self.formula.equations.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{}={}", side(&eq.lhs), side(&eq.rhs))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_formula;

    #[test]
    fn substitution_erases_variable() {
        let (mut st, phi) = parse_formula("XbY=bXXZ").unwrap();
        let x = st.var("X");
        let out = apply_substitution(&phi, &Substitution::single(x, vec![]));
        assert_eq!(out.display(&st).to_string(), "bY=bZ");
    }

    #[test]
    fn empty_substitution_is_identity() {
        let (_, phi) = parse_formula("Xab=YaZ").unwrap();
        assert_eq!(apply_substitution(&phi, &Substitution::new()), phi);
    }

    #[test]
    fn substitution_with_fresh_prefix() {
        let (mut st, phi) = parse_formula("XY=ab").unwrap();
        let x = st.var("X");
        let a = st.letter("a");
        let x1 = st.fresh_var(x);
        let out = apply_substitution(
            &phi,
            &Substitution::single(x, vec![Term::Letter(a), Term::Var(x1)]),
        );
        assert_eq!(out.display(&st).to_string(), "aX'Y=ab");
    }

    #[test]
    fn check_assignment_examples() {
        let (mut st, phi) = parse_formula("Xab=YaZ").unwrap();
        let (a, b) = (st.letter("a"), st.letter("b"));
        let mut asg = Assignment::new();
        asg.set(st.var("X"), vec![Term::Letter(a)]);
        asg.set(st.var("Y"), vec![Term::Letter(a)]);
        asg.set(st.var("Z"), vec![Term::Letter(b)]);
        assert_eq!(check_assignment(&phi, &asg), Ok(true));

        let (_, eps) = parse_formula("=").unwrap();
        assert_eq!(check_assignment(&eps, &Assignment::new()), Ok(true));

        let (mut st, phi) = parse_formula("Xa=bX").unwrap();
        let mut asg = Assignment::new();
        let b = st.letter("b");
        asg.set(st.var("X"), vec![Term::Letter(b)]);
        assert_eq!(check_assignment(&phi, &asg), Ok(false));
    }

    #[test]
    fn missing_variable_is_an_error() {
        let (mut st, phi) = parse_formula("Xa=aX").unwrap();
        let x = st.var("X");
        assert_eq!(
            check_assignment(&phi, &Assignment::new()),
            Err(TermError::MissingVariable(x))
        );
    }

    #[test]
    fn fresh_names_do_not_collide() {
        let (mut st, _) = parse_formula("XX'=X'1").unwrap();
        let x = st.var("X");
        let f1 = st.fresh_var(x);
        let f2 = st.fresh_var(f1);
        assert_ne!(st.var_name(f1), "X'");
        assert_ne!(st.var_name(f1), "X'1");
        assert_ne!(f1, f2);
        assert_eq!(st.var_name(f1).split('\'').next(), Some("X"));
    }

    #[test]
    fn sharp_is_reserved() {
        let mut st = SymbolTable::new();
        let a = st.letter("a");
        assert_ne!(a, Symbol::SHARP);
        assert_eq!(st.letter("#"), Symbol::SHARP);
        assert_eq!(st.letter_name(Symbol::SHARP), "#");
    }
}
