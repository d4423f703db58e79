//! Text problem format.
//!
//! ```text
//! Variables {X,Y,Z}
//! Letters {a,b}
//! Equation: XbY = bXXZ
//! ```
//!
//! Variables are an uppercase letter followed by digits, `_` or `'`; letters
//! are single lowercase characters. Words are written without whitespace and
//! an empty side denotes ε (`ε` is also accepted on input).

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::terms::{Equation, Formula, SymbolTable, Term, Word};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: symbol `{name}` is not declared")]
    Undeclared { line: usize, name: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A parsed problem: the formula together with the names of its symbols.
#[derive(Clone, Debug)]
pub struct Problem {
    pub symbols: SymbolTable,
    pub formula: Formula,
}

impl Problem {
    pub fn new(symbols: SymbolTable, formula: Formula) -> Self {
        Problem { symbols, formula }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        parse_problem(text)
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        parse_problem(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        print_problem(self)
    }
}

fn tokenize(word: &str, line: usize) -> Result<Vec<(bool, String)>, FormatError> {
    let mut out = Vec::new();
    let chars: Vec<char> = word.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_uppercase() {
            let start = i;
            i += 1;
            while i < chars.len()
                && (chars[i].is_ascii_digit() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            out.push((true, chars[start..i].iter().collect()));
        } else if c.is_ascii_lowercase() || c == '#' {
            out.push((false, c.to_string()));
            i += 1;
        } else if c == 'ε' && chars.len() == 1 {
            i += 1;
        } else {
            return Err(FormatError::Syntax {
                line,
                msg: format!("unexpected character `{c}` in word `{word}`"),
            });
        }
    }
    Ok(out)
}

fn parse_word(
    text: &str,
    symbols: &mut SymbolTable,
    strict: bool,
    line: usize,
) -> Result<Word, FormatError> {
    let mut word = Vec::new();
    for (is_var, name) in tokenize(text.trim(), line)? {
        let term = if is_var {
            match symbols.lookup_var(&name) {
                Some(s) => Term::Var(s),
                None if strict => return Err(FormatError::Undeclared { line, name }),
                None => Term::Var(symbols.var(&name)),
            }
        } else {
            match symbols.lookup_letter(&name) {
                Some(s) => Term::Letter(s),
                None if strict => return Err(FormatError::Undeclared { line, name }),
                None => Term::Letter(symbols.letter(&name)),
            }
        };
        word.push(term);
    }
    Ok(word)
}

fn parse_equation(
    text: &str,
    symbols: &mut SymbolTable,
    strict: bool,
    line: usize,
) -> Result<Equation, FormatError> {
    let mut parts = text.split('=');
    let (Some(lhs), Some(rhs), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(FormatError::Syntax {
            line,
            msg: format!("expected exactly one `=` in `{text}`"),
        });
    };
    Ok(Equation::new(
        parse_word(lhs, symbols, strict, line)?,
        parse_word(rhs, symbols, strict, line)?,
    ))
}

fn parse_decl(rest: &str, line: usize) -> Result<Vec<String>, FormatError> {
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| FormatError::Syntax {
            line,
            msg: format!("expected `{{...}}`, found `{rest}`"),
        })?;
    Ok(inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect())
}

/// Parses a problem file. Declared symbols are interned in declaration order;
/// undeclared symbols in equations are rejected once a declaration is present.
pub fn parse_problem(text: &str) -> Result<Problem, FormatError> {
    let mut symbols = SymbolTable::new();
    let mut equations = Vec::new();
    let mut declared = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix("Variables") {
            for name in parse_decl(rest, line)? {
                let toks = tokenize(&name, line)?;
                if toks.len() != 1 || !toks[0].0 {
                    return Err(FormatError::Syntax {
                        line,
                        msg: format!("`{name}` is not a variable name"),
                    });
                }
                symbols.var(&name);
            }
            declared = true;
        } else if let Some(rest) = l.strip_prefix("Letters") {
            for name in parse_decl(rest, line)? {
                let toks = tokenize(&name, line)?;
                if toks.len() != 1 || toks[0].0 || name == "#" {
                    return Err(FormatError::Syntax {
                        line,
                        msg: format!("`{name}` is not a letter"),
                    });
                }
                symbols.letter(&name);
            }
            declared = true;
        } else if let Some(rest) = l.strip_prefix("Equation:") {
            let eq = parse_equation(rest, &mut symbols, declared, line)?;
            if eq.terms().any(|t| t == Term::SHARP) {
                return Err(FormatError::Syntax {
                    line,
                    msg: "`#` is reserved".into(),
                });
            }
            equations.push(eq);
        } else {
            return Err(FormatError::Syntax {
                line,
                msg: format!("unrecognised line `{l}`"),
            });
        }
    }
    Ok(Problem::new(symbols, Formula::new(equations)))
}

pub fn print_problem(p: &Problem) -> String {
    let mut out = String::new();
    let vars: Vec<&str> = p.symbols.variables().map(|(_, n)| n).collect();
    let letters: Vec<&str> = p.symbols.letters().map(|(_, n)| n).collect();
    writeln!(out, "Variables {{{}}}", vars.join(",")).unwrap();
    writeln!(out, "Letters {{{}}}", letters.join(",")).unwrap();
    for eq in &p.formula.equations {
        writeln!(
            out,
            "Equation: {} = {}",
            p.symbols.word_string(&eq.lhs),
            p.symbols.word_string(&eq.rhs)
        )
        .unwrap();
    }
    out
}

/// Parses an inline conjunction such as `XbY=bXXZ ∧ aX=Xa`, interning
/// symbols as they appear. `&` and `;` are accepted as separators too.
pub fn parse_formula(text: &str) -> Result<(SymbolTable, Formula), FormatError> {
    let mut symbols = SymbolTable::new();
    let mut equations = Vec::new();
    let text = text.trim();
    if text == "true" || text.is_empty() {
        return Ok((symbols, Formula::truth()));
    }
    for part in text.split(['∧', '&', ';']) {
        equations.push(parse_equation(part, &mut symbols, false, 1)?);
    }
    Ok((symbols, Formula::new(equations)))
}

/// Like [`parse_formula`] but reuses (and extends) an existing table.
pub fn parse_formula_with(text: &str, symbols: &mut SymbolTable) -> Result<Formula, FormatError> {
    let text = text.trim();
    if text == "true" || text.is_empty() {
        return Ok(Formula::truth());
    }
    let mut equations = Vec::new();
    for part in text.split(['∧', '&', ';']) {
        equations.push(parse_equation(part, symbols, false, 1)?);
    }
    Ok(Formula::new(equations))
}
