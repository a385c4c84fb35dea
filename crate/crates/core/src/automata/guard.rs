//! Propositional edge guards.
//!
//! Concrete syntax: `true | false | ident | !g | (g & g) | (g | g)`, with `&`
//! binding tighter than `|`. Parentheses are optional where precedence already
//! determines the grouping.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A propositional formula over named Boolean variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    False,
    Var(String),
    Not(Box<Guard>),
    And(Vec<Guard>),
    Or(Vec<Guard>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("guard parse error at column {column}: {message}")]
pub struct GuardParseError {
    /// 1-based column inside the guard text.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("guard mentions undeclared variable `{0}`")]
pub struct UndeclaredVariable(pub String);

impl Guard {
    pub fn var(name: impl Into<String>) -> Self {
        Guard::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Guard) -> Self {
        Guard::Not(Box::new(g))
    }

    /// Conjunction; an empty list is `true`, a singleton is returned as is.
    pub fn and_all(mut parts: Vec<Guard>) -> Self {
        match parts.len() {
            0 => Guard::True,
            1 => parts.pop().unwrap(),
            _ => Guard::And(parts),
        }
    }

    /// Disjunction; an empty list is `false`, a singleton is returned as is.
    pub fn or_all(mut parts: Vec<Guard>) -> Self {
        match parts.len() {
            0 => Guard::False,
            1 => parts.pop().unwrap(),
            _ => Guard::Or(parts),
        }
    }

    /// Conjunction of literals fixing each `(name, value)` pair.
    pub fn cube<'a>(literals: impl IntoIterator<Item = (&'a str, bool)>) -> Self {
        Guard::and_all(
            literals
                .into_iter()
                .map(|(name, value)| {
                    if value {
                        Guard::var(name)
                    } else {
                        Guard::not(Guard::var(name))
                    }
                })
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Result<Self, GuardParseError> {
        let mut parser = Parser { chars: text.char_indices().collect(), pos: 0 };
        let g = parser.parse_or()?;
        parser.skip_ws();
        if parser.pos < parser.chars.len() {
            return Err(parser.error(format!("unexpected `{}`", parser.chars[parser.pos].1)));
        }
        Ok(g)
    }

    /// Evaluates the guard, resolving variables through `lookup`.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<bool, UndeclaredVariable>
    where
        F: Fn(&str) -> Option<bool>,
    {
        Ok(match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Var(name) => lookup(name).ok_or_else(|| UndeclaredVariable(name.clone()))?,
            Guard::Not(g) => !g.eval_with(lookup)?,
            Guard::And(parts) => {
                // evaluate every operand so undeclared variables are always reported
                let mut value = true;
                for p in parts {
                    value &= p.eval_with(lookup)?;
                }
                value
            }
            Guard::Or(parts) => {
                let mut value = false;
                for p in parts {
                    value |= p.eval_with(lookup)?;
                }
                value
            }
        })
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Var(name) => {
                out.insert(name);
            }
            Guard::Not(g) => g.collect_vars(out),
            Guard::And(parts) | Guard::Or(parts) => parts.iter().for_each(|p| p.collect_vars(out)),
        }
    }

    /// Canonical form: negation normal form, flattened, constants folded,
    /// duplicate operands removed and operands sorted by their smallest
    /// variable name (then by printed text).
    pub fn canonical(&self) -> Guard {
        self.nnf(false)
    }

    fn nnf(&self, negate: bool) -> Guard {
        match self {
            Guard::True => if negate { Guard::False } else { Guard::True },
            Guard::False => if negate { Guard::True } else { Guard::False },
            Guard::Var(name) => {
                if negate {
                    Guard::not(Guard::Var(name.clone()))
                } else {
                    Guard::Var(name.clone())
                }
            }
            Guard::Not(g) => g.nnf(!negate),
            Guard::And(parts) => {
                let parts = parts.iter().map(|p| p.nnf(negate)).collect();
                if negate { join(false, parts) } else { join(true, parts) }
            }
            Guard::Or(parts) => {
                let parts = parts.iter().map(|p| p.nnf(negate)).collect();
                if negate { join(true, parts) } else { join(false, parts) }
            }
        }
    }

    fn sort_key(&self) -> (String, String) {
        let first = self.variables().into_iter().next().unwrap_or("").to_string();
        (first, self.to_string())
    }
}

/// Builds a flattened, folded, sorted conjunction (`conj`) or disjunction.
fn join(conj: bool, parts: Vec<Guard>) -> Guard {
    let mut flat = Vec::new();
    for p in parts {
        match p {
            Guard::And(inner) if conj => flat.extend(inner),
            Guard::Or(inner) if !conj => flat.extend(inner),
            Guard::True if conj => {}
            Guard::False if !conj => {}
            Guard::False if conj => return Guard::False,
            Guard::True if !conj => return Guard::True,
            other => flat.push(other),
        }
    }
    let mut keyed: Vec<_> = flat.into_iter().map(|g| (g.sort_key(), g)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let parts = keyed.into_iter().map(|(_, g)| g).collect();
    if conj { Guard::and_all(parts) } else { Guard::or_all(parts) }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => write!(f, "true"),
            Guard::False => write!(f, "false"),
            Guard::Var(name) => write!(f, "{name}"),
            Guard::Not(g) => match g.as_ref() {
                Guard::And(_) | Guard::Or(_) => write!(f, "!({g})"),
                _ => write!(f, "!{g}"),
            },
            Guard::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    match p {
                        Guard::Or(_) | Guard::And(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            Guard::Or(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    match p {
                        Guard::Or(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> GuardParseError {
        GuardParseError { column: self.pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn parse_or(&mut self) -> Result<Guard, GuardParseError> {
        let mut parts = vec![self.parse_and()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            parts.push(self.parse_and()?);
        }
        Ok(Guard::or_all(parts))
    }

    fn parse_and(&mut self) -> Result<Guard, GuardParseError> {
        let mut parts = vec![self.parse_unary()?];
        while self.peek() == Some('&') {
            self.pos += 1;
            parts.push(self.parse_unary()?);
        }
        Ok(Guard::and_all(parts))
    }

    fn parse_unary(&mut self) -> Result<Guard, GuardParseError> {
        match self.peek() {
            Some('!') => {
                self.pos += 1;
                Ok(Guard::not(self.parse_unary()?))
            }
            Some('(') => {
                self.pos += 1;
                let g = self.parse_or()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(g)
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].1.is_ascii_alphanumeric() || self.chars[self.pos].1 == '_')
                {
                    self.pos += 1;
                }
                let ident: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
                Ok(match ident.as_str() {
                    "true" => Guard::True,
                    "false" => Guard::False,
                    _ => Guard::Var(ident),
                })
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
            None => Err(self.error("unexpected end of guard")),
        }
    }
}
