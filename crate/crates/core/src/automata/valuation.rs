//! Variables, valuations (letters of the trace alphabet) and traces.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::AutomataError;

/// Largest variable scope an automaton may have. Guards are decided by
/// enumerating all `2^n` valuations of the scope.
pub const MAX_VARS: usize = 16;

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "true" && name != "false"
}

/// A sorted, duplicate-free set of variable names.
///
/// Valuations of a scope are numbered in binary counting order with the
/// first (lexicographically smallest) variable as the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VarScope(Vec<String>);

impl VarScope {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = names.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        VarScope(v)
    }

    pub fn union<'a>(scopes: impl IntoIterator<Item = &'a VarScope>) -> Self {
        VarScope::new(scopes.into_iter().flat_map(|s| s.0.iter().cloned()))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.0.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    pub fn is_subset(&self, other: &VarScope) -> bool {
        self.0.iter().all(|v| other.contains(v))
    }

    /// Number of valuations, `2^len`.
    pub fn letter_count(&self) -> usize {
        1usize << self.0.len()
    }

    /// Value of the variable at `pos` in valuation number `letter`.
    pub fn bit(&self, letter: usize, pos: usize) -> bool {
        (letter >> (self.0.len() - 1 - pos)) & 1 == 1
    }

    pub fn valuation(&self, letter: usize) -> Valuation {
        Valuation(
            self.0
                .iter()
                .enumerate()
                .map(|(i, name)| (name.clone(), self.bit(letter, i)))
                .collect(),
        )
    }

    /// Index of the restriction of `v` to this scope.
    pub fn letter_of(&self, v: &Valuation) -> Result<usize, AutomataError> {
        let mut letter = 0usize;
        for name in &self.0 {
            let bit = v.get(name).ok_or_else(|| AutomataError::DomainMismatch {
                missing: name.clone(),
            })?;
            letter = (letter << 1) | bit as usize;
        }
        Ok(letter)
    }

    /// For every valuation of `self`, the index of its restriction to `sub`.
    /// `sub` must be a subset of `self`.
    pub fn projection_table(&self, sub: &VarScope) -> Vec<usize> {
        let positions: Vec<usize> = sub
            .names()
            .iter()
            .map(|n| self.position(n).expect("projection onto a non-subset scope"))
            .collect();
        (0..self.letter_count())
            .map(|letter| {
                positions
                    .iter()
                    .fold(0usize, |acc, &p| (acc << 1) | self.bit(letter, p) as usize)
            })
            .collect()
    }
}

impl fmt::Display for VarScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(", "))
    }
}

/// One simultaneous assignment of Boolean values to a set of variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Valuation(BTreeMap<String, bool>);

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, bool)>) -> Self {
        Valuation(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.0.get(name).copied()
    }

    /// Returns the previous value, if the variable was already assigned.
    pub fn insert(&mut self, name: impl Into<String>, value: bool) -> Option<bool> {
        self.0.insert(name.into(), value)
    }

    pub fn domain(&self) -> VarScope {
        VarScope(self.0.keys().cloned().collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn restrict(&self, scope: &VarScope) -> Result<Valuation, AutomataError> {
        scope
            .names()
            .iter()
            .map(|n| {
                self.get(n)
                    .map(|b| (n.clone(), b))
                    .ok_or_else(|| AutomataError::DomainMismatch { missing: n.clone() })
            })
            .collect::<Result<BTreeMap<_, _>, _>>()
            .map(Valuation)
    }

    /// `true` when every variable of `scope` has the same value in both.
    pub fn agrees_on(&self, other: &Valuation, scope: &VarScope) -> bool {
        scope.names().iter().all(|n| self.get(n) == other.get(n))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{k}={}", *v as u8)?;
        }
        Ok(())
    }
}

/// A finite sequence of valuations over one shared domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Trace {
    vars: VarScope,
    steps: Vec<Valuation>,
}

impl Trace {
    pub fn empty(vars: VarScope) -> Self {
        Trace { vars, steps: Vec::new() }
    }

    /// Builds a trace, checking that every step is over exactly `vars`.
    pub fn new(vars: VarScope, steps: Vec<Valuation>) -> Result<Self, AutomataError> {
        for (index, step) in steps.iter().enumerate() {
            if step.domain() != vars {
                return Err(AutomataError::InconsistentTrace { index });
            }
        }
        Ok(Trace { vars, steps })
    }

    /// Trace whose domain is taken from the first step (empty domain if none).
    pub fn from_steps(steps: Vec<Valuation>) -> Result<Self, AutomataError> {
        let vars = steps.first().map(Valuation::domain).unwrap_or_default();
        Trace::new(vars, steps)
    }

    pub(crate) fn from_letters(scope: &VarScope, letters: &[usize]) -> Self {
        Trace {
            vars: scope.clone(),
            steps: letters.iter().map(|&l| scope.valuation(l)).collect(),
        }
    }

    pub fn vars(&self) -> &VarScope {
        &self.vars
    }

    pub fn steps(&self) -> &[Valuation] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// First `len` steps (the whole trace if it is shorter).
    pub fn prefix(&self, len: usize) -> Trace {
        Trace {
            vars: self.vars.clone(),
            steps: self.steps[..len.min(self.steps.len())].to_vec(),
        }
    }

    /// Stepwise restriction onto `scope`; the length is preserved.
    pub fn restrict(&self, scope: &VarScope) -> Result<Trace, AutomataError> {
        let steps = self
            .steps
            .iter()
            .map(|s| s.restrict(scope))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(missing) = scope.names().iter().find(|n| !self.vars.contains(n)) {
            return Err(AutomataError::DomainMismatch { missing: missing.clone() });
        }
        Ok(Trace { vars: scope.clone(), steps })
    }

    pub fn push(&mut self, step: Valuation) -> Result<(), AutomataError> {
        if step.domain() != self.vars {
            return Err(AutomataError::InconsistentTrace { index: self.steps.len() });
        }
        self.steps.push(step);
        Ok(())
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

impl Serialize for Trace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.steps.serialize(serializer)
    }
}
