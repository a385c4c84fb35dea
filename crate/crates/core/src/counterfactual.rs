//! Counterfactual and fault-model languages for single components.
//!
//! Each builder returns a safety automaton over the component's variables.
//! Which language stands in for a component depends on whether it is inside
//! the candidate set under analysis; see [`ModelAssignment`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{self, AutomataError, AutomatonDef, Edge, Guard, SafetyAutomaton, Trace, Valuation, VarScope};
use crate::model::{Component, SystemModel};

/// The catalogue of component languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultModelKind {
    /// The component's own specification.
    #[serde(rename = "spec")]
    Spec,
    /// Any behaviour over the component's variables.
    #[serde(rename = "arbitrary")]
    Arbitrary,
    /// The observed local trace on all variables, unconstrained afterwards.
    #[serde(rename = "observed")]
    ObservedFull,
    /// The observed local trace on the outputs only; inputs are free.
    #[serde(rename = "observed-out")]
    ObservedOut,
    /// Specification-conforming behaviour that follows the observed trace
    /// for as long as the trace conformed.
    #[serde(rename = "prefix-correct")]
    PrefixCorrect,
}

impl FaultModelKind {
    pub const ALL: [FaultModelKind; 5] = [
        FaultModelKind::Spec,
        FaultModelKind::Arbitrary,
        FaultModelKind::ObservedFull,
        FaultModelKind::ObservedOut,
        FaultModelKind::PrefixCorrect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultModelKind::Spec => "spec",
            FaultModelKind::Arbitrary => "arbitrary",
            FaultModelKind::ObservedFull => "observed",
            FaultModelKind::ObservedOut => "observed-out",
            FaultModelKind::PrefixCorrect => "prefix-correct",
        }
    }

    fn uses_trace(self) -> bool {
        matches!(
            self,
            FaultModelKind::ObservedFull | FaultModelKind::ObservedOut | FaultModelKind::PrefixCorrect
        )
    }
}

impl fmt::Display for FaultModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultModelKind {
    type Err = CounterfactualError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CounterfactualError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterfactualError {
    #[error("unknown fault model kind `{0}` (expected one of spec, arbitrary, observed, observed-out, prefix-correct)")]
    UnknownKind(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("horizon {horizon} differs from the observed trace length {trace_len}")]
    HorizonMismatch { horizon: usize, trace_len: usize },
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

/// Languages used for one component: `cf` when it is in the candidate set,
/// `fault` when it is not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KindPair {
    pub cf: FaultModelKind,
    pub fault: FaultModelKind,
}

impl Default for KindPair {
    fn default() -> Self {
        KindPair { cf: FaultModelKind::Spec, fault: FaultModelKind::ObservedOut }
    }
}

/// Per-component choice of counterfactual and fault languages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ModelAssignment {
    entries: BTreeMap<String, KindPair>,
}

impl ModelAssignment {
    /// `spec` as counterfactual, `observed-out` as fault model, for everyone.
    pub fn defaults(m: &SystemModel) -> Self {
        Self::uniform(m, KindPair::default())
    }

    pub fn uniform(m: &SystemModel, pair: KindPair) -> Self {
        ModelAssignment { entries: m.component_names().map(|n| (n.to_string(), pair)).collect() }
    }

    pub fn get(&self, component: &str) -> Option<KindPair> {
        self.entries.get(component).copied()
    }

    pub fn set_cf(&mut self, component: &str, kind: FaultModelKind) -> Result<(), CounterfactualError> {
        self.entry(component)?.cf = kind;
        Ok(())
    }

    pub fn set_fault(&mut self, component: &str, kind: FaultModelKind) -> Result<(), CounterfactualError> {
        self.entry(component)?.fault = kind;
        Ok(())
    }

    fn entry(&mut self, component: &str) -> Result<&mut KindPair, CounterfactualError> {
        self.entries
            .get_mut(component)
            .ok_or_else(|| CounterfactualError::UnknownComponent(component.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, KindPair)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Length of the longest prefix of `tr_local` accepted by the component's
/// specification.
pub fn longest_correct_prefix(c: &Component, tr_local: &Trace) -> Result<usize, CounterfactualError> {
    let run = c.spec.run(tr_local)?;
    Ok(run.first_violation_index.unwrap_or(tr_local.len()))
}

/// Builds the language of `kind` for component `c`, given its projection of
/// the error trace. `horizon` must equal the projection's length for the
/// trace-dependent kinds.
pub fn build_fault_model(
    kind: FaultModelKind,
    c: &Component,
    tr_local: &Trace,
    horizon: usize,
) -> Result<SafetyAutomaton, CounterfactualError> {
    if kind.uses_trace() && horizon != tr_local.len() {
        return Err(CounterfactualError::HorizonMismatch { horizon, trace_len: tr_local.len() });
    }
    let vars = c.vars();
    let local = tr_local.restrict(&vars)?;
    Ok(match kind {
        FaultModelKind::Spec => c.spec.clone(),
        FaultModelKind::Arbitrary => SafetyAutomaton::universal(vars),
        FaultModelKind::ObservedFull => observed_chain(&vars, &vars, local.steps())?,
        FaultModelKind::ObservedOut => observed_chain(&vars, &c.outputs, local.steps())?,
        FaultModelKind::PrefixCorrect => {
            let keep = longest_correct_prefix(c, &local)?;
            let chain = observed_chain(&vars, &vars, &local.steps()[..keep])?;
            automata::product(&[&c.spec, &chain])?
        }
    })
}

/// A chain `step0 … step{h-1}` whose k-th edge requires the `pinned`
/// variables to match `steps[k]` (anything else goes to `bad`), followed by
/// a universal `free` state. Always `h + 2` states.
fn observed_chain(
    vars: &VarScope,
    pinned: &VarScope,
    steps: &[Valuation],
) -> Result<SafetyAutomaton, AutomataError> {
    let h = steps.len();
    let free = h;
    let bad = h + 1;
    let mut states: Vec<String> = (0..h).map(|k| format!("step{k}")).collect();
    states.push("free".into());
    states.push("bad".into());

    let mut edges = Vec::with_capacity(h + 2);
    for (k, step) in steps.iter().enumerate() {
        let cube = Guard::cube(
            pinned
                .names()
                .iter()
                .map(|n| Ok((n.as_str(), step.get(n).ok_or_else(|| AutomataError::DomainMismatch { missing: n.clone() })?)))
                .collect::<Result<Vec<_>, AutomataError>>()?,
        );
        let next = if k + 1 < h { k + 1 } else { free };
        let mut out = vec![Edge { guard: cube.clone(), target: next }];
        if cube != Guard::True {
            out.push(Edge { guard: Guard::not(cube).canonical(), target: bad });
        }
        edges.push(out);
    }
    edges.push(vec![Edge { guard: Guard::True, target: free }]);
    edges.push(vec![Edge { guard: Guard::True, target: bad }]);

    SafetyAutomaton::new(AutomatonDef {
        vars: vars.clone(),
        states,
        initial: if h == 0 { free } else { 0 },
        bad: BTreeSet::from([bad]),
        edges,
    })
}
