//! Fault mitigation and fault manifestation analyses.
//!
//! For a candidate set `D` of components and an error trace `tr`:
//!
//! * the **mitigation operand** composes the counterfactual language of every
//!   member of `D` with the fault model of every other component; `D`
//!   mitigates iff the operand is contained in the global specification;
//! * the **manifestation operand** composes the fault models of `D` with the
//!   counterfactual languages of the rest; `D` manifests iff the operand
//!   admits a violation (existential) or every operand trace of length
//!   `|tr|` violates (universal).

pub(crate) mod enumerate;

pub use enumerate::{
    enumerate_causal_sets, enumerate_with, minimal_antichain, CauseReport, ComplexityNote, Enumeration,
    EnumerationOptions, EnumerationStats, ReportNote, SetVerdict,
};

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::automata::{self, AutomataError, SafetyAutomaton, Trace};
use crate::counterfactual::{build_fault_model, CounterfactualError, FaultModelKind, ModelAssignment};
use crate::model::{project_trace, violates_global, ModelError, SystemModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("the trace does not violate the global specification")]
    NotAnErrorTrace,
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Counterfactual(#[from] CounterfactualError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mitigation,
    Manifestation,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mitigation => "mitigation",
            Mode::Manifestation => "manifestation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    #[default]
    Existential,
    Universal,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Existential => "existential",
            Quantifier::Universal => "universal",
        })
    }
}

/// A set of component names, ordered by size and then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CandidateSet(BTreeSet<String>);

impl CandidateSet {
    pub fn new<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CandidateSet(members.into_iter().map(Into::into).collect())
    }

    pub fn empty() -> Self {
        CandidateSet::default()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &CandidateSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Ord for CandidateSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for CandidateSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().cloned().collect::<Vec<_>>().join(", "))
    }
}

impl Serialize for CandidateSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// Size of an analysed operand and of the search over it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OperandStats {
    pub states: usize,
    pub edges: usize,
    /// Product of the per-component automaton sizes.
    pub state_bound: u128,
    /// Distinct (operand, global spec) state pairs explored.
    pub explored_pairs: usize,
    pub bfs_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// A trace accepted by the operand and rejected by the global
    /// specification: the counterexample of a failed mitigation, or the
    /// violation exhibited by a manifestation.
    pub witness: Option<Trace>,
    /// The operand has no trace of the horizon length.
    pub vacuous: bool,
    pub stats: OperandStats,
}

/// Analysis context: a system, an error trace and a model assignment, with
/// the per-component languages built once.
#[derive(Debug)]
pub struct Analysis<'m> {
    model: &'m SystemModel,
    trace: Trace,
    assignment: ModelAssignment,
    error_trace: bool,
    counterfactual: Vec<SafetyAutomaton>,
    fault: Vec<SafetyAutomaton>,
}

impl<'m> Analysis<'m> {
    pub fn new(model: &'m SystemModel, trace: &Trace, assignment: &ModelAssignment) -> Result<Self, EngineError> {
        for (name, _) in assignment.iter() {
            if model.component(name).is_none() {
                return Err(EngineError::UnknownComponent(name.to_string()));
            }
        }
        let trace = trace.restrict(&model.scope()).map_err(ModelError::from)?;
        let error_trace = !violates_global(model, &trace)?.accepted;
        let horizon = trace.len();
        let mut counterfactual = Vec::new();
        let mut fault = Vec::new();
        for c in model.components() {
            let kinds = assignment.get(&c.name).unwrap_or_default();
            let local = project_trace(&trace, c)?;
            counterfactual.push(build_fault_model(kinds.cf, c, &local, horizon)?);
            fault.push(build_fault_model(kinds.fault, c, &local, horizon)?);
        }
        Ok(Analysis { model, trace, assignment: assignment.clone(), error_trace, counterfactual, fault })
    }

    pub fn model(&self) -> &SystemModel {
        self.model
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn assignment(&self) -> &ModelAssignment {
        &self.assignment
    }

    pub fn is_error_trace(&self) -> bool {
        self.error_trace
    }

    pub fn horizon(&self) -> usize {
        self.trace.len()
    }

    /// Counterfactual and fault languages of the component at `index`.
    pub fn component_models(&self, index: usize) -> (&SafetyAutomaton, &SafetyAutomaton) {
        (&self.counterfactual[index], &self.fault[index])
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.model.components().iter().position(|c| c.name == name)
    }

    pub fn kinds(&self, name: &str) -> (FaultModelKind, FaultModelKind) {
        let k = self.assignment.get(name).unwrap_or_default();
        (k.cf, k.fault)
    }

    fn check_members(&self, d: &CandidateSet) -> Result<(), EngineError> {
        match d.members().find(|m| self.model.component(m).is_none()) {
            Some(m) => Err(EngineError::UnknownComponent(m.to_string())),
            None => Ok(()),
        }
    }

    /// Per-component automata making up the operand of `mode` for `d`.
    fn operand_parts(&self, d: &CandidateSet, mode: Mode) -> Result<Vec<&SafetyAutomaton>, EngineError> {
        self.check_members(d)?;
        Ok(self
            .model
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let corrected = match mode {
                    Mode::Mitigation => d.contains(&c.name),
                    Mode::Manifestation => !d.contains(&c.name),
                };
                if corrected { &self.counterfactual[i] } else { &self.fault[i] }
            })
            .collect())
    }

    pub fn operand(&self, d: &CandidateSet, mode: Mode) -> Result<SafetyAutomaton, EngineError> {
        Ok(automata::product(&self.operand_parts(d, mode)?)?)
    }

    /// Product of the component automaton sizes for the operand.
    pub fn operand_bound(&self, d: &CandidateSet, mode: Mode) -> Result<u128, EngineError> {
        Ok(self
            .operand_parts(d, mode)?
            .iter()
            .map(|a| a.num_states() as u128)
            .product())
    }

    fn stats(&self, d: &CandidateSet, mode: Mode, op: &SafetyAutomaton) -> Result<OperandStats, EngineError> {
        Ok(OperandStats {
            states: op.num_states(),
            edges: op.num_edges(),
            state_bound: self.operand_bound(d, mode)?,
            ..OperandStats::default()
        })
    }

    /// Does the correct behaviour of `d` keep the global specification
    /// against the fault models of everyone else?
    pub fn mitigates(&self, d: &CandidateSet) -> Result<Verdict, EngineError> {
        if !self.error_trace {
            return Err(EngineError::NotAnErrorTrace);
        }
        let op = self.operand(d, Mode::Mitigation)?;
        let c = automata::contains(&op, self.model.global_spec())?;
        let mut stats = self.stats(d, Mode::Mitigation, &op)?;
        stats.explored_pairs = c.explored_pairs;
        stats.bfs_depth = c.depth;
        Ok(Verdict {
            holds: c.holds,
            witness: c.witness,
            vacuous: !automata::has_trace_of_length(&op, self.horizon()),
            stats,
        })
    }

    /// Does the observed faulty behaviour of `d` violate the global
    /// specification while everyone else behaves correctly?
    pub fn manifests(&self, d: &CandidateSet, quantifier: Quantifier) -> Result<Verdict, EngineError> {
        if !self.error_trace {
            return Err(EngineError::NotAnErrorTrace);
        }
        let op = self.operand(d, Mode::Manifestation)?;
        let mut stats = self.stats(d, Mode::Manifestation, &op)?;
        match quantifier {
            Quantifier::Existential => {
                let c = automata::contains(&op, self.model.global_spec())?;
                stats.explored_pairs = c.explored_pairs;
                stats.bfs_depth = c.depth;
                Ok(Verdict {
                    holds: !c.holds,
                    witness: c.witness,
                    vacuous: !automata::has_trace_of_length(&op, self.horizon()),
                    stats,
                })
            }
            Quantifier::Universal => {
                let hc = automata::horizon_check(&op, self.model.global_spec(), self.horizon())?;
                stats.explored_pairs = hc.explored_pairs;
                stats.bfs_depth = self.horizon();
                let holds = hc.nonempty && hc.all_rejected;
                Ok(Verdict {
                    holds,
                    witness: if holds { hc.rejected_witness } else { None },
                    vacuous: !hc.nonempty,
                    stats,
                })
            }
        }
    }

    pub fn evaluate(&self, d: &CandidateSet, mode: Mode, quantifier: Quantifier) -> Result<Verdict, EngineError> {
        match mode {
            Mode::Mitigation => self.mitigates(d),
            Mode::Manifestation => self.manifests(d, quantifier),
        }
    }
}

/// Composition of the counterfactual languages of `d` with the fault models
/// of all other components.
pub fn mitigation_operand(
    m: &SystemModel,
    tr: &Trace,
    d: &CandidateSet,
    asg: &ModelAssignment,
) -> Result<SafetyAutomaton, EngineError> {
    Analysis::new(m, tr, asg)?.operand(d, Mode::Mitigation)
}

/// Composition of the fault models of `d` with the counterfactual languages
/// of all other components.
pub fn manifestation_operand(
    m: &SystemModel,
    tr: &Trace,
    d: &CandidateSet,
    asg: &ModelAssignment,
) -> Result<SafetyAutomaton, EngineError> {
    Analysis::new(m, tr, asg)?.operand(d, Mode::Manifestation)
}

pub fn mitigates(
    m: &SystemModel,
    tr: &Trace,
    d: &CandidateSet,
    asg: &ModelAssignment,
) -> Result<Verdict, EngineError> {
    Analysis::new(m, tr, asg)?.mitigates(d)
}

pub fn manifests(
    m: &SystemModel,
    tr: &Trace,
    d: &CandidateSet,
    asg: &ModelAssignment,
    quantifier: Quantifier,
) -> Result<Verdict, EngineError> {
    Analysis::new(m, tr, asg)?.manifests(d, quantifier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Valuation;
    use crate::model::{fixtures::FIXTURE_AB, parse_system};

    fn ab() -> SystemModel {
        parse_system(FIXTURE_AB).unwrap()
    }

    fn xy(steps: &[(bool, bool)]) -> Trace {
        Trace::from_steps(
            steps
                .iter()
                .map(|&(x, y)| Valuation::from_pairs([("x", x), ("y", y)]))
                .collect(),
        )
        .unwrap()
    }

    fn set(names: &[&str]) -> CandidateSet {
        CandidateSet::new(names.iter().copied())
    }

    #[test]
    fn fixture_mitigation() {
        let m = ab();
        let asg = ModelAssignment::defaults(&m);
        let tr = xy(&[(true, true)]);
        assert!(mitigates(&m, &tr, &set(&["B"]), &asg).unwrap().holds);
        let v = mitigates(&m, &tr, &set(&["A"]), &asg).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.unwrap(), xy(&[(false, true)]));
        assert!(mitigates(&m, &tr, &set(&["A", "B"]), &asg).unwrap().holds);
        assert!(!mitigates(&m, &tr, &set(&[]), &asg).unwrap().holds);
    }

    #[test]
    fn fixture_manifestation() {
        let m = ab();
        let asg = ModelAssignment::defaults(&m);
        let tr = xy(&[(true, true)]);
        let v = manifests(&m, &tr, &set(&["B"]), &asg, Quantifier::Universal).unwrap();
        assert!(v.holds && !v.vacuous);
        assert_eq!(v.witness.unwrap(), xy(&[(false, true)]));
        assert!(!manifests(&m, &tr, &set(&["A"]), &asg, Quantifier::Existential).unwrap().holds);
        assert!(!manifests(&m, &tr, &set(&[]), &asg, Quantifier::Existential).unwrap().holds);
        assert!(manifests(&m, &tr, &set(&["A", "B"]), &asg, Quantifier::Universal).unwrap().holds);
    }

    #[test]
    fn operand_languages() {
        let m = ab();
        let asg = ModelAssignment::defaults(&m);
        let tr = xy(&[(true, true)]);
        // SPEC(B) x OBSERVED_OUT(A): x=1 at step 0 then free, y always 0
        let op = mitigation_operand(&m, &tr, &set(&["B"]), &asg).unwrap();
        assert!(op.accepts(&xy(&[(true, false), (false, false)])).unwrap());
        assert!(op.accepts(&xy(&[(true, false), (true, false)])).unwrap());
        assert!(!op.accepts(&xy(&[(false, false)])).unwrap());
        assert!(!op.accepts(&xy(&[(true, false), (true, true)])).unwrap());
        // OBSERVED_OUT(B) x SPEC(A): y=1 at step 0, x always 0
        let op = manifestation_operand(&m, &tr, &set(&["B"]), &asg).unwrap();
        assert!(op.accepts(&xy(&[(false, true), (false, false)])).unwrap());
        assert!(op.accepts(&xy(&[(false, true), (false, true)])).unwrap());
        assert!(!op.accepts(&xy(&[(false, false)])).unwrap());
        assert!(!op.accepts(&xy(&[(false, true), (true, false)])).unwrap());
    }

    #[test]
    fn rejects_conforming_trace_and_unknown_members() {
        let m = ab();
        let asg = ModelAssignment::defaults(&m);
        let ok = xy(&[(true, false)]);
        assert_eq!(mitigates(&m, &ok, &set(&["A"]), &asg), Err(EngineError::NotAnErrorTrace));
        let tr = xy(&[(true, true)]);
        assert_eq!(
            mitigates(&m, &tr, &set(&["C"]), &asg),
            Err(EngineError::UnknownComponent("C".into()))
        );
    }

    #[test]
    fn stats_respect_product_bound() {
        let m = ab();
        let asg = ModelAssignment::defaults(&m);
        let tr = xy(&[(true, true)]);
        let v = mitigates(&m, &tr, &set(&["B"]), &asg).unwrap();
        // |SPEC(B)| = 2, |OBSERVED_OUT(A)| = horizon + 2 = 3
        assert_eq!(v.stats.state_bound, 6);
        assert!(v.stats.states as u128 <= v.stats.state_bound);
    }

    #[test]
    fn candidate_set_order() {
        let mut sets = [set(&["B", "A"]), set(&["C"]), set(&[]), set(&["A"])];
        sets.sort();
        let shown: Vec<String> = sets.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["{}", "{A}", "{C}", "{A, B}"]);
    }
}
