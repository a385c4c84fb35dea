//! Enumeration of causal sets over the subset lattice of the candidates.
//!
//! Subsets are visited by cardinality, lexicographically within a
//! cardinality. When every candidate's counterfactual language is contained
//! in its fault model, mitigation and existential manifestation are
//! upward-closed in the candidate set, and supersets of a satisfying set are
//! settled without evaluating them.

use rayon::prelude::*;
use serde::Serialize;

use super::{Analysis, CandidateSet, EngineError, Mode, Quantifier, Verdict};
use crate::automata;
use crate::counterfactual::ModelAssignment;
use crate::model::{faulty_components, SystemModel, ViolationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    /// Report only the minimal satisfying sets.
    pub minimal_only: bool,
    /// Draw candidates from all components, not only the locally faulty ones.
    pub allow_nonfaulty: bool,
    /// Skip supersets of satisfying sets when the predicate is monotone.
    pub pruning: bool,
    /// Evaluate the subsets of one cardinality concurrently.
    pub parallel: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions { minimal_only: false, allow_nonfaulty: false, pruning: true, parallel: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetVerdict {
    pub set: CandidateSet,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum ReportNote {
    /// No component violated its local specification: the violation is
    /// attributable to the environment (or to a refinement gap) only.
    EnvironmentOnly,
}

/// Worst-case cost of the enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityNote {
    pub candidates: usize,
    pub components: usize,
    /// `2^candidates` predicate evaluations, each over a product of
    /// `components` automata.
    pub worst_case_evaluations: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CauseReport {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantifier: Option<Quantifier>,
    pub assignment: ModelAssignment,
    pub candidates: Vec<String>,
    /// Every satisfying set, in enumeration order; absent in minimal-only runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_satisfying: Option<Vec<CandidateSet>>,
    /// The ⊆-minimal satisfying sets.
    pub minimal: Vec<CandidateSet>,
    /// Verdicts of the minimal sets.
    pub verdicts: Vec<SetVerdict>,
    pub complexity: ComplexityNote,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<ReportNote>,
}

/// Work done by one enumeration; not part of the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnumerationStats {
    pub subsets_total: u128,
    pub evaluated: usize,
    pub pruned: usize,
    pub monotone: bool,
    pub evaluations: Vec<SetVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub violation: ViolationReport,
    pub report: CauseReport,
    pub stats: EnumerationStats,
}

/// Removes every set that has a proper subset in `sets`; the result is
/// sorted by size, then lexicographically.
pub fn minimal_antichain(sets: &[CandidateSet]) -> Vec<CandidateSet> {
    let mut out: Vec<CandidateSet> = sets
        .iter()
        .filter(|s| !sets.iter().any(|t| t.len() < s.len() && t.is_subset(s)))
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}

/// All `size`-element subsets of `universe` (assumed sorted), lexicographically.
fn combinations(universe: &[String], size: usize) -> Vec<CandidateSet> {
    let n = universe.len();
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(CandidateSet::new(idx.iter().map(|&i| universe[i].clone())));
        // advance to the next combination
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Evaluates the analysis predicate over the subsets of the candidate
/// universe (the faulty components unless `allow_nonfaulty`).
pub fn enumerate_causal_sets(
    m: &SystemModel,
    tr: &crate::automata::Trace,
    mode: Mode,
    asg: &ModelAssignment,
    quantifier: Quantifier,
    options: EnumerationOptions,
) -> Result<Enumeration, EngineError> {
    let analysis = Analysis::new(m, tr, asg)?;
    enumerate_with(&analysis, mode, quantifier, options)
}

pub(crate) fn upward_closed(
    analysis: &Analysis<'_>,
    mode: Mode,
    quantifier: Quantifier,
    universe: &[String],
) -> Result<bool, EngineError> {
    if mode == Mode::Manifestation && quantifier == Quantifier::Universal {
        return Ok(false);
    }
    for name in universe {
        let i = analysis.component_index(name).expect("universe drawn from the model");
        let (cf, fault) = analysis.component_models(i);
        if !automata::contains(cf, fault)?.holds {
            return Ok(false);
        }
    }
    Ok(true)
}

/// [`enumerate_causal_sets`] over a prepared analysis.
pub fn enumerate_with(
    analysis: &Analysis<'_>,
    mode: Mode,
    quantifier: Quantifier,
    options: EnumerationOptions,
) -> Result<Enumeration, EngineError> {
    if !analysis.is_error_trace() {
        return Err(EngineError::NotAnErrorTrace);
    }
    let m = analysis.model();
    let violation = faulty_components(m, analysis.trace())?;
    let mut universe: Vec<String> = if options.allow_nonfaulty {
        m.component_names().map(str::to_string).collect()
    } else {
        violation.faulty.iter().map(|f| f.component.clone()).collect()
    };
    universe.sort();

    let mut notes = Vec::new();
    if violation.faulty.is_empty() {
        notes.push(ReportNote::EnvironmentOnly);
    }
    let monotone = options.pruning && upward_closed(analysis, mode, quantifier, &universe)?;

    let mut satisfying: Vec<CandidateSet> = Vec::new();
    let mut evaluations: Vec<SetVerdict> = Vec::new();
    let mut pruned = 0;
    if !universe.is_empty() {
        for size in 0..=universe.len() {
            let mut to_evaluate = Vec::new();
            let mut inferred = Vec::new();
            for set in combinations(&universe, size) {
                if monotone && satisfying.iter().any(|s| s.is_subset(&set)) {
                    pruned += 1;
                    inferred.push(set);
                } else {
                    to_evaluate.push(set);
                }
            }
            let results: Vec<Result<Verdict, EngineError>> = if options.parallel {
                to_evaluate
                    .par_iter()
                    .map(|d| analysis.evaluate(d, mode, quantifier))
                    .collect()
            } else {
                to_evaluate.iter().map(|d| analysis.evaluate(d, mode, quantifier)).collect()
            };
            let mut layer_sat = Vec::new();
            for (set, verdict) in to_evaluate.into_iter().zip(results) {
                let verdict = verdict?;
                if verdict.holds {
                    layer_sat.push(set.clone());
                }
                evaluations.push(SetVerdict { set, verdict });
            }
            if !options.minimal_only {
                layer_sat.extend(inferred);
            }
            layer_sat.sort();
            satisfying.extend(layer_sat);
        }
    }

    let minimal = minimal_antichain(&satisfying);
    let verdicts = minimal
        .iter()
        .map(|s| {
            evaluations
                .iter()
                .find(|e| &e.set == s)
                .cloned()
                .expect("minimal sets are always evaluated")
        })
        .collect();
    let subsets_total = 1u128 << universe.len();
    let report = CauseReport {
        mode,
        quantifier: (mode == Mode::Manifestation).then_some(quantifier),
        assignment: analysis.assignment().clone(),
        complexity: ComplexityNote {
            candidates: universe.len(),
            components: m.components().len(),
            worst_case_evaluations: subsets_total,
        },
        candidates: universe,
        all_satisfying: (!options.minimal_only).then_some(satisfying),
        minimal,
        verdicts,
        notes,
    };
    let stats = EnumerationStats {
        subsets_total,
        evaluated: evaluations.len(),
        pruned,
        monotone,
        evaluations,
    };
    Ok(Enumeration { violation, report, stats })
}
