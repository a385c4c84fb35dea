//! Safety automata over Boolean valuations.
//!
//! Every language handled by the crate (component specifications, the
//! global requirement, fault models) is a prefix-closed language represented
//! by a deterministic, complete automaton whose bad states are absorbing.

mod automaton;
mod guard;
mod ops;
mod valuation;

pub use automaton::{
    check_wellformed, AutomatonDef, Diagnostic, Edge, RunResult, SafetyAutomaton, StateId,
};
pub use guard::{Guard, GuardParseError, UndeclaredVariable};
pub use ops::{contains, has_trace_of_length, horizon_check, product, ContainmentResult, HorizonCheck};
pub use valuation::{is_identifier, Trace, Valuation, VarScope, MAX_VARS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomataError {
    #[error("ill-formed automaton: {}", join_diags(.0))]
    IllFormed(Vec<Diagnostic>),
    #[error("valuation does not assign variable `{missing}`")]
    DomainMismatch { missing: String },
    #[error("trace step {index} has a different variable set")]
    InconsistentTrace { index: usize },
    #[error("product of an empty list of automata")]
    EmptyProduct,
    #[error("scope of {count} variables exceeds the supported {max}")]
    TooManyVariables { count: usize, max: usize },
}

fn join_diags(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
