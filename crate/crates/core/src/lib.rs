//! Counterfactual causality analysis for safety violations in concurrent
//! reactive systems.
//!
//! A system is a synchronous composition of components, each with a
//! prefix-closed specification over its input and output variables, plus a
//! global prefix-closed requirement. Given an error trace that violates the
//! requirement, the [`engine`] decides which sets of components are to blame
//! by two counterfactual analyses:
//!
//! * **fault mitigation**: would the correct behaviour of the candidate set
//!   have kept the requirement, whatever the other components do under their
//!   fault models?
//! * **fault manifestation**: does the observed faulty behaviour of the
//!   candidate set violate the requirement even when everyone else behaves
//!   correctly?
//!
//! Both reduce to products, containment and bounded reachability over
//! [`automata::SafetyAutomaton`]s.

pub mod automata;
pub mod cli;
pub mod counterfactual;
pub mod engine;
pub mod model;
