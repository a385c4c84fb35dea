use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::guard::Guard;
use super::valuation::{is_identifier, Trace, Valuation, VarScope, MAX_VARS};
use super::AutomataError;

pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub guard: Guard,
    pub target: StateId,
}

/// Unchecked automaton description: the shape a parser or builder produces
/// before [`SafetyAutomaton::new`] enforces the well-formedness rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomatonDef {
    pub vars: VarScope,
    pub states: Vec<String>,
    pub initial: StateId,
    pub bad: BTreeSet<StateId>,
    /// Outgoing edges, indexed by source state.
    pub edges: Vec<Vec<Edge>>,
}

/// A violated well-formedness rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    NoStates,
    TooManyVariables { count: usize, max: usize },
    InvalidVariableName { variable: String },
    DuplicateState { state: String },
    UnknownState { index: StateId },
    EdgeListMismatch { states: usize, edge_lists: usize },
    UndeclaredVariable { state: String, variable: String },
    NondeterministicState { state: String, valuation: Valuation },
    IncompleteState { state: String, valuation: Valuation },
    BadNotAbsorbing { state: String, target: String },
    InitialBad { state: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoStates => write!(f, "automaton has no states"),
            Diagnostic::TooManyVariables { count, max } => {
                write!(f, "automaton scope has {count} variables (at most {max} supported)")
            }
            Diagnostic::InvalidVariableName { variable } => {
                write!(f, "`{variable}` is not a valid variable name")
            }
            Diagnostic::DuplicateState { state } => write!(f, "state `{state}` declared twice"),
            Diagnostic::UnknownState { index } => write!(f, "reference to unknown state #{index}"),
            Diagnostic::EdgeListMismatch { states, edge_lists } => {
                write!(f, "{edge_lists} edge lists for {states} states")
            }
            Diagnostic::UndeclaredVariable { state, variable } => {
                write!(f, "state `{state}`: guard mentions undeclared variable `{variable}`")
            }
            Diagnostic::NondeterministicState { state, valuation } => {
                write!(f, "state `{state}` is nondeterministic: several guards hold on [{valuation}]")
            }
            Diagnostic::IncompleteState { state, valuation } => {
                write!(f, "state `{state}` is incomplete: no guard holds on [{valuation}]")
            }
            Diagnostic::BadNotAbsorbing { state, target } => {
                write!(f, "bad state `{state}` has an edge to good state `{target}`")
            }
            Diagnostic::InitialBad { state } => write!(f, "initial state `{state}` is bad"),
        }
    }
}

/// Checks determinism, completeness, absorbing bad states and a good
/// initial state. Determinism and completeness are decided by enumerating
/// every valuation of the scope. Returns an empty list iff well-formed.
pub fn check_wellformed(def: &AutomatonDef) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if def.states.is_empty() {
        return vec![Diagnostic::NoStates];
    }
    if def.vars.len() > MAX_VARS {
        return vec![Diagnostic::TooManyVariables { count: def.vars.len(), max: MAX_VARS }];
    }
    for v in def.vars.names() {
        if !is_identifier(v) {
            diags.push(Diagnostic::InvalidVariableName { variable: v.clone() });
        }
    }
    let mut seen = BTreeSet::new();
    for s in &def.states {
        if !seen.insert(s) {
            diags.push(Diagnostic::DuplicateState { state: s.clone() });
        }
    }
    if def.edges.len() != def.states.len() {
        diags.push(Diagnostic::EdgeListMismatch {
            states: def.states.len(),
            edge_lists: def.edges.len(),
        });
        return diags;
    }
    let n = def.states.len();
    let mut dangling: BTreeSet<StateId> = def.bad.iter().copied().filter(|&b| b >= n).collect();
    if def.initial >= n {
        dangling.insert(def.initial);
    }
    for edges in &def.edges {
        dangling.extend(edges.iter().map(|e| e.target).filter(|&t| t >= n));
    }
    if !dangling.is_empty() {
        diags.extend(dangling.into_iter().map(|index| Diagnostic::UnknownState { index }));
        return diags;
    }
    if def.bad.contains(&def.initial) {
        diags.push(Diagnostic::InitialBad { state: def.states[def.initial].clone() });
    }

    for (state, edges) in def.edges.iter().enumerate() {
        let name = &def.states[state];
        let mut undeclared = false;
        for e in edges {
            for v in e.guard.variables() {
                if !def.vars.contains(v) {
                    diags.push(Diagnostic::UndeclaredVariable {
                        state: name.clone(),
                        variable: v.to_string(),
                    });
                    undeclared = true;
                }
            }
            if def.bad.contains(&state) && !def.bad.contains(&e.target) {
                diags.push(Diagnostic::BadNotAbsorbing {
                    state: name.clone(),
                    target: def.states[e.target].clone(),
                });
            }
        }
        if undeclared {
            continue;
        }
        let mut overlap = None;
        let mut uncovered = None;
        for letter in 0..def.vars.letter_count() {
            let hits = edges
                .iter()
                .filter(|e| eval_letter(&e.guard, &def.vars, letter))
                .count();
            if hits > 1 && overlap.is_none() {
                overlap = Some(letter);
            }
            if hits == 0 && uncovered.is_none() {
                uncovered = Some(letter);
            }
        }
        if let Some(letter) = overlap {
            diags.push(Diagnostic::NondeterministicState {
                state: name.clone(),
                valuation: def.vars.valuation(letter),
            });
        }
        // completeness is only reported for deterministic states
        if let (None, Some(letter)) = (overlap, uncovered) {
            diags.push(Diagnostic::IncompleteState {
                state: name.clone(),
                valuation: def.vars.valuation(letter),
            });
        }
    }
    diags
}

/// Evaluates a guard on valuation number `letter` of `scope`.
/// All guard variables must be in scope.
pub(crate) fn eval_letter(guard: &Guard, scope: &VarScope, letter: usize) -> bool {
    guard
        .eval_with(&|name| scope.position(name).map(|p| scope.bit(letter, p)))
        .expect("guard variable outside automaton scope")
}

/// Outcome of running an automaton on a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub accepted: bool,
    /// First step whose target state is bad.
    pub first_violation_index: Option<usize>,
}

impl RunResult {
    pub fn accepted() -> Self {
        RunResult { accepted: true, first_violation_index: None }
    }

    pub fn rejected_at(index: usize) -> Self {
        RunResult { accepted: false, first_violation_index: Some(index) }
    }
}

/// A deterministic, complete safety automaton with absorbing bad states.
///
/// The accepted language (runs that never visit a bad state) is
/// prefix-closed and contains the empty trace. Instances are immutable
/// and always well-formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyAutomaton {
    vars: VarScope,
    states: Vec<String>,
    initial: StateId,
    bad: Vec<bool>,
    edges: Vec<Vec<Edge>>,
    /// `table[state * letters + letter]` is the index of the enabled edge.
    table: Vec<u32>,
}

impl SafetyAutomaton {
    pub fn new(def: AutomatonDef) -> Result<Self, AutomataError> {
        let diags = check_wellformed(&def);
        if !diags.is_empty() {
            return Err(AutomataError::IllFormed(diags));
        }
        let letters = def.vars.letter_count();
        let mut table = Vec::with_capacity(def.states.len() * letters);
        for edges in &def.edges {
            for letter in 0..letters {
                let idx = edges
                    .iter()
                    .position(|e| eval_letter(&e.guard, &def.vars, letter))
                    .expect("complete automaton");
                table.push(idx as u32);
            }
        }
        let mut bad = vec![false; def.states.len()];
        for &b in &def.bad {
            bad[b] = true;
        }
        Ok(SafetyAutomaton {
            vars: def.vars,
            states: def.states,
            initial: def.initial,
            bad,
            edges: def.edges,
            table,
        })
    }

    /// Assembles an automaton whose edge table is already known to be
    /// consistent with its guards (product constructions).
    pub(crate) fn from_parts(
        vars: VarScope,
        states: Vec<String>,
        initial: StateId,
        bad: Vec<bool>,
        edges: Vec<Vec<Edge>>,
        table: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(table.len(), states.len() * vars.letter_count());
        SafetyAutomaton { vars, states, initial, bad, edges, table }
    }

    /// The one-state automaton accepting every trace over `vars`.
    pub fn universal(vars: VarScope) -> Self {
        SafetyAutomaton::new(AutomatonDef {
            vars,
            states: vec!["any".into()],
            initial: 0,
            bad: BTreeSet::new(),
            edges: vec![vec![Edge { guard: Guard::True, target: 0 }]],
        })
        .expect("universal automaton is well-formed")
    }

    pub fn to_def(&self) -> AutomatonDef {
        AutomatonDef {
            vars: self.vars.clone(),
            states: self.states.clone(),
            initial: self.initial,
            bad: (0..self.states.len()).filter(|&s| self.bad[s]).collect(),
            edges: self.edges.clone(),
        }
    }

    /// Same automaton over a larger scope; the extra variables are left
    /// unconstrained (cylindrification).
    pub fn with_scope(&self, vars: &VarScope) -> Result<Self, AutomataError> {
        if !self.vars.is_subset(vars) {
            let missing = self.vars.names().iter().find(|v| !vars.contains(v)).unwrap();
            return Err(AutomataError::DomainMismatch { missing: missing.clone() });
        }
        let mut def = self.to_def();
        def.vars = vars.clone();
        SafetyAutomaton::new(def)
    }

    pub fn vars(&self) -> &VarScope {
        &self.vars
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_bad(&self, state: StateId) -> bool {
        self.bad[state]
    }

    pub fn edges(&self, state: StateId) -> &[Edge] {
        &self.edges[state]
    }

    /// Edge index taken from `state` on valuation number `letter` of the scope.
    pub(crate) fn edge_index(&self, state: StateId, letter: usize) -> usize {
        self.table[state * self.vars.letter_count() + letter] as usize
    }

    pub(crate) fn next(&self, state: StateId, letter: usize) -> StateId {
        self.edges[state][self.edge_index(state, letter)].target
    }

    /// Successor of `state` on `v`, found by evaluating the outgoing guards.
    /// Variables of `v` outside the scope are ignored.
    pub fn step(&self, state: StateId, v: &Valuation) -> Result<StateId, AutomataError> {
        if let Some(missing) = self.vars.names().iter().find(|n| v.get(n).is_none()) {
            return Err(AutomataError::DomainMismatch { missing: missing.clone() });
        }
        let lookup = |name: &str| v.get(name);
        for e in &self.edges[state] {
            if e.guard.eval_with(&lookup).expect("scope checked above") {
                return Ok(e.target);
            }
        }
        unreachable!("complete automaton has an enabled edge")
    }

    /// Simulates the unique run on `trace`.
    pub fn run(&self, trace: &Trace) -> Result<RunResult, AutomataError> {
        if let Some(missing) = self.vars.names().iter().find(|n| !trace.vars().contains(n)) {
            return Err(AutomataError::DomainMismatch { missing: missing.clone() });
        }
        let mut state = self.initial;
        for (i, v) in trace.steps().iter().enumerate() {
            state = self.step(state, v)?;
            if self.bad[state] {
                return Ok(RunResult::rejected_at(i));
            }
        }
        Ok(RunResult::accepted())
    }

    pub fn accepts(&self, trace: &Trace) -> Result<bool, AutomataError> {
        Ok(self.run(trace)?.accepted)
    }
}
