//! Systems of components, error traces, and local/global violation checks.

mod format;
mod trace_file;

pub use format::{parse_system, serialize_system};
pub use trace_file::{format_trace, parse_trace};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::automata::{
    self, is_identifier, AutomataError, Diagnostic, RunResult, SafetyAutomaton, Trace, VarScope,
};

/// Who drives a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    /// A free input of the system.
    Env,
    Component(String),
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Env => write!(f, "env"),
            Owner::Component(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub owner: Owner,
}

/// A component: disjoint input and output variables and a prefix-closed
/// specification over both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub inputs: VarScope,
    pub outputs: VarScope,
    pub spec: SafetyAutomaton,
}

impl Component {
    pub fn vars(&self) -> VarScope {
        VarScope::union([&self.inputs, &self.outputs])
    }
}

/// Structural or semantic problem with a system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum ModelDiagnostic {
    NoComponents,
    InvalidName { name: String },
    DuplicateVariable { variable: String },
    DuplicateComponent { component: String },
    UnknownOwner { variable: String, owner: String },
    UndeclaredVariable { component: String, variable: String },
    InputOutputOverlap { component: String, variable: String },
    OutputOverlap { variable: String, components: Vec<String> },
    OwnerMismatch { component: String, variable: String, owner: String },
    UnknownState { automaton: String, state: String },
    Automaton { automaton: String, diagnostic: Diagnostic },
    ScopeMismatch { automaton: String, expected: VarScope, found: VarScope },
    ScopeTooLarge { count: usize },
    RefinementViolation { witness: Trace },
}

impl fmt::Display for ModelDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ModelDiagnostic::*;
        match self {
            NoComponents => write!(f, "system has no components"),
            InvalidName { name } => write!(f, "`{name}` is not a valid identifier"),
            DuplicateVariable { variable } => write!(f, "variable `{variable}` declared twice"),
            DuplicateComponent { component } => write!(f, "component `{component}` declared twice"),
            UnknownOwner { variable, owner } => {
                write!(f, "variable `{variable}` is owned by unknown component `{owner}`")
            }
            UndeclaredVariable { component, variable } => {
                write!(f, "component `{component}` uses undeclared variable `{variable}`")
            }
            InputOutputOverlap { component, variable } => {
                write!(f, "component `{component}` has `{variable}` as both input and output")
            }
            OutputOverlap { variable, components } => {
                write!(f, "output `{variable}` is driven by several components: {}", components.join(", "))
            }
            OwnerMismatch { component, variable, owner } => write!(
                f,
                "component `{component}`: variable `{variable}` is declared with owner `{owner}`"
            ),
            UnknownState { automaton, state } => {
                write!(f, "{automaton}: reference to undeclared state `{state}`")
            }
            Automaton { automaton, diagnostic } => write!(f, "{automaton}: {diagnostic}"),
            ScopeMismatch { automaton, expected, found } => {
                write!(f, "{automaton}: scope {found} differs from expected {expected}")
            }
            ScopeTooLarge { count } => {
                write!(f, "system has {count} variables (at most {} supported)", automata::MAX_VARS)
            }
            RefinementViolation { witness } => write!(
                f,
                "global specification does not contain the composition of the component specifications; witness: [{}]",
                witness.steps().iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid system: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ModelDiagnostic>),
    #[error("trace line {line}: {message}")]
    TraceSyntax { line: usize, message: String },
    #[error("trace line {line}: variable `{variable}` is not assigned")]
    MissingVariable { variable: String, line: usize },
    #[error("trace line {line}: unknown variable `{variable}`")]
    UnknownVariable { variable: String, line: usize },
    #[error("trace line {line}: variable `{variable}` assigned twice")]
    DuplicateAssignment { variable: String, line: usize },
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

/// A validated system: components, declared variables and the global
/// specification over all declared variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemModel {
    variables: Vec<VariableDecl>,
    components: Vec<Component>,
    global_spec: SafetyAutomaton,
}

impl SystemModel {
    /// Checks the structural invariants (names, ownership, disjointness,
    /// automaton scopes).
    pub fn new(
        variables: Vec<VariableDecl>,
        components: Vec<Component>,
        global_spec: SafetyAutomaton,
    ) -> Result<Self, ModelError> {
        let diags = structural_diagnostics(&variables, &components, &global_spec);
        if !diags.is_empty() {
            return Err(ModelError::Validation(diags));
        }
        Ok(SystemModel { variables, components, global_spec })
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.variables
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn component_names(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|c| c.name.as_str())
    }

    pub fn global_spec(&self) -> &SafetyAutomaton {
        &self.global_spec
    }

    /// All declared variables.
    pub fn scope(&self) -> VarScope {
        VarScope::new(self.variables.iter().map(|v| v.name.clone()))
    }

    pub fn env_variables(&self) -> impl Iterator<Item = &str> {
        self.variables
            .iter()
            .filter(|v| v.owner == Owner::Env)
            .map(|v| v.name.as_str())
    }
}

pub(crate) fn structural_diagnostics(
    variables: &[VariableDecl],
    components: &[Component],
    global_spec: &SafetyAutomaton,
) -> Vec<ModelDiagnostic> {
    use ModelDiagnostic::*;
    let mut diags = Vec::new();
    if components.is_empty() {
        diags.push(NoComponents);
    }
    let mut names = BTreeSet::new();
    for c in components {
        if !is_identifier(&c.name) {
            diags.push(InvalidName { name: c.name.clone() });
        }
        if !names.insert(c.name.as_str()) {
            diags.push(DuplicateComponent { component: c.name.clone() });
        }
    }
    let mut owners: BTreeMap<&str, &Owner> = BTreeMap::new();
    for v in variables {
        if !is_identifier(&v.name) {
            diags.push(InvalidName { name: v.name.clone() });
        }
        if owners.insert(&v.name, &v.owner).is_some() {
            diags.push(DuplicateVariable { variable: v.name.clone() });
        }
        if let Owner::Component(c) = &v.owner {
            if !names.contains(c.as_str()) {
                diags.push(UnknownOwner { variable: v.name.clone(), owner: c.clone() });
            }
        }
    }
    if variables.len() > automata::MAX_VARS {
        diags.push(ScopeTooLarge { count: variables.len() });
    }

    let mut drivers: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for c in components {
        for v in c.inputs.names().iter().chain(c.outputs.names()) {
            if !owners.contains_key(v.as_str()) {
                diags.push(UndeclaredVariable { component: c.name.clone(), variable: v.clone() });
            }
        }
        for v in c.inputs.names() {
            if c.outputs.contains(v) {
                diags.push(InputOutputOverlap { component: c.name.clone(), variable: v.clone() });
            }
        }
        for v in c.outputs.names() {
            drivers.entry(v).or_default().push(c.name.clone());
        }
        let expected = c.vars();
        if c.spec.vars() != &expected {
            diags.push(ScopeMismatch {
                automaton: format!("component {}", c.name),
                expected,
                found: c.spec.vars().clone(),
            });
        }
    }
    for (v, comps) in &drivers {
        if comps.len() > 1 {
            diags.push(OutputOverlap { variable: v.to_string(), components: comps.clone() });
        }
    }
    // ownership must agree with the output lists
    for c in components {
        for v in c.outputs.names() {
            match owners.get(v.as_str()) {
                Some(Owner::Component(o)) if o == &c.name => {}
                Some(o) if drivers[v.as_str()].len() == 1 => diags.push(OwnerMismatch {
                    component: c.name.clone(),
                    variable: v.clone(),
                    owner: o.to_string(),
                }),
                _ => {}
            }
        }
    }
    for v in variables {
        if let Owner::Component(o) = &v.owner {
            let listed = components
                .iter()
                .any(|c| &c.name == o && c.outputs.contains(&v.name));
            if !listed && names.contains(o.as_str()) {
                diags.push(OwnerMismatch {
                    component: o.clone(),
                    variable: v.name.clone(),
                    owner: o.clone(),
                });
            }
        }
    }
    let expected = VarScope::new(variables.iter().map(|v| v.name.clone()));
    if global_spec.vars() != &expected {
        diags.push(ScopeMismatch {
            automaton: "global_spec".into(),
            expected,
            found: global_spec.vars().clone(),
        });
    }
    diags
}

/// Checks the refinement obligation: the global specification must contain
/// the composition of all component specifications. Returns an empty list
/// iff it holds.
pub fn validate_system(m: &SystemModel) -> Vec<ModelDiagnostic> {
    let specs: Vec<&SafetyAutomaton> = m.components.iter().map(|c| &c.spec).collect();
    let result = automata::product(&specs).and_then(|p| automata::contains(&p, &m.global_spec));
    match result {
        Ok(r) if r.holds => Vec::new(),
        Ok(r) => vec![ModelDiagnostic::RefinementViolation {
            witness: r.witness.expect("failed containment carries a witness"),
        }],
        Err(AutomataError::TooManyVariables { count, .. }) => {
            vec![ModelDiagnostic::ScopeTooLarge { count }]
        }
        Err(e) => unreachable!("validated automata: {e}"),
    }
}

/// Stepwise restriction of `t` to the variables of `c`.
pub fn project_trace(t: &Trace, c: &Component) -> Result<Trace, ModelError> {
    Ok(t.restrict(&c.vars())?)
}

/// Run of the global specification on `t`.
pub fn violates_global(m: &SystemModel, t: &Trace) -> Result<RunResult, ModelError> {
    Ok(m.global_spec.run(t)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaultyComponent {
    pub component: String,
    /// First step at which the projected trace leaves the local specification.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationReport {
    pub global_violation_index: Option<usize>,
    /// Components whose projected run is rejected, in system order.
    pub faulty: Vec<FaultyComponent>,
}

impl ViolationReport {
    pub fn faulty_names(&self) -> Vec<&str> {
        self.faulty.iter().map(|f| f.component.as_str()).collect()
    }
}

/// Runs every component specification on its projection of `t`.
pub fn faulty_components(m: &SystemModel, t: &Trace) -> Result<ViolationReport, ModelError> {
    let global = violates_global(m, t)?;
    let mut faulty = Vec::new();
    for c in &m.components {
        let local = project_trace(t, c)?;
        if let Some(index) = c.spec.run(&local)?.first_violation_index {
            faulty.push(FaultyComponent { component: c.name.clone(), index });
        }
    }
    Ok(ViolationReport { global_violation_index: global.first_violation_index, faulty })
}
