//! JSON system documents.
//!
//! ```json
//! {
//!   "variables":  [{"name": "x", "owner": "A"}, {"name": "e", "owner": "env"}],
//!   "components": [{"name": "A", "inputs": ["e"], "outputs": ["x"], "spec": AUTOMATON}],
//!   "global_spec": AUTOMATON
//! }
//! ```
//!
//! where an automaton is
//! `{"states": [..], "initial": s, "bad": [..], "complete_with": "bad"|"good", "edges": [{"from", "guard", "to"}]}`.
//! Missing transitions are completed on load: a bad state loops on itself,
//! a good state goes to a fresh sink whose polarity is `complete_with`
//! (default `bad`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{structural_diagnostics, Component, ModelDiagnostic, ModelError, Owner, SystemModel, VariableDecl};
use crate::automata::{
    check_wellformed, AutomatonDef, Edge, Guard, SafetyAutomaton, VarScope, MAX_VARS,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    variables: Vec<VariableDoc>,
    components: Vec<ComponentDoc>,
    global_spec: AutomatonDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    owner: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    spec: AutomatonDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CompleteWith {
    #[default]
    Bad,
    Good,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomatonDoc {
    states: Vec<String>,
    initial: String,
    bad: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    complete_with: Option<CompleteWith>,
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: String,
    guard: String,
    to: String,
}

/// Parses and structurally validates a system document.
///
/// The refinement obligation is not checked here; see
/// [`validate_system`](super::validate_system).
pub fn parse_system(text: &str) -> Result<SystemModel, ModelError> {
    let doc: SystemDoc = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ModelError::Schema(e.to_string()),
        _ => ModelError::Parse { line: e.line(), column: e.column(), message: e.to_string() },
    })?;

    let mut diags = Vec::new();
    let variables: Vec<VariableDecl> = doc
        .variables
        .iter()
        .map(|v| VariableDecl {
            name: v.name.clone(),
            owner: if v.owner == "env" { Owner::Env } else { Owner::Component(v.owner.clone()) },
        })
        .collect();

    let mut components = Vec::new();
    for c in &doc.components {
        let inputs = VarScope::new(c.inputs.iter().cloned());
        let outputs = VarScope::new(c.outputs.iter().cloned());
        let scope = VarScope::union([&inputs, &outputs]);
        let label = format!("component {}", c.name);
        if let Some(spec) = load_automaton(&c.spec, scope, &label, text, &mut diags)? {
            components.push(Component { name: c.name.clone(), inputs, outputs, spec });
        }
    }
    let global_scope = VarScope::new(variables.iter().map(|v| v.name.clone()));
    let global = load_automaton(&doc.global_spec, global_scope, "global_spec", text, &mut diags)?;

    if !diags.is_empty() {
        return Err(ModelError::Validation(diags));
    }
    let global = global.expect("no diagnostics");
    let structural = structural_diagnostics(&variables, &components, &global);
    if !structural.is_empty() {
        return Err(ModelError::Validation(structural));
    }
    SystemModel::new(variables, components, global)
}

fn load_automaton(
    doc: &AutomatonDoc,
    vars: VarScope,
    label: &str,
    source: &str,
    diags: &mut Vec<ModelDiagnostic>,
) -> Result<Option<SafetyAutomaton>, ModelError> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, s) in doc.states.iter().enumerate() {
        index.entry(s.as_str()).or_insert(i);
    }
    let unknown = |state: &str, diags: &mut Vec<ModelDiagnostic>| -> Option<usize> {
        let found = index.get(state).copied();
        if found.is_none() {
            diags.push(ModelDiagnostic::UnknownState {
                automaton: label.to_string(),
                state: state.to_string(),
            });
        }
        found
    };

    let before = diags.len();
    let initial = unknown(&doc.initial, diags);
    let bad: BTreeSet<usize> = doc.bad.iter().filter_map(|b| unknown(b, diags)).collect();
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); doc.states.len()];
    for e in &doc.edges {
        let guard = Guard::parse(&e.guard).map_err(|err| {
            let (line, column) = locate(source, &e.guard, err.column);
            ModelError::Parse {
                line,
                column,
                message: format!("{label}: invalid guard `{}`: {}", e.guard, err.message),
            }
        })?;
        let from = unknown(&e.from, diags);
        let to = unknown(&e.to, diags);
        if let (Some(from), Some(to)) = (from, to) {
            edges[from].push(Edge { guard, target: to });
        }
    }
    if diags.len() > before {
        return Ok(None);
    }
    if vars.len() > MAX_VARS {
        diags.push(ModelDiagnostic::ScopeTooLarge { count: vars.len() });
        return Ok(None);
    }

    let mut def = AutomatonDef {
        vars,
        states: doc.states.clone(),
        initial: initial.expect("checked"),
        bad,
        edges,
    };
    complete(&mut def, doc.complete_with.unwrap_or_default());
    let found = check_wellformed(&def);
    if !found.is_empty() {
        diags.extend(found.into_iter().map(|d| ModelDiagnostic::Automaton {
            automaton: label.to_string(),
            diagnostic: d,
        }));
        return Ok(None);
    }
    Ok(Some(SafetyAutomaton::new(def).expect("checked well-formed")))
}

/// Adds an edge for the valuations no guard covers. States whose guards
/// mention undeclared variables are left alone for the diagnostics pass.
fn complete(def: &mut AutomatonDef, polarity: CompleteWith) {
    let mut sink: Option<usize> = None;
    for state in 0..def.states.len() {
        let edges = &def.edges[state];
        let declared = edges
            .iter()
            .all(|e| e.guard.variables().iter().all(|v| def.vars.contains(v)));
        if !declared {
            continue;
        }
        let covered = (0..def.vars.letter_count()).all(|letter| {
            edges.iter().any(|e| {
                e.guard
                    .eval_with(&|n| def.vars.position(n).map(|p| def.vars.bit(letter, p)))
                    .unwrap_or(false)
            })
        });
        if covered {
            continue;
        }
        let rest = Guard::not(Guard::or_all(edges.iter().map(|e| e.guard.clone()).collect()))
            .canonical();
        let target = if def.bad.contains(&state) {
            state
        } else {
            *sink.get_or_insert_with(|| {
                let base = match polarity {
                    CompleteWith::Bad => "sink_bad",
                    CompleteWith::Good => "sink_good",
                };
                let mut name = base.to_string();
                let mut n = 1;
                while def.states.contains(&name) {
                    name = format!("{base}_{n}");
                    n += 1;
                }
                def.states.push(name);
                let id = def.states.len() - 1;
                def.edges.push(vec![Edge { guard: Guard::True, target: id }]);
                if polarity == CompleteWith::Bad {
                    def.bad.insert(id);
                }
                id
            })
        };
        def.edges[state].push(Edge { guard: rest, target });
    }
}

/// Line and column of a guard error inside the source document. Identical
/// guard texts fail identically, so the first occurrence of the quoted text
/// is a faithful location.
fn locate(source: &str, guard: &str, column_in_guard: usize) -> (usize, usize) {
    let quoted = serde_json::to_string(guard).expect("string serializes");
    match source.find(&quoted) {
        Some(offset) => {
            let before = &source[..offset];
            let line = before.matches('\n').count() + 1;
            let line_start = before.rfind('\n').map_or(0, |i| i + 1);
            let column = source[line_start..offset].chars().count() + 1 + column_in_guard;
            (line, column)
        }
        None => (0, column_in_guard),
    }
}

fn automaton_doc(a: &SafetyAutomaton) -> AutomatonDoc {
    let names = a.state_names();
    AutomatonDoc {
        states: names.to_vec(),
        initial: names[a.initial()].clone(),
        bad: (0..a.num_states()).filter(|&s| a.is_bad(s)).map(|s| names[s].clone()).collect(),
        complete_with: None,
        edges: (0..a.num_states())
            .flat_map(|s| {
                a.edges(s).iter().map(move |e| EdgeDoc {
                    from: names[s].clone(),
                    guard: e.guard.canonical().to_string(),
                    to: names[e.target].clone(),
                })
            })
            .collect(),
    }
}

/// Deterministic JSON rendering of a system; guards are printed in
/// canonical form. Parsing the output yields the same system.
pub fn serialize_system(m: &SystemModel) -> String {
    let doc = SystemDoc {
        variables: m
            .variables()
            .iter()
            .map(|v| VariableDoc { name: v.name.clone(), owner: v.owner.to_string() })
            .collect(),
        components: m
            .components()
            .iter()
            .map(|c| ComponentDoc {
                name: c.name.clone(),
                inputs: c.inputs.names().to_vec(),
                outputs: c.outputs.names().to_vec(),
                spec: automaton_doc(&c.spec),
            })
            .collect(),
        global_spec: automaton_doc(m.global_spec()),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("document serializes");
    out.push('\n');
    out
}
