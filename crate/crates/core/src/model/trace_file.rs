//! Plain-text traces: one step per line, whitespace-separated `var=0|1`
//! tokens. Lines starting with `#` and blank lines are skipped.

use std::collections::BTreeSet;

use super::ModelError;
use crate::automata::{Trace, Valuation, VarScope};

/// Parses a trace in which every step assigns exactly the variables of `vars`.
pub fn parse_trace(text: &str, vars: &VarScope) -> Result<Trace, ModelError> {
    let mut trace = Trace::empty(vars.clone());
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut step = Valuation::new();
        for token in content.split_whitespace() {
            let (name, value) = token.split_once('=').ok_or_else(|| ModelError::TraceSyntax {
                line,
                message: format!("expected `var=0|1`, found `{token}`"),
            })?;
            let value = match value {
                "0" => false,
                "1" => true,
                _ => {
                    return Err(ModelError::TraceSyntax {
                        line,
                        message: format!("value of `{name}` must be 0 or 1, found `{value}`"),
                    })
                }
            };
            if !vars.contains(name) {
                return Err(ModelError::UnknownVariable { variable: name.to_string(), line });
            }
            if step.insert(name, value).is_some() {
                return Err(ModelError::DuplicateAssignment { variable: name.to_string(), line });
            }
        }
        let assigned: BTreeSet<&str> = step.iter().map(|(n, _)| n).collect();
        if let Some(missing) = vars.names().iter().find(|v| !assigned.contains(v.as_str())) {
            return Err(ModelError::MissingVariable { variable: missing.clone(), line });
        }
        trace.push(step)?;
    }
    Ok(trace)
}

/// Renders a trace in the format accepted by [`parse_trace`].
pub fn format_trace(trace: &Trace) -> String {
    trace.steps().iter().map(|s| format!("{s}\n")).collect()
}
