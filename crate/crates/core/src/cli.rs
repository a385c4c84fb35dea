//! Command-line frontend.
//!
//! Exit codes: `0` success (for `analyze`: at least one causal set found),
//! `1` validation failure, `2` parse/schema/usage error, `3` no causal set,
//! `4` the trace does not violate the global specification.
//!
//! Commands return their output instead of printing it so they can be
//! driven from tests; `main` only forwards it.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::automata::Trace;
use crate::counterfactual::{FaultModelKind, ModelAssignment};
use crate::engine::{
    enumerate::enumerate_with, Analysis, CauseReport, EngineError, EnumerationOptions, EnumerationStats,
    Mode, Quantifier,
};
use crate::model::{
    faulty_components, parse_system, parse_trace, validate_system, ModelDiagnostic, ModelError, SystemModel,
    ViolationReport,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CAUSE: i32 = 3;
pub const EXIT_NOT_ERROR_TRACE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "counterfact", version, about = "Blame components for safety violations on error traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a system and check that the global spec contains the composition of the component specs
    Validate {
        system: PathBuf,
        /// Emit a JSON diagnostic document
        #[arg(long)]
        json: bool,
    },
    /// Compute causal sets for an error trace
    Analyze(AnalysisArgs),
    /// Report operand product sizes and subset-evaluation counts
    Stats(AnalysisArgs),
}

#[derive(clap::Args, Debug, Clone)]
struct AnalysisArgs {
    system: PathBuf,
    trace: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Quantifier of the manifestation analysis
    #[arg(long, value_enum, default_value_t = QuantifierArg::Existential)]
    quantifier: QuantifierArg,
    /// Fault model of a component outside the candidate set (NAME=KIND, repeatable)
    #[arg(long = "model", value_name = "NAME=KIND")]
    fault_models: Vec<String>,
    /// Counterfactual model of a component inside the candidate set (NAME=KIND, repeatable)
    #[arg(long = "cf", value_name = "NAME=KIND")]
    cf_models: Vec<String>,
    /// Only report minimal causal sets
    #[arg(long)]
    minimal_only: bool,
    /// Consider components that conform to their local specification as candidates
    #[arg(long)]
    allow_nonfaulty: bool,
    /// Analyse only the first N steps of the trace
    #[arg(long, value_name = "N")]
    horizon: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Mitigation,
    Manifestation,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QuantifierArg {
    Existential,
    Universal,
}

/// Captured result of a command.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CmdOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CmdOutput {
    fn fail(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        CmdOutput { code, stdout: String::new(), stderr }
    }
}

/// Validated analysis settings.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub system_path: PathBuf,
    pub trace_path: PathBuf,
    pub modes: Vec<Mode>,
    pub quantifier: Quantifier,
    pub fault_overrides: Vec<(String, FaultModelKind)>,
    pub cf_overrides: Vec<(String, FaultModelKind)>,
    pub horizon: Option<usize>,
    pub minimal_only: bool,
    pub allow_nonfaulty: bool,
    pub json: bool,
}

impl AnalysisConfig {
    fn from_args(args: AnalysisArgs) -> Result<Self, String> {
        let parse_overrides = |raw: &[String]| -> Result<Vec<(String, FaultModelKind)>, String> {
            raw.iter()
                .map(|item| {
                    let (name, kind) = item
                        .split_once('=')
                        .ok_or_else(|| format!("expected NAME=KIND, found `{item}`"))?;
                    let kind = kind.parse::<FaultModelKind>().map_err(|e| e.to_string())?;
                    Ok((name.to_string(), kind))
                })
                .collect()
        };
        Ok(AnalysisConfig {
            modes: match args.mode {
                ModeArg::Mitigation => vec![Mode::Mitigation],
                ModeArg::Manifestation => vec![Mode::Manifestation],
                ModeArg::Both => vec![Mode::Mitigation, Mode::Manifestation],
            },
            quantifier: match args.quantifier {
                QuantifierArg::Existential => Quantifier::Existential,
                QuantifierArg::Universal => Quantifier::Universal,
            },
            fault_overrides: parse_overrides(&args.fault_models)?,
            cf_overrides: parse_overrides(&args.cf_models)?,
            system_path: args.system,
            trace_path: args.trace,
            horizon: args.horizon,
            minimal_only: args.minimal_only,
            allow_nonfaulty: args.allow_nonfaulty,
            json: args.json,
        })
    }

    fn options(&self) -> EnumerationOptions {
        EnumerationOptions {
            minimal_only: self.minimal_only,
            allow_nonfaulty: self.allow_nonfaulty,
            pruning: true,
            parallel: true,
        }
    }

    fn assignment(&self, m: &SystemModel) -> Result<ModelAssignment, String> {
        let mut asg = ModelAssignment::defaults(m);
        for (name, kind) in &self.fault_overrides {
            asg.set_fault(name, *kind).map_err(|e| e.to_string())?;
        }
        for (name, kind) in &self.cf_overrides {
            asg.set_cf(name, *kind).map_err(|e| e.to_string())?;
        }
        Ok(asg)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> CmdOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                CmdOutput::fail(code, text)
            } else {
                CmdOutput { code, stdout: text, stderr: String::new() }
            };
        }
    };
    match cli.command {
        Command::Validate { system, json } => cmd_validate(&system, json),
        Command::Analyze(args) => match AnalysisConfig::from_args(args) {
            Ok(cfg) => cmd_analyze(&cfg),
            Err(e) => CmdOutput::fail(EXIT_USAGE, format!("error: {e}")),
        },
        Command::Stats(args) => match AnalysisConfig::from_args(args) {
            Ok(cfg) => cmd_stats(&cfg),
            Err(e) => CmdOutput::fail(EXIT_USAGE, format!("error: {e}")),
        },
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind")]
enum Problem {
    ParseError { line: usize, column: usize, message: String },
    SchemaError { message: String },
    IoError { message: String },
    #[serde(untagged)]
    Model(ModelDiagnostic),
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Problem::ParseError { line, column, message } => {
                write!(f, "parse error at line {line}, column {column}: {message}")
            }
            Problem::SchemaError { message } => write!(f, "schema error: {message}"),
            Problem::IoError { message } => write!(f, "{message}"),
            Problem::Model(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Serialize)]
struct ValidationDoc<'a> {
    schema_version: u32,
    valid: bool,
    diagnostics: &'a [Problem],
}

/// Reads and structurally validates a system file. On failure returns the
/// exit code and problems.
fn load_system(path: &Path) -> Result<SystemModel, (i32, Vec<Problem>)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        (EXIT_USAGE, vec![Problem::IoError { message: format!("cannot read {}: {e}", path.display()) }])
    })?;
    parse_system(&text).map_err(|e| match e {
        ModelError::Parse { line, column, message } => {
            (EXIT_USAGE, vec![Problem::ParseError { line, column, message }])
        }
        ModelError::Validation(diags) => (EXIT_INVALID, diags.into_iter().map(Problem::Model).collect()),
        other => (EXIT_USAGE, vec![Problem::SchemaError { message: other.to_string() }]),
    })
}

fn problems_text(problems: &[Problem]) -> String {
    problems.iter().map(|p| format!("error: {p}\n")).collect()
}

pub fn cmd_validate(system: &Path, json: bool) -> CmdOutput {
    let (code, problems, summary) = match load_system(system) {
        Err((code, problems)) => (code, problems, None),
        Ok(m) => {
            let diags: Vec<Problem> = validate_system(&m).into_iter().map(Problem::Model).collect();
            let code = if diags.is_empty() { EXIT_OK } else { EXIT_INVALID };
            let summary = format!(
                "{}: {} components, {} variables, refinement {}\n",
                system.display(),
                m.components().len(),
                m.variables().len(),
                if diags.is_empty() { "holds" } else { "violated" }
            );
            (code, diags, Some(summary))
        }
    };
    let stdout = if json {
        let doc = ValidationDoc { schema_version: SCHEMA_VERSION, valid: code == EXIT_OK, diagnostics: &problems };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    } else {
        summary.unwrap_or_default()
    };
    CmdOutput { code, stdout, stderr: problems_text(&problems) }
}

/// A loaded system, its (possibly truncated) trace and the assignment.
struct Loaded {
    model: SystemModel,
    trace: Trace,
    assignment: ModelAssignment,
    warnings: String,
}

fn load_inputs(cfg: &AnalysisConfig) -> Result<Loaded, CmdOutput> {
    let model = load_system(&cfg.system_path)
        .map_err(|(code, problems)| CmdOutput::fail(code, problems_text(&problems)))?;
    let mut warnings = String::new();
    for d in validate_system(&model) {
        let _ = writeln!(warnings, "warning: {d}");
    }
    let text = std::fs::read_to_string(&cfg.trace_path).map_err(|e| {
        CmdOutput::fail(EXIT_USAGE, format!("error: cannot read {}: {e}", cfg.trace_path.display()))
    })?;
    let mut trace = parse_trace(&text, &model.scope())
        .map_err(|e| CmdOutput::fail(EXIT_USAGE, format!("error: {}: {e}", cfg.trace_path.display())))?;
    if let Some(h) = cfg.horizon {
        if h > trace.len() {
            return Err(CmdOutput::fail(
                EXIT_USAGE,
                format!("error: horizon {h} exceeds the trace length {}", trace.len()),
            ));
        }
        trace = trace.prefix(h);
    }
    let assignment = cfg
        .assignment(&model)
        .map_err(|e| CmdOutput::fail(EXIT_USAGE, format!("error: {e}")))?;
    Ok(Loaded { model, trace, assignment, warnings })
}

struct Analysed {
    violation: ViolationReport,
    runs: Vec<(CauseReport, EnumerationStats)>,
}

fn run_analyses(cfg: &AnalysisConfig, loaded: &Loaded) -> Result<Analysed, CmdOutput> {
    let engine_err = |e: EngineError| match e {
        EngineError::NotAnErrorTrace => CmdOutput::fail(EXIT_NOT_ERROR_TRACE, format!("NotAnErrorTrace: {e}")),
        other => CmdOutput::fail(EXIT_USAGE, format!("error: {other}")),
    };
    let analysis = Analysis::new(&loaded.model, &loaded.trace, &loaded.assignment).map_err(engine_err)?;
    let violation = faulty_components(&loaded.model, analysis.trace())
        .map_err(|e| CmdOutput::fail(EXIT_USAGE, format!("error: {e}")))?;
    if !analysis.is_error_trace() {
        return Err(engine_err(EngineError::NotAnErrorTrace));
    }
    let mut runs = Vec::new();
    for &mode in &cfg.modes {
        let e = enumerate_with(&analysis, mode, cfg.quantifier, cfg.options()).map_err(engine_err)?;
        runs.push((e.report, e.stats));
    }
    Ok(Analysed { violation, runs })
}

#[derive(Serialize)]
struct AnalysisDoc<'a> {
    schema_version: u32,
    trace_length: usize,
    violation: &'a ViolationReport,
    reports: Vec<&'a CauseReport>,
}

fn json_string<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable");
    s.push('\n');
    s
}

fn violation_text(trace_len: usize, v: &ViolationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "trace length: {trace_len}");
    match v.global_violation_index {
        Some(i) => {
            let _ = writeln!(out, "global specification violated at step {i}");
        }
        None => {
            let _ = writeln!(out, "global specification satisfied");
        }
    }
    if v.faulty.is_empty() {
        let _ = writeln!(out, "faulty components: none");
    } else {
        let _ = writeln!(out, "faulty components:");
        for f in &v.faulty {
            let _ = writeln!(out, "  {:<12} first local violation at step {}", f.component, f.index);
        }
    }
    out
}

fn witness_text(t: &Option<Trace>) -> String {
    match t {
        None => "-".into(),
        Some(t) if t.is_empty() => "(empty)".into(),
        Some(t) => t.steps().iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
    }
}

fn sets_text<'a>(sets: impl IntoIterator<Item = &'a crate::engine::CandidateSet>) -> String {
    let parts: Vec<String> = sets.into_iter().map(ToString::to_string).collect();
    if parts.is_empty() { "none".into() } else { parts.join(", ") }
}

fn report_text(r: &CauseReport) -> String {
    let mut out = String::new();
    let title = match (r.mode, r.quantifier) {
        (Mode::Mitigation, _) => "fault mitigation (necessary-style)".to_string(),
        (Mode::Manifestation, q) => format!(
            "fault manifestation (sufficient-style, {})",
            q.unwrap_or_default()
        ),
    };
    let _ = writeln!(out, "\n== {title} ==");
    let kinds: Vec<String> = r
        .assignment
        .iter()
        .map(|(name, k)| format!("{name}: cf={} fault={}", k.cf, k.fault))
        .collect();
    let _ = writeln!(out, "models:     {}", kinds.join("; "));
    let _ = writeln!(out, "candidates: {{{}}}", r.candidates.join(", "));
    if let Some(all) = &r.all_satisfying {
        let _ = writeln!(out, "satisfying: {}", sets_text(all));
    }
    let _ = writeln!(out, "minimal:    {}", sets_text(&r.minimal));
    if !r.verdicts.is_empty() {
        let _ = writeln!(out, "  {:<16} {:<8} {:<8} witness", "set", "holds", "vacuous");
        for sv in &r.verdicts {
            let _ = writeln!(
                out,
                "  {:<16} {:<8} {:<8} {}",
                sv.set.to_string(),
                sv.verdict.holds,
                sv.verdict.vacuous,
                witness_text(&sv.verdict.witness)
            );
        }
    }
    for note in &r.notes {
        match note {
            crate::engine::ReportNote::EnvironmentOnly => {
                let _ = writeln!(out, "note: no component violated its local specification (environment only)");
            }
        }
    }
    let _ = writeln!(
        out,
        "complexity: {} candidates, at most {} evaluations, each over a product of {} automata",
        r.complexity.candidates, r.complexity.worst_case_evaluations, r.complexity.components
    );
    out
}

pub fn cmd_analyze(cfg: &AnalysisConfig) -> CmdOutput {
    let loaded = match load_inputs(cfg) {
        Ok(l) => l,
        Err(out) => return out,
    };
    let analysed = match run_analyses(cfg, &loaded) {
        Ok(a) => a,
        Err(mut out) => {
            if out.code == EXIT_NOT_ERROR_TRACE {
                let v = faulty_components(&loaded.model, &loaded.trace).ok();
                if let Some(v) = v {
                    out.stdout = if cfg.json {
                        json_string(&AnalysisDoc {
                            schema_version: SCHEMA_VERSION,
                            trace_length: loaded.trace.len(),
                            violation: &v,
                            reports: Vec::new(),
                        })
                    } else {
                        violation_text(loaded.trace.len(), &v)
                    };
                }
            }
            out.stderr.insert_str(0, &loaded.warnings);
            return out;
        }
    };
    let found = analysed.runs.iter().any(|(r, _)| !r.minimal.is_empty());
    let stdout = if cfg.json {
        json_string(&AnalysisDoc {
            schema_version: SCHEMA_VERSION,
            trace_length: loaded.trace.len(),
            violation: &analysed.violation,
            reports: analysed.runs.iter().map(|(r, _)| r).collect(),
        })
    } else {
        let mut s = violation_text(loaded.trace.len(), &analysed.violation);
        for (r, _) in &analysed.runs {
            s.push_str(&report_text(r));
        }
        s
    };
    CmdOutput {
        code: if found { EXIT_OK } else { EXIT_NO_CAUSE },
        stdout,
        stderr: loaded.warnings,
    }
}

#[derive(Serialize)]
struct StatsRow<'a> {
    set: &'a crate::engine::CandidateSet,
    holds: bool,
    vacuous: bool,
    states: usize,
    edges: usize,
    state_bound: u128,
    explored_pairs: usize,
    bfs_depth: usize,
}

#[derive(Serialize)]
struct StatsSection<'a> {
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantifier: Option<Quantifier>,
    candidates: &'a [String],
    monotone: bool,
    subsets_total: u128,
    evaluated: usize,
    pruned: usize,
    rows: Vec<StatsRow<'a>>,
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    schema_version: u32,
    trace_length: usize,
    components: usize,
    analyses: Vec<StatsSection<'a>>,
}

pub fn cmd_stats(cfg: &AnalysisConfig) -> CmdOutput {
    let loaded = match load_inputs(cfg) {
        Ok(l) => l,
        Err(out) => return out,
    };
    let analysed = match run_analyses(cfg, &loaded) {
        Ok(a) => a,
        Err(mut out) => {
            out.stderr.insert_str(0, &loaded.warnings);
            return out;
        }
    };
    let sections: Vec<StatsSection> = analysed
        .runs
        .iter()
        .map(|(r, s)| StatsSection {
            mode: r.mode,
            quantifier: r.quantifier,
            candidates: &r.candidates,
            monotone: s.monotone,
            subsets_total: s.subsets_total,
            evaluated: s.evaluated,
            pruned: s.pruned,
            rows: s
                .evaluations
                .iter()
                .map(|e| StatsRow {
                    set: &e.set,
                    holds: e.verdict.holds,
                    vacuous: e.verdict.vacuous,
                    states: e.verdict.stats.states,
                    edges: e.verdict.stats.edges,
                    state_bound: e.verdict.stats.state_bound,
                    explored_pairs: e.verdict.stats.explored_pairs,
                    bfs_depth: e.verdict.stats.bfs_depth,
                })
                .collect(),
        })
        .collect();
    let stdout = if cfg.json {
        json_string(&StatsDoc {
            schema_version: SCHEMA_VERSION,
            trace_length: loaded.trace.len(),
            components: loaded.model.components().len(),
            analyses: sections,
        })
    } else {
        let mut out = String::new();
        for s in &sections {
            let label = match s.quantifier {
                Some(q) => format!("{} ({q})", s.mode),
                None => s.mode.to_string(),
            };
            let _ = writeln!(out, "== {label} ==");
            let _ = writeln!(
                out,
                "  {:<16} {:<6} {:>7} {:>7} {:>10} {:>7} {:>6}",
                "set", "holds", "states", "edges", "bound", "pairs", "depth"
            );
            for r in &s.rows {
                let _ = writeln!(
                    out,
                    "  {:<16} {:<6} {:>7} {:>7} {:>10} {:>7} {:>6}",
                    r.set.to_string(),
                    r.holds,
                    r.states,
                    r.edges,
                    r.state_bound,
                    r.explored_pairs,
                    r.bfs_depth
                );
            }
            let _ = writeln!(
                out,
                "  subsets: {} evaluated, {} pruned, {} total (2^{}){}",
                s.evaluated,
                s.pruned,
                s.subsets_total,
                s.candidates.len(),
                if s.monotone { ", monotone pruning enabled" } else { "" }
            );
        }
        out
    };
    CmdOutput { code: EXIT_OK, stdout, stderr: loaded.warnings }
}
