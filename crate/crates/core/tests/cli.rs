use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn counterfact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_counterfact")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("counterfact-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn ab_text() -> String {
    std::fs::read_to_string(fixture("ab.json")).unwrap()
}

#[test]
fn validate_fixture_succeeds() {
    let out = counterfact(&["validate", fixture("ab.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("refinement holds"));
}

#[test]
fn validate_reports_output_overlap() {
    let text = ab_text().replacen(r#""outputs": ["y"]"#, r#""outputs": ["x", "y"]"#, 1).replacen(
        r#""inputs": ["x"]"#,
        r#""inputs": []"#,
        1,
    );
    let path = scratch("overlap.json", &text);
    let out = counterfact(&["validate", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["valid"], false);
    let kinds: Vec<&str> = doc["diagnostics"].as_array().unwrap().iter().map(|d| d["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"OutputOverlap"), "{kinds:?}");
}

#[test]
fn validate_reports_malformed_guard_with_position() {
    let text = ab_text().replacen(r#""guard": "x", "to": "err""#, r#""guard": "x &", "to": "err""#, 1);
    let path = scratch("malformed.json", &text);
    let out = counterfact(&["validate", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let diag = &doc["diagnostics"][0];
    assert_eq!(diag["kind"], "ParseError");
    assert_eq!(diag["line"], 10);
    assert!(diag["column"].as_u64().unwrap() > 0);
    assert!(stderr(&out).contains("parse error at line 10"));
}

#[test]
fn validate_reports_refinement_violation() {
    let text = ab_text().replacen(
        r#""edges": [{"from": "ok", "guard": "!y", "to": "ok"},
                        {"from": "ok", "guard": "y", "to": "err"}]}}"#,
        r#""edges": [{"from": "ok", "guard": "true", "to": "ok"}]}}"#,
        1,
    );
    let path = scratch("weak.json", &text);
    let out = counterfact(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("does not contain the composition"), "{}", stderr(&out));
    assert!(stdout(&out).contains("refinement violated"));
}

#[test]
fn analyze_mitigation_finds_b() {
    let out = counterfact(&[
        "analyze",
        "--mode",
        "mitigation",
        "--json",
        fixture("ab.json").to_str().unwrap(),
        fixture("ab_error.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["violation"]["global_violation_index"], 0);
    assert_eq!(doc["reports"].as_array().unwrap().len(), 1);
    assert_eq!(doc["reports"][0]["minimal"], serde_json::json!([["B"]]));
}

#[test]
fn analyze_universal_manifestation_with_observed_a() {
    let out = counterfact(&[
        "analyze",
        "--mode",
        "manifestation",
        "--quantifier",
        "universal",
        "--model",
        "A=observed",
        "--json",
        fixture("ab.json").to_str().unwrap(),
        fixture("ab_error.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let report = &doc["reports"][0];
    assert_eq!(report["quantifier"], "universal");
    assert_eq!(report["assignment"]["A"]["fault"], "observed");
    assert_eq!(report["minimal"], serde_json::json!([["B"]]));
}

#[test]
fn analyze_text_lists_both_analyses() {
    let out = counterfact(&["analyze", fixture("ab.json").to_str().unwrap(), fixture("ab_error.txt").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("fault mitigation (necessary-style)"));
    assert!(text.contains("fault manifestation (sufficient-style, existential)"));
    assert!(text.contains("minimal:    {B}"));
}

#[test]
fn analyze_conforming_trace_exits_4() {
    let out = counterfact(&[
        "analyze",
        fixture("ab.json").to_str().unwrap(),
        fixture("ab_conforming.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("NotAnErrorTrace"));
}

#[test]
fn analyze_without_cause_exits_3() {
    // an arbitrary counterfactual for B can never keep y low
    let out = counterfact(&[
        "analyze",
        "--mode",
        "mitigation",
        "--cf",
        "B=arbitrary",
        fixture("ab.json").to_str().unwrap(),
        fixture("ab_error.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    assert!(stdout(&out).contains("minimal:    none"));
}

#[test]
fn analyze_rejects_unknown_component_and_kind() {
    let sys = fixture("ab.json");
    let tr = fixture("ab_error.txt");
    let out = counterfact(&["analyze", "--model", "Z=spec", sys.to_str().unwrap(), tr.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown component `Z`"));
    let out = counterfact(&["analyze", "--cf", "A=sometimes", sys.to_str().unwrap(), tr.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_horizon_longer_than_trace_is_a_usage_error() {
    let out = counterfact(&[
        "analyze",
        "--horizon",
        "5",
        fixture("ab.json").to_str().unwrap(),
        fixture("ab_error.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_horizon_can_cut_off_the_violation() {
    let trace = scratch("late.txt", "x=0 y=0\nx=1 y=1\n");
    let sys = fixture("ab.json");
    let full = counterfact(&["analyze", sys.to_str().unwrap(), trace.to_str().unwrap()]);
    assert_eq!(full.status.code(), Some(0));
    let cut = counterfact(&["analyze", "--horizon", "1", sys.to_str().unwrap(), trace.to_str().unwrap()]);
    assert_eq!(cut.status.code(), Some(4));
}

#[test]
fn analyze_output_is_deterministic() {
    let args = ["analyze", "--json", "--allow-nonfaulty"];
    let sys = fixture("ab.json");
    let tr = fixture("ab_error.txt");
    let run = || {
        let mut a: Vec<&str> = args.to_vec();
        a.push(sys.to_str().unwrap());
        a.push(tr.to_str().unwrap());
        counterfact(&a)
    };
    let (a, b) = (run(), run());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
}

#[test]
fn stats_reports_subset_counts() {
    let out = counterfact(&[
        "stats",
        "--model",
        "A=arbitrary",
        "--model",
        "B=arbitrary",
        fixture("ab.json").to_str().unwrap(),
        fixture("ab_error.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("== mitigation =="));
    assert!(text.contains("subsets: 3 evaluated, 1 pruned, 4 total (2^2), monotone pruning enabled"), "{text}");
}

#[test]
fn stats_mitigation_of_b_is_within_the_chain_bound() {
    // SPEC(B) has 2 states and OBSERVED_OUT(A) has horizon + 2 = 3
    let out = counterfact(&[
        "stats",
        "--mode",
        "mitigation",
        "--json",
        fixture("ab.json").to_str().unwrap(),
        fixture("ab_error.txt").to_str().unwrap(),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = doc["analyses"][0]["rows"].as_array().unwrap();
    let b = rows.iter().find(|r| r["set"] == serde_json::json!(["B"])).unwrap();
    assert!(b["states"].as_u64().unwrap() <= 2 * 3);
    assert_eq!(b["state_bound"], 6);
}

#[test]
fn missing_file_is_a_usage_error() {
    let out = counterfact(&["validate", "/nonexistent/system.json"]);
    assert_eq!(out.status.code(), Some(2));
}
