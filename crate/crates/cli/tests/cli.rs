use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn postq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_postq")).args(args).env("RUST_LOG", "off").output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn corrupted_assemblage() -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(fixture("example_assemblage.json")).unwrap()).unwrap();
    let entry = &mut v["minimal"]["sigma_00"]["0,0"][0][0][0];
    *entry = json!(-entry.as_f64().unwrap());
    let path = scratch("corrupted.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn reproduce_paper_reports_every_stage_deterministically() {
    let a = postq(&["reproduce-paper"]);
    let b = postq(&["reproduce-paper"]);
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    for stage in [
        "reconstruct",
        "validate no-signaling",
        "evaluate witness",
        "almost-quantum bound",
        "membership",
        "denoise",
        "qutrit round trip",
    ] {
        assert!(text.contains(&format!("PASS {stage}:")), "{stage} should pass:\n{text}");
    }
    // the de-noised example is octagon-nonlocal (frozen outcome of the LP)
    assert!(text.contains("FAIL locality: octagon behaviour nonlocal (distance 2.890e-3)"), "{text}");
    assert_eq!(a.status.code(), Some(1));
}

#[test]
fn reproduce_paper_json_carries_measured_values() {
    let o = postq(&["--json", "reproduce-paper"]);
    let v = json_out(&o);
    let stage = |name: &str| v["stages"].as_array().unwrap().iter().find(|s| s["stage"] == name).unwrap().clone();
    assert!((stage("evaluate witness")["value"].as_f64().unwrap() + 0.520495).abs() <= 5e-3);
    assert!((stage("almost-quantum bound")["value"].as_f64().unwrap() + 0.508417).abs() <= 1e-3);
    assert_eq!(v["passed"], false);
}

#[test]
fn corrupted_fixture_fails_first_at_no_signaling() {
    let path = corrupted_assemblage();
    let o = postq(&["--json", "reproduce-paper", "--assemblage-fixture", path.to_str().unwrap()]);
    let v = json_out(&o);
    let stages = v["stages"].as_array().unwrap();
    assert_eq!(stages[0]["pass"], true);
    let first = stages.iter().find(|s| s["pass"] == false).unwrap();
    assert_eq!(first["stage"], "validate no-signaling");
    // the witness bound does not depend on the assemblage
    assert!(stages.iter().any(|s| s["stage"] == "almost-quantum bound" && s["pass"] == true));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_exit_codes_follow_the_verdict() {
    assert_eq!(postq(&["validate", &fixture("example_assemblage.json")]).status.code(), Some(0));
    let bad = corrupted_assemblage();
    let o = postq(&["--json", "validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = json_out(&o);
    assert_eq!(v["passed"], false);
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["family"] == "positivity" && c["passed"] == false));
}

#[test]
fn evaluate_accepts_minimal_and_full_functionals() {
    let o = postq(&["--json", "evaluate", &fixture("example_assemblage.json"), &fixture("example_witness.json")]);
    assert_eq!(o.status.code(), Some(0));
    let beta = json_out(&o)["beta"].as_f64().unwrap();
    assert!((beta + 0.520495).abs() <= 5e-3);

    let full = postq_core::fixtures::witness_functional();
    let path = scratch("full_functional.json");
    std::fs::write(&path, serde_json::to_string(&full).unwrap()).unwrap();
    let o = postq(&["--json", "evaluate", &fixture("example_assemblage.json"), path.to_str().unwrap()]);
    assert!((json_out(&o)["beta"].as_f64().unwrap() - beta).abs() < 1e-12);
}

#[test]
fn aq_bound_matches_the_reference_and_dumps_its_program() {
    let dump = scratch("bound_program.json");
    let o = postq(&["--json", "--solver-dump", dump.to_str().unwrap(), "aq", "bound", &fixture("example_witness.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert!((v["value"].as_f64().unwrap() + 0.5084204224).abs() < 1e-9);
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert!(d["num_vars"].as_u64().unwrap() > 0);
    assert_eq!(d["b"].as_array().unwrap().len() as u64, d["num_rows"].as_u64().unwrap());
}

#[test]
fn aq_member_exits_one_for_post_quantum_assemblages() {
    let o = postq(&["--json", "aq", "member", &fixture("example_assemblage.json")]);
    assert_eq!(o.status.code(), Some(1));
    let v = json_out(&o);
    assert_eq!(v["verdict"], "NOT_IN");
    assert!(v["certificate"]["separation"].as_f64().unwrap() >= 0.005);
}

#[test]
fn local_verdicts_and_lp_dump() {
    let dump = scratch("locality_lp.json");
    let ex = fixture("example_assemblage.json");
    let o = postq(&["--solver-dump", dump.to_str().unwrap(), "local", &ex, "--mu", "0.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    // 256 strategy weights and the distance
    assert_eq!(d["num_vars"], 257);
    assert_eq!(postq(&["local", &ex, "--mu", "0.95"]).status.code(), Some(1));
}

#[test]
fn ghjw_realizes_a_bipartite_assemblage() {
    let h = 0.5;
    let q = 0.25;
    let asm = json!({
        "dim_a": 2, "outcomes": 2, "settings": 2,
        "blocks": {
            "0,0": [[[h, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            "1,0": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [h, 0.0]]],
            "0,1": [[[q, 0.0], [q, 0.0]], [[q, 0.0], [q, 0.0]]],
            "1,1": [[[q, 0.0], [-q, 0.0]], [[-q, 0.0], [q, 0.0]]]
        }
    });
    let path = scratch("bipartite.json");
    let out = scratch("realization.json");
    std::fs::write(&path, asm.to_string()).unwrap();
    assert_eq!(postq(&["validate", path.to_str().unwrap()]).status.code(), Some(0));
    let o = postq(&["--json", "ghjw", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: postq_core::QuantumRealization = serde_json::from_slice(&o.stdout).unwrap();
    let original: postq_core::BipartiteAssemblage = serde_json::from_value(asm).unwrap();
    assert!(r.reconstruct().unwrap().max_abs_diff(&original) <= 1e-9);
    assert!(out.exists());
}

#[test]
fn search_without_restarts_is_a_diagnostic() {
    let o = postq(&["--json", "search", "--restarts", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_out(&o)["status"], "DIAGNOSTIC");
}

#[test]
fn default_search_succeeds_and_is_reproducible_from_json() {
    let out = scratch("search.json");
    let o = postq(&["search", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("SUCCESS"));
    let text = std::fs::read_to_string(&out).unwrap();
    let v = postq_core::search::verify_result_json(&text, 1e-8).unwrap();
    assert!(v.pass);
}

#[test]
fn bloch_plot_is_written() {
    let out = scratch("bloch.svg");
    let o = postq(&["bloch", &fixture("example_assemblage.json"), out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(postq(&["validate", "/definitely/missing.json"]).status.code(), Some(2));
    let junk = scratch("junk.json");
    std::fs::write(&junk, r#"{"foo": 1}"#).unwrap();
    assert_eq!(postq(&["validate", junk.to_str().unwrap()]).status.code(), Some(2));
    let o = postq(&["--json", "evaluate", &fixture("example_assemblage.json"), junk.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_out(&o)["exit_code"], 2);
    let dump = scratch("unused_dump.json");
    assert_eq!(postq(&["--solver-dump", dump.to_str().unwrap(), "validate", &fixture("example_assemblage.json")]).status.code(), Some(2));
    assert_eq!(postq(&["search", "--mu-target", "1.5"]).status.code(), Some(2));
}
