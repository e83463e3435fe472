mod common;

use std::path::PathBuf;

use common::fixtures;
use dioc::cli::{exit, run_cli};
use serde_json::Value as Json;

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn run<S: AsRef<str>>(args: &[S]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["dioc".to_string()];
    full.extend(args.iter().map(|s| s.as_ref().to_string()));
    let code = run_cli(full, &mut out, &mut err);
    Outcome { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn hosted(base: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = base.iter().map(|s| s.to_string()).collect();
    v.extend(["--host".into(), fx("host.json"), "--inputs".into(), fx("inputs.json")]);
    v
}

fn json_lines(s: &str) -> Vec<Json> {
    s.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn check_accepts_connected_program() {
    let o = run(&["check", &fx("corpus/buying.dioc")]);
    assert_eq!(o.code, exit::OK, "{}", o.err);
}

#[test]
fn check_reports_sequence_violation_with_span() {
    let o = run(&["check", &fx("bad/seq_violation.dioc")]);
    assert_eq!(o.code, exit::FAILED);
    assert!(o.out.contains("SEQ-CONN"), "{}", o.out);
    assert!(o.out.contains(":2:") || o.out.contains(":3:"), "{}", o.out);
}

#[test]
fn check_reports_parallel_violation() {
    let o = run(&["check", "--json", &fx("bad/par_violation.dioc")]);
    assert_eq!(o.code, exit::FAILED);
    let j: Json = serde_json::from_str(o.out.trim()).unwrap();
    assert_eq!(j["connected"], false);
    assert_eq!(j["violations"][0]["code"], "PAR-CONN");
}

#[test]
fn check_parse_and_io_errors() {
    assert_eq!(run(&["check", &fx("bad/syntax_error.dioc")]).code, exit::PARSE);
    assert_eq!(run(&["check", &fx("corpus/missing.dioc")]).code, exit::IO);
    assert_eq!(run(&["frobnicate"]).code, exit::PARSE);
    assert_eq!(run(&["--help"]).code, exit::OK);
}

#[test]
fn project_single_role_and_unknown_role() {
    let o = run(&["project", &fx("corpus/buying.dioc"), "--role", "seller"]);
    assert_eq!(o.code, exit::OK);
    assert!(o.out.contains("o*_3 : x_3 from buyer"), "{}", o.out);
    assert_eq!(run(&["project", &fx("corpus/buying.dioc"), "--role", "ghost"]).code, exit::UNKNOWN_ROLE);
}

#[test]
fn project_writes_one_file_per_role() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["project", &fx("corpus/buying.dioc"), "--out", &dir.path().display().to_string()]);
    assert_eq!(o.code, exit::OK, "{}", o.err);
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["bank.dpoc", "buyer.dpoc", "seller.dpoc"]);
    let text = std::fs::read_to_string(dir.path().join("bank.dpoc")).unwrap();
    assert!(dioc::parser::parse_dpoc_process(&text).is_ok());
}

#[test]
fn project_refuses_disconnected_unless_forced() {
    let p = fx("bad/seq_violation.dioc");
    assert_eq!(run(&["project", &p]).code, exit::FAILED);
    let o = run(&["project", &p, "--force"]);
    assert_eq!(o.code, exit::OK);
    assert!(o.out.contains("role a"), "{}", o.out);
}

#[test]
fn run_one_ticks() {
    let o = run(&["run", "--level", "dioc", &fx("corpus/one.dioc")]);
    assert_eq!(o.code, exit::OK, "{}", o.err);
    assert_eq!(json_lines(&o.out), vec![serde_json::json!({"kind": "tick"})]);
}

#[test]
fn run_scripted_dpoc_applies_update() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("schedule.json");
    std::fs::write(&sched, r#"{"changes":[{"afterWeakLabel":1,"setUpdates":["fidelity_card.upd"]}]}"#).unwrap();
    let s = sched.display().to_string();
    let args = hosted(&["run", "--level", "dpoc", "--weak", &fx("corpus/buying.dioc"), "--updates", &fx("updates"), "--schedule", &s]);
    let o = run(&args);
    assert_eq!(o.code, exit::OK, "{}", o.err);
    let labels = json_lines(&o.out);
    assert!(labels.contains(&serde_json::json!({"kind": "update", "name": "fidelity_card"})), "{}", o.out);
}

#[test]
fn run_is_deterministic() {
    let args = hosted(&["run", "--level", "dpoc", &fx("corpus/buying.dioc"), "--seed", "11", "--updates", &fx("updates")]);
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.code, exit::OK);
    assert_eq!(a.out, b.out);
    assert!(!a.out.is_empty());
}

#[test]
fn run_rejects_bad_configuration() {
    let p = fx("corpus/buying.dioc");
    assert_eq!(run(&["run", &p, "--explore"]).code, exit::SCHEDULE);
    assert_eq!(run(&["run", &p, "--max-steps", "0"]).code, exit::SCHEDULE);
    assert_eq!(run(&["equiv", &p, "--explore", "--seed", "3"]).code, exit::SCHEDULE);
    let dir = tempfile::tempdir().unwrap();
    let bad_order = dir.path().join("order.json");
    std::fs::write(
        &bad_order,
        r#"{"changes":[{"afterWeakLabel":2,"setUpdates":[]},{"afterWeakLabel":2,"setUpdates":[]}]}"#,
    )
    .unwrap();
    assert_eq!(run(&["run", &p, "--schedule", &bad_order.display().to_string()]).code, exit::SCHEDULE);
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"changes":[{"afterWeakLabel":0,"setUpdates":["nope"]}]}"#).unwrap();
    let u = unknown.display().to_string();
    assert_eq!(run(&["run", &p, "--updates", &fx("updates"), "--schedule", &u]).code, exit::SCHEDULE);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{").unwrap();
    assert_eq!(run(&["run", &p, "--schedule", &garbage.display().to_string()]).code, exit::SCHEDULE);
    assert_eq!(run(&["run", &p, "--host", &garbage.display().to_string()]).code, exit::PARSE);
}

#[test]
fn equiv_passes_on_buying_with_updates() {
    let args = hosted(&["equiv", &fx("corpus/buying.dioc"), "--updates", &fx("updates"), "--max-steps", "40", "--json"]);
    let o = run(&args);
    assert_eq!(o.code, exit::OK, "{}{}", o.out, o.err);
    let j: Json = serde_json::from_str(o.out.trim()).unwrap();
    assert_eq!(j["verdict"], "equivalent");
}

#[test]
fn equiv_reports_mutation_counterexample() {
    let args = hosted(&["equiv", &fx("corpus/cond.dioc"), "--mutation", "swap-broadcast", "--json"]);
    let o = run(&args);
    assert_eq!(o.code, exit::FAILED, "{}{}", o.out, o.err);
    let j: Json = serde_json::from_str(o.out.trim()).unwrap();
    assert!(!j["counterexample"].is_null());
}

#[test]
fn equiv_budget_exceeded() {
    let o = run(&hosted(&["equiv", &fx("corpus/buying.dioc"), "--budget", "5"]));
    assert_eq!(o.code, exit::BUDGET);
}

#[test]
fn props_pass_on_buying() {
    let o = run(&hosted(&["props", &fx("corpus/buying.dioc"), "--json", "--events"]));
    assert_eq!(o.code, exit::OK, "{}{}", o.out, o.err);
    let j: Json = serde_json::from_str(o.out.trim()).unwrap();
    for k in ["deadlock", "race", "orphan"] {
        assert_eq!(j[k], "pass", "{k}");
    }
    assert_eq!(j["events"]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn props_detects_lone_receive_deadlock() {
    let o = run(&["props", &fx("bad/lone_receive.dpoc"), "--json"]);
    assert_eq!(o.code, exit::FAILED, "{}{}", o.out, o.err);
    let j: Json = serde_json::from_str(o.out.trim()).unwrap();
    assert_ne!(j["deadlock"], "pass");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let args = hosted(&["props", &fx("corpus/scoped.dioc"), "--json", "--events", "--updates", &fx("updates")]);
    assert_eq!(run(&args).out, run(&args).out);
}

#[test]
fn binary_exit_codes() {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_dioc"));
    let status = std::process::Command::new(&bin).args(["check", &fx("bad/seq_violation.dioc")]).output().unwrap();
    assert_eq!(status.status.code(), Some(exit::FAILED));
    let status = std::process::Command::new(&bin).args(["check", &fx("corpus/buying.dioc")]).output().unwrap();
    assert_eq!(status.status.code(), Some(exit::OK));
}
