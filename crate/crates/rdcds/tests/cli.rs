//! End-to-end checks of the command-line contract: subcommand output,
//! exit codes, and seed precedence.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rdcds"));
    // Keep the ambient environment from leaking a seed into the tests.
    cmd.env_remove("RDCDS_SEED");
    cmd
}

fn golden_scenario_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/golden.json")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to launch the rdcds binary")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("stdout is not UTF-8")
}

#[test]
fn demo_prints_the_worked_example_costs() {
    let out = run(bin().arg("demo"));
    let text = stdout_of(&out);
    for needle in ["read cost 5/3", "update cost 9/4", "threshold 6", "final read cost"] {
        assert!(text.contains(needle), "demo output missing {needle:?}:\n{text}");
    }
}

#[test]
fn params_reports_the_derived_layout() {
    let out = run(bin().args(["params", "7", "5", "6", "2", "--modulus", "17"]));
    let text = stdout_of(&out);
    assert!(text.contains("36"), "expected the message length in:\n{text}");
    assert!(text.contains("1/6"), "expected the constrained fraction in:\n{text}");
    assert!(text.contains("2/3"), "expected the unconstrained fraction in:\n{text}");
}

#[test]
fn simulate_emits_a_json_report_and_passes() {
    let out = run(bin()
        .arg("simulate")
        .arg("--config")
        .arg(golden_scenario_path()));
    let report: serde_json::Value =
        serde_json::from_str(&stdout_of(&out)).expect("simulate stdout is not JSON");
    let events = report["events"].as_array().expect("report lacks an events array");
    assert_eq!(events.len(), 3, "golden scenario has three timeline events");
}

#[test]
fn verify_emits_a_json_report_and_passes() {
    let out = run(bin()
        .arg("verify")
        .arg("--config")
        .arg(golden_scenario_path()));
    let report: serde_json::Value =
        serde_json::from_str(&stdout_of(&out)).expect("verify stdout is not JSON");
    assert!(report.is_object(), "verify should print a JSON object");
}

#[test]
fn bounds_table_has_the_contract_header_and_all_rows_match() {
    let out = run(bin().args(["bounds", "7", "5", "6", "2"]));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("params,dropouts,X,closed_form,lp_min,match"));
    let mut rows = 0;
    for line in lines.filter(|l| !l.is_empty()) {
        assert!(line.ends_with(",true"), "bound mismatch row: {line}");
        rows += 1;
    }
    assert!(rows > 0, "bounds table has no data rows:\n{text}");
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(bin().args(["simulate", "--config", "/nonexistent/scenario.json"]));
    assert_eq!(out.status.code(), Some(2), "unreadable config must exit 2");
}

#[test]
fn malformed_sweep_range_is_a_usage_error() {
    let out = run(bin().args(["bounds", "--sweep", "x..y"]));
    assert_eq!(out.status.code(), Some(2), "bad sweep range must exit 2");
}

#[test]
fn conflicting_bounds_arguments_are_a_usage_error() {
    let out = run(bin().args(["bounds", "7", "5", "6", "2", "--sweep", "4..6"]));
    assert_eq!(out.status.code(), Some(2), "tuple plus sweep must exit 2");
}

#[test]
fn seed_env_var_must_parse_when_consulted() {
    let out = run(bin()
        .arg("simulate")
        .arg("--config")
        .arg(golden_scenario_path())
        .env("RDCDS_SEED", "not-a-number"));
    assert_eq!(out.status.code(), Some(2), "garbage RDCDS_SEED must exit 2");
}

#[test]
fn seed_flag_outranks_the_environment() {
    let out = run(bin()
        .arg("simulate")
        .arg("--config")
        .arg(golden_scenario_path())
        .arg("--seed")
        .arg("7")
        .env("RDCDS_SEED", "not-a-number"));
    assert!(
        out.status.success(),
        "--seed must win over RDCDS_SEED, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}
