//! End-to-end checks of the command-line driver: JSON round-trips,
//! deterministic output, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use symlift::circuit::any_edge_spec;
use symlift::json as sj;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symlift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("symlift-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

#[test]
fn gadget_output_parses_and_is_deterministic() {
    let a = run(&["gadget", "--kind", "pp", "--n", "3"]);
    assert!(a.status.success());
    let b = run(&["gadget", "--kind", "pp", "--n", "3"]);
    assert_eq!(a.stdout, b.stdout, "stdout must be byte-identical across runs");

    let lp = sj::lp_from_str(&stdout_of(&a)).expect("emitted LP parses");
    assert_eq!(lp.n, 3);
    assert!(!lp.aux_vars.is_empty());
    let again = sj::lp_from_str(&sj::lp_to_string(&lp)).expect("round-trip parses");
    assert_eq!(lp, again);
}

#[test]
fn solve_reports_infeasible_with_success_exit() {
    let dir = scratch("solve");
    let lp_path = dir.join("exslice.json");
    let fix_path = dir.join("fix.json");
    let status = run(&["gadget", "--kind", "ex-slice", "--n", "2", "--t", "2", "--out",
        lp_path.to_str().unwrap()]);
    assert!(status.status.success());
    // Pinning one coordinate to 0 contradicts the weight-2 slice.
    std::fs::write(&fix_path, r#"[{"var": {"kind": "input", "rel": "X", "tuple": [1]}, "value": 0}]"#)
        .unwrap();
    let out = run(&["solve", "--lp", lp_path.to_str().unwrap(), "--fix", fix_path.to_str().unwrap()]);
    assert!(out.status.success(), "infeasible is an answer, not an error");
    assert!(stdout_of(&out).contains("\"status\":\"infeasible\""));
}

#[test]
fn compile_verify_and_symmetry_pipeline() {
    let dir = scratch("pipeline");
    let circuit_path = dir.join("any_edge.json");
    std::fs::write(&circuit_path, sj::circuit_to_string(&any_edge_spec())).unwrap();

    let out = run(&["verify-equivalence", "--circuit", circuit_path.to_str().unwrap(),
        "--n", "2", "--exhaustive"]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("\"mismatches\":0"));

    let out = run(&["verify-symmetry", "--circuit", circuit_path.to_str().unwrap(), "--n", "2"]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("\"violations\":[]"));

    let lp_path = dir.join("lift.json");
    let out = run(&["compile", "--circuit", circuit_path.to_str().unwrap(), "--n", "2",
        "--out", lp_path.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run(&["supports", "--lp", lp_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("\"reports\""));
    let out = run(&["manageable", "--lp", lp_path.to_str().unwrap(), "--k", "2", "--check"]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("\"properties_hold\":true"));
}

#[test]
fn domain_errors_exit_one_with_json_message() {
    let out = run(&["gadget", "--kind", "pp", "--n", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("\"error\""));

    let out = run(&["gadget", "--kind", "tpp", "--n", "4", "--q", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("\"error\""));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
}
