use std::process::{Command, Output};

use cranopt::{Scenario, SolveReport};

fn cranopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cranopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_p1_single_prints_report() {
    let o = cranopt(&["solve-p1-single", "--preset", "fig3", "--fronthaul-mbps", "400"]);
    assert!(o.status.success());
    let r: SolveReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.solver, "algorithm-one");
    let t = &r.fronthaul.t[0];
    assert!((t[0] / 1e6 - 213.54).abs() < 1.0);
}

#[test]
fn scenario_file_round_trips_through_gen_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let o = cranopt(&["gen-scenario", "--preset", "fig7", "--seed", "5", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let s: Scenario = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!((s.num_rrhs, s.num_users, s.num_subcarriers), (7, 16, 64));
    let o = cranopt(&["solve-p1", "--scenario", path.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().starts_with("solver,fronthaul_mbps,objective_bps"));
    assert!(text.lines().nth(1).unwrap().starts_with("algorithm-three,4000"));
}

#[test]
fn solve_p2_per_rrh_capacity() {
    let ok = cranopt(&[
        "solve-p2",
        "--preset",
        "fig5",
        "--per-rrh-capacity",
        "150",
        "--format",
        "csv",
    ]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("p2-single,150") || stdout(&ok).contains("p2-multi,150"));
    let bad = cranopt(&["solve-p2", "--preset", "fig5", "--per-rrh-capacity", "1,2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn benchmark_all_emits_scheme_by_capacity_rows() {
    let o = cranopt(&[
        "benchmark",
        "--preset",
        "fig3",
        "--scheme",
        "all",
        "--grid-mbps",
        "100,200,400",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 5 * 3);
}

#[test]
fn sweep_and_quantizer_emit_csv() {
    let o = cranopt(&[
        "sweep", "--preset", "fig3", "--methods", "p1,p2", "--grid-mbps", "100,200", "--format", "csv",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = cranopt(&[
        "quantizer-validate",
        "--bits",
        "5",
        "--powers",
        "1",
        "--samples",
        "100000",
        "--seed",
        "3",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("bits,signal_power,analytic_q,empirical_q"));
    assert!(text.lines().nth(1).unwrap().ends_with(",3"));
}

#[test]
fn exit_codes() {
    assert_eq!(cranopt(&["solve-p1-single", "--preset", "fig7"]).status.code(), Some(2));
    assert_eq!(cranopt(&["solve-p1", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(cranopt(&["solve-p1", "--scenario", "/does/not/exist.json"]).status.code(), Some(2));
    assert_eq!(cranopt(&["solve-p1", "--preset", "fig3", "--eps", "0"]).status.code(), Some(2));
    assert_eq!(cranopt(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"bandwidth_hz": -1}"#).unwrap();
    assert_eq!(
        cranopt(&["solve-p1", "--scenario", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
}
