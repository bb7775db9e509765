//! End-to-end tests running the compiled binary against the fixture corpus.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(args: &[&str], instance: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mot"))
        .args(args)
        .arg(fixture(instance))
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process exits normally")
}

#[test]
fn solve_upper_monotone_reports_exact_value() {
    let out = run_on(
        &["solve", "--bound", "upper", "--instance"],
        "instance_xy2.json",
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let report = stdout_json(&out);
    assert_eq!(report["value"], json!("24"));
    assert_eq!(report["value_decimal"], json!(24.0));
    assert_eq!(report["certified"], json!(true));
    assert_eq!(report["plan_side"], json!("left"));
    assert_eq!(
        report["plan"],
        json!([["3/10", "1/6", "1/30"], ["1/5", "0", "3/10"]])
    );
}

#[test]
fn solve_lower_monotone_uses_right_coupling() {
    let out = run_on(
        &["solve", "--bound", "lower", "--instance"],
        "instance_xy2.json",
    );
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["value"], json!("22"));
    assert_eq!(report["certified"], json!(true));
    assert_eq!(report["plan_side"], json!("right"));
    assert_eq!(
        report["plan"],
        json!([["2/5", "0", "1/10"], ["1/10", "1/6", "7/30"]])
    );
}

#[test]
fn solve_lp_agrees_with_monotone_value() {
    let out = run_on(
        &["solve", "--bound", "upper", "--method", "lp", "--instance"],
        "instance_xy2.json",
    );
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["value"], json!("24"));
    assert_eq!(report["certified"], json!(true));
    assert!(report.get("plan_side").is_none());
}

#[test]
fn solve_both_cross_validates() {
    let out = run_on(
        &[
            "solve",
            "--bound",
            "lower",
            "--method",
            "both",
            "--debug-invariants",
            "--instance",
        ],
        "instance_xy2.json",
    );
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["monotone_value"], json!("22"));
    assert_eq!(report["lp_value"], json!("22"));
    assert_eq!(report["agreement"], json!(true));
}

#[test]
fn solve_both_flags_uncertified_mismatch() {
    let out = run_on(
        &[
            "solve",
            "--bound",
            "upper",
            "--method",
            "both",
            "--instance",
        ],
        "instance_straddle.json",
    );
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["monotone_value"], json!("3/4"));
    assert_eq!(report["lp_value"], json!("1"));
    assert_eq!(report["value"], json!("1"));
    assert_eq!(report["agreement"], json!(false));
    assert!(stderr_text(&out).contains("cross-difference"));
}

#[test]
fn solve_grid_payoff_matches_builtin() {
    let out = run_on(
        &["solve", "--bound", "upper", "--instance"],
        "instance_grid.json",
    );
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["value"], json!("24"));
}

#[test]
fn solve_compact_output_is_single_line() {
    let out = run_on(
        &[
            "solve",
            "--output",
            "compact",
            "--bound",
            "upper",
            "--instance",
        ],
        "instance_xy2.json",
    );
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.trim().lines().count(), 1);
}

#[test]
fn hedge_upper_prices_the_bound() {
    let out = run_on(
        &["hedge", "--bound", "upper", "--instance"],
        "instance_xy2.json",
    );
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["cost"], json!("24"));
    assert_eq!(report["fallback"], json!(false));
    assert_eq!(report["portfolio"]["phi"], json!(["5", "45"]));
    assert_eq!(report["portfolio"]["psi"], json!(["0", "-6", "0"]));
    assert_eq!(report["portfolio"]["h"], json!(["5", "15"]));
}

#[test]
fn hedge_lower_prices_the_bound() {
    let out = run_on(
        &["hedge", "--bound", "lower", "--instance"],
        "instance_xy2.json",
    );
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["cost"], json!("22"));
    assert_eq!(report["fallback"], json!(false));
    assert_eq!(report["portfolio"]["psi"], json!(["0", "-18", "0"]));
}

#[test]
fn hedge_falls_back_without_monotone_structure() {
    let out = run_on(
        &["hedge", "--bound", "upper", "--instance"],
        "instance_straddle.json",
    );
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["fallback"], json!(true));
    assert_eq!(report["cost"], json!("1"));
}

#[test]
fn hedge_output_feeds_back_into_verify() {
    let out = run_on(
        &["hedge", "--bound", "upper", "--instance"],
        "instance_straddle.json",
    );
    assert_eq!(code(&out), 0);
    let portfolio = stdout_json(&out)["portfolio"].clone();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "{portfolio}").unwrap();

    let verify = run(&[
        "verify",
        "--bound",
        "upper",
        "--hedge",
        file.path().to_str().unwrap(),
        "--instance",
        fixture("instance_straddle.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&verify), 0, "stderr: {}", stderr_text(&verify));
    let report = stdout_json(&verify);
    assert_eq!(report["hedge"]["feasible"], json!(true));
    assert_eq!(report["hedge"]["optimum"], json!("1"));
    assert_eq!(report["hedge"]["gap_to_optimum"], json!("0"));
}

#[test]
fn check_order_accepts_ordered_marginals() {
    let out = run_on(&["check-order", "--instance"], "instance_xy2.json");
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["ordered"], json!(true));
}

#[test]
fn check_order_rejects_unordered_marginals() {
    let out = run_on(&["check-order", "--instance"], "instance_unordered.json");
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["ordered"], json!(false));
    assert_eq!(report["first_violation"], json!("0"));
}

#[test]
fn solve_refuses_unordered_marginals() {
    let out = run_on(
        &["solve", "--bound", "upper", "--instance"],
        "instance_unordered.json",
    );
    assert_eq!(code(&out), 1);
    assert!(stderr_text(&out).contains("convex order"));
}

#[test]
fn extract_recovers_marginals_and_checks_order() {
    let out = run_on(&["extract", "--quotes"], "quotes.json");
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let report = stdout_json(&out);
    assert_eq!(
        report["maturities"][0]["atoms"],
        json!([
            { "x": "1", "w": "1/2" },
            { "x": "3", "w": "1/2" }
        ])
    );
    assert_eq!(
        report["maturities"][1]["atoms"],
        json!([
            { "x": "0", "w": "1/2" },
            { "x": "2", "w": "1/6" },
            { "x": "5", "w": "1/3" }
        ])
    );
    assert_eq!(report["consecutive_order"][0]["ordered"], json!(true));
}

#[test]
fn extract_rejects_arbitrageable_quotes() {
    let out = run_on(&["extract", "--quotes"], "quotes_arbitrage.json");
    assert_eq!(code(&out), 1);
    assert!(stderr_text(&out).contains("not convex"));
}

#[test]
fn extract_flags_calendar_arbitrage() {
    let out = run_on(&["extract", "--quotes"], "quotes_unordered.json");
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["consecutive_order"][0]["ordered"], json!(false));
    assert_eq!(
        report["consecutive_order"][0]["first_violation"],
        json!("1")
    );
}

#[test]
fn verify_accepts_the_golden_plan() {
    let out = run(&[
        "verify",
        "--instance",
        fixture("instance_xy2.json").to_str().unwrap(),
        "--plan",
        fixture("plan_golden.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["plan"]["valid"], json!(true));
    assert_eq!(report["plan"]["value"], json!("24"));
    assert_eq!(report["plan"]["left_monotone"], json!(true));
    assert_eq!(report["plan"]["right_monotone"], json!(false));
}

#[test]
fn verify_reports_monotonicity_witnesses() {
    let out = run(&[
        "verify",
        "--instance",
        fixture("instance_xy2.json").to_str().unwrap(),
        "--plan",
        fixture("plan_not_left_monotone.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["plan"]["valid"], json!(true));
    assert_eq!(report["plan"]["left_monotone"], json!(false));
    assert_eq!(report["plan"]["right_monotone"], json!(true));
    assert_eq!(report["plan"]["left_witness"]["y_mid"], json!("2"));
}

#[test]
fn verify_rejects_invalid_plans() {
    let out = run(&[
        "verify",
        "--instance",
        fixture("instance_xy2.json").to_str().unwrap(),
        "--plan",
        fixture("plan_invalid.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["plan"]["valid"], json!(false));
    assert!(report["plan"]["error"]
        .as_str()
        .unwrap()
        .contains("drift"));
}

#[test]
fn verify_checks_hedges_against_plan_and_optimum() {
    let out = run(&[
        "verify",
        "--bound",
        "upper",
        "--instance",
        fixture("instance_xy2.json").to_str().unwrap(),
        "--plan",
        fixture("plan_golden.json").to_str().unwrap(),
        "--hedge",
        fixture("hedge_golden.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["hedge"]["feasible"], json!(true));
    assert_eq!(report["hedge"]["cost"], json!("24"));
    assert_eq!(report["hedge"]["optimum"], json!("24"));
    assert_eq!(report["hedge"]["gap_to_optimum"], json!("0"));
    assert_eq!(report["hedge"]["duality_gap_vs_plan"], json!("0"));
    assert_eq!(report["hedge"]["slackness_vs_plan"], json!(true));
}

#[test]
fn verify_rejects_infeasible_hedges() {
    let out = run(&[
        "verify",
        "--bound",
        "upper",
        "--instance",
        fixture("instance_xy2.json").to_str().unwrap(),
        "--hedge",
        fixture("hedge_infeasible.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["hedge"]["feasible"], json!(false));
    assert_eq!(report["hedge"]["first_violation"], json!([0, 1]));
}

#[test]
fn verify_requires_something_to_check() {
    let out = run(&[
        "verify",
        "--instance",
        fixture("instance_xy2.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("nothing to verify"));
}

#[test]
fn malformed_json_exits_with_usage_error() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "{{ \"mu\": [").unwrap();
    let out = run(&[
        "solve",
        "--bound",
        "upper",
        "--instance",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("cannot parse"));
}

#[test]
fn unknown_builtin_payoff_exits_with_usage_error() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(
        file,
        r#"{{
            "mu": [{{ "x": "0", "w": "1" }}],
            "nu": [{{ "y": "0", "w": "1" }}],
            "payoff": {{ "kind": "builtin", "name": "mystery", "params": [] }}
        }}"#
    )
    .unwrap();
    let out = run(&[
        "solve",
        "--bound",
        "upper",
        "--instance",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("invalid payoff"));
}

#[test]
fn grid_payoff_requires_canonical_atom_lists() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(
        file,
        r#"{{
            "mu": [{{ "x": "3", "w": "1/2" }}, {{ "x": "1", "w": "1/2" }}],
            "nu": [{{ "y": "0", "w": "1/2" }}, {{ "y": "2", "w": "1/6" }}, {{ "y": "5", "w": "1/3" }}],
            "payoff": {{ "kind": "grid", "values": [["0", "12", "75"], ["0", "4", "25"]] }}
        }}"#
    )
    .unwrap();
    let out = run(&[
        "solve",
        "--bound",
        "upper",
        "--instance",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("sorted"));
}

#[test]
fn missing_required_arguments_exit_with_usage_error() {
    let out = run(&["solve"]);
    assert_eq!(code(&out), 2);
}
