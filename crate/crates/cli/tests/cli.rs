use std::process::{Command, Output};

use serde_json::Value;

fn degpar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degpar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn roots_half_order_are_multiples_of_pi() {
    let o = degpar(&["roots", "--nu", "0.5", "--count", "3"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        let root: f64 = r[1].parse().unwrap();
        assert!((root - (i + 1) as f64 * std::f64::consts::PI).abs() < 1e-10);
    }
}

#[test]
fn odd_shift_flagged_inadmissible() {
    let o = degpar(&[
        "lambda", "--alpha", "0.5,0", "--k", "1", "--mu", "9.8696", "--s", "3",
    ]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][6], "false");
}

#[test]
fn lambda_table_from_exponents() {
    let o = degpar(&[
        "lambda",
        "--alpha=-0.5,0.2",
        "--k",
        "2",
        "--n",
        "1",
        "--m",
        "0.5",
        "--l-max",
        "2",
        "--p-max",
        "3",
        "--s-max",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 2 * 3 * 5);
    for r in &rows {
        let re: f64 = r[4].parse().unwrap();
        assert!(re < 0.0);
    }
}

#[test]
fn verify_report_meets_tolerances() {
    let o = degpar(&[
        "verify",
        "--problem",
        "1",
        "--n",
        "1",
        "--m",
        "1",
        "--k",
        "1",
        "--alpha",
        "0.5,0",
        "--mode",
        "1,1,2",
        "--grid",
        "21",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["report"];
    assert!(num(&r["pde"]["sup_norm"]) < 1e-8);
    assert!(num(&r["nonlocal"]["t"]) < 1e-10);
    assert!(num(&r["boundary"]["sup"]) < 1e-10);
    let sum = num(&r["energy"]["sum"]).abs();
    assert!(sum <= num(&r["energy"]["quadrature_error_estimate"]));
    let order = num(&r["fd"]["order"]);
    assert!((1.8..=2.2).contains(&order));
    assert_eq!(v["config"]["grid"], 21);
    assert_eq!(num(&v["config"]["offset"]), 1e-3);
    assert_eq!(v["config"]["panels"], 128);
}

#[test]
fn verify_reports_unmet_energy_precondition() {
    let o = degpar(&[
        "verify", "--n", "1", "--m", "1", "--k", "1", "--alpha", "0.5,0", "--mode", "1,1,1",
        "--grid", "5",
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["field"]["admissible"], false);
    assert!(v["report"]["energy"]["status"]
        .as_str()
        .unwrap()
        .contains("exceeds"));
}

#[test]
fn mixed_problem_verifies_with_neumann_faces() {
    let o = degpar(&[
        "verify",
        "--problem",
        "p2",
        "--n",
        "1",
        "--m",
        "1",
        "--k",
        "1",
        "--alpha",
        "0.5,0",
        "--mode",
        "1,1,0",
        "--grid",
        "7",
        "--panels",
        "32",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(num(&v["report"]["boundary"]["sup"]) < 1e-8);
    assert!(num(&v["report"]["pde"]["sup_norm"]) < 1e-8);
}

#[test]
fn invalid_input_gives_one_line_and_exit_one() {
    for args in [
        vec!["roots", "--nu", "0.5", "--bogus"],
        vec!["roots", "--nu", "1.5"],
        vec!["lambda", "--alpha", "0,0", "--k", "1", "--mu", "1"],
        vec![
            "verify", "--n", "0", "--m", "1", "--k", "1", "--alpha", "0.5,0", "--mode", "1,1,0",
        ],
        vec![
            "verify", "--n", "1", "--m", "1", "--k", "1", "--mode", "1,1,0",
        ],
        vec!["lambda", "--alpha", "0.5", "--k", "1", "--mu", "1"],
        vec![],
    ] {
        let o = degpar(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn help_lists_defaults() {
    let o = degpar(&["verify", "--help"]);
    assert!(o.status.success());
    let h = stdout(&o);
    for d in ["[default: 0.001]", "[default: 21]", "[default: 128]"] {
        assert!(h.contains(d), "missing {d}");
    }
    let o = degpar(&["scan", "--help"]);
    let h = stdout(&o);
    assert!(h.contains("[default: 5]") && h.contains("[default: 8]"));
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("scan{i}.csv"));
            let o = degpar(&[
                "scan",
                "--n",
                "1",
                "--m",
                "2",
                "--k",
                "1",
                "--points",
                "11",
                "--out",
                path.to_str().unwrap(),
            ]);
            assert!(o.status.success());
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert!(text.contains("# s_max = 8"));
    let rows = data_rows(&text);
    assert!(!rows.is_empty() && rows.len() <= 121);
    for r in &rows {
        assert!(["UniqueGuaranteed", "NontrivialExists", "Indeterminate"].contains(&r[7].as_str()));
    }
}

#[test]
fn every_float_has_seventeen_digits() {
    let o = degpar(&["eigen", "--exponent", "0.5", "--count", "4"]);
    for r in data_rows(&stdout(&o)) {
        let mantissa = r[1].split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{}", r[1]);
    }
}

#[test]
fn split_adjudication_report() {
    let o = degpar(&[
        "adjudicate-splitA",
        "--n",
        "1",
        "--m",
        "2",
        "--k",
        "1",
        "--beta",
        "0.5,0",
        "--gamma",
        "0.8,0",
        "--l",
        "1",
        "--s",
        "2",
        "--grid",
        "11",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["report"];
    assert!(r["selected_theta"].is_number());
    assert!(r["selected_lambda_re"].is_number());
    assert!(num(&r["literal"]["residual_sup"]) > 1e-3);
}

#[test]
fn solve_dumps_samples() {
    let o = degpar(&[
        "solve",
        "--n",
        "1",
        "--m",
        "1",
        "--k",
        "1",
        "--alpha",
        "0.5,0",
        "--mode",
        "1,1,2",
        "--samples",
        "4",
    ]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 64);
    for r in &rows {
        let x: f64 = r[0].parse().unwrap();
        let abs: f64 = r[5].parse().unwrap();
        if x == 0.0 {
            assert_eq!(abs, 0.0);
        }
    }
}

#[test]
fn classify_finds_witness() {
    let o = degpar(&[
        "classify", "--n", "1", "--m", "1", "--k", "1", "--alpha", "0.5,0", "--lambda", "1,0",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["status"], "UniqueGuaranteed");
}
