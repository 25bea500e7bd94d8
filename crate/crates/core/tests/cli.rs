use std::fs;
use std::path::Path;
use std::process::Command;

use lifeboot::bootstrap::PathologyReport;
use lifeboot::cli::{main_with_args, FitReport, IndividualRow, IntervalRow};
use lifeboot::{BootstrapRun, PredictionCurve, SelectionBootstrap};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = vec![];
    let mut err = vec![];
    let mut full = vec!["lifeboot"];
    full.extend_from_slice(args);
    let code = main_with_args(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Parses a JSON output and checks that re-serializing reproduces the bytes.
fn round_trip<T: DeserializeOwned + Serialize>(path: &Path) -> T {
    let text = fs::read_to_string(path).unwrap();
    let v: T = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let again = serde_json::to_string_pretty(&v).unwrap() + "\n";
    assert_eq!(again, text, "{} does not round-trip", path.display());
    v
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_weights_dirichlet_fifteen() {
    let (code, out, _) = run(&["gen-weights", "--scheme", "dirichlet", "--n", "15", "--seed", "4"]);
    assert_eq!(code, 0);
    let w: Vec<f64> = out.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(w.len(), 15);
    assert!(w.iter().all(|v| *v > 0.0));
    assert!((w.iter().sum::<f64>() - 15.0).abs() < 1e-10);
    let (_, again, _) = run(&["gen-weights", "--scheme", "dirichlet", "--n", "15", "--seed", "4"]);
    assert_eq!(out, again);
}

#[test]
fn fit_rocket_motor_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("fit");
    let (code, out, err) = run(&["fit", "--family", "weibull", "--data", "rocket_motor", "--out", s(&o)]);
    assert_eq!(code, 0, "{err}");
    let eta_line = out.lines().find(|l| l.starts_with("eta")).unwrap();
    let beta_line = out.lines().find(|l| l.starts_with("beta")).unwrap();
    let num = |l: &str| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap();
    assert!((num(eta_line) / 21.228 - 1.0).abs() < 0.005);
    assert!((num(beta_line) / 8.126 - 1.0).abs() < 0.005);
    let rep: FitReport = round_trip(&o.join("fit.json"));
    assert_eq!(rep.n_units, 1940.0);
    assert!(fs::read_to_string(o.join("fit.csv")).unwrap().starts_with("param,estimate,se,"));
}

#[test]
fn fit_reports_unbounded_wald_endpoint() {
    // few failures: the σ interval reaches zero and β's upper end is +∞
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "time,kind,count\n1.0,exact,1\n1.05,exact,1\n0.5,right,30\n").unwrap();
    let o = dir.path().join("fit");
    let (code, _, err) = run(&["fit", "--family", "weibull", "--data", s(&data), "--out", s(&o)]);
    assert_eq!(code, 0, "{err}");
    let rep: FitReport = round_trip(&o.join("fit.json"));
    let beta = &rep.table[1];
    if let Some(u) = beta.wald_upper {
        assert!(u > beta.estimate);
    }
}

#[test]
fn bootstrap_outputs_are_deterministic_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("boot");
    let args = [
        "bootstrap", "--family", "weibull", "--data", "rocket_motor", "--scheme", "dirichlet", "--B", "300",
        "--seed", "9", "--levels", "0.95,0.90,0.80,0.50", "--unit-level", "--out", s(&o),
    ];
    let (code, out, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("BC lower"));
    let files = [
        "config.json", "run.json", "replicates.csv", "pathology.json", "intervals.json", "intervals.csv",
        "histogram_eta.csv", "histogram_beta.csv",
    ];
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(o.join(f)).unwrap()).collect();

    let run_back: BootstrapRun = round_trip(&o.join("run.json"));
    assert_eq!(run_back.b, 300);
    let rep: PathologyReport = round_trip(&o.join("pathology.json"));
    assert_eq!(rep.degenerate_count, 0);
    let rows: Vec<IntervalRow> = round_trip(&o.join("intervals.json"));
    let beta: Vec<&IntervalRow> = rows.iter().filter(|r| r.param.as_str() == "beta").collect();
    assert_eq!(beta.len(), 4);
    for w in beta.windows(2) {
        assert!(w[0].bc_lower.unwrap() <= w[1].bc_lower.unwrap());
        assert!(w[0].bc_upper.unwrap() >= w[1].bc_upper.unwrap());
    }

    fs::remove_dir_all(&o).unwrap();
    assert_eq!(run(&args).0, 0);
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&fs::read(o.join(f)).unwrap(), bytes, "{f} differs between identical runs");
    }

    // the run feeds prediction
    let risk = dir.path().join("risk.csv");
    fs::write(&risk, "unit_id,current_age\nA,4\nB,9\nC,15\n").unwrap();
    let p = dir.path().join("pred");
    let (code, out, err) = run(&[
        "predict", "--run", s(&o), "--risk-set", s(&risk), "--horizon", "2,4,8", "--unit", "B", "--out", s(&p),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("unit B"));
    let curve: PredictionCurve = round_trip(&p.join("prediction.json"));
    assert_eq!(curve.horizon_grid, vec![2.0, 4.0, 8.0]);
    assert!(curve.upper.windows(2).all(|w| w[0] <= w[1]));
    let ind: Vec<IndividualRow> = round_trip(&p.join("individual.json"));
    assert_eq!(ind[0].unit_id, "B");
    assert!(ind[0].lower < ind[0].upper);
}

#[test]
fn select_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("x.csv");
    let resp = dir.path().join("y.csv");
    let mut x = String::from("a,b\n");
    let mut y = String::from("y\n");
    for i in 0..12 {
        let a = (i % 4) as f64;
        let b = (i / 4) as f64;
        x.push_str(&format!("{a},{b}\n"));
        y.push_str(&format!("{}\n", 1.0 + 2.0 * a + 0.1 * ((i * 7 % 5) as f64 - 2.0)));
    }
    fs::write(&design, x).unwrap();
    fs::write(&resp, y).unwrap();
    let o = dir.path().join("sel");
    let (code, out, err) =
        run(&["select", "--design", s(&design), "--response", s(&resp), "--B", "50", "--seed", "3", "--out", s(&o)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("point model"));
    let sel: SelectionBootstrap = round_trip(&o.join("selection.json"));
    assert_eq!(sel.b, 50);
    assert_eq!(sel.proportions[0].term, "a");
    let coef = fs::read_to_string(o.join("coefficients.csv")).unwrap();
    assert_eq!(coef.lines().count(), 51);
}

#[test]
fn errors_are_single_line_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("never");

    let (code, _, err) = run(&["fit", "--family", "weibull", "--data", "/no/such/file.csv", "--out", s(&o)]);
    assert_eq!(code, 2);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("E_INPUT: "));

    let (code, _, err) = run(&["fit", "--family", "cauchy", "--data", "rocket_motor"]);
    assert_eq!(code, 2);
    assert_eq!(err.lines().count(), 1);

    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!((code, err.lines().count()), (2, 1));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "time,kind,count\n4,right,236\n5,right,0\n").unwrap();
    let (code, _, err) = run(&["fit", "--family", "weibull", "--data", s(&bad)]);
    assert_eq!(code, 2);
    assert!(err.contains(":3:"), "{err}");

    let censored = dir.path().join("cens.csv");
    fs::write(&censored, "time,kind\n1,right\n2,right\n").unwrap();
    let (code, _, err) = run(&["fit", "--family", "weibull", "--data", s(&censored), "--out", s(&o)]);
    assert_eq!(code, 3);
    assert!(err.starts_with("E_NUMERIC: "));

    let (code, _, err) = run(&[
        "bootstrap", "--family", "weibull", "--data", "rocket_motor", "--scheme", "multinomial", "--B", "400",
        "--seed", "1", "--unit-level", "--strict", "--out", s(&o),
    ]);
    assert_eq!(code, 4);
    assert!(err.starts_with("E_PATHOLOGY: "));

    // nothing was written by any failing command
    assert!(!o.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn refuses_to_overwrite_results() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("w");
    let args = ["gen-weights", "--n", "5", "--seed", "1", "--out", s(&o)];
    assert_eq!(run(&args).0, 0);
    let before = fs::read(o.join("weights.csv")).unwrap();
    assert_eq!(run(&args).0, 2);
    assert_eq!(fs::read(o.join("weights.csv")).unwrap(), before);
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_lifeboot");
    let ok = Command::new(bin).args(["fit", "--family", "weibull", "--data", "rocket_motor"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("21.2288"));
    let bad = Command::new(bin).args(["fit", "--family", "weibull", "--data", "missing.csv"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("E_INPUT: "));
}
