use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn golden(name: &str) -> String {
    fs::read_to_string(fixture("golden").join(name)).unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ambipolicy")).args(args).output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_bounds_scores_match_golden() {
    let cfg = fixture("fit_mmr_balke_pearl.json");
    assert_eq!(stdout_ok(&["fit", "--config", path(&cfg)]), golden("fit_mmr_balke_pearl.json"));
    assert_eq!(stdout_ok(&["bounds", "--config", path(&cfg)]), golden("bounds_balke_pearl.csv"));
    assert_eq!(stdout_ok(&["scores", "--config", path(&cfg)]), golden("scores_balke_pearl.csv"));
}

#[test]
fn validate_and_simulate_match_golden() {
    assert_eq!(stdout_ok(&["validate", path(&fixture("jtpa_counts.csv"))]), golden("validate_jtpa_counts.json"));
    assert_eq!(stdout_ok(&["simulate", "--config", path(&fixture("study_small.json"))]), golden("study_small.json"));
}

#[test]
fn golden_scores_are_consistent_with_fit() {
    let fit: Value = serde_json::from_str(&golden("fit_mmr_balke_pearl.json")).unwrap();
    let scores = golden("scores_balke_pearl.csv");
    let mut rdr = csv::Reader::from_reader(scores.as_bytes());
    let col = rdr.headers().unwrap().iter().position(|h| h == "gamma_orthogonal").unwrap();
    let gamma: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(gamma.len(), fit["n"].as_u64().unwrap() as usize);
    let mean = gamma.iter().sum::<f64>() / gamma.len() as f64;
    assert!((mean - fit["score_summary"]["mean"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn output_flag_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let fit_out = dir.path().join("fit.json");
    let cfg = fixture("fit_mmr_balke_pearl.json");
    assert_eq!(code(&["--output", path(&fit_out), "fit", "--config", path(&cfg)]), 0);
    assert_eq!(fs::read_to_string(&fit_out).unwrap(), golden("fit_mmr_balke_pearl.json"));

    let sim_out = dir.path().join("study.json");
    let study = fixture("study_small.json");
    assert_eq!(code(&["--output", path(&sim_out), "simulate", "--config", path(&study)]), 0);
    assert_eq!(fs::read_to_string(&sim_out).unwrap(), golden("study_small.json"));
    let records = fs::read_to_string(sim_out.with_extension("csv")).unwrap();
    assert!(records.starts_with("n,mode,replication,regret\n"));
    // 3 sample sizes x 4 replications x 2 modes
    assert_eq!(records.lines().count(), 1 + 24);
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = fixture("study_small.json");
    let a = stdout_ok(&["simulate", "--config", path(&cfg)]);
    let b = stdout_ok(&["--seed", "18", "simulate", "--config", path(&cfg)]);
    assert_ne!(a, b);
    let v: Value = serde_json::from_str(&b).unwrap();
    assert_eq!(v["config"]["seed"], 18);
}

#[test]
fn full_compliance_mmr_matches_late() {
    let strip = |s: String| {
        let mut v: Value = serde_json::from_str(&s).unwrap();
        let o = v.as_object_mut().unwrap();
        o.remove("scheme");
        o.remove("criterion");
        v
    };
    let mmr = stdout_ok(&["fit", "--config", path(&fixture("fit_full_compliance_mmr.json"))]);
    let late = stdout_ok(&["fit", "--config", path(&fixture("fit_full_compliance_late.json"))]);
    assert_eq!(strip(mmr), strip(late));
}

#[test]
fn zero_residuals_make_modes_agree() {
    let csv_text = stdout_ok(&["scores", "--config", path(&fixture("scores_zero_residual.json"))]);
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let h = rdr.headers().unwrap().clone();
    let (gp, go) = (
        h.iter().position(|c| c == "gamma_plugin").unwrap(),
        h.iter().position(|c| c == "gamma_orthogonal").unwrap(),
    );
    let mut rows = 0;
    for r in rdr.records() {
        let r = r.unwrap();
        assert_eq!(r[gp], r[go]);
        rows += 1;
    }
    assert_eq!(rows, 120);
}

#[test]
fn exit_codes() {
    // usage and configuration problems
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["fit"]), 2);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--threads", "0", "fit", "--config", path(&fixture("fit_mmr_balke_pearl.json"))]), 2);

    let dir = tempfile::tempdir().unwrap();
    let base: Value = serde_json::from_str(&fs::read_to_string(fixture("fit_mmr_balke_pearl.json")).unwrap()).unwrap();
    let write = |name: &str, edit: &dyn Fn(&mut Value)| {
        let mut v = base.clone();
        v["input"] = Value::String(path(&fixture("synthetic_200.csv")).to_string());
        edit(&mut v);
        let p = dir.path().join(name);
        fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
        p
    };
    let unknown = write("unknown.json", &|v| v["colour"] = Value::from("blue"));
    assert_eq!(code(&["fit", "--config", path(&unknown)]), 2);
    let folds = write("folds.json", &|v| v["folds"] = Value::from(1));
    assert_eq!(code(&["fit", "--config", path(&folds)]), 2);
    let welfare_late = write("welfare.json", &|v| {
        v["scheme"] = serde_json::json!({"kind": "point_late"});
        v["criterion"] = serde_json::json!({"kind": "maximin_welfare"});
    });
    assert_eq!(code(&["fit", "--config", path(&welfare_late)]), 2);

    // data problems
    assert_eq!(code(&["validate", path(&fixture("jtpa_counts_printed.csv"))]), 3);
    assert_eq!(code(&["validate", path(&dir.path().join("missing.csv"))]), 3);
    let bad_col = write("badcol.json", &|v| v["columns"]["y"] = Value::from("outcome"));
    assert_eq!(code(&["fit", "--config", path(&bad_col)]), 3);

    // numerical: every unit has z = 1
    let one_arm = dir.path().join("one_arm.csv");
    let mut text = String::from("y,d,z,x1,x2\n");
    for i in 0..40 {
        text.push_str(&format!("{},{},1,{},{}\n", (i % 2) as f64 * 0.5, i % 2, i as f64 / 40.0, (i * 7 % 40) as f64 / 40.0));
    }
    fs::write(&one_arm, text).unwrap();
    let numerical = write("numerical.json", &|v| v["input"] = Value::from(path(&one_arm)));
    assert_eq!(code(&["fit", "--config", path(&numerical)]), 4);
}

#[test]
fn error_messages_go_to_stderr() {
    let out = run(&["validate", path(&fixture("jtpa_counts_printed.csv"))]);
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grand total"), "{err}");
}
