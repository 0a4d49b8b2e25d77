use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gfda::classify::{evaluate, Rule};
use gfda::dataset::Dataset;
use gfda::fisher::gfda_linear_form;
use gfda::subspace::{DimRule, SubspaceEnsemble};
use gfda_cli::{invariants, model_io, CliError};

fn gfda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth_gaussian(dir: &Path, name: &str, seed: &str) -> PathBuf {
    let out = dir.join(name);
    let o = gfda(&[
        "synth", "--kind", "gaussian", "--classes", "3", "--ambient", "8", "--samples", "15",
        "--mean-norm", "4", "--sigma-max", "0.5", "--seed", seed, "--out", p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out
}

#[test]
fn gap_scope_prints_table_and_succeeds() {
    let o = gfda(&["invariants", "--scope", "gap"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with(invariants::REPORT_HEADER));
    assert!(text.contains("gap,"));
    assert!(text.contains(",PASS"));
    assert!(stderr(&o).contains("gap_index C=100  1.98"));
}

#[test]
fn duality_scope_for_fixed_class_count() {
    let o = gfda(&["invariants", "--scope", "duality", "--classes", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("duality,") && row.ends_with(",PASS"), "{row}");
}

#[test]
fn invalid_configuration_exits_with_one() {
    let o = gfda(&["invariants", "--set", "no_such_key=3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = gfda(&["invariants", "--scope", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
    // gamma only applies to gds
    let o = gfda(&["eval", "--method", "fda", "--gamma", "0.5", "--n-train", "2", "--data", "x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = gfda(&["fit", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invariant_failure_maps_to_two() {
    assert_eq!(CliError::Invariant("x".into()).exit_code(), 2);
    assert_eq!(CliError::Config("x".into()).exit_code(), 1);
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "label,x1,x2\na,1,2\nb,3,oops\n").unwrap();
    let o = gfda(&["fit", "--train", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    std::fs::write(&bad, "a,1,2\nb,3\n").unwrap();
    let o = gfda(&["fit", "--train", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn fitted_model_file_reproduces_in_process_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let train = synth_gaussian(dir.path(), "train.csv", "3");
    let test = synth_gaussian(dir.path(), "test.csv", "4");
    let model = dir.path().join("m.json");
    let o = gfda(&["fit", "--train", p(&train), "--out", p(&model)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = gfda(&["eval", "--model", p(&model), "--test", p(&test)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row: Vec<String> = stdout(&o).lines().nth(1).unwrap().split(',').map(String::from).collect();

    let ds = Dataset::read_csv(&train).unwrap();
    let direct = gfda_linear_form(&SubspaceEnsemble::fit(&ds.group(), DimRule::Full).unwrap()).unwrap();
    let loaded = model_io::load(&model).unwrap();
    assert_eq!(loaded.basis.matrix(), direct.basis.matrix());
    assert_eq!(loaded.class_refs, direct.class_refs);

    let report = evaluate(&direct, &Dataset::read_csv(&test).unwrap(), Rule::NearestMean).unwrap();
    assert_eq!(row[2].parse::<f64>().unwrap(), report.recognition_rate);
    assert_eq!(row[3].parse::<f64>().unwrap(), report.eer.unwrap());
}

#[test]
fn report_file_carries_confusion_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_gaussian(dir.path(), "d.csv", "9");
    let model = dir.path().join("m.json");
    let report = dir.path().join("r.json");
    assert_eq!(gfda(&["fit", "--train", p(&data), "--out", p(&model)]).status.code(), Some(0));
    let o = gfda(&["eval", "--model", p(&model), "--test", p(&data), "--report", p(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let confusion = v["confusion"].as_array().unwrap();
    assert_eq!(confusion.len(), 3);
    let total: u64 = confusion
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .map(|x| x.as_u64().unwrap())
        .sum();
    assert_eq!(total, 45);
}

#[test]
fn single_repetition_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_gaussian(dir.path(), "d.csv", "1");
    let args = ["eval", "--data", p(&data), "--n-train", "4", "--repetitions", "1", "--seed", "11"];
    let a = gfda(&args);
    let b = gfda(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let lines: Vec<&str> = std::str::from_utf8(&a.stdout).unwrap().lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("std,4,0,"));
}

#[test]
fn sweep_reports_one_row_per_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let o = gfda(&[
        "synth", "--kind", "gaussian", "--classes", "3", "--ambient", "12", "--samples", "14",
        "--seed", "2", "--out", p(&data),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = gfda(&["sweep", "--data", p(&data), "--n-values", "2..9", "--repetitions", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_train,recognition_mean,recognition_std,eer_mean,eer_std");
    assert_eq!(lines.len(), 9);
    for (row, n) in lines[1..].iter().zip(2..) {
        assert!(row.starts_with(&format!("{n},")), "{row}");
    }
}

#[test]
fn one_training_sample_per_class_beats_chance() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_gaussian(dir.path(), "d.csv", "6");
    let o = gfda(&[
        "eval", "--data", p(&data), "--n-train", "1", "--repetitions", "10", "--method", "gfda-linear",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mean = text.lines().find(|l| l.starts_with("mean,")).unwrap();
    let rate: f64 = mean.split(',').nth(2).unwrap().parse().unwrap();
    assert!(rate > 100.0 / 3.0, "{rate}");
}

fn eigencurve_rows(classes: &str) -> Vec<Vec<f64>> {
    let o = gfda(&["eigencurves", "--classes", classes, "--dim", "3", "--ambient", "60", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("gap_index"));
    stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn eigencurves_show_null_directions_of_ghat() {
    let rows = eigencurve_rows("3");
    assert_eq!(rows.len(), 9);
    for r in &rows[..2] {
        assert!(r[2].abs() < 1e-10, "{r:?}");
        assert!((r[4] - 3.0).abs() < 1e-8, "{r:?}");
    }
    assert!(rows[2][2] > 1e-3);

    let rows = eigencurve_rows("5");
    let total: f64 = rows.iter().filter(|r| r[2].abs() < 1e-10).map(|r| r[4]).sum();
    assert!((total - 20.0).abs() < 1e-8, "{total}");
}

#[test]
fn synth_writes_sidecar_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mix.csv");
    let o = gfda(&[
        "synth", "--kind", "mixture", "--classes", "4", "--ambient", "40", "--samples", "6", "--mode",
        "dirichlet:0.3", "--seed", "8", "--out", p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ds = Dataset::read_csv(&out).unwrap();
    assert_eq!((ds.len(), ds.dim()), (24, 40));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mix.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "mixture");
    assert_eq!(meta["seed"], 8);
    assert!(meta["simplex_sampling"].is_string());
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# gap only\nscope = duality\nclasses = 4\n").unwrap();
    let o = gfda(&["invariants", "--config", p(&cfg), "--scope", "gap"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("gap,") && !text.contains("duality,"));
}
