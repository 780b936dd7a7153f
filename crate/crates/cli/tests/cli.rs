use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermofrac")).args(args).output().unwrap()
}

fn run_in(dir: &Path, command: &str, cfg: &str, extra: &[&str]) -> Output {
    let cfg = config(cfg);
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dimension_of_cantor() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "dimension", "cantor.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(dir.path().join("dimension.json"));
    let s = v["s_star"].as_f64().unwrap();
    assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
    assert_eq!(v["exact"], true);
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("s,p\n"));
    assert_eq!(curve.lines().count(), 42);
    assert!(dir.path().join("meta.json").exists());
}

#[test]
fn json_format_and_grid_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "spectrum",
        "twoscale.json",
        &["--format", "json", "--beta-min", "0.8", "--beta-max", "1.2", "--beta-steps", "5"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = json(dir.path().join("spectrum.json"));
    assert_eq!(rows["endpoints"].as_array().unwrap().len(), 0);
    let points: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("curve.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(points.len(), 41);
    assert!(dir.path().join("tq.json").exists());
}

#[test]
fn primitivity_of_golden_mean() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "primitivity", "random-golden-mean.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(dir.path().join("primitivity.json"));
    assert_eq!(v["primitive"], true);
    assert_eq!(v["order"], 1);
}

#[test]
fn ladder_pressure_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "pressure",
        "paper-example.json",
        &["--rungs", "4,16", "--s-min", "0.5", "--s-max", "1.5", "--s-steps", "3"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("pressure.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("s,rung,depth,estimate,spread"));
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}

#[test]
fn missing_config_is_a_schema_error() {
    let out = run(&["dimension"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_field_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("cantor.json")).unwrap().replace("\"edges\": 2", "\"edges\": 2, \"colour\": 1");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    let out = run(&["dimension", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn bad_flag_is_a_schema_error() {
    assert_eq!(run(&["dimension", "--s-steps", "many"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn grid_below_threshold_is_numeric() {
    // every grid point lies at or below the summability threshold
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = json(config("paper-example.json"));
    cfg["analysis"].as_object_mut().unwrap().remove("rungs");
    let path = dir.path().join("full.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let (path, out_dir) = (path.to_str().unwrap(), dir.path().to_str().unwrap());
    let out = run(&["dimension", "--config", path, "--out", out_dir, "--s-min", "-2", "--s-max", "-1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_reports_failure_with_status_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "verify", "twoscale.json", &[]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(dir.path().join("verify.json"));
    assert_eq!(v["passed"], false);
    let failing: Vec<&str> =
        v["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(failing, ["histogram-vs-legendre"]);
}

#[test]
fn verify_passes_on_separated_cantor() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "verify", "shrunk-cantor.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(dir.path().join("verify.json"));
    let skipped = v["checks"].as_array().unwrap().iter().filter(|c| c["skipped"] == true).count();
    assert_eq!(skipped, 0);
}

#[test]
fn measures_sum_to_one_per_depth() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "measures", "twoscale.json", &["--depth", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("measures.csv")).unwrap();
    let mut totals = [0.0; 5];
    for row in reader.records() {
        let row = row.unwrap();
        let depth: usize = row[1].parse().unwrap();
        totals[depth] += row[3].parse::<f64>().unwrap();
    }
    for t in &totals[1..] {
        assert!((t - 1.0).abs() < 1e-12);
    }
}

#[test]
fn limitset_points_lie_in_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "limitset", "cantor.json", &["--depth", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("limitset.csv")).unwrap();
    let mut count = 0;
    for row in reader.records() {
        let x: f64 = row.unwrap()[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&x));
        count += 1;
    }
    assert_eq!(count, 64);
}

#[test]
fn in_process_entry_point() {
    assert_eq!(thermofrac_cli::main_with(["thermofrac", "dimension", "--workers", "0", "--config", "x.json"]), 2);
}
