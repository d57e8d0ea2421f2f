use std::path::Path;
use std::process::{Command, Output};

use coalcircle::harness::{read_jsonl, ExperimentRecord};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalcircle"))
        .args(args)
        .arg("--results")
        .arg(dir.join("results.jsonl"))
        .env_remove("COALCIRCLE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_record(dir: &Path, args: &[&str]) -> ExperimentRecord {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let o = run(dir, &full);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid record")
}

#[test]
fn theta_at_one() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["theta", "--u", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1.086434"), "{}", stdout(&o));
}

#[test]
fn lattice_duality_check_passes() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["duality-lattice", "--n", "3", "--t", "1", "--check"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn validation_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["blocks", "--n", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n must be ≥ 1"));
    assert!(!dir.path().join("results.jsonl").exists());

    let o = run(dir.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(dir.path(), &["duality-circle", "--a", "0.5", "--b", "0:1;0.5:1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("271828"));
}

#[test]
fn missed_threshold_exits_two() {
    // twenty runs cannot pin the CDF down to 0.01
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["pair-cdf", "--reps", "20", "--dt", "1e-3", "--check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_output_round_trips() {
    let dir = TempDir::new().unwrap();
    let r = json_record(dir.path(), &["expected-blocks", "--t", "1"]);
    assert_eq!(r.name, "expected-blocks");
    let e = &r.estimates[0];
    assert!((e.value - 3.544907701811032).abs() < 1e-14);
    let logged = read_jsonl(&dir.path().join("results.jsonl")).unwrap();
    assert_eq!(logged.len(), 1);
    assert!(logged[0].same_result(&r));
}

#[test]
fn csv_output_has_one_row_per_estimate() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["expected-blocks", "--t", "1", "--t", "2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.starts_with("experiment,"));
}

#[test]
fn out_file_and_svg() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("scaling.json");
    let svg = dir.path().join("scaling.svg");
    let o = run(
        dir.path(),
        &["scaling", "--check", "--format", "json", "--out", json.to_str().unwrap(), "--svg", svg.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    let r: ExperimentRecord = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    let pts = r.series[0].points.len();
    let text = std::fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches(r#"class="data-point""#).count(), pts);
    assert_eq!(text.matches(r#"class="reference""#).count(), 1);
}

#[test]
fn seeds_reproduce_and_workers_do_not_matter() {
    let dir = TempDir::new().unwrap();
    let args = ["blocks", "--n", "64", "--reps", "24", "--dt", "1e-3", "--t", "0.2"];
    let a = json_record(dir.path(), &args);
    let b = json_record(dir.path(), &args);
    assert!(a.same_result(&b));
    assert_eq!(a.master_seed, 271828);
    let mut threaded = args.to_vec();
    threaded.extend(["--workers", "3"]);
    let c = json_record(dir.path(), &threaded);
    assert_eq!(a.estimates, c.estimates);
    let mut other = args.to_vec();
    other.extend(["--seed", "7"]);
    let d = json_record(dir.path(), &other);
    assert_ne!(a.estimates, d.estimates);
    assert_eq!(read_jsonl(&dir.path().join("results.jsonl")).unwrap().len(), 4);
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_coalcircle"))
        .args(["blocks", "--n", "16", "--reps", "4", "--dt", "1e-3", "--format", "json", "--results"])
        .arg(dir.path().join("r.jsonl"))
        .env("COALCIRCLE_SEED", "99")
        .output()
        .unwrap();
    let r: ExperimentRecord = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.master_seed, 99);
}

#[test]
fn capacity_reads_a_matrix_written_by_dimension() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("tau.csv");
    let o = run(dir.path(), &["dimension", "--n", "64", "--t", "0.2", "--dt", "1e-4", "--matrix", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_record(
        dir.path(),
        &["capacity", "--input", m.to_str().unwrap(), "--beta", "0.3", "--beta", "0.45"],
    );
    let caps: Vec<f64> = r.estimates.iter().filter(|e| e.name.starts_with("capacity")).map(|e| e.value).collect();
    assert_eq!(caps.len(), 2);
    assert!(caps.iter().all(|c| c.is_finite() && *c > 0.0));
}
