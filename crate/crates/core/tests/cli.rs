use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use symaccel::cli::{
    cmd_compare_nag, cmd_sweep, ObjectiveSource, RunSpec, Summary, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO,
    EXIT_VERIFY_FAILED, TRACE_HEADER,
};
use symaccel::data::{encode_idx_images, encode_idx_labels};
use symaccel::integrators::Scheme;

fn symaccel(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symaccel"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .env_remove("SYMACCEL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn run_smoke_reaches_rel_tol() {
    let dir = tempfile::tempdir().unwrap();
    let out = symaccel(&["run", "--scheme", "si2", "--sigma", "6", "--tau", "0.01", "--seed", "7", "--plot"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s.stop_reason, "rel_tol");
    assert!(s.final_f.unwrap().is_finite());
    assert_eq!(s.sigma, Some(6.0));
    assert_eq!(s.iters, s.grad_evals);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some(TRACE_HEADER));
    assert_eq!(trace.lines().count(), s.iters + 1);
    assert!(fs::read_to_string(dir.path().join("trace.svg")).unwrap().starts_with("<svg"));

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["final_f", "grad_evals", "iters", "scheme", "sigma", "stop_reason", "tau", "wall_ns"]);
}

#[test]
fn rk2_at_large_sigma_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = symaccel(&["run", "--scheme", "rk2", "--sigma", "12", "--tau", "0.01"], dir.path());
    let s = summary(dir.path());
    if s.stop_reason == "diverged" {
        assert_eq!(out.status.code(), Some(EXIT_DIVERGED));
        assert!(dir.path().join("trace.csv").exists());
    } else {
        assert_eq!(out.status.code(), Some(0));
    }
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--sigma", "1"][..],
        &["run", "--tau", "0.75"],
        &["run", "--rel-tol", "0"],
        &["run", "--scheme", "leapfrog"],
        &["sweep", "--sigma="],
        &["verify", "symplectic", "--scheme", "rk4"],
        &["verify", "bogus"],
        &["run", "--bt-shrink", "1.5", "--backtracking"],
    ] {
        let out = symaccel(args, dir.path());
        assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = symaccel(&["run", "--data", "/definitely/not/here.csv"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_IO));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,label\n1,2,1\n3,oops,0\n").unwrap();
    let out = symaccel(&["run", "--data", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_IO));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3") && err.contains("column 2"), "{err}");

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = symaccel(&["run", "--max-iters", "5"], &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(EXIT_IO));
}

#[test]
fn verify_studies_pass_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    for study in ["order", "symplectic", "rate", "gradcheck", "residual"] {
        let out = symaccel(&["verify", study], dir.path());
        assert_eq!(out.status.code(), Some(0), "{study}: {}", String::from_utf8_lossy(&out.stdout));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("verify_{study}.json"))).unwrap()).unwrap();
        assert_eq!(report["passed"], true);
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_order.json")).unwrap()).unwrap();
    let order = report["details"]["fitted_order"].as_f64().unwrap();
    assert!((1.7..=2.3).contains(&order));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_rate.json")).unwrap()).unwrap();
    assert!(report["details"]["slope"].as_f64().unwrap() <= -1.5);
}

#[test]
fn verify_failure_exits_four_and_keeps_report() {
    let dir = tempfile::tempdir().unwrap();
    // A large sigma puts the order fit outside its band.
    let out = symaccel(&["verify", "order", "--scheme", "si1", "--sigma", "12"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_VERIFY_FAILED));
    assert!(String::from_utf8_lossy(&out.stdout).contains("order FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_order.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);

    let out = symaccel(&["verify", "rate", "--sigma", "40"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_DIVERGED));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_symaccel"))
        .args(["run", "--max-iters", "10"])
        .env("SYMACCEL_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("trace.csv").exists());
}

fn strip_elapsed(text: &str) -> String {
    text.lines()
        .map(|l| {
            let mut c: Vec<&str> = l.split(',').collect();
            c.remove(5);
            c.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn same_seed_gives_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--seed", "13", "--standardize", "--add-intercept", "--max-iters", "400", "--scheme", "si4"];
    symaccel(&args, &dir.path().join("a"));
    symaccel(&args, &dir.path().join("b"));
    let a = fs::read_to_string(dir.path().join("a/trace.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(strip_elapsed(&a), strip_elapsed(&b));

    let mut other = args.to_vec();
    other[2] = "14";
    symaccel(&other, &dir.path().join("c"));
    let c = fs::read_to_string(dir.path().join("c/trace.csv")).unwrap();
    assert_ne!(strip_elapsed(&a), strip_elapsed(&c));
}

#[test]
fn sweep_is_monotone_in_sigma_at_fixed_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let base = RunSpec {
        source: ObjectiveSource::Quadratic { dim: 2 },
        horizon: Some(3.0),
        out_dir: dir.path().to_path_buf(),
        ..RunSpec::default()
    };
    let out = cmd_sweep(&base, &[2.0, 4.0, 6.0], &[Scheme::Si2], 3).unwrap();
    assert_eq!(out.cells.len(), 3);
    let f: Vec<f64> = out.cells.iter().map(|c| c.final_f.unwrap()).collect();
    assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
    let table = fs::read_to_string(&out.summary_path).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(fs::read_to_string(&out.plot_path).unwrap().matches("<polyline").count() == 3);
    assert!(cmd_sweep(&base, &[], &[Scheme::Si2], 1).is_err());
}

#[test]
fn sweep_isolates_failing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = symaccel(&["sweep", "--sigma", "6,12", "--scheme", "si2,rk2", "--jobs", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    let rk2_12 = table.lines().find(|l| l.starts_with("rk2,12")).unwrap();
    assert!(rk2_12.contains("diverged"), "{rk2_12}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(dir.path().join("si2-sigma6/trace.csv").exists());
}

#[test]
fn compare_nag_reports_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = symaccel(&["compare-nag", "--seed", "7", "--plot"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<Summary> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("compare_nag.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].scheme, "si2-bt");
    assert_eq!(rows[0].sigma, Some(6.0));
    assert_eq!(rows[1].scheme, "nag-bt");
    assert!(rows.iter().all(|r| r.stop_reason == "rel_tol" && r.final_f.is_some()));
    let csv = fs::read_to_string(dir.path().join("compare_nag.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("compare_nag.svg").exists());
}

#[test]
fn compare_nag_on_quadratic_gets_close_to_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let spec = RunSpec { source: ObjectiveSource::Quadratic { dim: 1 }, out_dir: dir.path().to_path_buf(), ..RunSpec::default() };
    let rows = cmd_compare_nag(&spec).unwrap();
    for r in &rows {
        assert!(r.final_f.unwrap() < 1e-6, "{r:?}");
    }
}

#[test]
fn gen_data_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("synth.csv");
    let out = symaccel(&["gen-data", "--seed", "3", "--synth-n", "50", "--synth-d", "3", "--out", csv.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("x0,x1,x2,label"));
    assert_eq!(text.lines().count(), 51);
    let out = symaccel(&["run", "--data", csv.to_str().unwrap(), "--standardize", "--max-iters", "50"], &dir.path().join("r"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn idx_inputs_drive_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let n = 12;
    let pixels: Vec<u8> = (0..n * 4).map(|i| ((i * 37) % 256) as u8).collect();
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    let images = dir.path().join("images.idx");
    let label_file = dir.path().join("labels.idx");
    fs::write(&images, encode_idx_images(2, 2, &pixels)).unwrap();
    fs::write(&label_file, encode_idx_labels(&labels)).unwrap();
    let out = symaccel(
        &["run", "--idx-images", images.to_str().unwrap(), "--idx-labels", label_file.to_str().unwrap(), "--idx-digit", "3", "--max-iters", "20"],
        &dir.path().join("r"),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(&label_file, &encode_idx_labels(&labels)[..10]).unwrap();
    let out = symaccel(
        &["run", "--idx-images", images.to_str().unwrap(), "--idx-labels", label_file.to_str().unwrap()],
        &dir.path().join("r2"),
    );
    assert_ne!(out.status.code(), Some(0));
}
