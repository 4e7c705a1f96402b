use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qvlab(args: &[&str]) -> Output {
    qvlab_env(args, &[])
}

fn qvlab_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qvlab"));
    c.args(args).env_remove("QVLAB_WORKERS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report JSON on stdout")
}

fn qty(rep: &Value, name: &str) -> f64 {
    rep["quantities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|q| q["name"] == name)
        .expect(name)["value"]
        .as_f64()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn examples_list_is_deterministic() {
    let a = qvlab(&["examples", "list"]);
    let b = qvlab(&["examples", "list"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("branch:3/2\tbranch\t1.5")));
    assert_eq!(text.lines().filter(|l| l.contains("\twound\t")).count(), 10);
}

#[test]
fn carleman_check_passes() {
    let o = qvlab(&[
        "check",
        "carleman",
        "--field",
        "branch:3/2",
        "--tau",
        "3",
        "--chi",
        "annulus:0.1,0.2,0.6,0.8",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = report(&o);
    assert_eq!(rep["format"], "qvlab-report/1");
    assert_eq!(rep["check"], "carleman");
    assert_eq!(rep["verdict"], "pass");
    assert!(qty(&rep, "ratio").is_finite());
    assert_eq!(rep["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    for q in rep["quantities"].as_array().unwrap() {
        assert!(!q["resolution"].as_str().unwrap().is_empty());
    }
}

#[test]
fn malformed_field_is_a_usage_error_naming_the_token() {
    let o = qvlab(&["check", "stationarity", "--field", "branch:3/x"]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("`x`") || stderr(&o).contains("3/x"),
        "{}",
        stderr(&o)
    );
    let o = qvlab(&[
        "check",
        "carleman",
        "--field",
        "branch:3/2",
        "--tau",
        "3",
        "--chi",
        "annulus:0.1,zz,0.6,0.8",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("zz"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_and_flag_exit_two() {
    let o = qvlab(&["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("frobnicate"));
    let o = qvlab(&["examples", "list", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--bogus"));
}

#[test]
fn failed_check_exits_one() {
    // the homogeneous extension of a non-homogeneous trace is not stationary
    let dir = tempfile::tempdir().unwrap();
    let data = r#"{"format": "qvlab-boundary/1", "Q": 3, "pieces": [{"winding": 3, "a0": [0, 0],
        "modes": [{"l": 1, "a": [0, 1], "b": [1, 0]}, {"l": 2, "a": [0.5, 0], "b": [0, 0.5]}]}]}"#;
    let path = write(dir.path(), "w3.json", data);
    let o = qvlab(&["epiperimetric", "--boundary", &path, "--kappa", "auto"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let rep = report(&o);
    assert_eq!(rep["verdict"], "fail");
    assert!(qty(&rep, "margin") < 0.0);
}

#[test]
fn epiperimetric_with_auto_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let data = r#"{"Q": 2, "pieces": [{"winding": 2, "a0": [0, 0], "modes": [{"l": 3, "a": [0, 1], "b": [1, 0]}]}]}"#;
    let path = write(dir.path(), "b32.json", data);
    let o = qvlab(&["epiperimetric", "--boundary", &path, "--kappa", "auto"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = report(&o);
    let kappa = rep["parameters"]["kappa"].as_f64().unwrap();
    assert!((kappa - 1.5).abs() < 1e-6);
}

#[test]
fn solved_boundary_feeds_back_into_epiperimetric() {
    let dir = tempfile::tempdir().unwrap();
    let boundary = dir.path().join("trace.json");
    let o = qvlab(&[
        "solve2d",
        "--field",
        "branch:5/3",
        "--boundary-out",
        boundary.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = qvlab(&[
        "epiperimetric",
        "--boundary",
        boundary.to_str().unwrap(),
        "--kappa",
        "auto",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let kappa = report(&o)["parameters"]["kappa"].as_f64().unwrap();
    assert!((kappa - 5.0 / 3.0).abs() < 1e-6);
}

#[test]
fn malformed_boundary_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.json",
        r#"{"Q": 3, "pieces": [{"winding": 2, "a0": [0, 0]}]}"#,
    );
    let o = qvlab(&["solve2d", "--boundary", &path]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json"));
}

#[test]
fn solve2d_writes_samples_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    let boundary = dir.path().join("trace.json");
    let o = qvlab(&[
        "solve2d",
        "--field",
        "branch:3/2",
        "--samples",
        samples.to_str().unwrap(),
        "--sample-angles",
        "8",
        "--boundary-out",
        boundary.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&samples).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# format: qvlab-field-samples/1"));
    assert_eq!(lines.next(), Some("r,theta,sheet,u1,u2"));
    assert_eq!(lines.count(), 4 * 8 * 2);
    let b: Value = serde_json::from_str(&std::fs::read_to_string(&boundary).unwrap()).unwrap();
    assert_eq!(b["Q"], 2);
    assert_eq!(b["pieces"][0]["winding"], 2);
}

#[test]
fn frequency_profile_of_branch_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("freq.csv");
    let o = qvlab(&[
        "frequency",
        "--field",
        "branch:3/2",
        "--radii",
        "dyadic:1..4",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,I,resolution,variant"));
    for l in lines {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.5).abs() < 1e-10, "{l}");
    }
}

#[test]
fn weiss_profile_and_vanishing_order() {
    let o = qvlab(&["weiss", "--field", "wound:1,2,4,2", "--kappa", "auto"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = qvlab(&["vanishing-order", "--field", "trivial:2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(report(&o)["parameters"]["infinite_order"], true);
    let o = qvlab(&["weiss", "--field", "trivial:2", "--kappa", "auto"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("infinite order"));
}

#[test]
fn blowup_converges_to_branch() {
    let o = qvlab(&[
        "blowup",
        "--field",
        "superpose(branch:3/2,0.5*x1^2-0.5*x2^2;x1*x2)",
        "--limit",
        "branch:3/2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "qv.toml",
        "[quadrature]\nangular = 48\n\n[defaults]\ntau = 2.0\n",
    );
    let angular = |o: &Output| {
        report(o)["parameters"]["config"]["quadrature"]["angular"]
            .as_u64()
            .unwrap()
    };
    let base = [
        "check",
        "three-sphere",
        "--field",
        "branch:1/2",
        "--radii",
        "0.01,0.04,0.16",
    ];
    let o = qvlab(&base);
    assert_eq!(code(&o), 2, "tau has no built-in default");
    let mut args = base.to_vec();
    args.extend(["--config", &cfg]);
    let o = qvlab(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(angular(&o), 48);
    assert_eq!(report(&o)["parameters"]["tau"], 2.0);
    args.extend(["--angular", "32", "--tau", "5"]);
    let o = qvlab(&args);
    assert_eq!(angular(&o), 32);
    assert_eq!(report(&o)["parameters"]["tau"], 5.0);
    let o = qvlab(&["examples", "list"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn bad_config_exits_two_with_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "qv.toml", "[quadrature]\nangulr = 48\n");
    let o = qvlab(&["examples", "list", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("angulr"), "{}", stderr(&o));
}

#[test]
fn workers_variable_is_validated_and_does_not_change_output() {
    let o = qvlab_env(&["examples", "list"], &[("QVLAB_WORKERS", "0")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("QVLAB_WORKERS"));
    let args = ["check", "stationarity", "--field", "wound:2,3,4,2"];
    let a = qvlab_env(&args, &[("QVLAB_WORKERS", "1")]);
    let b = qvlab_env(&args, &[("QVLAB_WORKERS", "3")]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_appends_rows_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let reports = dir.path().join("reports");
    let cfg = write(
        dir.path(),
        "sweep.toml",
        r#"
[sweep]
fields = ["branch:3/2", "harmonic:x1"]
taus = [1.0, 5.0]
cutoffs = ["annulus:0.1,0.2,0.6,0.8"]
radii = [[0.01, 0.04, 0.16]]
deltas = [0.1]
bent = [0.01, 0.2]
kappas = [1.5]
"#,
    );
    let args = [
        "sweep",
        "--config",
        &cfg,
        "--output",
        out.to_str().unwrap(),
        "--reports-dir",
        reports.to_str().unwrap(),
    ];
    let o = qvlab(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(
        lines[0],
        "field,tau,eps,r_params,lhs,rhs,ratio,case,resolution,verdict"
    );
    // 2 fields x (2 taus x 3 rows + 1 doubling row)
    assert_eq!(lines.len(), 1 + 2 * 7);
    assert!(lines
        .iter()
        .any(|l| l.contains(",I,") || l.contains(",II,")));
    assert_eq!(std::fs::read_dir(&reports).unwrap().count(), 14);
    let o = qvlab(&args);
    assert_eq!(code(&o), 0);
    let second = std::fs::read_to_string(&out).unwrap();
    assert_eq!(second.lines().count(), 1 + 2 * 14);
    assert!(second.starts_with(&first));
}

#[test]
fn sweep_without_grids_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "[sweep]\nfields = [\"branch:3/2\"]\n",
    );
    let o = qvlab(&["sweep", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no grid"));
}

#[test]
fn unwritable_output_exits_one_with_the_path() {
    let o = qvlab(&["examples", "list", "--out", "/nonexistent-dir/list.txt"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("/nonexistent-dir/list.txt"));
}

#[test]
fn out_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = qvlab(&[
        "check",
        "doubling",
        "--field",
        "branch:5/3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["check"], "doubling");
    assert!(
        (qty(&rep, "c_est") - 2f64.powf(2.0 * 5.0 / 3.0 + 2.0)).abs()
            < 1e-6 * 2f64.powf(16.0 / 3.0)
    );
    // only the report itself is left in the directory
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
