use std::path::Path;
use std::process::{Command, Output};

use exchange_only::schedule::ScheduleFile;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exchange-only")).args(args).output().expect("binary runs")
}

fn run_with_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exchange-only"))
        .env("EXCHANGE_ONLY_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sector_info() {
    for (n, s, sz, dim) in [("3", "1/2", "1/2", 2), ("6", "1", "1", 9), ("2", "0", "0", 1)] {
        let o = run(&["sector-info", "--n", n, "--s", s, "--sz", sz]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).starts_with(&format!("dim {dim}\n")), "{}", stdout(&o));
    }
    let a = run(&["sector-info", "--n", "6", "--s", "1", "--sz", "1"]);
    let b = run(&["sector-info", "--n", "6", "--s", "1", "--sz", "1"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&run(&["sector-info", "--n", "2", "--s", "3", "--sz", "0"])), 64);
    assert_eq!(code(&run(&["sector-info", "--n", "3", "--s", "1/2", "--sz", "1"])), 64);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["synthesize"])), 64);
    assert_eq!(code(&run(&["synthesize", "--target", "toffoli"])), 64);
    assert_eq!(code(&run(&["synthesize", "--target", "cnot", "--mode", "diagonal"])), 64);
    assert_eq!(code(&run(&["synthesize", "--target", "cnot", "--max-steps", "0"])), 64);
    assert_eq!(code(&run(&["bloch-axis", "--i", "2", "--j", "3"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn bloch_axis_of_second_pair() {
    let o = run(&["bloch-axis", "--i", "1", "--j", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("polar_angle_deg 120.000000000"));
}

#[test]
fn z_rotation_is_one_step() {
    let o = run(&["synthesize", "--target", "rz:3.14159", "--mode", "serial", "--max-steps", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let file = ScheduleFile::from_json(&stdout(&o)).unwrap();
    assert_eq!(file.steps.len(), 1);
    let tau: f64 = file.steps[0][0].tau.parse().unwrap();
    assert!((tau - 0.5).abs() < 1e-5);
}

#[test]
fn two_steps_cannot_make_cnot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c2.schedule");
    let o = run(&["synthesize", "--target", "cnot", "--mode", "serial", "--max-steps", "2", "-o", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c2.schedule.report.json")).unwrap()).unwrap();
    assert_eq!(report["success"], false);
    assert!(report["f"].as_f64().unwrap() > 0.1);
}

#[test]
fn cnot_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cnot.schedule");
    let args = ["synthesize", "--target", "cnot", "--mode", "serial", "--max-steps", "19", "--restarts", "5000"];
    let o = run_with_threads("1", &[&args[..], &["--seed", "42", "-o", p(&out)]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&out).unwrap();
    let first_report = std::fs::read(dir.path().join("cnot.schedule.report.json")).unwrap();
    let file = ScheduleFile::from_json(std::str::from_utf8(&first).unwrap()).unwrap();
    assert_eq!(file.steps.len(), 19);
    assert!(file.steps.iter().flatten().all(|s| s.tau.trim_start_matches(['0', '.']).len() >= 15));

    // same arguments, different thread count: same bytes
    let o = run_with_threads("3", &[&args[..], &["--seed", "42", "-o", p(&out)]].concat());
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);
    assert_eq!(std::fs::read(dir.path().join("cnot.schedule.report.json")).unwrap(), first_report);

    let rep = dir.path().join("verify.json");
    let o = run(&["verify", p(&out), "--target", "cnot", "--report", p(&rep)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["f"].as_f64().unwrap() < 1e-12);
    assert!(v["residual"].as_f64().unwrap() < 6e-5);

    // cz is locally equivalent, swap-logical is not
    assert_eq!(code(&run(&["verify", p(&out), "--target", "cz"])), 0);
    assert_eq!(code(&run(&["verify", p(&out), "--target", "swap-logical"])), 2);

    // nudging every duration by 1e-3 breaks the gate but not the sector structure
    let mut bumped = file.clone();
    for step in bumped.steps.iter_mut().flatten() {
        let t: f64 = step.tau.parse().unwrap();
        step.tau = exchange_only::schedule::format_tau(t + 1e-3);
    }
    let bumped_path = dir.path().join("bumped.schedule");
    bumped.save(&bumped_path).unwrap();
    let o = run(&["verify", p(&bumped_path), "--target", "cnot"]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["checks"]["residual"], false);
    assert_eq!(v["checks"]["structure"], true);
}

#[test]
fn zero_schedule_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.schedule");
    let steps: Vec<String> = exchange_only::synthesis::canonical_cnot_pattern()
        .iter()
        .map(|s| format!(r#"[{{"i": {}, "j": {}, "tau": "0.0"}}]"#, s[0].0, s[0].1))
        .collect();
    let text = format!(
        r#"{{"version": 1, "n_spins": 6, "mode": "serial", "layout": {{"kind": "line", "n": 6}},
            "steps": [{}], "metadata": {{"target": "cnot", "seed": null, "tool_version": "", "objective": ""}}}}"#,
        steps.join(",")
    );
    std::fs::write(&path, text).unwrap();
    let o = run(&["verify", p(&path), "--target", "cnot"]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["f"].as_f64().unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn malformed_files_exit_65() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.schedule");
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(code(&run(&["verify", p(&path), "--target", "cnot"])), 65);
    std::fs::write(
        &path,
        r#"{"version": 1, "n_spins": 6, "mode": "serial", "layout": {"kind": "line", "n": 6},
            "steps": [[{"i": 0, "j": 2, "tau": "0.25"}]], "metadata": {"target": "", "seed": null, "tool_version": "", "objective": ""}}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["verify", p(&path), "--target", "cnot"])), 65);
    assert_eq!(code(&run(&["verify", p(&dir.path().join("missing")), "--target", "cnot"])), 65);
    assert_eq!(code(&run(&["synthesize", "--target", &format!("file:{}", p(&path))])), 65);
}

#[test]
fn single_qubit_from_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("h.json");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    std::fs::write(&m, format!("[[[{s},0],[{s},0]],[[{s},0],[-{s},0]]]")).unwrap();
    let target = format!("file:{}", p(&m));
    for flavor in ["serial-4-nearest", "serial-3-anypair", "parallel-3"] {
        let out = dir.path().join(format!("{flavor}.schedule"));
        let o = run(&["single-qubit", "--target", &target, "--flavor", flavor, "-o", p(&out)]);
        assert_eq!(code(&o), 0, "{flavor}");
        let o = run(&["verify", p(&out), "--target", &target]);
        assert_eq!(code(&o), 0, "{flavor}: {}", stdout(&o));
    }
    assert_eq!(code(&run(&["single-qubit", "--target", "cnot"])), 64);
}
