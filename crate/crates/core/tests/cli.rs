use std::path::Path;

use softsnake::cli::{run, CommandOutcome, EXIT_COMPUTATION, EXIT_OK, EXIT_VALIDATION};
use softsnake::locomotion::MEASURED_VELOCITIES_CSV;
use softsnake::trajectory::read_csv_samples;
use softsnake::{GaitKind, RobotConfig, Trajectory};

fn softsnake(args: &[&str]) -> CommandOutcome {
    run(std::iter::once("softsnake").chain(args.iter().copied()))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_rolling_writes_valid_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roll.json");
    let diag = dir.path().join("diag.csv");
    let o = softsnake(&[
        "fit",
        "--gait",
        "roll-in",
        "--period",
        "2",
        "--cycles",
        "3",
        "--out",
        path_str(&out),
        "--diagnostics",
        path_str(&diag),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.message);
    assert!(o.message.contains("32/32"));
    let traj = Trajectory::import(&out).unwrap();
    assert_eq!(traj.gait, GaitKind::RollInward);
    assert_eq!(traj.samples.len(), 96);
    assert_eq!(traj.samples[1].t, 2.0 / 32.0);
    assert_eq!(traj.config_digest, RobotConfig::default().digest());
    traj.validate().unwrap();
    assert!(traj.check_pressures(&RobotConfig::default()));
    let diag = std::fs::read_to_string(diag).unwrap();
    assert_eq!(diag.lines().count(), 33);
}

#[test]
fn fit_outward_csv_reads_back_reversed() {
    let dir = tempfile::tempdir().unwrap();
    let inward = dir.path().join("in.csv");
    let outward = dir.path().join("out.csv");
    for (gait, out) in [("roll-in", &inward), ("roll-out", &outward)] {
        let o = softsnake(&[
            "fit",
            "--gait",
            gait,
            "--samples",
            "16",
            "--out",
            path_str(out),
        ]);
        assert_eq!(o.code, EXIT_OK, "{}", o.message);
    }
    let a = read_csv_samples(&inward).unwrap();
    let b = read_csv_samples(&outward).unwrap();
    assert_eq!(a.len(), 16);
    assert_eq!(a[0].q_m, b[0].q_m);
    assert_eq!(a[3].q_m, b[13].q_m);
}

#[test]
fn fit_smoothing_and_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = softsnake(&[
        "fit",
        "--gait",
        "serpentine",
        "--parallel",
        "--smooth",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.message);
    let even = softsnake(&[
        "fit",
        "--gait",
        "serpentine",
        "--smooth",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(even.code, EXIT_VALIDATION);
    assert!(even.message.starts_with("smooth"));
}

#[test]
fn fit_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = softsnake(&[
        "fit",
        "--gait",
        "serpentine",
        "--amplitude",
        "2.0",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(!out.exists());
    let o = softsnake(&[
        "fit",
        "--gait",
        "serpentine",
        "--out",
        path_str(&dir.path().join("x.txt")),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
    let o = softsnake(&[
        "fit",
        "--gait",
        "serpentine",
        "--cycles",
        "0",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
    let o = softsnake(&[
        "fit",
        "--gait",
        "serpentine",
        "--config",
        path_str(&dir.path().join("missing.json")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(o.message.starts_with("config"));
}

#[test]
fn fit_reports_too_few_converged() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = softsnake(&[
        "fit",
        "--gait",
        "serpentine",
        "--residual-accept",
        "0.001",
        "--max-restarts",
        "1",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_COMPUTATION, "{}", o.message);
    assert!(o.message.starts_with("fit"));
    assert!(!out.exists());
}

#[test]
fn fit_reads_spec_and_options_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let opts = dir.path().join("opts.json");
    let out = dir.path().join("t.json");
    std::fs::write(
        &spec,
        r#"{"kind": "roll_inward", "amplitude_scale": 0.5, "samples_per_cycle": 8}"#,
    )
    .unwrap();
    std::fs::write(&opts, r#"{"lambda": 0.5, "max_restarts": 4}"#).unwrap();
    let o = softsnake(&[
        "fit",
        "--gait",
        "roll-in",
        "--spec",
        path_str(&spec),
        "--fit-options",
        path_str(&opts),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.message);
    let traj = Trajectory::import(&out).unwrap();
    assert_eq!(traj.samples.len(), 8);
    assert_eq!(traj.amplitude_scale, 0.5);

    std::fs::write(&opts, r#"{"lamda": 0.5}"#).unwrap();
    let o = softsnake(&[
        "fit",
        "--gait",
        "roll-in",
        "--fit-options",
        path_str(&opts),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
}

#[test]
fn shape_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = softsnake(&[
        "shape",
        "--joints",
        "0.02,0,0,0,0.01,0,0,0,0",
        "--base",
        "0.1,0,0,0,0,-0.5",
        "--points",
        "11",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.message);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "xi,x_m,y_m,z_m");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("0,0.1,"));
    assert!(lines[11].starts_with("3,"));

    let svg = dir.path().join("b.svg");
    let o = softsnake(&[
        "shape",
        "--joints",
        "0.02,0,0,0,0,0,0,0,0",
        "--out",
        path_str(&svg),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.message);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml"));
    assert_eq!(text.matches("<polyline").count(), 2);
}

#[test]
fn shape_rejects_bad_joints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    for joints in [
        "0.1,0,0,0,0,0,0,0,0",
        "-0.01,0,0,0,0,0,0,0,0",
        "0,0,0",
        "a,0,0,0,0,0,0,0,0",
    ] {
        let o = softsnake(&["shape", "--joints", joints, "--out", path_str(&out)]);
        assert_eq!(o.code, EXIT_VALIDATION, "{joints}");
    }
    let o = softsnake(&[
        "shape",
        "--joints",
        "0,0,0,0,0,0,0,0,0",
        "--out",
        path_str(&dir.path().join("b.png")),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(!out.exists());
}

#[test]
fn estimate_reports_and_rejects_truncated_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = softsnake(&["estimate", "--out", path_str(&out)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.message);
    assert!(o.message.contains("roll_inward"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 48);

    let table = dir.path().join("t.csv");
    let truncated: String = MEASURED_VELOCITIES_CSV
        .lines()
        .take(40)
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&table, truncated).unwrap();
    let o = softsnake(&[
        "estimate",
        "--table",
        path_str(&table),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
    let o = softsnake(&[
        "estimate",
        "--table",
        path_str(&dir.path().join("none.csv")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(o.message.starts_with("table"));
}

#[test]
fn bundled_config_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/prototype_config.json");
    assert_eq!(RobotConfig::load(&path).unwrap(), RobotConfig::default());
}
