use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beatlaser"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_defaults_start_at_coherent_identities() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["simulate", "--t-max", "1", "--out", path(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..4], &["t", "V", "N", "re_m1"]);
    assert_eq!(header.len(), 3 + 28);
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 2.0).abs() < 1e-12);
    assert!((first[2] - 200.0).abs() < 1e-12);
    assert_eq!(lines.count(), 100);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    for key in [
        "params",
        "v_min",
        "t_at_vmin",
        "windows",
        "n_max",
        "t_at_nmax",
        "max_real_eigenvalue",
        "method",
        "grid",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["grid"]["stride"], 10);
}

#[test]
fn degenerate_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["simulate", "--omega-abs", "0", "--P", "1", "--out", path(dir.path())]);
    assert_eq!(code, 2);
    assert!(err.contains("degenerate"), "{err}");
    let (code, _, _) = run(&["simulate", "--P", "1.5", "--out", path(dir.path())]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["simulate", "--dt", "0", "--out", path(dir.path())]);
    assert_eq!(code, 2);
}

#[test]
fn blow_up_exits_3_and_records_time() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&[
        "simulate", "--delta", "10", "--method", "exact", "--dt", "1", "--stride", "1000",
        "--t-max", "100000", "--out", path(dir.path()),
    ]);
    assert_eq!(code, 3);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["error"], "non_finite_state");
    assert!(json["blow_up_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "P = 0.5\nt_max = 0.5\nmethod = \"exact\"\n").unwrap();
    let out = dir.path().join("o");
    let (code, _, err) = run(&[
        "stability", "--config", path(&cfg), "--P", "0.9", "--out", path(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stability.json")).unwrap()).unwrap();
    assert_eq!(json["params"]["P"], 0.9);
    assert_eq!(json["eigenvalues"].as_array().unwrap().len(), 14);

    std::fs::write(&cfg, "gamma = 1\nfoo = 3\n").unwrap();
    let (code, _, err) = run(&["simulate", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2") && err.contains("foo"), "{err}");
}

#[test]
fn sweep_rows_follow_axis_order() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "sweep", "--axis", "gamma=0.5,1", "--axis", "delta=-1,1,3", "--t-max", "0.5",
        "--trajectories", "--out", path(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    let gd: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[5].parse().unwrap()))
        .collect();
    assert_eq!(
        gd,
        vec![(0.5, -1.0), (0.5, 1.0), (0.5, 3.0), (1.0, -1.0), (1.0, 1.0), (1.0, 3.0)]
    );
    assert!(rows.iter().all(|r| *r.last().unwrap() == "ok"));
    assert!(dir.path().join("trajectories/point_00005.csv").exists());
}

#[test]
fn sweep_keeps_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&[
        "sweep", "--omega-abs", "0", "--axis", "P=0.5,1", "--t-max", "0.2",
        "--out", path(dir.path()),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let last: Vec<_> = csv.lines().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(last, vec!["status", "ok", "degenerate_parameters"]);
    let (code, _, err) = run(&["sweep", "--axis", "bogus=1", "--out", path(dir.path())]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"));
}

#[test]
fn verify_verdicts() {
    let (code, out, _) = run(&["verify"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("beta_oracle deviation"));
    let (code7, out7, _) = run(&["verify", "--seed", "7"]);
    assert_eq!(code7, 0, "{out7}");
    let verdicts = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| l.starts_with('['))
            .map(|l| l[..6].to_string())
            .collect()
    };
    assert_eq!(verdicts(&out), verdicts(&out7));
    let (code, out, _) = run(&["verify", "--inject-fault", "gain-sign"]);
    assert_eq!(code, 1);
    assert!(out.contains("failed: gain_matrix vs alpha_oracle"));
}

#[test]
fn negative_amplitude_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "simulate", "--alpha1", "-3,1", "--alpha2", "2", "--delta", "-2", "--t-max", "0.1",
        "--out", path(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!((row[3], row[4]), (-3.0, 1.0));
    assert_eq!(row[2], 14.0);
}
