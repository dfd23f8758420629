use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dbandit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbandit"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

const SMALL: &str = "\
means = 0.9, 0.8, 0.7
players = 2
horizon = 1024
replications = 20
seed = 5

[strategy sparse]
schedule = exp:2

[strategy dk]
schedule = linear:16
policy = dklucb
";

#[test]
fn config_run_writes_csvs_with_consistent_regret() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.cfg"), SMALL).unwrap();
    let out = dbandit(
        &["--config", "exp.cfg", "--out", "res", "--bounds"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sparse") && stdout.contains("dk"));
    assert!(stdout.contains("leading term"));

    let res = dir.path().join("res");
    for f in [
        "sparse.csv",
        "dk.csv",
        "sparse_bounds.csv",
        "dk_bounds.csv",
        "combined.csv",
    ] {
        assert!(res.join(f).exists(), "{f} missing");
    }

    let gaps = [0.0, 0.1, 0.2];
    let mut reader = csv::Reader::from_path(res.join("sparse.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["t", "arm", "mean_pulls", "stderr", "regret"]
    );
    let mut rows: Vec<(u64, usize, f64, f64)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        rows.push((
            rec[0].parse().unwrap(),
            rec[1].parse().unwrap(),
            rec[2].parse().unwrap(),
            rec[4].parse().unwrap(),
        ));
    }
    assert!(!rows.is_empty());
    for chunk in rows.chunks(3) {
        let t = chunk[0].0;
        assert!(chunk.iter().all(|r| r.0 == t));
        let pulls: f64 = chunk.iter().map(|r| r.2).sum();
        assert!((pulls - 2.0 * t as f64).abs() < 1e-9);
        let regret: f64 = chunk.iter().map(|r| gaps[r.1 - 1] * r.2).sum();
        assert!(
            (regret - chunk[0].3).abs() < 1e-9,
            "t={t}: {regret} vs {}",
            chunk[0].3
        );
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.cfg"), SMALL).unwrap();
    for out in ["a", "b"] {
        let o = dbandit(&["--config", "exp.cfg", "--out", out], dir.path());
        assert!(o.status.success());
    }
    for f in ["sparse.csv", "dk.csv", "combined.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let o = dbandit(
        &["--config", "exp.cfg", "--out", "c", "--seed", "6"],
        dir.path(),
    );
    assert!(o.status.success());
    assert_ne!(
        fs::read(dir.path().join("a/sparse.csv")).unwrap(),
        fs::read(dir.path().join("c/sparse.csv")).unwrap()
    );
}

#[test]
fn figure1_preset_writes_all_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dbandit(
        &["--preset", "figure1", "--replications", "2", "--out", "fig"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["none", "full", "A", "B", "C"] {
        let text = fs::read_to_string(dir.path().join("fig").join(format!("{name}.csv"))).unwrap();
        assert!(
            text.lines().last().unwrap().starts_with("65536,2,"),
            "{name}"
        );
    }
    let combined = fs::read_to_string(dir.path().join("fig/combined.csv")).unwrap();
    assert_eq!(combined.lines().count(), 1 + 5 * 13 * 2);
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.cfg"),
        "means = 0.9, 0.8\nplayers = 0\nschedule = exp:1\n",
    )
    .unwrap();
    let out = dbandit(&["--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("line 2") && stderr.contains("line 3"),
        "{stderr}"
    );

    let out = dbandit(&["--config", "missing.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = dbandit(&["--preset", "figure1", "--replications", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("results").exists());
}

#[test]
fn unwritable_output_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.cfg"), SMALL).unwrap();
    fs::write(dir.path().join("blocker"), "not a directory").unwrap();
    let out = dbandit(&["--config", "exp.cfg", "--out", "blocker/res"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
