use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spikeinit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikeinit"))
        .args(args)
        .current_dir(cwd)
        .env("SPIKEINIT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn rate_solver_defaults_give_the_reference_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikeinit(&["--experiment", "rate-solver", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&dir.path().join("res/rate-solver.csv"));
    assert_eq!(r.len(), 1);
    let rate: f64 = r[0][3].parse().unwrap();
    assert!((rate - 18.264).abs() < 1e-3, "{rate}");
    assert!(dir.path().join("res/rate-solver.manifest.toml").exists());
}

#[test]
fn solved_weights_hit_their_targets() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "experiment = \"rate-solver\"\ntargets = [20.0, 40.0]\ndt_ms = [1.0]\n").unwrap();
    let out = spikeinit(&["--config", "c.toml", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&dir.path().join("res/rate-solver.csv"));
    let sigma: Vec<f64> = r.iter().map(|x| x[1].parse().unwrap()).collect();
    assert!(sigma[0] < sigma[1]);
    for x in &r {
        let (t, got): (f64, f64) = (x[0].parse().unwrap(), x[2].parse().unwrap());
        assert!((got - t).abs() < 1e-3 * t);
    }
}

#[test]
fn manifest_reruns_reproduce_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "experiment = \"rw-correct\"\nrepeats = 2\ndt_ms = [1.0, 5.0]\n[population]\nn_neurons = 100\nduration = 0.2\nwarmup = 0.05\n",
    )
    .unwrap();
    let first = spikeinit(&["--config", "c.toml", "--out", "a"], dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(dir.path().join("a/rw-correct.svg").exists());
    let again = spikeinit(&["--config", "a/rw-correct.manifest.toml", "--out", "b"], dir.path());
    assert!(again.status.success());
    let a = fs::read(dir.path().join("a/rw-correct.csv")).unwrap();
    let b = fs::read(dir.path().join("b/rw-correct.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("unknown.toml"), "experiment = \"rw-correct\"\nbogus = 1\n").unwrap();
    fs::write(dir.path().join("invalid.toml"), "experiment = \"rw-correct\"\nrepeats = 0\n").unwrap();
    fs::write(dir.path().join("weights.toml"), "experiment = \"rw-correct\"\n[weights]\nkind = \"gaussian\"\nmean = 0.0\nstd = 0.01\nconnection_prob = 1.0\n").unwrap();
    for f in ["unknown.toml", "invalid.toml", "weights.toml"] {
        let out = spikeinit(&["--config", f, "--out", "res"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{f}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = spikeinit(&["--experiment", "no-such-thing"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
