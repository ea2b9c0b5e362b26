use std::path::Path;
use std::process::{Command, Output};

use ndarray::Array2;
use serde_json::Value;
use tempfile::TempDir;

use ltlp::finance::synthetic_prices;
use ltlp::io;

fn ltlp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltlp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = ltlp(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn synth1d_is_byte_identical_per_seed() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["synth1d", "--seed", "7", "--out", "a"], d);
    ok(&["synth1d", "--seed", "7", "--out", "b"], d);
    ok(&["synth1d", "--seed", "8", "--out", "c"], d);
    for f in ["signals.csv", "labels.csv"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(d.join("b").join(f)).unwrap());
        assert_ne!(a, std::fs::read(d.join("c").join(f)).unwrap());
    }
    let m = manifest(&d.join("a/manifest.json"));
    assert_eq!(m["command"], "synth1d");
    assert_eq!(m["parameters"]["seed"], 7);
    assert!(m["timings"]["generate"].is_number());
}

#[test]
fn embedding_pipeline_end_to_end() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["synth1d", "--seed", "3", "--out", "data"], d);
    ok(
        &["embed", "--data", "data", "--method", "ltlp", "--channel-scale", "0.05", "--out", "emb/e.csv"],
        d,
    );
    // header plus one row per signal, one solve per signal
    assert_eq!(lines(&d.join("emb/e.csv")), 61);
    let m = manifest(&d.join("emb/manifest.json"));
    assert_eq!(m["solver_calls"], 60);
    assert_eq!(m["parameters"]["method"], "LTLP");

    ok(
        &[
            "cluster", "--embeddings", "emb/e.csv", "--labels", "data/labels.csv", "--k", "3", "--repeats", "4",
            "--out", "emb/ari.csv",
        ],
        d,
    );
    assert_eq!(lines(&d.join("emb/ari.csv")), 5);
    assert_eq!(lines(&d.join("emb/assignments.csv")), 61);

    ok(
        &[
            "classify", "--embeddings", "emb/e.csv", "--labels", "data/labels.csv", "--repeats", "3", "--out",
            "emb/f1.csv",
        ],
        d,
    );
    assert_eq!(lines(&d.join("emb/f1.csv")), 4);

    ok(
        &["interp", "--embeddings", "emb/e.csv", "--ref", "emb", "--stddevs", "-1,0,1", "--out", "sweep"],
        d,
    );
    let sweep = io::read_signals(&d.join("sweep/sweep.csv")).unwrap();
    assert_eq!(sweep.len(), 3);
    for s in &sweep {
        assert!((s.measure().weights().sum() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["synth1d", "--seed", "5", "--out", "data"], d);
    ok(&["--threads", "1", "embed", "--data", "data", "--method", "lwp", "--out", "one/e.csv"], d);
    ok(&["--threads", "3", "embed", "--data", "data", "--method", "lwp", "--out", "three/e.csv"], d);
    assert_eq!(
        std::fs::read(d.join("one/e.csv")).unwrap(),
        std::fs::read(d.join("three/e.csv")).unwrap()
    );
    assert_eq!(manifest(&d.join("three/manifest.json"))["threads"], 3);
}

#[test]
fn pairwise_tlp_solves_every_pair() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["synth1d", "--seed", "2", "--out", "data"], d);
    let out = ok(&["-v", "distmat", "--data", "data", "--method", "tlp", "--out", "dm/tlp.csv"], d);
    assert_eq!(manifest(&d.join("dm/manifest.json"))["solver_calls"], 1770);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1770/1770"));
    let dm = io::read_distance_matrix(&d.join("dm/tlp.csv"), ltlp::measures::DistanceMethod::Tlp).unwrap();
    assert_eq!(dm.len(), 60);
    for i in 0..60 {
        assert_eq!(dm.get(i, i), 0.0);
    }
}

#[test]
fn replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["synth2d", "--seed", "4", "--grid", "8", "--out", "data"], d);
    ok(&["distmat", "--data", "data", "--method", "lp", "--out", "dm/lp.csv"], d);
    let first = std::fs::read(d.join("dm/lp.csv")).unwrap();
    std::fs::remove_file(d.join("dm/lp.csv")).unwrap();
    ok(&["replay", "--manifest", "dm/manifest.json"], d);
    assert_eq!(first, std::fs::read(d.join("dm/lp.csv")).unwrap());
}

#[test]
fn flowmin_writes_map_and_nonincreasing_energy() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let n = 9;
    let bump = |c: f64| {
        Array2::from_shape_fn((n, n), |(j, i)| {
            let (x, y) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
            (-((x - c).powi(2) + (y - 0.5).powi(2)) / 0.05).exp() + 0.2
        })
    };
    io::write_grid(&d.join("mu.csv"), &bump(0.45)).unwrap();
    io::write_grid(&d.join("nu.csv"), &bump(0.55)).unwrap();
    ok(&["flowmin", "--mu", "mu.csv", "--nu", "nu.csv", "--tau", "0.5", "--out", "fl/map.csv,fl/energy.csv"], d);
    assert_eq!(lines(&d.join("fl/map.csv")), n * n + 1);
    let text = std::fs::read_to_string(d.join("fl/energy.csv")).unwrap();
    let energy: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(energy.windows(2).all(|w| w[1] <= w[0] + 1e-10));
}

#[test]
fn finance_writes_long_pnl_and_stats() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    io::write_prices(&d.join("prices.csv"), &synthetic_prices(160, 6, 1).unwrap()).unwrap();
    ok(
        &["finance", "--prices", "prices.csv", "--method", "cor", "--k", "10", "--horizons", "1,3", "--out", "fin"],
        d,
    );
    let stats = std::fs::read_to_string(d.join("fin/stats.csv")).unwrap();
    assert!(stats.starts_with("method,horizon,returnKind,quintile,SR,PPT,N"));
    // 2 horizons x 2 return kinds x 5 quintiles
    assert_eq!(stats.lines().count(), 21);
    assert!(lines(&d.join("fin/pnl.csv")) > 1);
    assert!(manifest(&d.join("fin/manifest.json"))["parameters"]["wp_preprocessing"].is_string());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let bad_flag = ltlp(&["synth1d", "--bogus"], d);
    assert_eq!(bad_flag.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_flag.stderr).contains("Usage"));
    let missing = ltlp(&["embed", "--data", "nowhere", "--method", "ltlp", "--out", "e.csv"], d);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    assert_eq!(ltlp(&["--help"], d).status.code(), Some(0));
}
