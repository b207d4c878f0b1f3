//! End-to-end tests of the binary: flag plumbing, CSV shape, cache behavior
//! and determinism. Uses a small nonrouted protocol at loose tolerance so
//! every solve finishes in seconds.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_rdiqkd");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn rdiqkd")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
protocol = "CHSH"
eta_s = [1.0]
eta_l = [0.92, 0.96]
visibility = [1.0]
m = 2

[solver]
tol = 1e-4
max_iter = 20000
"#;

/// Strip the wall-clock column so fresh runs can be compared.
fn without_seconds(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head).unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn quadrature_prints_rule() {
    let out = run(&["quadrature", "--m", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,t_i,w_i,alpha_i");
    assert_eq!(lines.len(), 5);
    // Endpoint node: t = 1, alpha diverges.
    let last: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(last[0], "4");
    assert_eq!(last[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(last[3], "inf");
    let wsum: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((wsum - 1.0).abs() < 1e-12);
}

#[test]
fn rate_prints_one_row() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = run(&["rate", "--config", &cfg, "--no-cache"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("protocol,eta_s,eta_l,"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "CHSH");
    assert_eq!(fields[2], "0.92");
    let rate: f64 = fields[8].parse().unwrap();
    assert!(rate.is_finite() && rate > 0.0, "rate {rate}");
    assert_eq!(fields[9], "optimal");
}

#[test]
fn rejects_bad_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "protocol = \"CHSH\"\nunknown_key = 1\n");
    let out = run(&["rate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn sweep_is_sorted_and_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out1 = tmp.path().join("a.csv");
    let out2 = tmp.path().join("b.csv");
    for out in [&out1, &out2] {
        let r = run(&[
            "sweep",
            "--config",
            &cfg,
            "--no-cache",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = std::fs::read_to_string(&out1).unwrap();
    let b = std::fs::read_to_string(&out2).unwrap();
    assert_eq!(without_seconds(&a), without_seconds(&b));
    let etas: Vec<f64> = a
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(etas, vec![0.92, 0.96]);
}

#[test]
fn cached_sweep_is_bitwise_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("cache");
    let body = format!("cache_dir = \"{}\"\n{SMALL}", cache.display());
    let cfg = write_config(tmp.path(), &body);
    let out1 = tmp.path().join("w1.csv");
    let out2 = tmp.path().join("w4.csv");
    let r1 = run(&["sweep", "--config", &cfg, "--workers", "1", "--out", out1.to_str().unwrap()]);
    assert!(r1.status.success());
    let r2 = run(&["sweep", "--config", &cfg, "--workers", "4", "--out", out2.to_str().unwrap()]);
    assert!(r2.status.success());
    assert!(String::from_utf8_lossy(&r2.stderr).contains("cache hits: 2/2"));
    // Replayed rows carry the original timings, so the files match exactly.
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap()
    );
}

#[test]
fn cache_dir_env_var_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let env_cache = tmp.path().join("env_cache");
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("r.csv");
    let r = Command::new(BIN)
        .args(["sweep", "--config", &cfg, "--out", out.to_str().unwrap()])
        .env("RDIQKD_CACHE_DIR", &env_cache)
        .output()
        .unwrap();
    assert!(r.status.success());
    let n = std::fs::read_dir(&env_cache).unwrap().count();
    assert_eq!(n, 2);
}

#[test]
fn sweep_writes_plot() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("cache");
    let body = format!("cache_dir = \"{}\"\n{SMALL}", cache.display());
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("r.csv");
    let svg = tmp.path().join("r.svg");
    let r = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains("polyline"));
}

#[test]
fn export_sdp_filename_embeds_hash() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let outdir = tmp.path().join("sdps");
    let mut paths = Vec::new();
    for _ in 0..2 {
        let r = run(&[
            "export-sdp",
            "--config",
            &cfg,
            "--node",
            "1",
            "--out",
            outdir.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        paths.push(stdout(&r).trim().to_string());
    }
    assert_eq!(paths[0], paths[1]);
    assert!(paths[0].ends_with("_node1.dat-s"));
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    // SDPA sparse header: m, nblocks, block sizes, then the rhs vector.
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('"') && !l.starts_with('*'));
    let m: usize = lines.next().unwrap().trim().parse().unwrap();
    assert!(m > 0);

    let bad = run(&["export-sdp", "--config", &cfg, "--node", "2", "--out", outdir.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}
