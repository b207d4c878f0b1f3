//! Batch front-end: single-point rates, grid sweeps, threshold searches,
//! SDPA export and quadrature dumps, with CSV output, optional SVG plots and
//! a content-addressed result cache.

mod cache;
mod config;
mod plot;
mod row;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use rdiqkd_core::keyrate::{compute_rate, critical_efficiency, KeyRateError};
use rdiqkd_core::npo::{build_entropy_problem, realify, RealifyMode};
use rdiqkd_core::protocols::{honest_tables, NoiseParams};
use rdiqkd_core::quadrature::{alpha, gauss_radau};
use rdiqkd_core::sdp::export_sdpa;

use config::RunConfig;
use row::{sort_rows, ResultRow, CSV_HEADER};

#[derive(Parser)]
#[command(name = "rdiqkd", about = "Certified key-rate bounds for routed device-independent QKD")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one grid point and print its result row.
    Rate(PointArgs),
    /// Evaluate the full grid and write a CSV (optionally an SVG plot).
    Sweep(SweepArgs),
    /// Bisect for the critical long-path efficiency.
    Threshold(ThresholdArgs),
    /// Write one quadrature node's relaxation in SDPA sparse format.
    ExportSdp(ExportArgs),
    /// Print the quadrature rule as CSV.
    Quadrature(QuadArgs),
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    config: PathBuf,
    /// Short-path efficiency (default: first grid value).
    #[arg(long)]
    eta_s: Option<f64>,
    /// Long-path efficiency (default: first grid value).
    #[arg(long)]
    eta_l: Option<f64>,
    /// Visibility (default: first grid value).
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output path (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker count (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    no_cache: bool,
    /// Also write an SVG plot of rate vs eta_l.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    config: PathBuf,
    /// Bisection tolerance on eta_l.
    #[arg(long, default_value_t = 2e-3)]
    tol: f64,
    /// Declare the rate positive only above this slack.
    #[arg(long, default_value_t = 0.0)]
    positivity: f64,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    config: PathBuf,
    /// Quadrature node index, 1-based, 1 <= i <= m-1.
    #[arg(long)]
    node: usize,
    /// Output directory; the filename embeds the problem hash.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    eta_s: Option<f64>,
    #[arg(long)]
    eta_l: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
}

#[derive(Args)]
struct QuadArgs {
    /// Number of nodes.
    #[arg(long)]
    m: usize,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Rate(a) => cmd_rate(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Threshold(a) => cmd_threshold(a),
        Cmd::ExportSdp(a) => cmd_export_sdp(a),
        Cmd::Quadrature(a) => cmd_quadrature(a),
    };
    match code {
        Ok(c) => std::process::exit(c),
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

fn point_from(cfg: &RunConfig, eta_s: Option<f64>, eta_l: Option<f64>, nu: Option<f64>) -> NoiseParams {
    NoiseParams {
        eta_s: eta_s.unwrap_or(cfg.eta_s[0]),
        eta_l: eta_l.unwrap_or(cfg.eta_l[0]),
        visibility: nu.unwrap_or(cfg.visibility[0]),
    }
}

/// Evaluate one point, consulting the cache when a directory is given.
/// Returns the row and whether it was a cache hit.
fn evaluate(cfg: &RunConfig, noise: &NoiseParams, cache_dir: Option<&std::path::Path>) -> (ResultRow, bool) {
    let spec = cfg.spec();
    let opts = cfg.opts();
    let settings = cfg.settings();
    let level = cfg.level_string();

    let key = cache_dir
        .and_then(|_| cache::cache_key(&spec, noise, cfg.m, &opts, &settings).ok());
    if let (Some(dir), Some(k)) = (cache_dir, key.as_deref()) {
        if let Some(row) = cache::lookup(dir, k) {
            return (row, true);
        }
    }

    let start = Instant::now();
    let row = match compute_rate(&spec, noise, cfg.m, &opts, &settings) {
        Ok(res) => ResultRow::from_result(
            spec.name.as_str(),
            noise,
            &level,
            cfg.m,
            &res,
            start.elapsed().as_secs_f64(),
        ),
        Err(e) => {
            eprintln!("point ({}, {}, {}): {e}", noise.eta_s, noise.eta_l, noise.visibility);
            ResultRow::failed(
                spec.name.as_str(),
                noise,
                &level,
                cfg.m,
                start.elapsed().as_secs_f64(),
            )
        }
    };
    if let (Some(dir), Some(k)) = (cache_dir, key.as_deref()) {
        if row.status != "error" {
            if let Err(e) = cache::store(dir, k, &row) {
                eprintln!("cache write failed: {e}");
            }
        }
    }
    (row, false)
}

fn cmd_rate(a: PointArgs) -> Result<i32, String> {
    let cfg = RunConfig::load(&a.config)?;
    let noise = point_from(&cfg, a.eta_s, a.eta_l, a.nu);
    let dir = cache::resolve_dir(cfg.cache_dir.as_deref(), a.no_cache);
    let (row, hit) = evaluate(&cfg, &noise, dir.as_deref());
    if hit {
        eprintln!("cache hit");
    }
    println!("{CSV_HEADER}");
    println!("{}", row.csv_line());
    Ok(if row.status == "error" { 1 } else { 0 })
}

fn cmd_sweep(a: SweepArgs) -> Result<i32, String> {
    let cfg = RunConfig::load(&a.config)?;
    let out = a
        .out
        .or_else(|| cfg.out.clone())
        .ok_or("no output path: pass --out or set `out` in the config")?;
    let workers = a.workers.unwrap_or(cfg.workers);
    let dir = cache::resolve_dir(cfg.cache_dir.as_deref(), a.no_cache);

    let mut points = Vec::new();
    for &eta_s in &cfg.eta_s {
        for &eta_l in &cfg.eta_l {
            for &visibility in &cfg.visibility {
                points.push(NoiseParams {
                    eta_s,
                    eta_l,
                    visibility,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    let results: Vec<(ResultRow, bool)> = pool.install(|| {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|noise| evaluate(&cfg, noise, dir.as_deref()))
            .collect()
    });
    let hits = results.iter().filter(|(_, h)| *h).count();
    if hits > 0 {
        eprintln!("cache hits: {hits}/{}", results.len());
    }
    let mut rows: Vec<ResultRow> = results.into_iter().map(|(r, _)| r).collect();
    sort_rows(&mut rows);

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    std::fs::write(&out, csv).map_err(|e| format!("{}: {e}", out.display()))?;
    if let Some(plot_path) = &a.plot {
        std::fs::write(plot_path, plot::rate_plot_svg(&rows))
            .map_err(|e| format!("{}: {e}", plot_path.display()))?;
    }
    Ok(if rows.iter().any(|r| r.status == "error") {
        1
    } else {
        0
    })
}

fn cmd_threshold(a: ThresholdArgs) -> Result<i32, String> {
    let cfg = RunConfig::load(&a.config)?;
    let dir = cache::resolve_dir(cfg.cache_dir.as_deref(), a.no_cache);
    let lo = cfg.eta_l.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cfg.eta_l.iter().cloned().fold(0.0f64, f64::max);
    if !(lo < hi) {
        return Err("threshold needs an eta_l grid spanning a bracket [lo, hi]".into());
    }
    let base = point_from(&cfg, None, None, None);

    println!("{CSV_HEADER}");
    let mut failed = false;
    let rate_of = |eta_l: f64| -> Result<f64, KeyRateError> {
        let noise = NoiseParams { eta_l, ..base };
        let (row, _) = evaluate(&cfg, &noise, dir.as_deref());
        println!("{}", row.csv_line());
        if row.status == "error" {
            failed = true;
        }
        Ok(row.rate)
    };
    let crossing = critical_efficiency(rate_of, lo, hi, a.tol, a.positivity)
        .map_err(|e| e.to_string())?;
    println!(
        "threshold,{},eta_s={},visibility={},eta_l_critical={}",
        cfg.protocol, base.eta_s, base.visibility, crossing
    );
    Ok(if failed { 1 } else { 0 })
}

fn cmd_export_sdp(a: ExportArgs) -> Result<i32, String> {
    let cfg = RunConfig::load(&a.config)?;
    if a.node == 0 || a.node >= cfg.m {
        return Err(format!("node index must satisfy 1 <= i <= m-1 = {}", cfg.m - 1));
    }
    let noise = point_from(&cfg, a.eta_s, a.eta_l, a.nu);
    let spec = cfg.spec();
    let opts = cfg.opts();
    let tables = honest_tables(&spec, &noise).map_err(|e| e.to_string())?;
    let rule = gauss_radau(cfg.m).map_err(|e| e.to_string())?;
    let t = rule.nodes[a.node - 1];
    let al = alpha(t).map_err(|e| e.to_string())?;
    let key_x = spec.key_set[0].0;
    let mp = build_entropy_problem(&spec, &tables, key_x, t, al, &opts)
        .map_err(|e| e.to_string())?;
    let sdp = realify(&mp, RealifyMode::Real).map_err(|e| e.to_string())?;
    let text = export_sdpa(&sdp);

    let hash = cache::cache_key(&spec, &noise, cfg.m, &opts, &cfg.settings())
        .map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&a.out).map_err(|e| e.to_string())?;
    let path = a.out.join(format!("{}_node{}.dat-s", &hash[..16], a.node));
    std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    println!("{}", path.display());
    Ok(0)
}

fn cmd_quadrature(a: QuadArgs) -> Result<i32, String> {
    let rule = gauss_radau(a.m).map_err(|e| e.to_string())?;
    println!("i,t_i,w_i,alpha_i");
    for i in 0..a.m {
        let t = rule.nodes[i];
        let w = rule.weights[i];
        let al = alpha(t).map(|v| format!("{v:.17e}")).unwrap_or_else(|_| "inf".into());
        println!("{},{t:.17e},{w:.17e},{al}", i + 1);
    }
    Ok(0)
}
