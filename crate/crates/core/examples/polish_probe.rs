//! Scratch: does certificate polishing fix the stiff smallest-t node?

use std::time::Instant;

use rdiqkd_core::npo::{build_entropy_problem, realify, AbConstraintMode, EntropyOptions, RealifyMode};
use rdiqkd_core::protocols::{honest_tables, table1_spec, NoiseParams, ProtocolName};
use rdiqkd_core::quadrature::{alpha, gauss_radau};
use rdiqkd_core::sdp::{certified_lower_bound, polish_multipliers, solve, SolverSettings};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let max_iter: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(30_000);
    let steps: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2_000);

    let spec = table1_spec(ProtocolName::RBb84);
    let noise = NoiseParams { eta_s: 1.0, eta_l: 0.8, visibility: 1.0 };
    let tables = honest_tables(&spec, &noise).unwrap();
    let opts = EntropyOptions {
        ab_mode: AbConstraintMode::QberOnly { x: 1, y: 1 },
        ..EntropyOptions::from_spec(&spec)
    };
    let rule = gauss_radau(12).unwrap();
    let t = rule.nodes[0];
    let a = alpha(t).unwrap();
    let mp = build_entropy_problem(&spec, &tables, 0, t, a, &opts).unwrap();
    let sdp = realify(&mp, RealifyMode::Real).unwrap();
    let settings = SolverSettings { tol: 2e-7, max_iter, ..Default::default() };

    let t0 = Instant::now();
    let sol = solve(&sdp, &settings).unwrap();
    let raw = certified_lower_bound(&sdp, &sol.dual_multipliers);
    println!(
        "solve: iters={} {:?} primal={:.6} cert={:.6} gap={:.2e} dt={:.1}s",
        sol.iterations, sol.status, sol.primal_value, raw, sol.primal_value - raw,
        t0.elapsed().as_secs_f64()
    );
    let t1 = Instant::now();
    for chunk in [100usize, 400, 1500, 4000] {
        let (_, g) = polish_multipliers(&sdp, &sol.dual_multipliers, sol.primal_value, chunk);
        println!(
            "polish {:5} steps: cert={:.6} gap={:.2e} dt={:.1}s",
            chunk, g, sol.primal_value - g, t1.elapsed().as_secs_f64()
        );
    }
}
