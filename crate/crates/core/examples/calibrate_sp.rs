//! Scratch: QBER-only rBB84 bound vs the analytic benchmark rate, polished
//! by repeated warm passes.

use std::time::Instant;

use rdiqkd_core::keyrate::{compute_rate_warm, shor_preskill_rate, NodeWarmCache};
use rdiqkd_core::npo::{AbConstraintMode, EntropyOptions};
use rdiqkd_core::protocols::{table1_spec, NoiseParams, ProtocolName};
use rdiqkd_core::sdp::SolverSettings;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eta_l: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.8);
    let tol: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2e-7);
    let max_iter: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(30_000);
    let passes: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(8);

    let spec = table1_spec(ProtocolName::RBb84);
    let opts = EntropyOptions {
        ab_mode: AbConstraintMode::QberOnly { x: 1, y: 1 },
        ..EntropyOptions::from_spec(&spec)
    };
    let settings = SolverSettings {
        tol,
        max_iter,
        ..Default::default()
    };
    let mut cache = NodeWarmCache::default();
    let noise = NoiseParams {
        eta_s: 1.0,
        eta_l,
        visibility: 1.0,
    };

    for pass in 0..passes {
        let t0 = Instant::now();
        let res = compute_rate_warm(&spec, &noise, 12, &opts, &settings, Some(&mut cache))
            .unwrap();
        let worst = res
            .nodes
            .iter()
            .map(|n| (n.primal - n.certified) * n.weight / (n.t * std::f64::consts::LN_2))
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "pass={pass} rate={:.6} sp={:.6} err={:+.2e} worst_node_slack={:.2e} conv={} dt={:.1}s",
            res.rate,
            shor_preskill_rate(eta_l),
            res.rate - shor_preskill_rate(eta_l),
            worst,
            res.all_converged,
            t0.elapsed().as_secs_f64()
        );
    }
}
