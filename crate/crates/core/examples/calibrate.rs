//! Scratch: full rBB84 rate at one noise point, per-node progress printed.

use std::time::Instant;

use rdiqkd_core::keyrate::{
    compute_rate_warm, shor_preskill_rate, NodeWarmCache,
};
use rdiqkd_core::npo::EntropyOptions;
use rdiqkd_core::protocols::{table1_spec, NoiseParams, ProtocolName};
use rdiqkd_core::sdp::SolverSettings;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eta_l: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.9);
    let tol: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1e-6);
    let max_iter: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(30_000);

    let spec = table1_spec(ProtocolName::RBb84);
    let opts = EntropyOptions::from_spec(&spec);
    let settings = SolverSettings {
        tol,
        max_iter,
        ..Default::default()
    };
    let mut cache = NodeWarmCache::default();

    for pass in 0..2 {
        let noise = NoiseParams {
            eta_s: 1.0,
            eta_l,
            visibility: 1.0,
        };
        let t0 = Instant::now();
        let res = compute_rate_warm(&spec, &noise, 12, &opts, &settings, Some(&mut cache))
            .unwrap();
        println!(
            "pass={pass} eta_l={eta_l} H_AE={:.6} H_AB={:.6} rate={:.6} sp={:.6} conv={} dt={:.1}s",
            res.h_ae,
            res.h_ab,
            res.rate,
            shor_preskill_rate(eta_l),
            res.all_converged,
            t0.elapsed().as_secs_f64()
        );
        for n in &res.nodes {
            println!(
                "  t={:.5} iters={:6} {:?} primal={:.6} cert={:.6} gap={:.2e} wt={:.3}",
                n.t,
                n.iterations,
                n.status,
                n.primal,
                n.certified,
                n.primal - n.certified,
                n.weight / (n.t * std::f64::consts::LN_2)
            );
        }
    }
}
