//! Browser demo bindings: small, solver-free operations from the core crate
//! exposed to a static page. Every export takes plain scalars and returns a
//! JSON string so the page needs no generated glue types.
//!
//! Heavy SDP solves are deliberately out of scope here; the demo covers the
//! honest correlation model, the analytic benchmark curves, and the
//! quadrature rules.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rdiqkd_core::keyrate::{conditional_entropy_ab, fiber_distance, shor_preskill_rate, srq_threshold};
use rdiqkd_core::protocols::{
    chsh_value, honest_tables, qber, table1_spec, NoiseParams, ProtocolName, Side,
};
use rdiqkd_core::qmodel::Outcome;
use rdiqkd_core::quadrature::{alpha, gauss_radau};

#[derive(Serialize)]
struct ModelStats {
    protocol: String,
    eta_s: f64,
    eta_l: f64,
    visibility: f64,
    routed: bool,
    chsh_short: Option<f64>,
    chsh_long: f64,
    qber: f64,
    h_ab: f64,
}

#[derive(Serialize)]
struct BenchmarkPoint {
    eta_l: f64,
    shor_preskill: f64,
    fiber_km: f64,
}

#[derive(Serialize)]
struct BenchmarkCurve {
    srq_threshold_eta_s_1: f64,
    points: Vec<BenchmarkPoint>,
}

#[derive(Serialize)]
struct QuadratureNode {
    i: usize,
    t: f64,
    w: f64,
    alpha: Option<f64>,
}

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

/// Honest-model statistics of one protocol at one noise point: CHSH values
/// on the short and long paths, the key-basis error rate, and the
/// error-correction cost H(A|B).
#[wasm_bindgen]
pub fn model_stats(protocol: &str, eta_s: f64, eta_l: f64, visibility: f64) -> String {
    let name: ProtocolName = match protocol.parse() {
        Ok(n) => n,
        Err(e) => return err_json(e),
    };
    let spec = table1_spec(name);
    let noise = NoiseParams {
        eta_s,
        eta_l,
        visibility,
    };
    let tables = match honest_tables(&spec, &noise) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let chsh_short = if spec.is_routed() {
        chsh_value(&tables, Side::Tester, [0, 1], [0, 1]).ok()
    } else {
        None
    };
    // CHSH combination over the two B inputs the relaxation constrains,
    // with B's no-click outcome binned so correlators are defined.
    let w_pair = match spec.sdp_y_inputs.as_slice() {
        [a, b, ..] => [*a, *b],
        _ => [0, 1],
    };
    let mut binned = tables.clone();
    if binned.p_ab_test.right_outcomes.contains(&Outcome::NoClick) {
        binned.p_ab_test = match binned.p_ab_test.bin_right(Outcome::Plus) {
            Ok(t) => t,
            Err(e) => return err_json(e),
        };
    }
    let chsh_long = match chsh_value(&binned, Side::Bob, [0, 1], w_pair) {
        Ok(v) => v,
        Err(e) => return err_json(e),
    };
    let (kx, ky, _) = spec.key_set[0];
    let q = match qber(&tables, kx, ky) {
        Ok(v) => v,
        Err(e) => return err_json(e),
    };
    let h_ab: f64 = spec
        .key_set
        .iter()
        .map(|&(x, y, w)| w * conditional_entropy_ab(&tables, x, y))
        .sum();
    let stats = ModelStats {
        protocol: spec.name.as_str().to_string(),
        eta_s,
        eta_l,
        visibility,
        routed: spec.is_routed(),
        chsh_short,
        chsh_long,
        qber: q,
        h_ab,
    };
    serde_json::to_string(&stats).unwrap()
}

/// Analytic benchmark: the ideal-statistics rate 1 − h((1−η)/2) − (1−η) and
/// the fiber length realizing each efficiency, plus the single-round
/// interception floor at η_S = 1.
#[wasm_bindgen]
pub fn benchmark_curve(eta_min: f64, eta_max: f64, steps: usize, gamma_db_per_km: f64) -> String {
    if !(0.0..=1.0).contains(&eta_min) || !(eta_min..=1.0).contains(&eta_max) || steps < 2 {
        return err_json("need 0 <= eta_min <= eta_max <= 1 and at least 2 steps");
    }
    let points: Vec<BenchmarkPoint> = (0..steps)
        .map(|k| {
            let eta = eta_min + (eta_max - eta_min) * k as f64 / (steps - 1) as f64;
            BenchmarkPoint {
                eta_l: eta,
                shor_preskill: shor_preskill_rate(eta),
                fiber_km: fiber_distance(eta.max(1e-12), gamma_db_per_km),
            }
        })
        .collect();
    let curve = BenchmarkCurve {
        srq_threshold_eta_s_1: srq_threshold(1.0),
        points,
    };
    serde_json::to_string(&curve).unwrap()
}

/// The m-node quadrature rule on [0, 1] with the per-node operator norm
/// bounds; the endpoint node carries no bound.
#[wasm_bindgen]
pub fn quadrature_rule(m: usize) -> String {
    let rule = match gauss_radau(m) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let nodes: Vec<QuadratureNode> = (0..m)
        .map(|i| QuadratureNode {
            i: i + 1,
            t: rule.nodes[i],
            w: rule.weights[i],
            alpha: alpha(rule.nodes[i]).ok(),
        })
        .collect();
    serde_json::to_string(&nodes).unwrap()
}
