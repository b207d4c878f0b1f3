//! Certified asymptotic key rates: the quadrature-based lower bound on the
//! conditional entropy H(A|E), the honest-model error-correction cost
//! H(A|B), their Devetak-Winter difference, analytic benchmarks, and
//! critical-efficiency search.

use thiserror::Error;

use crate::npo::{build_entropy_problem, realify, EntropyOptions, NpoError, RealifyMode};
use crate::protocols::{honest_tables, CorrelationTables, NoiseParams, ProtocolError, ProtocolSpec};
use crate::quadrature::{alpha, gauss_radau, QuadratureError};
use crate::sdp::{
    certified_lower_bound, polish_multipliers, solve_warm, SdpError, SolveStatus, SolverSettings,
    WarmStart,
};

#[derive(Debug, Error)]
pub enum KeyRateError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Npo(#[from] NpoError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("no sign change in [{lo}, {hi}]; rate is {rate_lo:.4} at lo and {rate_hi:.4} at hi")]
    NoBracket {
        lo: f64,
        hi: f64,
        rate_lo: f64,
        rate_hi: f64,
    },
    #[error("key input x={0} out of range")]
    BadKeyInput(usize),
}

/// Binary entropy h(p) in bits; h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
    let p = p.clamp(0.0, 1.0);
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

fn shannon(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// One quadrature node's solved relaxation.
#[derive(Debug, Clone)]
pub struct NodeResult {
    pub t: f64,
    pub weight: f64,
    pub alpha: f64,
    /// Certified lower bound on the node objective (valid regardless of how
    /// converged the solver was).
    pub certified: f64,
    /// Solver's primal objective, for gap diagnostics only.
    pub primal: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// Certified lower bound on H(A|E) for one protocol at one noise point.
#[derive(Debug, Clone)]
pub struct EntropyBound {
    pub value: f64,
    pub nodes: Vec<NodeResult>,
    /// True when every node SDP reported convergence.
    pub all_converged: bool,
}

/// Devetak-Winter key-rate evaluation.
#[derive(Debug, Clone)]
pub struct KeyRateResult {
    pub h_ae: f64,
    pub h_ab: f64,
    pub rate: f64,
    pub all_converged: bool,
    pub nodes: Vec<NodeResult>,
}

/// Per-node solver states kept across entropy bounds at nearby noise points
/// (bisection steps, sweep neighbors): the node programs differ only in a few
/// constraint right-hand sides, so the previous point's iterate is an
/// excellent start.
#[derive(Debug, Clone, Default)]
pub struct NodeWarmCache {
    states: std::collections::BTreeMap<(usize, usize), WarmStart>,
}

/// Quadrature lower bound
/// H(A|E) ≥ Σ_{i<m} w_i/(t_i ln 2) · (1 + V_i)
/// with V_i the certified minimum of the node relaxation; the endpoint node
/// t_m = 1 contributes exactly zero (its optimum is −1) and is skipped.
/// For multi-basis key sets the bound is the q-weighted average over key
/// inputs x*.
pub fn bff_entropy_bound(
    spec: &ProtocolSpec,
    tables: &CorrelationTables,
    m: usize,
    opts: &EntropyOptions,
    settings: &SolverSettings,
) -> Result<EntropyBound, KeyRateError> {
    bff_entropy_bound_warm(spec, tables, m, opts, settings, None)
}

/// As `bff_entropy_bound`, carrying per-node solver state in `cache` across
/// calls. Warm starts change the iterate path (hence the certified values in
/// the last digits), never the validity of the bound.
pub fn bff_entropy_bound_warm(
    spec: &ProtocolSpec,
    tables: &CorrelationTables,
    m: usize,
    opts: &EntropyOptions,
    settings: &SolverSettings,
    mut cache: Option<&mut NodeWarmCache>,
) -> Result<EntropyBound, KeyRateError> {
    let rule = gauss_radau(m)?;
    let ln2 = std::f64::consts::LN_2;
    let mut total = 0.0;
    let mut nodes = Vec::new();
    let mut all_converged = true;

    for &(key_x, _, q) in &spec.key_set {
        if key_x >= spec.x_angles.len() {
            return Err(KeyRateError::BadKeyInput(key_x));
        }
        let mut bound_x = 0.0;
        let mut chain: Option<WarmStart> = None;
        // Solve from the mild endpoint-adjacent node down to the stiff small
        // t, reusing the previous node's iterate; only the objective differs.
        for i in (0..m - 1).rev() {
            let t = rule.nodes[i];
            let w = rule.weights[i];
            let a = alpha(t)?;
            let mp = build_entropy_problem(spec, tables, key_x, t, a, opts)?;
            let sdp = realify(&mp, RealifyMode::Real)?;
            let cached = cache
                .as_ref()
                .and_then(|c| c.states.get(&(key_x, i)));
            let start = cached.or(chain.as_ref());
            let (sol, warm_next) = solve_warm(&sdp, settings, start)?;
            if let Some(c) = cache.as_deref_mut() {
                c.states.insert((key_x, i), warm_next.clone());
            }
            chain = Some(warm_next);
            let mut certified = certified_lower_bound(&sdp, &sol.dual_multipliers);
            if settings.polish_steps > 0 && certified < sol.primal_value {
                let (_, g) = polish_multipliers(
                    &sdp,
                    &sol.dual_multipliers,
                    sol.primal_value,
                    settings.polish_steps,
                );
                certified = certified.max(g);
            }
            if sol.status != SolveStatus::Optimal {
                all_converged = false;
            }
            bound_x += w / (t * ln2) * (1.0 + certified);
            nodes.push(NodeResult {
                t,
                weight: w,
                alpha: a,
                certified,
                primal: sol.primal_value,
                status: sol.status,
                iterations: sol.iterations,
            });
        }
        total += q * bound_x;
    }

    Ok(EntropyBound {
        value: total,
        nodes,
        all_converged,
    })
}

/// H(A|B) for key rounds at input pair (x, y) from the unbinned key table:
/// A is binary (binned), B keeps its full outcome alphabet.
pub fn conditional_entropy_ab(
    tables: &CorrelationTables,
    x: usize,
    y: usize,
) -> f64 {
    let t = &tables.p_ab_key;
    let na = t.left_outcomes.len();
    let nb = t.right_outcomes.len();
    let joint: Vec<f64> = (0..na)
        .flat_map(|a| (0..nb).map(move |b| (a, b)))
        .map(|(a, b)| t.p(a, b, x, y))
        .collect();
    let h_joint = shannon(joint.iter().copied());
    let h_b = shannon((0..nb).map(|b| t.right_marginal(b, x, y)));
    h_joint - h_b
}

/// r = H(A|E) − H(A|B).
pub fn devetak_winter(h_ae: f64, h_ab: f64) -> f64 {
    h_ae - h_ab
}

/// Certified key rate of a protocol at one noise point: the quadrature bound
/// on H(A|E) minus the q-weighted error-correction cost over the key set.
pub fn compute_rate(
    spec: &ProtocolSpec,
    noise: &NoiseParams,
    m: usize,
    opts: &EntropyOptions,
    settings: &SolverSettings,
) -> Result<KeyRateResult, KeyRateError> {
    compute_rate_warm(spec, noise, m, opts, settings, None)
}

/// As `compute_rate`, carrying per-node solver state across noise points.
pub fn compute_rate_warm(
    spec: &ProtocolSpec,
    noise: &NoiseParams,
    m: usize,
    opts: &EntropyOptions,
    settings: &SolverSettings,
    cache: Option<&mut NodeWarmCache>,
) -> Result<KeyRateResult, KeyRateError> {
    let tables = honest_tables(spec, noise)?;
    let bound = bff_entropy_bound_warm(spec, &tables, m, opts, settings, cache)?;
    let h_ab: f64 = spec
        .key_set
        .iter()
        .map(|&(x, y, q)| q * conditional_entropy_ab(&tables, x, y))
        .sum();
    Ok(KeyRateResult {
        h_ae: bound.value,
        h_ab,
        rate: devetak_winter(bound.value, h_ab),
        all_converged: bound.all_converged,
        nodes: bound.nodes,
    })
}

/// Ideal-statistics benchmark r(η_L) = 1 − h((1−η_L)/2) − (1−η_L): phase
/// errors from the long-path loss (binned) plus the unbinned error-correction
/// cost.
pub fn shor_preskill_rate(eta_l: f64) -> f64 {
    1.0 - binary_entropy((1.0 - eta_l) / 2.0) - (1.0 - eta_l)
}

/// Long-path efficiency below which single-round interception breaks any
/// protocol whose short path has efficiency η_A: η_L* = η_A/(3η_A − 1).
pub fn srq_threshold(eta_a: f64) -> f64 {
    eta_a / (3.0 * eta_a - 1.0)
}

/// Fiber length (km) realizing transmittance η at attenuation γ dB/km.
pub fn fiber_distance(eta: f64, gamma_db_per_km: f64) -> f64 {
    -10.0 / gamma_db_per_km * eta.log10()
}

/// Smallest efficiency in [lo, hi] with rate above `positivity`, by
/// bisection; `rate_of` must be monotone nondecreasing over the bracket.
pub fn critical_efficiency<E>(
    mut rate_of: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    tol: f64,
    positivity: f64,
) -> Result<f64, KeyRateError>
where
    KeyRateError: From<E>,
{
    let mut lo = lo;
    let mut hi = hi;
    let rate_lo = rate_of(lo)?;
    let rate_hi = rate_of(hi)?;
    if rate_lo > positivity || rate_hi <= positivity {
        return Err(KeyRateError::NoBracket {
            lo,
            hi,
            rate_lo,
            rate_hi,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if rate_of(mid)? > positivity {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{table1_spec, ProtocolName};
    use crate::tol;
    use approx::assert_abs_diff_eq;

    #[test]
    fn binary_entropy_values() {
        assert_abs_diff_eq!(binary_entropy(0.5), 1.0, epsilon = tol::ARITH);
        assert_abs_diff_eq!(binary_entropy(0.0), 0.0, epsilon = tol::ARITH);
        assert_abs_diff_eq!(binary_entropy(1.0), 0.0, epsilon = tol::ARITH);
        assert_abs_diff_eq!(binary_entropy(0.11), 0.499916, epsilon = 1e-5);
    }

    #[test]
    fn conditional_entropy_is_one_minus_eta() {
        let spec = table1_spec(ProtocolName::RBb84);
        for &eta_l in &[1.0, 0.8, 0.5] {
            let noise = NoiseParams {
                eta_s: 1.0,
                eta_l,
                visibility: 1.0,
            };
            let tables = honest_tables(&spec, &noise).unwrap();
            assert_abs_diff_eq!(
                conditional_entropy_ab(&tables, 0, 0),
                1.0 - eta_l,
                epsilon = tol::STRUCT
            );
        }
    }

    #[test]
    fn binned_conditional_entropy_analytic() {
        // With B's no-click merged into +1: p(b=+1) = (2−η)/2 and
        // H(A|B) = ((2−η)/2)·h(1/(2−η)).
        let spec = table1_spec(ProtocolName::RBb84);
        let eta_l = 0.7;
        let noise = NoiseParams {
            eta_s: 1.0,
            eta_l,
            visibility: 1.0,
        };
        let tables = honest_tables(&spec, &noise).unwrap();
        let binned = CorrelationTables {
            p_at: tables.p_at.clone(),
            p_ab_test: tables.p_ab_test.clone(),
            p_ab_key: tables
                .p_ab_key
                .bin_right(crate::qmodel::Outcome::Plus)
                .unwrap(),
        };
        let expect = (2.0 - eta_l) / 2.0 * binary_entropy(1.0 / (2.0 - eta_l));
        assert_abs_diff_eq!(
            conditional_entropy_ab(&binned, 0, 0),
            expect,
            epsilon = tol::STRUCT
        );
    }

    #[test]
    fn shor_preskill_benchmarks() {
        assert_abs_diff_eq!(shor_preskill_rate(1.0), 1.0, epsilon = tol::ARITH);
        assert_abs_diff_eq!(shor_preskill_rate(0.8), 0.331004, epsilon = 1e-5);
        // Zero crossing near 0.659.
        let root = critical_efficiency(
            |eta| Ok::<_, KeyRateError>(shor_preskill_rate(eta)),
            0.5,
            1.0,
            1e-6,
            0.0,
        )
        .unwrap();
        assert!((root - 0.659).abs() < 1e-3, "crossing at {}", root);
    }

    #[test]
    fn srq_threshold_values() {
        assert_abs_diff_eq!(srq_threshold(1.0), 0.5, epsilon = tol::ARITH);
        // Fixed point η = η/(3η−1) at η = 2/3.
        assert_abs_diff_eq!(srq_threshold(2.0 / 3.0), 2.0 / 3.0, epsilon = tol::ARITH);
    }

    #[test]
    fn fiber_distance_value() {
        assert_abs_diff_eq!(fiber_distance(0.63, 0.2), 10.033, epsilon = 1e-3);
        assert_abs_diff_eq!(fiber_distance(1.0, 0.2), 0.0, epsilon = tol::ARITH);
    }

    #[test]
    fn warm_cache_shortens_repeat_solves() {
        // Repeating the same point from a populated cache must converge in
        // far fewer iterations and reproduce the bound.
        let spec = table1_spec(ProtocolName::Chsh);
        let noise = NoiseParams {
            eta_s: 1.0,
            eta_l: 0.95,
            visibility: 1.0,
        };
        let opts = crate::npo::EntropyOptions {
            ab_mode: crate::npo::AbConstraintMode::QberOnly { x: 0, y: 0 },
            ..crate::npo::EntropyOptions::from_spec(&spec)
        };
        let settings = SolverSettings {
            tol: 1e-7,
            max_iter: 50_000,
            ..Default::default()
        };
        let mut cache = NodeWarmCache::default();
        let cold =
            compute_rate_warm(&spec, &noise, 3, &opts, &settings, Some(&mut cache)).unwrap();
        let warm =
            compute_rate_warm(&spec, &noise, 3, &opts, &settings, Some(&mut cache)).unwrap();
        let cold_iters: usize = cold.nodes.iter().map(|n| n.iterations).sum();
        let warm_iters: usize = warm.nodes.iter().map(|n| n.iterations).sum();
        assert!(
            warm_iters * 4 < cold_iters,
            "warm {} vs cold {}",
            warm_iters,
            cold_iters
        );
        assert_abs_diff_eq!(warm.h_ae, cold.h_ae, epsilon = 1e-5);
    }

    #[test]
    fn bisection_on_analytic_curve() {
        let root = critical_efficiency(
            |x| Ok::<_, KeyRateError>(x - 0.25),
            0.0,
            1.0,
            1e-9,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(root, 0.25, epsilon = 1e-8);
        assert!(critical_efficiency(
            |_| Ok::<_, KeyRateError>(1.0),
            0.0,
            1.0,
            1e-3,
            0.0
        )
        .is_err());
    }
}
