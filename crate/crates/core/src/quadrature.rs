//! Gauss-Radau quadrature on [0,1] with the right endpoint fixed at 1, and
//! the operator-norm coefficients α(t) used by the entropy-bound SDPs.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("a Radau rule needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("α(t) requires t in (0,1), got {0}")]
    AlphaOutOfRange(f64),
}

/// An m-point Gauss-Radau rule on [0,1] with t_m = 1. Exact for polynomials
/// of degree ≤ 2m−2.
#[derive(Debug, Clone)]
pub struct RadauRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadauRule {
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// Quadrature sum Σ w_i f(t_i).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

// Monic shifted-Legendre recurrence on [0,1]: p_{k+1} = (x − a_k) p_k − b_k p_{k−1}
// with a_k = 1/2, b_k = k² / (4(4k² − 1)), b_0 = 1 (total mass).
fn recurrence(k: usize) -> (f64, f64) {
    let a = 0.5;
    let b = if k == 0 {
        1.0
    } else {
        let kf = k as f64;
        kf * kf / (4.0 * (4.0 * kf * kf - 1.0))
    };
    (a, b)
}

fn monic_poly_at(n: usize, x: f64) -> f64 {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for k in 0..n {
        let (a, b) = recurrence(k);
        let p_next = (x - a) * p - if k == 0 { 0.0 } else { b * p_prev };
        p_prev = p;
        p = p_next;
    }
    p
}

/// Gauss-Radau rule with fixed endpoint t_m = 1, by symmetric tridiagonal
/// eigensolving of the end-modified Jacobi matrix.
pub fn gauss_radau(m: usize) -> Result<RadauRule, QuadratureError> {
    if m < 2 {
        return Err(QuadratureError::TooFewPoints(m));
    }
    let end = 1.0;
    // Jacobi matrix of the measure with the last diagonal entry modified so
    // that `end` becomes an eigenvalue (Golub's fixed-endpoint construction).
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let (a, _) = recurrence(k);
        jac[(k, k)] = a;
    }
    for k in 1..m {
        let (_, b) = recurrence(k);
        let off = b.sqrt();
        jac[(k, k - 1)] = off;
        jac[(k - 1, k)] = off;
    }
    let (_, b_last) = recurrence(m - 1);
    jac[(m - 1, m - 1)] =
        end - b_last * monic_poly_at(m - 2, end) / monic_poly_at(m - 1, end);

    let eig = jac.symmetric_eigen();
    let mut rule: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            // β_0 = 1 is the total mass of the uniform weight on [0,1].
            (node, v0 * v0)
        })
        .collect();
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut nodes: Vec<f64> = rule.iter().map(|r| r.0).collect();
    let weights: Vec<f64> = rule.iter().map(|r| r.1).collect();
    // The fixed endpoint is an exact eigenvalue up to rounding; pin it.
    let last = m - 1;
    debug_assert!((nodes[last] - end).abs() < 1e-9);
    nodes[last] = end;
    Ok(RadauRule { nodes, weights })
}

/// α(t) = (3/2)·max(1/t, 1/(1−t)); the operator-norm bound on the auxiliary
/// operators at an interior quadrature node.
pub fn alpha(t: f64) -> Result<f64, QuadratureError> {
    if t <= 0.0 || t >= 1.0 {
        return Err(QuadratureError::AlphaOutOfRange(t));
    }
    Ok(1.5 * (1.0 / t).max(1.0 / (1.0 - t)))
}
