//! Rigorous lower bounds from approximate dual multipliers.
//!
//! For any μ the matrix W = C − 𝒜ᵀμ satisfies, for every feasible X,
//! ⟨C,X⟩ = bᵀμ + ⟨W,X⟩ ≥ bᵀμ + Σ_b min(0, λ_min(W_b))·tr(X_b).
//! With the a-priori trace bounds tr(X_b) ≤ τ_b that hold for moment
//! matrices of actual operator models, the right-hand side is a certified
//! lower bound on the modeled quantity even when μ is only approximately
//! dual feasible. No property of the solver is assumed.

use nalgebra::DMatrix;

use super::problem::SdpProblem;

fn assemble_w(problem: &SdpProblem, multipliers: &[f64]) -> Vec<DMatrix<f64>> {
    let mut mats: Vec<DMatrix<f64>> = problem
        .blocks
        .iter()
        .map(|b| DMatrix::zeros(b.size, b.size))
        .collect();
    let mut put = |block: usize, row: usize, col: usize, v: f64| {
        mats[block][(row, col)] += v;
        if row != col {
            mats[block][(col, row)] += v;
        }
    };
    for e in &problem.objective {
        put(e.block, e.row, e.col, e.value);
    }
    for (k, con) in problem.constraints.iter().enumerate() {
        let mu = multipliers[k];
        if mu != 0.0 {
            for e in &con.entries {
                put(e.block, e.row, e.col, -mu * e.value);
            }
        }
    }
    mats
}

/// bᵀμ + Σ_b min(0, λ_min(W_b))·τ_b with W = C − Σ_k μ_k A_k.
/// Returns −∞ if a block with an unknown (infinite) trace bound has a
/// negative eigenvalue.
pub fn certified_lower_bound(problem: &SdpProblem, multipliers: &[f64]) -> f64 {
    assert_eq!(multipliers.len(), problem.constraints.len());
    let mats = assemble_w(problem, multipliers);
    let mut bound: f64 = problem
        .constraints
        .iter()
        .zip(multipliers)
        .map(|(c, &mu)| c.rhs * mu)
        .sum();
    for (b, w) in problem.blocks.iter().zip(mats) {
        let lambda_min = if b.diagonal {
            (0..b.size).map(|i| w[(i, i)]).fold(f64::INFINITY, f64::min)
        } else {
            crate::sdp::eig::min_eigenvalue(&w)
        };
        if lambda_min < 0.0 {
            bound += lambda_min * b.trace_bound;
        }
    }
    bound
}

/// Improve approximate multipliers by subgradient ascent on the concave
/// certificate value g(μ) = bᵀμ + Σ_b τ_b·min(0, λ_min(W_b)). A Polyak step
/// toward `target` (any upper bound on the dual optimum, e.g. the primal
/// objective value) is used; the best iterate is returned together with its
/// certificate. Every iterate yields a valid bound, so this can only help.
pub fn polish_multipliers(
    problem: &SdpProblem,
    multipliers: &[f64],
    target: f64,
    max_steps: usize,
) -> (Vec<f64>, f64) {
    assert_eq!(multipliers.len(), problem.constraints.len());
    let m = multipliers.len();
    let mut mu = multipliers.to_vec();
    let mut best_mu = mu.clone();
    let mut best_g = f64::NEG_INFINITY;

    for _ in 0..max_steps {
        let mats = assemble_w(problem, &mu);
        let mut g: f64 = problem
            .constraints
            .iter()
            .zip(&mu)
            .map(|(c, &v)| c.rhs * v)
            .sum();
        // Min eigenpair per active block; `active` holds τ_b · v_b.
        let mut active: Vec<(usize, f64, Vec<f64>)> = Vec::new();
        for (bi, (b, w)) in problem.blocks.iter().zip(&mats).enumerate() {
            let (lambda, v): (f64, Vec<f64>) = if b.diagonal {
                let (i, l) = (0..b.size)
                    .map(|i| (i, w[(i, i)]))
                    .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
                let mut e = vec![0.0; b.size];
                e[i] = 1.0;
                (l, e)
            } else {
                let (vals, vecs) = crate::sdp::eig::sym_eigen(w);
                let i = vals
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap()
                    .0;
                (vals[i], vecs.column(i).iter().copied().collect())
            };
            if lambda < 0.0 {
                g += lambda * b.trace_bound;
                active.push((bi, b.trace_bound, v));
            }
        }
        if g > best_g {
            best_g = g;
            best_mu.copy_from_slice(&mu);
        }
        if g >= target {
            break;
        }

        // d_k = b_k − Σ_active τ_b ⟨A_k, v vᵀ⟩ (off-diagonal entries of A_k
        // stand for symmetric pairs, hence the factor 2).
        let mut d: Vec<f64> = problem.constraints.iter().map(|c| c.rhs).collect();
        for (k, con) in problem.constraints.iter().enumerate() {
            for e in &con.entries {
                if let Some((_, tau, v)) = active.iter().find(|(bi, _, _)| *bi == e.block) {
                    let outer = v[e.row] * v[e.col] * if e.row == e.col { 1.0 } else { 2.0 };
                    d[k] -= tau * e.value * outer;
                }
            }
        }
        let norm2: f64 = d.iter().map(|x| x * x).sum();
        if norm2 <= f64::EPSILON {
            break;
        }
        let step = (target - g) / norm2;
        for k in 0..m {
            mu[k] += step * d[k];
        }
    }
    (best_mu, best_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::problem::{Block, Constraint, MatEntry};
    use crate::sdp::solver::{solve, SolverSettings};

    fn toy() -> SdpProblem {
        SdpProblem {
            blocks: vec![Block {
                size: 2,
                diagonal: false,
                trace_bound: 4.0,
            }],
            constraints: vec![
                Constraint {
                    // Pins X_01 = 1 (off-diagonal counted twice).
                    entries: vec![MatEntry {
                        block: 0,
                        row: 0,
                        col: 1,
                        value: 0.5,
                    }],
                    rhs: 1.0,
                },
                Constraint {
                    entries: vec![
                        MatEntry {
                            block: 0,
                            row: 0,
                            col: 0,
                            value: 1.0,
                        },
                        MatEntry {
                            block: 0,
                            row: 1,
                            col: 1,
                            value: -1.0,
                        },
                    ],
                    rhs: 0.0,
                },
            ],
            objective: vec![MatEntry {
                block: 0,
                row: 0,
                col: 0,
                value: 1.0,
            }],
        }
    }

    #[test]
    fn certificate_lower_bounds_optimum() {
        let p = toy();
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        let bound = certified_lower_bound(&p, &sol.dual_multipliers);
        // Optimum is 1; the certificate must stay below it but close.
        assert!(bound <= 1.0 + 1e-9, "bound {} exceeds optimum", bound);
        assert!(bound > 0.99, "bound {} too loose", bound);
    }

    #[test]
    fn zero_multipliers_give_trivial_bound() {
        let p = toy();
        let bound = certified_lower_bound(&p, &[0.0, 0.0]);
        // W = C has λ_min = 0, so the bound is exactly 0.
        assert!((bound - 0.0).abs() < 1e-12);
    }

    #[test]
    fn polishing_recovers_from_perturbation() {
        let p = toy();
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        let mut mu = sol.dual_multipliers.clone();
        mu[0] -= 0.2;
        mu[1] += 0.1;
        let degraded = certified_lower_bound(&p, &mu);
        let (polished, g) = polish_multipliers(&p, &mu, 1.0, 200);
        let bound = certified_lower_bound(&p, &polished);
        assert!((bound - g).abs() < 1e-12);
        assert!(bound > degraded + 0.05, "no progress: {degraded} -> {bound}");
        assert!(bound <= 1.0 + 1e-9);
        assert!(bound > 0.995, "bound {bound} too loose");
    }

    #[test]
    fn perturbed_multipliers_stay_valid() {
        let p = toy();
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        let mut mu = sol.dual_multipliers.clone();
        mu[0] += 0.05;
        mu[1] -= 0.03;
        let bound = certified_lower_bound(&p, &mu);
        assert!(bound <= 1.0 + 1e-9);
    }
}
