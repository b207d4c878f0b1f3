//! Dense complex linear algebra at fixed small dimension for the honest
//! implementation: states, measurements, losses, and correlation tables.
//!
//! Conventions are fixed once and for all: qubit basis {|0⟩,|1⟩},
//! σ_z = diag(1,−1), tensor order Alice ⊗ Bob. Loss acts on POVMs and white
//! noise on the state; the two commute at the level of probabilities.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::tol;

pub type CMat = DMatrix<Complex64>;

#[derive(Debug, Error)]
pub enum QModelError {
    #[error("parameter {name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("observable has a degenerate spectrum")]
    DegenerateSpectrum,
    #[error("POVM already contains a no-click outcome")]
    AlreadyLossy,
    #[error("outcome {0:?} not present in POVM")]
    MissingOutcome(Outcome),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix fails {check} within tolerance (residual {residual:.3e})")]
    InvariantViolation { check: &'static str, residual: f64 },
}

/// Measurement outcome symbol. `NoClick` is the nondetection event ∅.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
    NoClick,
}

impl Outcome {
    /// ±1 value of a binary outcome; no-click carries no sign.
    pub fn sign(self) -> Option<f64> {
        match self {
            Outcome::Plus => Some(1.0),
            Outcome::Minus => Some(-1.0),
            Outcome::NoClick => None,
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// A quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self, QModelError> {
        let h = hermiticity_residual(&matrix);
        if h > tol::ARITH {
            return Err(QModelError::InvariantViolation {
                check: "hermiticity",
                residual: h,
            });
        }
        let tr = (matrix.trace().re - 1.0).abs();
        if tr > tol::ARITH {
            return Err(QModelError::InvariantViolation {
                check: "unit trace",
                residual: tr,
            });
        }
        let min_ev = min_eigenvalue(&matrix);
        if min_ev < tol::PSD_FLOOR {
            return Err(QModelError::InvariantViolation {
                check: "positivity",
                residual: -min_ev,
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// A POVM: ordered outcome labels with one PSD element each, summing to I.
#[derive(Debug, Clone)]
pub struct Povm {
    outcomes: Vec<Outcome>,
    elements: Vec<CMat>,
}

impl Povm {
    pub fn new(outcomes: Vec<Outcome>, elements: Vec<CMat>) -> Result<Self, QModelError> {
        assert_eq!(outcomes.len(), elements.len());
        let dim = elements[0].nrows();
        let mut sum = CMat::zeros(dim, dim);
        for e in &elements {
            if e.nrows() != dim {
                return Err(QModelError::DimensionMismatch {
                    expected: dim,
                    got: e.nrows(),
                });
            }
            let h = hermiticity_residual(e);
            if h > tol::STRUCT {
                return Err(QModelError::InvariantViolation {
                    check: "element hermiticity",
                    residual: h,
                });
            }
            let min_ev = min_eigenvalue(e);
            if min_ev < tol::PSD_FLOOR {
                return Err(QModelError::InvariantViolation {
                    check: "element positivity",
                    residual: -min_ev,
                });
            }
            sum += e;
        }
        sum -= identity(dim);
        let completeness = sum.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if completeness > tol::STRUCT {
            return Err(QModelError::InvariantViolation {
                check: "completeness",
                residual: completeness,
            });
        }
        Ok(Self { outcomes, elements })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn element(&self, outcome: Outcome) -> Option<&CMat> {
        self.outcomes
            .iter()
            .position(|&o| o == outcome)
            .map(|i| &self.elements[i])
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }
}

/// |φ+⟩⟨φ+| with |φ+⟩ = (|00⟩+|11⟩)/√2 in the computational product basis.
pub fn bell_state() -> DensityMatrix {
    let mut m = CMat::zeros(4, 4);
    for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(i, j)] = c(0.5);
    }
    DensityMatrix::new(m).expect("bell state is a valid density matrix")
}

/// ν·ρ + (1−ν)·I/4.
pub fn apply_white_noise(rho: &DensityMatrix, nu: f64) -> Result<DensityMatrix, QModelError> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(QModelError::OutOfRange {
            name: "visibility",
            value: nu,
        });
    }
    let dim = rho.dim();
    let m = rho.matrix() * c(nu) + identity(dim) * c((1.0 - nu) / dim as f64);
    DensityMatrix::new(m)
}

/// cos(θ)·σ_z + sin(θ)·σ_x; a unit-Bloch-vector qubit observable.
pub fn pauli_observable(theta: f64) -> CMat {
    let (s, co) = theta.sin_cos();
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = c(co);
    m[(1, 1)] = c(-co);
    m[(0, 1)] = c(s);
    m[(1, 0)] = c(s);
    m
}

/// Two-outcome projective POVM of a Hermitian observable, outcome order
/// (+ eigenspace, − eigenspace).
pub fn projective_povm(obs: &CMat) -> Result<Povm, QModelError> {
    let eig = obs.clone().symmetric_eigen();
    let n = obs.nrows();
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    // Two distinct eigenvalues: split at the midpoint of the spectrum.
    if spread < 1e-9 {
        return Err(QModelError::DegenerateSpectrum);
    }
    let mid = (vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        + vals.iter().cloned().fold(f64::INFINITY, f64::min))
        / 2.0;
    let mut p_plus = CMat::zeros(n, n);
    let mut p_minus = CMat::zeros(n, n);
    for (k, &lambda) in vals.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let proj = &v * v.adjoint();
        if lambda > mid {
            p_plus += proj;
        } else {
            p_minus += proj;
        }
    }
    Povm::new(vec![Outcome::Plus, Outcome::Minus], vec![p_plus, p_minus])
}

/// Detection-efficiency model: each element scaled by η plus a no-click
/// element (1−η)·I.
pub fn lossy_povm(p: &Povm, eta: f64) -> Result<Povm, QModelError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(QModelError::OutOfRange {
            name: "efficiency",
            value: eta,
        });
    }
    if p.outcomes().contains(&Outcome::NoClick) {
        return Err(QModelError::AlreadyLossy);
    }
    let dim = p.dim();
    let mut outcomes = p.outcomes().to_vec();
    let mut elements: Vec<CMat> = p.elements().iter().map(|e| e * c(eta)).collect();
    outcomes.push(Outcome::NoClick);
    elements.push(identity(dim) * c(1.0 - eta));
    Povm::new(outcomes, elements)
}

/// Merge the no-click element into `target`'s element.
pub fn bin_povm(p: &Povm, target: Outcome) -> Result<Povm, QModelError> {
    if target == Outcome::NoClick {
        return Err(QModelError::MissingOutcome(target));
    }
    let nc = p
        .outcomes()
        .iter()
        .position(|&o| o == Outcome::NoClick)
        .ok_or(QModelError::MissingOutcome(Outcome::NoClick))?;
    let ti = p
        .outcomes()
        .iter()
        .position(|&o| o == target)
        .ok_or(QModelError::MissingOutcome(target))?;
    let mut outcomes = Vec::new();
    let mut elements = Vec::new();
    for (i, (&o, e)) in p.outcomes().iter().zip(p.elements()).enumerate() {
        if i == nc {
            continue;
        }
        let mut e = e.clone();
        if i == ti {
            e += &p.elements()[nc];
        }
        outcomes.push(o);
        elements.push(e);
    }
    Povm::new(outcomes, elements)
}

/// Joint conditional distribution p(u,v|x,w) for one (left, right) device
/// pair, indexed by input pair then outcome pair.
#[derive(Debug, Clone)]
pub struct ProbTable {
    pub left_outcomes: Vec<Outcome>,
    pub right_outcomes: Vec<Outcome>,
    pub left_inputs: usize,
    pub right_inputs: usize,
    probs: Vec<f64>,
}

impl ProbTable {
    fn index(&self, u: usize, v: usize, x: usize, w: usize) -> usize {
        ((x * self.right_inputs + w) * self.left_outcomes.len() + u) * self.right_outcomes.len()
            + v
    }

    /// p(u,v|x,w) by outcome indices.
    pub fn p(&self, u: usize, v: usize, x: usize, w: usize) -> f64 {
        self.probs[self.index(u, v, x, w)]
    }

    /// p(u,v|x,w) by outcome labels.
    pub fn p_sym(&self, u: Outcome, v: Outcome, x: usize, w: usize) -> f64 {
        let ui = self.left_outcomes.iter().position(|&o| o == u).unwrap();
        let vi = self.right_outcomes.iter().position(|&o| o == v).unwrap();
        self.p(ui, vi, x, w)
    }

    /// Left marginal p(u|x, w).
    pub fn left_marginal(&self, u: usize, x: usize, w: usize) -> f64 {
        (0..self.right_outcomes.len()).map(|v| self.p(u, v, x, w)).sum()
    }

    /// Right marginal p(v|x, w).
    pub fn right_marginal(&self, v: usize, x: usize, w: usize) -> f64 {
        (0..self.left_outcomes.len()).map(|u| self.p(u, v, x, w)).sum()
    }

    /// ±1 correlator E(x,w); requires binary outcome alphabets on both sides.
    pub fn correlator(&self, x: usize, w: usize) -> Result<f64, QModelError> {
        let mut e = 0.0;
        for (u, &uo) in self.left_outcomes.iter().enumerate() {
            for (v, &vo) in self.right_outcomes.iter().enumerate() {
                let (su, sv) = match (uo.sign(), vo.sign()) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(QModelError::MissingOutcome(Outcome::NoClick));
                    }
                };
                e += su * sv * self.p(u, v, x, w);
            }
        }
        Ok(e)
    }

    /// Merge the right-hand no-click column into `target`'s column.
    pub fn bin_right(&self, target: Outcome) -> Result<ProbTable, QModelError> {
        let nc = self
            .right_outcomes
            .iter()
            .position(|&o| o == Outcome::NoClick)
            .ok_or(QModelError::MissingOutcome(Outcome::NoClick))?;
        let ti = self
            .right_outcomes
            .iter()
            .position(|&o| o == target)
            .ok_or(QModelError::MissingOutcome(target))?;
        let right_outcomes: Vec<Outcome> = self
            .right_outcomes
            .iter()
            .copied()
            .filter(|&o| o != Outcome::NoClick)
            .collect();
        let mut out = ProbTable {
            left_outcomes: self.left_outcomes.clone(),
            right_outcomes,
            left_inputs: self.left_inputs,
            right_inputs: self.right_inputs,
            probs: vec![],
        };
        let mut probs =
            vec![0.0; out.left_inputs * out.right_inputs * out.left_outcomes.len() * out.right_outcomes.len()];
        for x in 0..self.left_inputs {
            for w in 0..self.right_inputs {
                for u in 0..self.left_outcomes.len() {
                    let mut vi = 0;
                    for v in 0..self.right_outcomes.len() {
                        if v == nc {
                            continue;
                        }
                        let mut val = self.p(u, v, x, w);
                        if v == ti {
                            val += self.p(u, nc, x, w);
                        }
                        let idx = ((x * out.right_inputs + w) * out.left_outcomes.len() + u)
                            * out.right_outcomes.len()
                            + vi;
                        probs[idx] = val;
                        vi += 1;
                    }
                }
            }
        }
        out.probs = probs;
        Ok(out)
    }
}

/// p(u,v|x,w) = tr(ρ · (L_{u|x} ⊗ R_{v|w})).
pub fn correlation_table(
    rho: &DensityMatrix,
    left: &[Povm],
    right: &[Povm],
) -> Result<ProbTable, QModelError> {
    let dl = left[0].dim();
    let dr = right[0].dim();
    if rho.dim() != dl * dr {
        return Err(QModelError::DimensionMismatch {
            expected: dl * dr,
            got: rho.dim(),
        });
    }
    let left_outcomes = left[0].outcomes().to_vec();
    let right_outcomes = right[0].outcomes().to_vec();
    let mut probs = Vec::new();
    for lp in left {
        for rp in right {
            for le in lp.elements() {
                for re in rp.elements() {
                    let op = le.kronecker(re);
                    let val = (rho.matrix() * op).trace();
                    if val.im.abs() > tol::ARITH {
                        return Err(QModelError::InvariantViolation {
                            check: "real probability",
                            residual: val.im.abs(),
                        });
                    }
                    if val.re < -tol::STRUCT || val.re > 1.0 + tol::STRUCT {
                        return Err(QModelError::InvariantViolation {
                            check: "probability range",
                            residual: val.re,
                        });
                    }
                    probs.push(val.re);
                }
            }
        }
    }
    let table = ProbTable {
        left_outcomes,
        right_outcomes,
        left_inputs: left.len(),
        right_inputs: right.len(),
        probs,
    };
    for x in 0..table.left_inputs {
        for w in 0..table.right_inputs {
            let total: f64 = (0..table.left_outcomes.len())
                .map(|u| table.left_marginal(u, x, w))
                .sum();
            if (total - 1.0).abs() > tol::STRUCT {
                return Err(QModelError::InvariantViolation {
                    check: "normalization",
                    residual: (total - 1.0).abs(),
                });
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn sigma_z() -> CMat {
        pauli_observable(0.0)
    }

    fn sigma_x() -> CMat {
        pauli_observable(FRAC_PI_2)
    }

    #[test]
    fn bell_state_entries_and_purity() {
        let rho = bell_state();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i == 0 || i == 3) && (j == 0 || j == 3) {
                    0.5
                } else {
                    0.0
                };
                assert_abs_diff_eq!(rho.matrix()[(i, j)].re, expect, epsilon = tol::ARITH);
                assert_abs_diff_eq!(rho.matrix()[(i, j)].im, 0.0, epsilon = tol::ARITH);
            }
        }
        assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = tol::ARITH);
        let evs = hermitian_eigenvalues(rho.matrix());
        assert_abs_diff_eq!(evs[3], 1.0, epsilon = tol::STRUCT);
        assert!(evs[..3].iter().all(|e| e.abs() < tol::STRUCT));
    }

    #[test]
    fn white_noise_limits() {
        let rho = bell_state();
        let same = apply_white_noise(&rho, 1.0).unwrap();
        assert!((same.matrix() - rho.matrix()).iter().all(|z| z.norm() < tol::ARITH));
        let mixed = apply_white_noise(&rho, 0.0).unwrap();
        assert!((mixed.matrix() - identity(4) * Complex64::new(0.25, 0.0))
            .iter()
            .all(|z| z.norm() < tol::ARITH));
        assert!(apply_white_noise(&rho, 1.5).is_err());
    }

    #[test]
    fn white_noise_purity() {
        // Independent oracle: tr(ρ_noise²) by direct matrix arithmetic vs the
        // symbolic expansion ν²·tr(ρ²) + 2ν(1−ν)/4 + (1−ν)²/4 for pure ρ.
        let nu = 0.98;
        let rho = apply_white_noise(&bell_state(), nu).unwrap();
        let purity = (rho.matrix() * rho.matrix()).trace().re;
        let expect = nu * nu + 2.0 * nu * (1.0 - nu) / 4.0 + (1.0 - nu) * (1.0 - nu) / 4.0;
        assert_abs_diff_eq!(purity, expect, epsilon = tol::ARITH);
    }

    #[test]
    fn pauli_observables() {
        let z = sigma_z();
        assert_abs_diff_eq!(z[(0, 0)].re, 1.0, epsilon = tol::ARITH);
        assert_abs_diff_eq!(z[(1, 1)].re, -1.0, epsilon = tol::ARITH);
        let x = sigma_x();
        assert_abs_diff_eq!(x[(0, 1)].re, 1.0, epsilon = tol::ARITH);
        let diag = pauli_observable(FRAC_PI_4);
        let evs = hermitian_eigenvalues(&diag);
        assert_abs_diff_eq!(evs[0], -1.0, epsilon = tol::STRUCT);
        assert_abs_diff_eq!(evs[1], 1.0, epsilon = tol::STRUCT);
    }

    #[test]
    fn projective_povm_basics() {
        let p = projective_povm(&sigma_z()).unwrap();
        assert_abs_diff_eq!(p.elements()[0][(0, 0)].re, 1.0, epsilon = tol::STRUCT);
        assert_abs_diff_eq!(p.elements()[1][(1, 1)].re, 1.0, epsilon = tol::STRUCT);
        let px = projective_povm(&sigma_x()).unwrap();
        assert_abs_diff_eq!(px.elements()[0][(0, 1)].re, 0.5, epsilon = tol::STRUCT);
        assert!(projective_povm(&identity(2)).is_err());
    }

    #[test]
    fn projective_povm_diagonal_direction() {
        let obs = pauli_observable(FRAC_PI_4);
        let p = projective_povm(&obs).unwrap();
        let sum = &p.elements()[0] + &p.elements()[1];
        assert!((sum - identity(2)).iter().all(|z| z.norm() < tol::STRUCT));
        let prod = &p.elements()[0] * &p.elements()[1];
        assert!(prod.iter().all(|z| z.norm() < tol::STRUCT));
    }

    #[test]
    fn lossy_and_binned() {
        let p = projective_povm(&sigma_z()).unwrap();
        let lossy = lossy_povm(&p, 0.8).unwrap();
        assert_eq!(lossy.outcomes().len(), 3);
        let binned = bin_povm(&lossy, Outcome::Plus).unwrap();
        assert_eq!(binned.outcomes().len(), 2);
        // lossy + bin(∅→+) equals {η P₊ + (1−η) I, η P₋}.
        let expect_plus = &p.elements()[0] * Complex64::new(0.8, 0.0)
            + identity(2) * Complex64::new(0.2, 0.0);
        assert!((binned.element(Outcome::Plus).unwrap() - expect_plus)
            .iter()
            .all(|z| z.norm() < tol::ARITH));
        let zero_eff = lossy_povm(&p, 0.0).unwrap();
        assert!((zero_eff.element(Outcome::NoClick).unwrap() - identity(2))
            .iter()
            .all(|z| z.norm() < tol::ARITH));
        assert!(lossy_povm(&lossy, 0.5).is_err());
        assert!(bin_povm(&p, Outcome::Plus).is_err());
    }

    #[test]
    fn perfect_z_correlations() {
        let p = projective_povm(&sigma_z()).unwrap();
        let t = correlation_table(&bell_state(), &[p.clone()], &[p]).unwrap();
        assert_abs_diff_eq!(t.p(0, 0, 0, 0), 0.5, epsilon = tol::STRUCT);
        assert_abs_diff_eq!(t.p(1, 1, 0, 0), 0.5, epsilon = tol::STRUCT);
        assert_abs_diff_eq!(t.p(0, 1, 0, 0), 0.0, epsilon = tol::STRUCT);
        assert_abs_diff_eq!(t.p(1, 0, 0, 0), 0.0, epsilon = tol::STRUCT);
    }

    #[test]
    fn fully_mixed_uniform() {
        let rho = apply_white_noise(&bell_state(), 0.0).unwrap();
        let a = projective_povm(&sigma_z()).unwrap();
        let b = projective_povm(&sigma_x()).unwrap();
        let t = correlation_table(&rho, &[a], &[b]).unwrap();
        for u in 0..2 {
            for v in 0..2 {
                assert_abs_diff_eq!(t.p(u, v, 0, 0), 0.25, epsilon = tol::STRUCT);
            }
        }
    }

    #[test]
    fn chsh_tsirelson_value() {
        let alice = vec![
            projective_povm(&sigma_z()).unwrap(),
            projective_povm(&sigma_x()).unwrap(),
        ];
        let tester = vec![
            projective_povm(&pauli_observable(FRAC_PI_4)).unwrap(),
            projective_povm(&pauli_observable(-FRAC_PI_4)).unwrap(),
        ];
        let t = correlation_table(&bell_state(), &alice, &tester).unwrap();
        let s = t.correlator(0, 0).unwrap() + t.correlator(0, 1).unwrap()
            + t.correlator(1, 0).unwrap()
            - t.correlator(1, 1).unwrap();
        assert_abs_diff_eq!(s, 2.0 * 2.0_f64.sqrt(), epsilon = tol::STRUCT);
    }

    #[test]
    fn no_signaling_of_tables() {
        let rho = apply_white_noise(&bell_state(), 0.9).unwrap();
        let a0 = projective_povm(&sigma_z()).unwrap();
        let a1 = projective_povm(&sigma_x()).unwrap();
        let alice: Vec<Povm> = [a0, a1]
            .iter()
            .map(|p| lossy_povm(p, 0.95).unwrap())
            .collect();
        let bob: Vec<Povm> = [
            projective_povm(&pauli_observable(FRAC_PI_4)).unwrap(),
            projective_povm(&pauli_observable(-FRAC_PI_4)).unwrap(),
        ]
        .iter()
        .map(|p| lossy_povm(p, 0.7).unwrap())
        .collect();
        let t = correlation_table(&rho, &alice, &bob).unwrap();
        for x in 0..2 {
            for u in 0..3 {
                let m0 = t.left_marginal(u, x, 0);
                let m1 = t.left_marginal(u, x, 1);
                assert_abs_diff_eq!(m0, m1, epsilon = tol::STRUCT);
            }
        }
        for w in 0..2 {
            for v in 0..3 {
                let m0 = t.right_marginal(v, 0, w);
                let m1 = t.right_marginal(v, 1, w);
                assert_abs_diff_eq!(m0, m1, epsilon = tol::STRUCT);
            }
        }
    }

    #[test]
    fn binning_commutes_with_probabilities() {
        // Binning the POVM then computing correlations equals computing
        // correlations then merging probability columns.
        let rho = apply_white_noise(&bell_state(), 0.93).unwrap();
        let a = lossy_povm(&projective_povm(&sigma_z()).unwrap(), 0.9).unwrap();
        let a = bin_povm(&a, Outcome::Plus).unwrap();
        let b_raw = lossy_povm(&projective_povm(&sigma_x()).unwrap(), 0.6).unwrap();
        let b_binned = bin_povm(&b_raw, Outcome::Plus).unwrap();
        let t_unbinned = correlation_table(&rho, &[a.clone()], &[b_raw]).unwrap();
        let t_binned = correlation_table(&rho, &[a], &[b_binned]).unwrap();
        let merged = t_unbinned.bin_right(Outcome::Plus).unwrap();
        for u in 0..2 {
            for v in 0..2 {
                assert_abs_diff_eq!(
                    merged.p(u, v, 0, 0),
                    t_binned.p(u, v, 0, 0),
                    epsilon = tol::ARITH
                );
            }
        }
    }
}
