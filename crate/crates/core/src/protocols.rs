//! The protocol family under study (routed CHSH/BB84 variants plus their
//! nonrouted comparators), honest correlation tables under detection loss and
//! white noise, and derived scalar statistics.
//!
//! Binning policy is hard-coded where it is not a knob: outcomes of the A and
//! T devices are always binned (∅ ↦ +1); B stays unbinned in key-generation
//! tables; `bin_b_testing` controls B's testing tables only.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::str::FromStr;
use thiserror::Error;

use crate::qmodel::{
    apply_white_noise, bell_state, bin_povm, correlation_table, lossy_povm, pauli_observable,
    projective_povm, Outcome, Povm, ProbTable, QModelError,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("unknown protocol name: {0}")]
    UnknownName(String),
    #[error("statistic requires binned (binary) outcomes on the selected side")]
    NotBinary,
    #[error("protocol has no testing device")]
    NoTester,
    #[error(transparent)]
    Model(#[from] QModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolName {
    #[serde(rename = "rCHSH")]
    RChsh,
    #[serde(rename = "rBB84")]
    RBb84,
    #[serde(rename = "rCHSH-BB84")]
    RChshBb84,
    #[serde(rename = "2-basis rBB84")]
    TwoBasisRBb84,
    #[serde(rename = "CHSH")]
    Chsh,
    #[serde(rename = "CHSH-BB84")]
    ChshBb84,
}

impl ProtocolName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolName::RChsh => "rCHSH",
            ProtocolName::RBb84 => "rBB84",
            ProtocolName::RChshBb84 => "rCHSH-BB84",
            ProtocolName::TwoBasisRBb84 => "2-basis rBB84",
            ProtocolName::Chsh => "CHSH",
            ProtocolName::ChshBb84 => "CHSH-BB84",
        }
    }
}

impl FromStr for ProtocolName {
    type Err = ProtocolError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rCHSH" => Ok(ProtocolName::RChsh),
            "rBB84" => Ok(ProtocolName::RBb84),
            "rCHSH-BB84" => Ok(ProtocolName::RChshBb84),
            "2-basis rBB84" => Ok(ProtocolName::TwoBasisRBb84),
            "CHSH" => Ok(ProtocolName::Chsh),
            "CHSH-BB84" => Ok(ProtocolName::ChshBb84),
            other => Err(ProtocolError::UnknownName(other.to_string())),
        }
    }
}

/// One row of the protocol family table: measurement angles, key inputs with
/// weights, the subset of B inputs constrained in the entropy SDP, binning
/// switch for B's testing statistics, and the relaxation level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub name: ProtocolName,
    pub x_angles: Vec<f64>,
    pub y_angles: Vec<f64>,
    /// Empty for nonrouted protocols.
    pub z_angles: Vec<f64>,
    /// Key-generation input pairs (x, y) with weights q(x,y) summing to 1.
    pub key_set: Vec<(usize, usize, f64)>,
    /// B inputs whose correlations enter the SDP constraint set.
    pub sdp_y_inputs: Vec<usize>,
    pub bin_b_testing: bool,
    /// Relaxation level: maximum word length of the plain monomial basis.
    pub level: usize,
    /// Extra monomial pattern tags, e.g. "ABZ".
    pub extra_monomials: Vec<String>,
}

impl ProtocolSpec {
    pub fn is_routed(&self) -> bool {
        !self.z_angles.is_empty()
    }
}

/// Detection efficiencies and visibility of the honest implementation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Shared efficiency of the A and T devices (short path).
    pub eta_s: f64,
    /// Efficiency of the B device (long path).
    pub eta_l: f64,
    pub visibility: f64,
}

/// Honest correlations: A/T testing table (both binned), A/B testing table
/// (B binned iff `bin_b_testing`) and A/B key-generation table (B unbinned).
#[derive(Debug, Clone)]
pub struct CorrelationTables {
    pub p_at: Option<ProbTable>,
    pub p_ab_test: ProbTable,
    pub p_ab_key: ProbTable,
}

fn full_level_extras() -> Vec<String> {
    ["ABZ", "AZB", "AABZ", "AAZB"].iter().map(|s| s.to_string()).collect()
}

/// The protocol-family row for `name`, with the relaxation level the curves
/// were computed at.
pub fn table1_spec(name: ProtocolName) -> ProtocolSpec {
    let x_angles = vec![0.0, FRAC_PI_2];
    let t_angles = vec![FRAC_PI_4, -FRAC_PI_4];
    match name {
        ProtocolName::RChsh => ProtocolSpec {
            name,
            x_angles,
            y_angles: vec![0.0, FRAC_PI_4, -FRAC_PI_4],
            z_angles: t_angles,
            key_set: vec![(0, 0, 1.0)],
            sdp_y_inputs: vec![1, 2],
            bin_b_testing: false,
            level: 2,
            extra_monomials: full_level_extras(),
        },
        ProtocolName::RBb84 => ProtocolSpec {
            name,
            x_angles,
            y_angles: vec![0.0, FRAC_PI_2],
            z_angles: t_angles,
            key_set: vec![(0, 0, 1.0)],
            sdp_y_inputs: vec![0, 1],
            bin_b_testing: false,
            level: 2,
            extra_monomials: full_level_extras(),
        },
        ProtocolName::RChshBb84 => ProtocolSpec {
            name,
            x_angles,
            y_angles: vec![0.0, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4],
            z_angles: t_angles,
            key_set: vec![(0, 0, 1.0)],
            sdp_y_inputs: vec![0, 1, 2, 3],
            bin_b_testing: false,
            level: 2,
            extra_monomials: vec!["ABZ".into(), "AZB".into()],
        },
        ProtocolName::TwoBasisRBb84 => ProtocolSpec {
            name,
            x_angles,
            y_angles: vec![0.0, FRAC_PI_2],
            z_angles: t_angles,
            key_set: vec![(0, 0, 0.5), (1, 1, 0.5)],
            sdp_y_inputs: vec![0, 1],
            bin_b_testing: false,
            level: 2,
            extra_monomials: full_level_extras(),
        },
        ProtocolName::Chsh => ProtocolSpec {
            name,
            x_angles,
            y_angles: vec![0.0, FRAC_PI_4, -FRAC_PI_4],
            z_angles: vec![],
            key_set: vec![(0, 0, 1.0)],
            sdp_y_inputs: vec![1, 2],
            bin_b_testing: false,
            level: 2,
            extra_monomials: full_level_extras(),
        },
        ProtocolName::ChshBb84 => ProtocolSpec {
            name,
            x_angles,
            y_angles: vec![0.0, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4],
            z_angles: vec![],
            key_set: vec![(0, 0, 1.0)],
            sdp_y_inputs: vec![0, 1, 2, 3],
            bin_b_testing: false,
            level: 2,
            extra_monomials: vec!["ABZ".into(), "AZB".into()],
        },
    }
}

fn binned_povms(angles: &[f64], eta: f64) -> Result<Vec<Povm>, ProtocolError> {
    angles
        .iter()
        .map(|&theta| {
            let p = projective_povm(&pauli_observable(theta))?;
            let lossy = lossy_povm(&p, eta)?;
            Ok(bin_povm(&lossy, Outcome::Plus)?)
        })
        .collect()
}

fn unbinned_povms(angles: &[f64], eta: f64) -> Result<Vec<Povm>, ProtocolError> {
    angles
        .iter()
        .map(|&theta| {
            let p = projective_povm(&pauli_observable(theta))?;
            Ok(lossy_povm(&p, eta)?)
        })
        .collect()
}

/// Honest correlation tables at the given noise point.
pub fn honest_tables(
    spec: &ProtocolSpec,
    noise: &NoiseParams,
) -> Result<CorrelationTables, ProtocolError> {
    let rho = apply_white_noise(&bell_state(), noise.visibility)?;
    let alice = binned_povms(&spec.x_angles, noise.eta_s)?;
    let bob_unbinned = unbinned_povms(&spec.y_angles, noise.eta_l)?;
    let p_ab_key = correlation_table(&rho, &alice, &bob_unbinned)?;
    let p_ab_test = if spec.bin_b_testing {
        p_ab_key.bin_right(Outcome::Plus)?
    } else {
        p_ab_key.clone()
    };
    let p_at = if spec.is_routed() {
        let tester = binned_povms(&spec.z_angles, noise.eta_s)?;
        Some(correlation_table(&rho, &alice, &tester)?)
    } else {
        None
    };
    Ok(CorrelationTables {
        p_at,
        p_ab_test,
        p_ab_key,
    })
}

/// Which device pair a statistic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tester,
    Bob,
}

/// CHSH combination S = E(x₀,w₀) + E(x₀,w₁) + E(x₁,w₀) − E(x₁,w₁) over
/// binned correlators of the selected side.
pub fn chsh_value(
    tables: &CorrelationTables,
    side: Side,
    x_pair: [usize; 2],
    w_pair: [usize; 2],
) -> Result<f64, ProtocolError> {
    let table = match side {
        Side::Tester => tables.p_at.as_ref().ok_or(ProtocolError::NoTester)?,
        Side::Bob => &tables.p_ab_test,
    };
    let e = |x: usize, w: usize| table.correlator(x, w).map_err(|_| ProtocolError::NotBinary);
    Ok(e(x_pair[0], w_pair[0])? + e(x_pair[0], w_pair[1])? + e(x_pair[1], w_pair[0])?
        - e(x_pair[1], w_pair[1])?)
}

/// Probability that Alice's and Bob's binned outcomes disagree at (x, y).
pub fn qber(tables: &CorrelationTables, x: usize, y: usize) -> Result<f64, ProtocolError> {
    let binned = if tables.p_ab_key.right_outcomes.contains(&Outcome::NoClick) {
        tables.p_ab_key.bin_right(Outcome::Plus)?
    } else {
        tables.p_ab_key.clone()
    };
    Ok(binned.p_sym(Outcome::Plus, Outcome::Minus, x, y)
        + binned.p_sym(Outcome::Minus, Outcome::Plus, x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;
    use approx::assert_abs_diff_eq;

    #[test]
    fn table1_rows() {
        let bb84 = table1_spec(ProtocolName::RBb84);
        assert_eq!(bb84.y_angles, vec![0.0, FRAC_PI_2]);
        assert_eq!(bb84.key_set, vec![(0, 0, 1.0)]);
        let chsh = table1_spec(ProtocolName::RChsh);
        assert_eq!(chsh.sdp_y_inputs, vec![1, 2]);
        let nonrouted = table1_spec(ProtocolName::Chsh);
        assert!(nonrouted.z_angles.is_empty());
        assert!(honest_tables(&nonrouted, &ideal()).unwrap().p_at.is_none());
        assert!("bogus".parse::<ProtocolName>().is_err());
        assert_eq!("2-basis rBB84".parse::<ProtocolName>().unwrap(), ProtocolName::TwoBasisRBb84);
    }

    fn ideal() -> NoiseParams {
        NoiseParams {
            eta_s: 1.0,
            eta_l: 1.0,
            visibility: 1.0,
        }
    }

    #[test]
    fn bb84_loss_splits_perfect_correlation() {
        let spec = table1_spec(ProtocolName::RBb84);
        let noise = NoiseParams {
            eta_s: 1.0,
            eta_l: 0.8,
            visibility: 1.0,
        };
        let t = honest_tables(&spec, &noise).unwrap();
        assert_abs_diff_eq!(
            t.p_ab_key.p_sym(Outcome::Plus, Outcome::NoClick, 0, 0),
            0.1,
            epsilon = tol::STRUCT
        );
        assert_abs_diff_eq!(
            t.p_ab_key.p_sym(Outcome::Plus, Outcome::Plus, 0, 0),
            0.4,
            epsilon = tol::STRUCT
        );
    }

    #[test]
    fn binned_zz_correlator_is_eta_l() {
        let spec = ProtocolSpec {
            bin_b_testing: true,
            ..table1_spec(ProtocolName::RBb84)
        };
        let noise = NoiseParams {
            eta_s: 1.0,
            eta_l: 0.8,
            visibility: 1.0,
        };
        let t = honest_tables(&spec, &noise).unwrap();
        let e_zz = t.p_ab_test.correlator(0, 0).unwrap();
        assert_abs_diff_eq!(e_zz, 0.8, epsilon = tol::STRUCT);
    }

    #[test]
    fn zero_visibility_kills_correlators() {
        let spec = ProtocolSpec {
            bin_b_testing: true,
            ..table1_spec(ProtocolName::RChsh)
        };
        let noise = NoiseParams {
            eta_s: 0.9,
            eta_l: 0.7,
            visibility: 0.0,
        };
        let t = honest_tables(&spec, &noise).unwrap();
        for z in 0..2 {
            for x in 0..2 {
                // Only the double-no-click branch correlates: (1−η)² with both
                // outcomes binned to +1.
                let residual = (1.0 - noise.eta_s) * (1.0 - noise.eta_s);
                assert_abs_diff_eq!(
                    t.p_at.as_ref().unwrap().correlator(x, z).unwrap(),
                    residual,
                    epsilon = tol::STRUCT
                );
            }
        }
    }

    #[test]
    fn tester_chsh_values() {
        let spec = table1_spec(ProtocolName::RBb84);
        let s = chsh_value(
            &honest_tables(&spec, &ideal()).unwrap(),
            Side::Tester,
            [0, 1],
            [0, 1],
        )
        .unwrap();
        assert_abs_diff_eq!(s, 2.0 * 2.0_f64.sqrt(), epsilon = tol::STRUCT);

        // Loss on both binned sides: S = 2√2·η² + 2(1−η)².
        for &eta in &[0.95, 0.8] {
            let noise = NoiseParams {
                eta_s: eta,
                eta_l: 1.0,
                visibility: 1.0,
            };
            let s = chsh_value(
                &honest_tables(&spec, &noise).unwrap(),
                Side::Tester,
                [0, 1],
                [0, 1],
            )
            .unwrap();
            let expect = 2.0 * 2.0_f64.sqrt() * eta * eta + 2.0 * (1.0 - eta) * (1.0 - eta);
            assert_abs_diff_eq!(s, expect, epsilon = tol::STRUCT);
        }
    }

    #[test]
    fn qber_values() {
        let spec = table1_spec(ProtocolName::RBb84);
        for &eta_l in &[1.0, 0.9, 0.6] {
            let noise = NoiseParams {
                eta_s: 1.0,
                eta_l,
                visibility: 1.0,
            };
            let t = honest_tables(&spec, &noise).unwrap();
            let q = qber(&t, 1, 1).unwrap();
            assert_abs_diff_eq!(q, (1.0 - eta_l) / 2.0, epsilon = tol::STRUCT);
        }
        let noisy = NoiseParams {
            eta_s: 1.0,
            eta_l: 1.0,
            visibility: 0.9,
        };
        let t = honest_tables(&spec, &noisy).unwrap();
        assert_abs_diff_eq!(qber(&t, 0, 0).unwrap(), 0.05, epsilon = tol::STRUCT);
    }

    #[test]
    fn noiseless_tables_match_analytic() {
        let spec = table1_spec(ProtocolName::RBb84);
        let t = honest_tables(&spec, &ideal()).unwrap();
        // σz ⊗ σz on |φ+⟩: perfectly correlated; no-click columns empty.
        assert_abs_diff_eq!(
            t.p_ab_key.p_sym(Outcome::Plus, Outcome::Plus, 0, 0),
            0.5,
            epsilon = tol::ARITH
        );
        assert_abs_diff_eq!(
            t.p_ab_key.p_sym(Outcome::Minus, Outcome::Plus, 0, 0),
            0.0,
            epsilon = tol::ARITH
        );
        assert_abs_diff_eq!(
            t.p_ab_key.p_sym(Outcome::Plus, Outcome::NoClick, 0, 0),
            0.0,
            epsilon = tol::ARITH
        );
        // A/T correlators at the Tsirelson angles: ±1/√2 each.
        let at = t.p_at.as_ref().unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert_abs_diff_eq!(at.correlator(0, 0).unwrap(), inv_sqrt2, epsilon = tol::ARITH);
        assert_abs_diff_eq!(at.correlator(1, 1).unwrap(), -inv_sqrt2, epsilon = tol::ARITH);
    }

    #[test]
    fn testing_binning_consistency() {
        let spec = ProtocolSpec {
            bin_b_testing: true,
            ..table1_spec(ProtocolName::RChsh)
        };
        let noise = NoiseParams {
            eta_s: 0.97,
            eta_l: 0.75,
            visibility: 0.98,
        };
        let t = honest_tables(&spec, &noise).unwrap();
        let rebinned = t.p_ab_key.bin_right(Outcome::Plus).unwrap();
        for x in 0..2 {
            for y in 0..spec.y_angles.len() {
                for u in 0..2 {
                    for v in 0..2 {
                        assert_eq!(rebinned.p(u, v, x, y), t.p_ab_test.p(u, v, x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn tester_swap_symmetry() {
        // σx ⊗ σx conjugation leaves |φ+⟩ invariant and, at T angles
        // {π/4, −π/4} and ν = 1, swaps T's two settings while negating T's
        // outcomes and A's σz outcome: p(a,c|0,z) = p(ā,c̄|0,1−z) and
        // p(a,c|1,z) = p(a,c̄|1,1−z).
        let spec = table1_spec(ProtocolName::RBb84);
        let t = honest_tables(&spec, &ideal()).unwrap();
        let at = t.p_at.as_ref().unwrap();
        let flip = |o: Outcome| match o {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
            Outcome::NoClick => Outcome::NoClick,
        };
        for z in 0..2 {
            for &a in &[Outcome::Plus, Outcome::Minus] {
                for &c in &[Outcome::Plus, Outcome::Minus] {
                    assert_abs_diff_eq!(
                        at.p_sym(a, c, 0, z),
                        at.p_sym(flip(a), flip(c), 0, 1 - z),
                        epsilon = tol::ARITH
                    );
                    assert_abs_diff_eq!(
                        at.p_sym(a, c, 1, z),
                        at.p_sym(a, flip(c), 1, 1 - z),
                        epsilon = tol::ARITH
                    );
                }
            }
        }
    }
}
