//! Operator scenarios and monomial-basis generation for the relaxation
//! hierarchy: all canonical words up to a given length, optionally extended
//! with structured long words matching patterns such as "ABZ" or "AAZB".

use std::collections::BTreeSet;

use super::monomial::{canonicalize, Family, Monomial, OperatorLabel, SubstitutionRules};
use super::NpoError;

/// Which operators exist. Projective families keep `kept` of their outcomes
/// per setting (the last outcome is eliminated via completeness); Z/Z† carry
/// one label per key symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub a_settings: usize,
    pub a_kept: usize,
    /// Actual y labels included in the relaxation (not necessarily 0..n).
    pub b_settings: Vec<usize>,
    pub b_kept: usize,
    pub t_settings: usize,
    pub t_kept: usize,
    pub z_symbols: usize,
}

impl Scenario {
    /// All single-operator letters, in canonical order.
    pub fn letters(&self) -> Vec<OperatorLabel> {
        let mut out = Vec::new();
        for x in 0..self.a_settings {
            for a in 0..self.a_kept {
                out.push(OperatorLabel::new(Family::A, x as u8, a as u8));
            }
        }
        for &y in &self.b_settings {
            for b in 0..self.b_kept {
                out.push(OperatorLabel::new(Family::B, y as u8, b as u8));
            }
        }
        for z in 0..self.t_settings {
            for c in 0..self.t_kept {
                out.push(OperatorLabel::new(Family::T, z as u8, c as u8));
            }
        }
        for a in 0..self.z_symbols {
            out.push(OperatorLabel::new(Family::Z, 0, a as u8));
        }
        for a in 0..self.z_symbols {
            out.push(OperatorLabel::new(Family::Zdag, 0, a as u8));
        }
        out
    }

    fn letters_for_slot(&self, slot: char) -> Result<Vec<OperatorLabel>, NpoError> {
        let all = self.letters();
        let keep = |fams: &[Family]| {
            all.iter()
                .copied()
                .filter(|l| fams.contains(&l.family))
                .collect::<Vec<_>>()
        };
        match slot {
            'A' => Ok(keep(&[Family::A])),
            'B' => Ok(keep(&[Family::B, Family::T])),
            'Z' => Ok(keep(&[Family::Z, Family::Zdag])),
            other => Err(NpoError::BadPattern(other.to_string())),
        }
    }
}

/// Canonical words of length ≤ `level` plus all canonical instantiations of
/// the extra patterns, deduplicated and sorted (by length, then lexically).
/// Pattern slots: 'A' ranges over A letters, 'B' over B and T letters,
/// 'Z' over Z and Z† letters.
pub fn generate_basis(
    scenario: &Scenario,
    level: usize,
    extras: &[String],
) -> Result<Vec<Monomial>, NpoError> {
    let rules = SubstitutionRules;
    let letters = scenario.letters();
    let mut seen: BTreeSet<Monomial> = BTreeSet::new();
    seen.insert(Monomial::identity());

    let mut frontier: Vec<Monomial> = vec![Monomial::identity()];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                let mut ext: Vec<OperatorLabel> = w.labels().to_vec();
                ext.push(l);
                if let Some(c) = canonicalize(&ext, &rules) {
                    if seen.insert(c.clone()) {
                        next.push(c);
                    }
                }
            }
        }
        frontier = next;
    }

    for pat in extras {
        if pat.is_empty() {
            return Err(NpoError::BadPattern(pat.clone()));
        }
        let slots: Vec<Vec<OperatorLabel>> = pat
            .chars()
            .map(|c| scenario.letters_for_slot(c))
            .collect::<Result<_, _>>()?;
        let mut idx = vec![0usize; slots.len()];
        loop {
            let word: Vec<OperatorLabel> =
                idx.iter().zip(&slots).map(|(&i, s)| s[i]).collect();
            if let Some(c) = canonicalize(&word, &rules) {
                seen.insert(c);
            }
            // odometer increment
            let mut k = slots.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < slots[k].len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
    }

    Ok(seen.into_iter().collect())
}
