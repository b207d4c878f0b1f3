//! Words over the operator families {A, B, T, Z, Z†} and their canonical
//! form under the substitution rules of the entropy program: projectivity
//! and orthogonality within a measurement, commutation of Alice's operators
//! with everything, of Bob's with the auxiliary operators, and *no*
//! commutation between the short-path tester T and the auxiliary operators
//! (T acts jointly on Bob's and the adversary's systems).

use std::cmp::Ordering;
use std::fmt;

/// Operator family, in canonical sorting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    A,
    B,
    T,
    Z,
    Zdag,
}

impl Family {
    pub fn is_projective(self) -> bool {
        matches!(self, Family::A | Family::B | Family::T)
    }

    pub fn adjoint(self) -> Family {
        match self {
            Family::Z => Family::Zdag,
            Family::Zdag => Family::Z,
            f => f,
        }
    }
}

/// A single operator: A_{a|x}, B_{b|y}, T_{c|z}, Z_a, or Z_a†.
/// For Z/Z† the `setting` is 0 and `outcome` names the key symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperatorLabel {
    pub family: Family,
    pub setting: u8,
    pub outcome: u8,
}

impl OperatorLabel {
    pub fn new(family: Family, setting: u8, outcome: u8) -> Self {
        Self {
            family,
            setting,
            outcome,
        }
    }

    pub fn adjoint(self) -> Self {
        Self {
            family: self.family.adjoint(),
            ..self
        }
    }
}

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::A => write!(f, "A({}|{})", self.outcome, self.setting),
            Family::B => write!(f, "B({}|{})", self.outcome, self.setting),
            Family::T => write!(f, "T({}|{})", self.outcome, self.setting),
            Family::Z => write!(f, "Z({})", self.outcome),
            Family::Zdag => write!(f, "Zdag({})", self.outcome),
        }
    }
}

/// The fixed substitution-rule set. Families A, B, T are projective
/// (orthogonality and idempotence per setting); the commuting family pairs
/// are (A,B), (A,T), (A,Z), (A,Z†), (B,Z), (B,Z†); (B,T), (T,Z), (T,Z†)
/// are explicitly noncommuting, as are any two operators within one family
/// at different settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct SubstitutionRules;

impl SubstitutionRules {
    pub fn commutes(&self, f: Family, g: Family) -> bool {
        use Family::*;
        matches!(
            (f.min(g), f.max(g)),
            (A, B) | (A, T) | (A, Z) | (A, Zdag) | (B, Z) | (B, Zdag)
        ) && f != g
    }
}

/// A canonical word; the empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    word: Vec<OperatorLabel>,
}

impl Monomial {
    pub fn identity() -> Self {
        Self { word: vec![] }
    }

    pub fn labels(&self) -> &[OperatorLabel] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Number of Z or Z† letters in the word.
    pub fn z_degree(&self) -> usize {
        self.word
            .iter()
            .filter(|l| matches!(l.family, Family::Z | Family::Zdag))
            .count()
    }

    /// Canonical form of the adjoint word.
    pub fn adjoint(&self, rules: &SubstitutionRules) -> Monomial {
        let rev: Vec<OperatorLabel> = self.word.iter().rev().map(|l| l.adjoint()).collect();
        canonicalize(&rev, rules).expect("adjoint of a nonzero canonical word is nonzero")
    }

    /// Canonical product self · other.
    pub fn mul(&self, other: &Monomial, rules: &SubstitutionRules) -> Option<Monomial> {
        let mut w = self.word.clone();
        w.extend_from_slice(&other.word);
        canonicalize(&w, rules)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.word
            .len()
            .cmp(&other.word.len())
            .then_with(|| self.word.cmp(&other.word))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.word.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Reduce a word to canonical form; `None` means orthogonality annihilated
/// it. Projective reductions collapse adjacent same-setting letters and
/// commuting adjacent pairs are sorted by the fixed label order. Relative
/// order of noncommuting letters is never changed.
pub fn canonicalize(word: &[OperatorLabel], rules: &SubstitutionRules) -> Option<Monomial> {
    let mut w = word.to_vec();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < w.len() {
            let (p, q) = (w[i], w[i + 1]);
            if p.family.is_projective() && p.family == q.family && p.setting == q.setting {
                if p.outcome == q.outcome {
                    w.remove(i + 1);
                    changed = true;
                    i = i.saturating_sub(1);
                } else {
                    return None;
                }
            } else {
                i += 1;
            }
        }
        for i in 0..w.len().saturating_sub(1) {
            let (p, q) = (w[i], w[i + 1]);
            if rules.commutes(p.family, q.family) && q < p {
                w.swap(i, i + 1);
                changed = true;
            }
        }
        if !changed {
            return Some(Monomial { word: w });
        }
    }
}
