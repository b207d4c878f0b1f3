//! Noncommutative-polynomial relaxations: operator words and their
//! canonical forms, monomial bases, and assembly of the moment problems
//! whose semidefinite relaxations lower-bound the conditional entropy.

mod basis;
mod moment;
mod monomial;

pub use basis::{generate_basis, Scenario};
pub use moment::{
    build_bell_problem, build_entropy_problem, realify, AbConstraintMode, EntropyOptions,
    Equality, LinTerm, LocalizingBlock, MainEntry, MomentClass, MomentProblem, RealifyMode,
};
pub use monomial::{canonicalize, Family, Monomial, OperatorLabel, SubstitutionRules};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NpoError {
    #[error("unknown pattern slot or empty pattern: {0}")]
    BadPattern(String),
    #[error("moment class {0} has no representative in the main moment block; raise the relaxation level")]
    UnrepresentedMoment(String),
    #[error("routed scenario requires an A/T correlation table")]
    MissingTesterTable,
    #[error("constraint input y={0} not present in the correlation table")]
    MissingInput(usize),
    #[error("quadrature node t={0} outside (0,1]")]
    BadNode(f64),
}
