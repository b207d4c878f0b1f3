//! Centralized numeric tolerances.
//!
//! Two tiers: `ARITH` for quantities produced by a handful of exact
//! floating-point operations, `STRUCT` for structural checks that go through
//! an eigendecomposition or accumulate over a table.

/// Tolerance for directly computed arithmetic identities.
pub const ARITH: f64 = 1e-12;

/// Tolerance for structural checks (positivity, completeness, normalization).
pub const STRUCT: f64 = 1e-10;

/// Smallest admissible eigenvalue for a matrix declared positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-10;
