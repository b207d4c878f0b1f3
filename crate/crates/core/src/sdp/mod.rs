//! Semidefinite programming: problem data, a first-order operator-splitting
//! solver, rigorous lower-bound certification from approximate dual
//! multipliers, and a sparse interchange format.

mod certify;
mod eig;
mod problem;
mod sdpa;
mod solver;

pub use certify::{certified_lower_bound, polish_multipliers};
pub use problem::{Block, Constraint, MatEntry, SdpError, SdpProblem};
pub use sdpa::{export_sdpa, import_sdpa};
pub use solver::{
    block_matrix, solve, solve_warm, SdpSolution, SolveStatus, SolverSettings, WarmStart,
};
