//! Primal equality-form semidefinite programs:
//! minimize ⟨C,X⟩ subject to ⟨A_k,X⟩ = b_k and X ⪰ 0 block-diagonal.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("entry ({row},{col}) out of range for block {block} of size {size}")]
    EntryOutOfRange {
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },
    #[error("entry references missing block {0}")]
    MissingBlock(usize),
    #[error("lower-triangle entry ({row},{col}); store the upper triangle only")]
    LowerTriangle { row: usize, col: usize },
    #[error("non-finite value in problem data: {0}")]
    NonFinite(f64),
    #[error("duplicate entry at block {block} position ({row},{col})")]
    DuplicateEntry {
        block: usize,
        row: usize,
        col: usize,
    },
    #[error("solver diverged (non-finite iterate at iteration {0})")]
    Diverged(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One PSD block of the variable. `trace_bound` is an a-priori bound on
/// tr(X_b) valid for every moment matrix of an actual quantum model; it is
/// consumed by the certification step, not by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub size: usize,
    /// Diagonal blocks are constrained to be diagonal (entries off the
    /// diagonal are identically zero), matching negative sizes in the
    /// interchange format.
    pub diagonal: bool,
    pub trace_bound: f64,
}

/// A single entry of a symmetric coefficient matrix, upper triangle
/// (row ≤ col). `value` is the matrix entry, so an off-diagonal entry
/// contributes 2·value·X_rc to the inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// ⟨A_k, X⟩ = rhs.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub entries: Vec<MatEntry>,
    pub rhs: f64,
}

/// Minimization problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<Block>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<MatEntry>,
}

impl SdpProblem {
    /// Structural validation: entry indexing, triangle convention, finiteness,
    /// and per-matrix entry uniqueness.
    pub fn validate(&self) -> Result<(), SdpError> {
        let check = |entries: &[MatEntry]| -> Result<(), SdpError> {
            let mut seen = std::collections::BTreeSet::new();
            for e in entries {
                let b = self
                    .blocks
                    .get(e.block)
                    .ok_or(SdpError::MissingBlock(e.block))?;
                if e.row >= b.size || e.col >= b.size {
                    return Err(SdpError::EntryOutOfRange {
                        block: e.block,
                        row: e.row,
                        col: e.col,
                        size: b.size,
                    });
                }
                if e.row > e.col {
                    return Err(SdpError::LowerTriangle {
                        row: e.row,
                        col: e.col,
                    });
                }
                if b.diagonal && e.row != e.col {
                    return Err(SdpError::EntryOutOfRange {
                        block: e.block,
                        row: e.row,
                        col: e.col,
                        size: b.size,
                    });
                }
                if !e.value.is_finite() {
                    return Err(SdpError::NonFinite(e.value));
                }
                if !seen.insert((e.block, e.row, e.col)) {
                    return Err(SdpError::DuplicateEntry {
                        block: e.block,
                        row: e.row,
                        col: e.col,
                    });
                }
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            check(&c.entries)?;
            if !c.rhs.is_finite() {
                return Err(SdpError::NonFinite(c.rhs));
            }
        }
        Ok(())
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }
}
