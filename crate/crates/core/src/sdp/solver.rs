//! First-order operator-splitting (ADMM) solver for block-diagonal SDPs in
//! primal equality form. The affine step projects onto {x : 𝒜x = b}; the cone
//! step is a blockwise eigenvalue clamp. Iterates are fully deterministic.
//!
//! Moment-matrix SDPs state most of their constraints as entry ties ("these
//! two matrix entries carry the same moment") and zero pins. A presolve
//! detects 1-sparse and homogeneous 2-sparse rows, collapses the tied
//! coordinates into shared variables by union-find substitution, and projects
//! exactly through a once-factored Cholesky of the small Gram matrix of the
//! remaining dense rows. Ties then hold exactly at every iterate instead of
//! being chased by the splitting. Problems with too many dense rows fall back
//! to a warm-started conjugate-gradient projection.
//!
//! The scaled dual variable converges so that C − 𝒜ᵀμ ⪰ 0 approximately at
//! the returned multipliers μ; exact certification from μ alone lives in
//! `certify`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::problem::{MatEntry, SdpError, SdpProblem};

#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Relative tolerance on primal/dual residuals and gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial penalty parameter.
    pub rho: f64,
    /// Over-relaxation factor in (0, 2).
    pub over_relax: f64,
    /// Residual-balancing adjustment of ρ.
    pub adaptive_rho: bool,
    /// Convergence checks (and ρ updates) happen every this many iterations.
    pub check_every: usize,
    /// Subgradient-ascent steps spent tightening the certificate from the
    /// final multipliers (see `polish_multipliers`); 0 disables.
    pub polish_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200_000,
            rho: 1.0,
            over_relax: 1.6,
            adaptive_rho: true,
            check_every: 25,
            polish_steps: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// One multiplier per constraint of the original (unscaled) problem.
    pub dual_multipliers: Vec<f64>,
    /// PSD iterate in scaled-vector form (internal layout; see `Geometry`).
    pub primal_svec: Vec<f64>,
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Beyond this many dense (non-tie, non-pin) rows the Gram factorization is
/// not worth its memory; the projection falls back to conjugate gradients.
const MAX_DENSE_ROWS: usize = 4000;

/// Layout of the stacked svec coordinates: PSD blocks store the upper
/// triangle row-major with off-diagonal entries scaled by √2 (making the
/// Frobenius inner product the plain dot product); diagonal blocks store
/// just their diagonal.
pub(crate) struct Geometry {
    pub offsets: Vec<usize>,
    pub sizes: Vec<usize>,
    pub diagonal: Vec<bool>,
    pub dim: usize,
}

impl Geometry {
    pub fn new(problem: &SdpProblem) -> Self {
        let mut offsets = Vec::with_capacity(problem.blocks.len());
        let mut sizes = Vec::with_capacity(problem.blocks.len());
        let mut diagonal = Vec::with_capacity(problem.blocks.len());
        let mut dim = 0;
        for b in &problem.blocks {
            offsets.push(dim);
            sizes.push(b.size);
            diagonal.push(b.diagonal);
            dim += if b.diagonal {
                b.size
            } else {
                b.size * (b.size + 1) / 2
            };
        }
        Self {
            offsets,
            sizes,
            diagonal,
            dim,
        }
    }

    fn index(&self, block: usize, row: usize, col: usize) -> usize {
        let n = self.sizes[block];
        if self.diagonal[block] {
            debug_assert_eq!(row, col);
            self.offsets[block] + row
        } else {
            self.offsets[block] + row * (2 * n - row + 1) / 2 + (col - row)
        }
    }

    /// Inner-product coefficient of a symmetric-matrix entry in svec
    /// coordinates.
    fn coeff(&self, e: &MatEntry) -> (usize, f64) {
        let idx = self.index(e.block, e.row, e.col);
        let c = if e.row == e.col {
            e.value
        } else {
            SQRT2 * e.value
        };
        (idx, c)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Rows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Rows {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (k, row) in self.rows.iter().enumerate() {
            out[k] = row.iter().map(|&(i, c)| c * v[i]).sum();
        }
    }

    fn apply_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, row) in self.rows.iter().enumerate() {
            let yk = y[k];
            if yk != 0.0 {
                for &(i, c) in row {
                    out[i] += c * yk;
                }
            }
        }
    }
}

/// Conjugate gradient on (𝒜𝒜ᵀ + εI)γ = rhs, warm-started at `gamma`.
fn cg_normal(
    rows: &Rows,
    gamma: &mut [f64],
    rhs: &[f64],
    eps: f64,
    scratch_dim: &mut [f64],
    tol: f64,
    max_iter: usize,
) {
    let m = rhs.len();
    let mut r = vec![0.0; m];
    let mut ax = vec![0.0; m];
    // r = rhs − Gγ
    rows.apply_t(gamma, scratch_dim);
    rows.apply(scratch_dim, &mut ax);
    for k in 0..m {
        r[k] = rhs[k] - (ax[k] + eps * gamma[k]);
    }
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let stop = (tol * norm(rhs)).max(1e-14);
    if rs.sqrt() <= stop {
        return;
    }
    for _ in 0..max_iter {
        rows.apply_t(&p, scratch_dim);
        rows.apply(scratch_dim, &mut ax);
        for k in 0..m {
            ax[k] += eps * p[k];
        }
        let alpha = rs / dot(&p, &ax);
        for k in 0..m {
            gamma[k] += alpha * p[k];
            r[k] -= alpha * ax[k];
        }
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= stop {
            return;
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for k in 0..m {
            p[k] = r[k] + beta * p[k];
        }
    }
}

/// Euclidean projection onto the PSD cone, blockwise, in place.
pub(crate) fn project_psd(geom: &Geometry, v: &mut [f64]) {
    for b in 0..geom.sizes.len() {
        let n = geom.sizes[b];
        let off = geom.offsets[b];
        if geom.diagonal[b] {
            for i in 0..n {
                if v[off + i] < 0.0 {
                    v[off + i] = 0.0;
                }
            }
            continue;
        }
        let mut mat = DMatrix::<f64>::zeros(n, n);
        let mut k = off;
        for i in 0..n {
            for j in i..n {
                let val = if i == j { v[k] } else { v[k] / SQRT2 };
                mat[(i, j)] = val;
                mat[(j, i)] = val;
                k += 1;
            }
        }
        let (vals, vecs) = crate::sdp::eig::sym_eigen(&mat);
        let mut out = DMatrix::<f64>::zeros(n, n);
        for (c, &lambda) in vals.iter().enumerate() {
            if lambda > 0.0 {
                let q = vecs.column(c);
                out.ger(lambda, &q, &q, 1.0);
            }
        }
        let mut k = off;
        for i in 0..n {
            for j in i..n {
                v[k] = if i == j {
                    out[(i, j)]
                } else {
                    SQRT2 * out[(i, j)]
                };
                k += 1;
            }
        }
    }
}

/// Union-find over svec coordinates carrying the substitution x_i = s_i · y_r.
struct ScaledUf {
    parent: Vec<usize>,
    scale: Vec<f64>,
}

impl ScaledUf {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            scale: vec![1.0; n],
        }
    }

    /// Root of i's class and the composed scale with x_i = s · y_root;
    /// two-pass path compression keeps scales exact.
    fn find2(&mut self, i: usize) -> (usize, f64) {
        let mut r = i;
        let mut s = 1.0;
        while self.parent[r] != r {
            s *= self.scale[r];
            r = self.parent[r];
        }
        // Second pass: point everything at the root with composed scales.
        let mut j = i;
        let mut sj = s;
        while self.parent[j] != r {
            let next = self.parent[j];
            let s_old = self.scale[j];
            self.parent[j] = r;
            self.scale[j] = sj;
            sj /= s_old;
            j = next;
        }
        (r, s)
    }

    /// Record x_i = f · x_j (both interpreted through current substitutions).
    /// Returns false if i and j were already in one class (row is redundant
    /// or contradictory; the caller decides from the residual scale).
    fn union(&mut self, i: usize, j: usize, f: f64) -> bool {
        let (ri, si) = self.find2(i);
        let (rj, sj) = self.find2(j);
        if ri == rj {
            return false;
        }
        // x_i = f x_j ⇒ s_i y_ri = f s_j y_rj ⇒ y_ri = (f s_j / s_i) y_rj.
        self.parent[ri] = rj;
        self.scale[ri] = f * sj / si;
        true
    }
}

#[derive(Clone, Copy)]
enum RowKind {
    /// x_i = rhs / c.
    Pin { coord: usize, coeff: f64 },
    /// c_i x_i + c_j x_j = 0.
    Tie {
        i: usize,
        ci: f64,
        j: usize,
        cj: f64,
        redundant: bool,
    },
    Dense,
}

/// Presolved exact projection onto {x : 𝒜x = b}.
struct DirectProjector {
    kinds: Vec<RowKind>,
    /// Class id per svec coordinate and its substitution scale.
    class_of: Vec<usize>,
    coord_scale: Vec<f64>,
    /// Per class: fixed value (pinned) or reduced-variable index.
    pin_value: Vec<Option<f64>>,
    free_idx: Vec<Option<usize>>,
    /// Σ s_i² per free class.
    d: Vec<f64>,
    n_free: usize,
    /// Dense rows: constraint index, x-space normalized row, reduced row over
    /// free classes, adjusted rhs, and the normalization scale.
    dense: Vec<usize>,
    dense_rows: Vec<Vec<(usize, f64)>>,
    dense_reduced: Vec<Vec<(usize, f64)>>,
    dense_rhs: Vec<f64>,
    dense_scale: Vec<f64>,
    dense_skip: Vec<bool>,
    chol: Cholesky<f64, Dyn>,
    /// Peeling order for tie-multiplier recovery: (constraint index, resolved
    /// coordinate, its coefficient, other coordinate, other coefficient).
    peel: Vec<(usize, usize, f64, usize, f64)>,
    pins: Vec<(usize, usize, f64)>,
}

impl DirectProjector {
    fn build(svec_rows: &[Vec<(usize, f64)>], rhs: &[f64], dim: usize) -> Option<Self> {
        let m = svec_rows.len();
        let mut uf = ScaledUf::new(dim);
        let mut kinds: Vec<RowKind> = Vec::with_capacity(m);

        for (k, row) in svec_rows.iter().enumerate() {
            let kind = match row.as_slice() {
                [(i, c)] if c.abs() > 1e-12 => RowKind::Pin {
                    coord: *i,
                    coeff: *c,
                },
                [(i, ci), (j, cj)]
                    if rhs[k] == 0.0 && ci.abs() > 1e-12 && cj.abs() > 1e-12 =>
                {
                    // c_i x_i + c_j x_j = 0 ⇒ x_i = (−c_j/c_i) x_j.
                    let merged = uf.union(*i, *j, -cj / ci);
                    if merged {
                        RowKind::Tie {
                            i: *i,
                            ci: *ci,
                            j: *j,
                            cj: *cj,
                            redundant: false,
                        }
                    } else {
                        // Cycle: consistent duplicates get multiplier 0; an
                        // inconsistent cycle forces the class to zero, which
                        // the dense machinery handles.
                        let (_, si) = uf.find2(*i);
                        let (_, sj) = uf.find2(*j);
                        if (ci * si + cj * sj).abs() < 1e-9 {
                            RowKind::Tie {
                                i: *i,
                                ci: *ci,
                                j: *j,
                                cj: *cj,
                                redundant: true,
                            }
                        } else {
                            RowKind::Dense
                        }
                    }
                }
                _ => RowKind::Dense,
            };
            kinds.push(kind);
        }

        // Classes and substitution scales.
        let mut class_of = vec![0usize; dim];
        let mut coord_scale = vec![1.0f64; dim];
        let mut root_index = vec![usize::MAX; dim];
        let mut n_class = 0;
        for i in 0..dim {
            let (r, s) = uf.find2(i);
            if root_index[r] == usize::MAX {
                root_index[r] = n_class;
                n_class += 1;
            }
            class_of[i] = root_index[r];
            coord_scale[i] = s;
        }

        // Pins fix whole classes.
        let mut pin_value: Vec<Option<f64>> = vec![None; n_class];
        let mut pins = Vec::new();
        for (k, kind) in kinds.iter_mut().enumerate() {
            if let RowKind::Pin { coord, coeff } = *kind {
                let r = class_of[coord];
                let y = rhs[k] / (coeff * coord_scale[coord]);
                match pin_value[r] {
                    None => {
                        pin_value[r] = Some(y);
                        pins.push((k, coord, coeff));
                    }
                    Some(prev) if (prev - y).abs() < 1e-9 => {
                        pins.push((k, coord, coeff));
                    }
                    Some(_) => *kind = RowKind::Dense,
                }
            }
        }

        let mut free_idx: Vec<Option<usize>> = vec![None; n_class];
        let mut n_free = 0;
        for r in 0..n_class {
            if pin_value[r].is_none() {
                free_idx[r] = Some(n_free);
                n_free += 1;
            }
        }
        let mut d = vec![0.0f64; n_free];
        for i in 0..dim {
            if let Some(f) = free_idx[class_of[i]] {
                d[f] += coord_scale[i] * coord_scale[i];
            }
        }

        // Dense rows, normalized in x-space, then reduced onto free classes.
        let mut dense = Vec::new();
        let mut dense_rows = Vec::new();
        let mut dense_reduced: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut dense_rhs = Vec::new();
        let mut dense_scale = Vec::new();
        for (k, kind) in kinds.iter().enumerate() {
            if !matches!(kind, RowKind::Dense) {
                continue;
            }
            let nrm = svec_rows[k]
                .iter()
                .map(|&(_, c)| c * c)
                .sum::<f64>()
                .sqrt();
            let sc = if nrm > 1e-12 { nrm } else { 1.0 };
            let row: Vec<(usize, f64)> =
                svec_rows[k].iter().map(|&(i, c)| (i, c / sc)).collect();
            let mut b = rhs[k] / sc;
            let mut acc: std::collections::BTreeMap<usize, f64> = Default::default();
            for &(i, c) in &row {
                let r = class_of[i];
                match free_idx[r] {
                    Some(f) => *acc.entry(f).or_insert(0.0) += c * coord_scale[i],
                    None => b -= c * coord_scale[i] * pin_value[r].unwrap(),
                }
            }
            let reduced: Vec<(usize, f64)> = acc
                .into_iter()
                .filter(|&(_, c)| c.abs() > 1e-14)
                .collect();
            dense.push(k);
            dense_rows.push(row);
            dense_reduced.push(reduced);
            dense_rhs.push(b);
            dense_scale.push(sc);
        }
        if dense.len() > MAX_DENSE_ROWS {
            return None;
        }
        let dense_skip: Vec<bool> = dense_reduced.iter().map(|r| r.is_empty()).collect();

        // Gram matrix K = R D⁻¹ Rᵀ over active dense rows; one factorization
        // serves every projection.
        let nd = dense.len();
        let mut k_mat = DMatrix::<f64>::zeros(nd, nd);
        // Scatter columns of R D⁻¹ Rᵀ via a per-class inverted index.
        let mut by_class: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_free];
        for (a, red) in dense_reduced.iter().enumerate() {
            if dense_skip[a] {
                continue;
            }
            for &(f, c) in red {
                by_class[f].push((a, c));
            }
        }
        for f in 0..n_free {
            let col = &by_class[f];
            let inv_d = 1.0 / d[f];
            for &(a, ca) in col {
                for &(b, cb) in col {
                    if b >= a {
                        k_mat[(a, b)] += ca * cb * inv_d;
                        if a != b {
                            k_mat[(b, a)] = k_mat[(a, b)];
                        }
                    }
                }
            }
        }
        let mean_diag = if nd > 0 {
            (0..nd).map(|i| k_mat[(i, i)]).sum::<f64>() / nd as f64
        } else {
            1.0
        };
        let mut jitter = 1e-10 * mean_diag.max(1.0);
        // Skipped rows get a unit diagonal so the factorization stays
        // positive; their γ is forced to ~0 by a zero rhs.
        for (a, &skip) in dense_skip.iter().enumerate() {
            if skip {
                k_mat[(a, a)] = 1.0;
            }
        }
        let chol = loop {
            let mut try_mat = k_mat.clone();
            for i in 0..nd {
                try_mat[(i, i)] += jitter;
            }
            if let Some(c) = Cholesky::new(try_mat) {
                break c;
            }
            jitter *= 100.0;
            if jitter > 1.0 {
                return None;
            }
        };

        // Tie peeling order: repeatedly resolve a coordinate that touches
        // exactly one unresolved tie and carries no pin.
        let mut has_pin = vec![false; dim];
        for &(_, coord, _) in &pins {
            has_pin[coord] = true;
        }
        let mut deg = vec![0usize; dim];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); dim];
        let mut tie_ids = Vec::new();
        for (k, kind) in kinds.iter().enumerate() {
            if let RowKind::Tie {
                i, j, redundant, ..
            } = kind
            {
                if !redundant {
                    deg[*i] += 1;
                    deg[*j] += 1;
                    adj[*i].push(k);
                    adj[*j].push(k);
                    tie_ids.push(k);
                }
            }
        }
        let mut resolved = vec![false; m];
        let mut queue: Vec<usize> = (0..dim)
            .filter(|&i| deg[i] == 1 && !has_pin[i])
            .collect();
        let mut peel = Vec::with_capacity(tie_ids.len());
        while let Some(i) = queue.pop() {
            if deg[i] != 1 || has_pin[i] {
                continue;
            }
            let Some(&k) = adj[i].iter().find(|&&k| !resolved[k]) else {
                continue;
            };
            let RowKind::Tie {
                i: ti,
                ci,
                j: tj,
                cj,
                ..
            } = kinds[k]
            else {
                unreachable!()
            };
            let (ri, rc, oi, oc) = if ti == i {
                (ti, ci, tj, cj)
            } else {
                (tj, cj, ti, ci)
            };
            resolved[k] = true;
            peel.push((k, ri, rc, oi, oc));
            deg[ri] -= 1;
            deg[oi] -= 1;
            if deg[oi] == 1 && !has_pin[oi] {
                queue.push(oi);
            }
        }

        Some(Self {
            kinds,
            class_of,
            coord_scale,
            pin_value,
            free_idx,
            d,
            n_free,
            dense,
            dense_rows,
            dense_reduced,
            dense_rhs,
            dense_scale,
            dense_skip,
            chol,
            peel,
            pins,
        })
    }

    /// Exact projection of v onto the constraint set; γ (per dense row, in
    /// normalized scaling) is written for dual recovery.
    fn project(&self, v: &[f64], x: &mut [f64], gamma_dense: &mut [f64]) {
        let dim = v.len();
        let mut ybar = vec![0.0f64; self.n_free];
        for i in 0..dim {
            if let Some(f) = self.free_idx[self.class_of[i]] {
                ybar[f] += self.coord_scale[i] * v[i];
            }
        }
        for f in 0..self.n_free {
            ybar[f] /= self.d[f];
        }
        let nd = self.dense.len();
        let mut rg = DVector::<f64>::zeros(nd);
        for a in 0..nd {
            if self.dense_skip[a] {
                continue;
            }
            rg[a] = self
                .dense_reduced[a]
                .iter()
                .map(|&(f, c)| c * ybar[f])
                .sum::<f64>()
                - self.dense_rhs[a];
        }
        let gamma = self.chol.solve(&rg);
        for a in 0..nd {
            gamma_dense[a] = gamma[a];
        }
        let mut y = ybar;
        for a in 0..nd {
            let g = gamma[a];
            if g != 0.0 {
                for &(f, c) in &self.dense_reduced[a] {
                    y[f] -= c * g / self.d[f];
                }
            }
        }
        for i in 0..dim {
            let r = self.class_of[i];
            x[i] = match self.free_idx[r] {
                Some(f) => self.coord_scale[i] * y[f],
                None => self.coord_scale[i] * self.pin_value[r].unwrap(),
            };
        }
    }

    /// Multipliers for all constraints from the last projection: dense rows
    /// carry γ (unnormalized), tie and pin rows absorb the remaining
    /// correction ω = v − x by leaf peeling. Any leftover numerical dust only
    /// loosens the certificate, never invalidates it.
    fn recover_multipliers(
        &self,
        v: &[f64],
        x: &[f64],
        gamma_dense: &[f64],
        rho: f64,
    ) -> Vec<f64> {
        let m = self.kinds.len();
        let mut mu = vec![0.0f64; m];
        let mut residual: Vec<f64> = v.iter().zip(x).map(|(a, b)| a - b).collect();
        for (a, &k) in self.dense.iter().enumerate() {
            let g = gamma_dense[a];
            mu[k] = -rho * g / self.dense_scale[a];
            if g != 0.0 {
                for &(i, c) in &self.dense_rows[a] {
                    residual[i] -= c * g;
                }
            }
        }
        for &(k, i, ci, j, cj) in &self.peel {
            let g = residual[i] / ci;
            mu[k] = -rho * g;
            residual[i] = 0.0;
            residual[j] -= g * cj;
        }
        for &(k, coord, coeff) in &self.pins {
            mu[k] = -rho * residual[coord] / coeff;
            residual[coord] = 0.0;
        }
        mu
    }
}

enum Projector {
    Direct(Box<DirectProjector>),
    /// Normalized rows and normalized rhs for the CG fallback.
    Cg(Rows, Vec<f64>),
}

/// Solver state reusable across closely related problems (same block
/// structure and constraint count), e.g. the per-node programs of one
/// entropy bound.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rho: f64,
}

pub fn solve(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution, SdpError> {
    solve_warm(problem, settings, None).map(|(sol, _)| sol)
}

pub fn solve_warm(
    problem: &SdpProblem,
    settings: &SolverSettings,
    warm: Option<&WarmStart>,
) -> Result<(SdpSolution, WarmStart), SdpError> {
    problem.validate()?;
    let geom = Geometry::new(problem);
    let dim = geom.dim;
    let m = problem.constraints.len();

    let mut svec_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut rhs = vec![0.0; m];
    for (k, con) in problem.constraints.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = con.entries.iter().map(|e| geom.coeff(e)).collect();
        row.sort_by_key(|&(i, _)| i);
        svec_rows.push(row);
        rhs[k] = con.rhs;
    }

    // Full normalized rows drive residual checks on both paths.
    let mut check_rows = Vec::with_capacity(m);
    let mut b = vec![0.0; m];
    let mut row_scale = vec![1.0; m];
    for (k, row) in svec_rows.iter().enumerate() {
        let nrm = row.iter().map(|&(_, c)| c * c).sum::<f64>().sqrt();
        let d = if nrm > 1e-12 { nrm } else { 1.0 };
        check_rows.push(row.iter().map(|&(i, c)| (i, c / d)).collect::<Vec<_>>());
        b[k] = rhs[k] / d;
        row_scale[k] = d;
    }
    let check_rows = Rows { rows: check_rows };

    let projector = match DirectProjector::build(&svec_rows, &rhs, dim) {
        Some(dp) => Projector::Direct(Box::new(dp)),
        None => Projector::Cg(
            Rows {
                rows: svec_rows
                    .iter()
                    .zip(&row_scale)
                    .map(|(row, &d)| row.iter().map(|&(i, c)| (i, c / d)).collect())
                    .collect(),
            },
            b.clone(),
        ),
    };

    let mut c = vec![0.0; dim];
    for e in &problem.objective {
        let (i, v) = geom.coeff(e);
        c[i] += v;
    }

    let b_norm = 1.0 + norm(&b);
    let c_norm = 1.0 + norm(&c);
    let theta = settings.over_relax;
    let mut rho = settings.rho;
    let eps = 1e-10;

    let mut z = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut gamma = vec![0.0; m];
    if let Some(w) = warm {
        if w.z.len() == dim && w.u.len() == dim && w.gamma.len() == m {
            z.copy_from_slice(&w.z);
            u.copy_from_slice(&w.u);
            gamma.copy_from_slice(&w.gamma);
            rho = w.rho;
        }
    }
    let n_dense = match &projector {
        Projector::Direct(dp) => dp.dense.len(),
        Projector::Cg(..) => 0,
    };
    let mut gamma_dense = vec![0.0; n_dense];
    if let Projector::Direct(dp) = &projector {
        for (a, &k) in dp.dense.iter().enumerate() {
            gamma_dense[a] = gamma[k];
        }
    }
    let mut v = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut av = vec![0.0; m];
    let mut z_prev = vec![0.0; dim];

    let mut iterations = 0;
    let mut status = SolveStatus::MaxIter;
    let mut primal_residual = f64::INFINITY;
    let mut dual_residual = f64::INFINITY;
    let mut gap = f64::INFINITY;

    for it in 0..settings.max_iter {
        iterations = it + 1;
        for i in 0..dim {
            v[i] = z[i] - u[i] - c[i] / rho;
        }
        match &projector {
            Projector::Direct(dp) => {
                dp.project(&v, &mut x, &mut gamma_dense);
            }
            Projector::Cg(rows, bn) => {
                rows.apply(&v, &mut av);
                for k in 0..m {
                    av[k] -= bn[k];
                }
                cg_normal(rows, &mut gamma, &av, eps, &mut scratch, 1e-10, 200);
                rows.apply_t(&gamma, &mut x);
                for i in 0..dim {
                    x[i] = v[i] - x[i];
                }
            }
        }
        z_prev.copy_from_slice(&z);
        for i in 0..dim {
            z[i] = theta * x[i] + (1.0 - theta) * z_prev[i] + u[i];
        }
        project_psd(&geom, &mut z);
        for i in 0..dim {
            u[i] += theta * x[i] + (1.0 - theta) * z_prev[i] - z[i];
        }

        if iterations % settings.check_every == 0 || iterations == settings.max_iter {
            check_rows.apply(&z, &mut av);
            let mut rp = 0.0;
            for k in 0..m {
                let d = av[k] - b[k];
                rp += d * d;
            }
            primal_residual = rp.sqrt() / b_norm;
            let mut rd = 0.0;
            for i in 0..dim {
                let d = z[i] - z_prev[i];
                rd += d * d;
            }
            dual_residual = rho * rd.sqrt() / c_norm;
            let primal_value = dot(&c, &z);
            let dual_value = match &projector {
                Projector::Direct(dp) => {
                    let mu = dp.recover_multipliers(&v, &x, &gamma_dense, rho);
                    mu.iter().zip(&rhs).map(|(m, r)| m * r).sum()
                }
                Projector::Cg(..) => -rho * dot(&b, &gamma),
            };
            gap = (primal_value - dual_value).abs()
                / (1.0 + primal_value.abs() + dual_value.abs());
            if !primal_value.is_finite() || !primal_residual.is_finite() {
                return Err(SdpError::Diverged(iterations));
            }
            if primal_residual <= settings.tol
                && dual_residual <= settings.tol
                && gap <= settings.tol
            {
                status = SolveStatus::Optimal;
                break;
            }
            if settings.adaptive_rho {
                if primal_residual > 10.0 * dual_residual && rho < 1e6 {
                    rho *= 2.0;
                    u.iter_mut().for_each(|ui| *ui *= 0.5);
                } else if dual_residual > 10.0 * primal_residual && rho > 1e-6 {
                    rho *= 0.5;
                    u.iter_mut().for_each(|ui| *ui *= 2.0);
                }
            }
        }
    }

    let dual_multipliers: Vec<f64> = match &projector {
        Projector::Direct(dp) => {
            let mu = dp.recover_multipliers(&v, &x, &gamma_dense, rho);
            // Persist dense γ for warm restarts.
            for (a, &k) in dp.dense.iter().enumerate() {
                gamma[k] = gamma_dense[a];
            }
            mu
        }
        Projector::Cg(..) => (0..m).map(|k| -rho * gamma[k] / row_scale[k]).collect(),
    };
    let primal_value = dot(&c, &z);
    let dual_value = dual_multipliers
        .iter()
        .zip(problem.constraints.iter())
        .map(|(mu, con)| mu * con.rhs)
        .sum();
    let warm_out = WarmStart {
        z: z.clone(),
        u: u.clone(),
        gamma: gamma.clone(),
        rho,
    };
    Ok((
        SdpSolution {
            status,
            iterations,
            primal_value,
            dual_value,
            primal_residual,
            dual_residual,
            gap,
            dual_multipliers,
            primal_svec: z,
        },
        warm_out,
    ))
}

/// Reconstruct the dense symmetric matrix of one block from the svec iterate.
pub fn block_matrix(problem: &SdpProblem, svec: &[f64], block: usize) -> DMatrix<f64> {
    let geom = Geometry::new(problem);
    let n = geom.sizes[block];
    let mut mat = DMatrix::<f64>::zeros(n, n);
    if geom.diagonal[block] {
        for i in 0..n {
            mat[(i, i)] = svec[geom.offsets[block] + i];
        }
        return mat;
    }
    let mut k = geom.offsets[block];
    for i in 0..n {
        for j in i..n {
            let val = if i == j { svec[k] } else { svec[k] / SQRT2 };
            mat[(i, j)] = val;
            mat[(j, i)] = val;
            k += 1;
        }
    }
    mat
}
