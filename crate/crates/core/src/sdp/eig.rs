//! Symmetric eigendecomposition backend for the solver's cone projections
//! and the certification step.
//!
//! The default is nalgebra's pure-Rust solver (portable, including to wasm).
//! The `lapack` feature links the system LAPACK (`dsyevd`) instead, which is
//! several times faster on the block sizes that dominate the entropy
//! relaxations; results agree to numerical precision. The thread count is
//! pinned to 1 for determinism.

use nalgebra::DMatrix;

/// Eigenvalues (ascending order not guaranteed) and matching eigenvector
/// columns of a symmetric matrix.
pub fn sym_eigen(mat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    backend::sym_eigen(mat)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(mat: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(mat);
    vals.into_iter().fold(f64::INFINITY, f64::min)
}

#[cfg(not(feature = "lapack"))]
mod backend {
    use nalgebra::DMatrix;

    pub fn sym_eigen(mat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let eig = mat.clone().symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }
}

#[cfg(feature = "lapack")]
mod backend {
    use nalgebra::DMatrix;
    use std::sync::Once;

    #[link(name = "lapack")]
    extern "C" {
        fn dsyevd_(
            jobz: *const u8,
            uplo: *const u8,
            n: *const i32,
            a: *mut f64,
            lda: *const i32,
            w: *mut f64,
            work: *mut f64,
            lwork: *const i32,
            iwork: *mut i32,
            liwork: *const i32,
            info: *mut i32,
        );
    }

    static INIT: Once = Once::new();

    pub fn sym_eigen(mat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        INIT.call_once(|| {
            // Deterministic single-threaded execution; must be set before the
            // backend initializes its thread pool.
            std::env::set_var("OPENBLAS_NUM_THREADS", "1");
            std::env::set_var("OMP_NUM_THREADS", "1");
        });
        let n = mat.nrows();
        assert_eq!(n, mat.ncols());
        let ni = n as i32;
        // nalgebra stores column-major, matching LAPACK.
        let mut a = mat.clone();
        let mut w = vec![0.0f64; n.max(1)];
        let mut info: i32 = 0;
        let jobz = b'V';
        let uplo = b'L';

        // Workspace query.
        let mut work_query = [0.0f64];
        let mut iwork_query = [0i32];
        let neg1: i32 = -1;
        unsafe {
            dsyevd_(
                &jobz,
                &uplo,
                &ni,
                a.as_mut_slice().as_mut_ptr(),
                &ni,
                w.as_mut_ptr(),
                work_query.as_mut_ptr(),
                &neg1,
                iwork_query.as_mut_ptr(),
                &neg1,
                &mut info,
            );
        }
        assert_eq!(info, 0, "eigensolver workspace query failed: {}", info);
        let lwork = work_query[0] as i32;
        let liwork = iwork_query[0];
        let mut work = vec![0.0f64; lwork.max(1) as usize];
        let mut iwork = vec![0i32; liwork.max(1) as usize];
        unsafe {
            dsyevd_(
                &jobz,
                &uplo,
                &ni,
                a.as_mut_slice().as_mut_ptr(),
                &ni,
                w.as_mut_ptr(),
                work.as_mut_ptr(),
                &lwork,
                iwork.as_mut_ptr(),
                &liwork,
                &mut info,
            );
        }
        assert_eq!(info, 0, "eigensolver failed to converge: {}", info);
        (w, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reconstructs_matrix() {
        let n = 24;
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut s = 7u64;
        for i in 0..n {
            for j in i..n {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let v = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let (vals, vecs) = sym_eigen(&m);
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
        let rec = &vecs * lambda * vecs.transpose();
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(rec[(i, j)], m[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn min_eigenvalue_of_known_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(min_eigenvalue(&m), -1.0, epsilon = 1e-12);
    }
}
