//! Dense reference implementations used to cross-check the iterative
//! kernels on small instances, plus seeded random instance generators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparsela::csr::SparseOperator;

/// Exact metric operator norm: largest singular value of
/// `Bl^{-1/2} M Br^{-1/2}` via Cholesky factors and a full SVD.
pub fn dense_metric_opnorm(
    m: &DMatrix<f64>,
    b_left: &DMatrix<f64>,
    b_right: &DMatrix<f64>,
) -> Result<f64> {
    let ll = b_left
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Solver("left metric not positive definite".into()))?;
    let lr = b_right
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Solver("right metric not positive definite".into()))?;
    // C = Ll^{-1} M Lr^{-T}
    let mut c = m.clone();
    ll.l().solve_lower_triangular_mut(&mut c);
    let mut ct = c.transpose();
    lr.l().solve_lower_triangular_mut(&mut ct);
    let svd = ct.svd(false, false);
    Ok(svd.singular_values.max())
}

/// Exact `exp(-tA) v` for symmetric `A` via a full eigendecomposition.
pub fn dense_heat_apply(a: &DMatrix<f64>, t: f64, v: &[f64]) -> Vec<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let coeffs = eig.eigenvectors.transpose() * DVector::from_column_slice(v);
    let mut out = DVector::zeros(v.len());
    for i in 0..v.len() {
        out += eig.eigenvectors.column(i) * ((-t * eig.eigenvalues[i]).exp() * coeffs[i]);
    }
    out.iter().copied().collect()
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn dense_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

/// Seeded random sparse rectangular matrix with entries in [-1, 1].
pub fn random_sparse(rows: usize, cols: usize, per_row: usize, seed: u64) -> SparseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for r in 0..rows {
        for _ in 0..per_row {
            let c = rng.gen_range(0..cols);
            triplets.push((r, c, rng.gen_range(-1.0..1.0)));
        }
    }
    SparseOperator::from_triplets(rows, cols, triplets).expect("valid random matrix")
}

/// Seeded random sparse symmetric positive-definite matrix
/// (diagonally dominant by construction).
pub fn random_spd(n: usize, per_row: usize, seed: u64) -> SparseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    let mut row_abs = vec![0.0f64; n];
    for r in 0..n {
        for _ in 0..per_row {
            let c = rng.gen_range(0..n);
            if c == r {
                continue;
            }
            let v: f64 = rng.gen_range(-1.0..1.0);
            triplets.push((r, c, v));
            triplets.push((c, r, v));
            row_abs[r] += v.abs();
            row_abs[c] += v.abs();
        }
    }
    for (r, s) in row_abs.iter().enumerate() {
        triplets.push((r, r, s + rng.gen_range(0.1..1.1)));
    }
    SparseOperator::from_triplets(n, n, triplets)
        .expect("valid random spd")
        .assert_symmetric(0.0)
        .expect("symmetric by construction")
}
