//! Smallest eigenpairs of symmetric positive-semidefinite sparse operators
//! via shift-invert Lanczos with full reorthogonalization and deflation
//! restarts (needed because torus spectra are highly degenerate).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparsela::cg::cg_solve;
use crate::sparsela::csr::{axpy, dot, norm, SparseOperator};

const MAX_RESTARTS: usize = 12;

/// Compute the `k` smallest eigenpairs of `A` (symmetric, PSD) with respect
/// to the uniform diagonal metric `mass`. Eigenvectors come back
/// metric-orthonormal. `tol` is the relative eigenvalue accuracy target;
/// `cg_tol` is forwarded to the inner resolvent solves.
pub fn lanczos_smallest(
    a: &SparseOperator,
    mass: f64,
    k: usize,
    tol: f64,
    cg_tol: f64,
    seed: u64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let dim = a.rows();
    assert_eq!(dim, a.cols(), "eigensolve needs a square operator");
    assert!(mass > 0.0);
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > 50 {
        return Err(Error::Solver(format!("requested {k} eigenpairs, cap is 50")));
    }
    let k = k.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Euclidean-normalized converged eigenvectors, ascending by eigenvalue.
    let mut converged: Vec<(f64, Vec<f64>)> = Vec::new();
    // Having k pairs is not enough under degeneracy: a restart may converge
    // only one copy per distinct eigenvalue, so the k collected pairs need
    // not be the k smallest. Keep restarting until a deflated restart finds
    // nothing at or below the current k-th value.
    let mut confirmed = false;

    for _restart in 0..MAX_RESTARTS {
        if converged.len() >= k && confirmed {
            break;
        }
        let cutoff = if converged.len() >= k { Some(converged[k - 1].0) } else { None };
        // a confirmation pass only looks for eigenvalues missed below the
        // cutoff; those converge fastest under shift-invert, so it can be
        // much shorter than a full restart
        let full = if cutoff.is_none() { 3 * k + 20 } else { k + 10 };
        let steps = full.min(dim - converged.len()).max(1);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();

        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        orthogonalize(&mut v, converged.iter().map(|(_, x)| x.as_slice()));
        let nv = norm(&v);
        if nv < 1e-13 {
            // deflated complement is (numerically) empty: nothing missed
            confirmed = true;
            continue;
        }
        for x in &mut v {
            *x /= nv;
        }
        basis.push(v);

        for j in 0..steps {
            let mut w = cg_solve(a, 1.0, &basis[j], cg_tol)?;
            if j > 0 {
                axpy(-betas[j - 1], &basis[j - 1], &mut w);
            }
            let alpha = dot(&w, &basis[j]);
            axpy(-alpha, &basis[j], &mut w);
            alphas.push(alpha);
            // full reorthogonalization against the basis and deflated pairs
            orthogonalize(&mut w, basis.iter().map(|x| x.as_slice()));
            orthogonalize(&mut w, converged.iter().map(|(_, x)| x.as_slice()));
            let beta = norm(&w);
            if j + 1 == steps || beta < 1e-12 {
                break;
            }
            betas.push(beta);
            for x in &mut w {
                *x /= beta;
            }
            basis.push(w);
        }

        let m = alphas.len();
        let mut t = DMatrix::zeros(m, m);
        for j in 0..m {
            t[(j, j)] = alphas[j];
            if j + 1 < m {
                t[(j, j + 1)] = betas[j];
                t[(j + 1, j)] = betas[j];
            }
        }
        let eig = SymmetricEigen::new(t);
        // large theta of (A+1)^{-1} <-> small eigenvalues of A
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).expect("finite Ritz values")
        });

        let mut found_at_or_below = false;
        for &i in order.iter().take(k.saturating_sub(converged.len()) + 2) {
            let theta = eig.eigenvalues[i];
            if theta <= 0.0 {
                continue;
            }
            let mut x = vec![0.0; dim];
            for (j, b) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(j, i)], b, &mut x);
            }
            orthogonalize(&mut x, converged.iter().map(|(_, y)| y.as_slice()));
            let nx = norm(&x);
            if nx < 1e-8 {
                continue; // already captured by a deflated pair
            }
            for xi in &mut x {
                *xi /= nx;
            }
            // Rayleigh refinement removes the inner-solve bias
            let ax = a.apply(&x);
            let lambda = dot(&ax, &x);
            if let Some(c) = cutoff {
                if lambda <= c + 1e-8 * (c.abs() + 1.0) {
                    found_at_or_below = true;
                }
            }
            let mut res = ax;
            axpy(-lambda, &x, &mut res);
            if norm(&res) <= 10.0 * tol * (lambda.abs() + 1.0) {
                converged.push((lambda, x));
            }
        }
        converged.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        if cutoff.is_some() && !found_at_or_below {
            confirmed = true;
        }
    }

    if converged.len() < k {
        return Err(Error::Solver(format!(
            "lanczos converged {} of {} eigenpairs after {} restarts (dim {})",
            converged.len(),
            k,
            MAX_RESTARTS,
            dim
        )));
    }
    converged.truncate(k);
    let scale = 1.0 / mass.sqrt();
    Ok(converged
        .into_iter()
        .map(|(l, mut v)| {
            for x in &mut v {
                *x *= scale;
            }
            (l, v)
        })
        .collect())
}

fn orthogonalize<'a>(v: &mut [f64], others: impl Iterator<Item = &'a [f64]> + Clone) {
    // two Gram-Schmidt passes
    for _ in 0..2 {
        for u in others.clone() {
            let nu = dot(u, u);
            if nu == 0.0 {
                continue;
            }
            let c = dot(v, u) / nu;
            axpy(-c, u, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_smallest() {
        let a = SparseOperator::from_diagonal(&[1.0, 2.0, 3.0]);
        let pairs = lanczos_smallest(&a, 1.0, 1, 1e-10, 1e-10, 7).unwrap();
        assert!((pairs[0].0 - 1.0).abs() < 1e-9);
        assert!((pairs[0].1[0].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_cluster_found() {
        // eigenvalue 2 with multiplicity 3
        let a = SparseOperator::from_diagonal(&[2.0, 2.0, 2.0, 5.0, 7.0]);
        let pairs = lanczos_smallest(&a, 1.0, 4, 1e-10, 1e-10, 3).unwrap();
        let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        assert!((vals[0] - 2.0).abs() < 1e-8);
        assert!((vals[1] - 2.0).abs() < 1e-8);
        assert!((vals[2] - 2.0).abs() < 1e-8);
        assert!((vals[3] - 5.0).abs() < 1e-8);
        // pairwise orthonormal
        for i in 0..4 {
            for j in 0..4 {
                let d = dot(&pairs[i].1, &pairs[j].1);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-6, "gram ({i},{j}) = {d}");
            }
        }
    }

    #[test]
    fn metric_normalization() {
        let a = SparseOperator::from_diagonal(&[1.0, 4.0]);
        let mass = 0.25;
        let pairs = lanczos_smallest(&a, mass, 1, 1e-10, 1e-10, 1).unwrap();
        let v = &pairs[0].1;
        let metric_norm_sq = mass * dot(v, v);
        assert!((metric_norm_sq - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_mode_of_singular_matrix() {
        // PSD with kernel: graph Laplacian of a path on 3 vertices
        let a = SparseOperator::from_triplets(
            3,
            3,
            vec![
                (0, 0, 1.0),
                (1, 1, 2.0),
                (2, 2, 1.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
            ],
        )
        .unwrap();
        let pairs = lanczos_smallest(&a, 1.0, 2, 1e-10, 1e-10, 11).unwrap();
        assert!(pairs[0].0.abs() < 1e-9);
        assert!((pairs[1].0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn determinism() {
        let a = SparseOperator::from_diagonal(&[3.0, 1.0, 4.0, 1.5, 9.0]);
        let p1 = lanczos_smallest(&a, 1.0, 3, 1e-10, 1e-10, 42).unwrap();
        let p2 = lanczos_smallest(&a, 1.0, 3, 1e-10, 1e-10, 42).unwrap();
        for (x, y) in p1.iter().zip(&p2) {
            assert_eq!(x.0.to_bits(), y.0.to_bits());
        }
    }
}
