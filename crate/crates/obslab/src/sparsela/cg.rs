//! Conjugate-gradient solves for shifted positive-definite systems, the
//! backbone of every resolvent application.

use crate::error::{Error, Result};
use crate::sparsela::csr::{axpy, dot, norm, SparseOperator};

/// Solve `(A + shift) x = b` to relative residual `tol` with plain CG.
///
/// `A + shift` must be positive definite. The residual contract is verified
/// post-hoc on the returned vector.
pub fn cg_solve(a: &SparseOperator, shift: f64, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    assert_eq!(a.rows(), a.cols(), "cg needs a square operator");
    assert_eq!(b.len(), a.cols());
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::Solver(format!("cg tolerance {tol} outside (0, 1e-4]")));
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = a.apply(x);
        axpy(shift, x, &mut y);
        y
    };
    let nb = norm(b);
    if nb == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let cap = 10 * b.len().max(10);
    for _ in 0..cap {
        if rr.sqrt() <= tol * nb {
            break;
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver(format!(
                "cg curvature {pap:.3e} not positive; operator is not positive definite"
            )));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    // exact residual check (the recurrence residual can drift)
    let mut res = apply(&x);
    for (ri, bi) in res.iter_mut().zip(b) {
        *ri -= bi;
    }
    let rel = norm(&res) / nb;
    if rel > tol * 10.0 {
        return Err(Error::Solver(format!(
            "cg stalled at relative residual {rel:.3e} (target {tol:.1e}, dim {})",
            b.len()
        )));
    }
    Ok(x)
}

/// Apply `(A + 1)^{-power}` by repeated CG solves.
pub fn power_of_resolvent_apply(
    a: &SparseOperator,
    power: u32,
    v: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    assert!(power >= 1, "resolvent power must be >= 1");
    let mut x = v.to_vec();
    for _ in 0..power {
        x = cg_solve(a, 1.0, &x, tol)?;
    }
    Ok(x)
}
