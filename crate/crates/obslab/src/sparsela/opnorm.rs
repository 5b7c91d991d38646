//! Metric-weighted operator norms by two-sided power iteration.
//!
//! Half powers of resolvents never appear explicitly: a norm of the shape
//! `sup |<u, M f>| / (||u||_Bl ||f||_Br)` needs only solves with the
//! positive-definite metrics `Bl`, `Br` themselves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparsela::cg::power_of_resolvent_apply;
use crate::sparsela::csr::{dot, LinOp, SparseOperator};

const ITERATION_CAP: usize = 500;

/// Positive-definite metric on a discrete space: application and solve.
pub trait Metric {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;
    fn solve(&self, v: &[f64]) -> Result<Vec<f64>>;
}

/// Plain L2 metric (uniform cell masses cancel between numerator and
/// denominators, so the identity suffices).
pub struct L2Metric {
    pub dim: usize,
}

impl Metric for L2Metric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(v.to_vec())
    }

    fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(v.to_vec())
    }
}

/// Abstract Sobolev metric `(A + 1)^power` for a PSD operator `A`.
pub struct SobolevMetric<'a> {
    pub a: &'a SparseOperator,
    pub power: u32,
    pub cg_tol: f64,
}

impl Metric for SobolevMetric<'_> {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut x = v.to_vec();
        for _ in 0..self.power {
            let mut y = self.a.apply(&x);
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += xi;
            }
            x = y;
        }
        Ok(x)
    }

    fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        power_of_resolvent_apply(self.a, self.power, v, self.cg_tol)
    }
}

/// A rectangular map `M` together with the metrics of its target (left) and
/// source (right) spaces.
pub struct MetricNormProblem<'a> {
    pub m: &'a dyn LinOp,
    pub b_left: &'a dyn Metric,
    pub b_right: &'a dyn Metric,
}

/// Estimate `sup |<u, M f>| / (||u||_Bl ||f||_Br)`, the largest generalized
/// singular value of `M`. Returns the max over `restarts` seeded random
/// starts; each run stops when the estimate's relative change stays below
/// `tol` for 3 consecutive iterations.
pub fn metric_opnorm(p: &MetricNormProblem, tol: f64, restarts: usize, seed: u64) -> Result<f64> {
    assert_eq!(p.b_left.dim(), p.m.rows(), "left metric dimension mismatch");
    assert_eq!(p.b_right.dim(), p.m.cols(), "right metric dimension mismatch");
    assert!(restarts >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..restarts {
        let mut f: Vec<f64> = (0..p.m.cols()).map(|_| rng.gen::<f64>() - 0.5).collect();
        // normalize in the right metric
        let bf = p.b_right.apply(&f)?;
        let nf = dot(&f, &bf).sqrt();
        if nf == 0.0 {
            continue;
        }
        for x in &mut f {
            *x /= nf;
        }
        let mut sigma = 0.0f64;
        let mut stable = 0;
        for _ in 0..ITERATION_CAP {
            let g = p.m.apply(&f)?;
            let w = p.b_left.solve(&g)?;
            let sigma_sq = dot(&g, &w);
            if sigma_sq <= 0.0 {
                sigma = 0.0;
                break;
            }
            let new_sigma = sigma_sq.sqrt();
            let rel = (new_sigma - sigma).abs() / new_sigma.max(f64::MIN_POSITIVE);
            sigma = new_sigma;
            if rel < tol {
                stable += 1;
                if stable >= 3 {
                    break;
                }
            } else {
                stable = 0;
            }
            let s = p.m.apply_adjoint(&w)?;
            let t = p.b_right.solve(&s)?;
            let nt = dot(&t, &s).sqrt();
            if nt == 0.0 {
                break;
            }
            f = t;
            for x in &mut f {
                *x /= nt;
            }
        }
        if !sigma.is_finite() {
            return Err(Error::Solver("power iteration produced a non-finite estimate".into()));
        }
        best = best.max(sigma);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norm_one() {
        let m = SparseOperator::identity(5);
        let bl = L2Metric { dim: 5 };
        let br = L2Metric { dim: 5 };
        let p = MetricNormProblem { m: &m, b_left: &bl, b_right: &br };
        let s = metric_opnorm(&p, 1e-8, 3, 1).unwrap();
        assert!((s - 1.0).abs() < 1e-7);
    }

    #[test]
    fn right_metric_scaling() {
        struct Scaled(usize, f64);
        impl Metric for Scaled {
            fn dim(&self) -> usize {
                self.0
            }
            fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
                Ok(v.iter().map(|x| self.1 * x).collect())
            }
            fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
                Ok(v.iter().map(|x| x / self.1).collect())
            }
        }
        let m = SparseOperator::identity(4);
        let bl = L2Metric { dim: 4 };
        let br = Scaled(4, 2.0);
        let p = MetricNormProblem { m: &m, b_left: &bl, b_right: &br };
        let s = metric_opnorm(&p, 1e-8, 3, 2).unwrap();
        assert!((s - 1.0 / 2.0f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn zero_operator() {
        let m = SparseOperator::from_triplets(3, 3, vec![]).unwrap();
        let bl = L2Metric { dim: 3 };
        let br = L2Metric { dim: 3 };
        let p = MetricNormProblem { m: &m, b_left: &bl, b_right: &br };
        let s = metric_opnorm(&p, 1e-8, 2, 3).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn rectangular_largest_singular_value() {
        // M = [[3, 0, 0], [0, 1, 0]], singular values {3, 1}
        let m = SparseOperator::from_triplets(2, 3, vec![(0, 0, 3.0), (1, 1, 1.0)]).unwrap();
        let bl = L2Metric { dim: 2 };
        let br = L2Metric { dim: 3 };
        let p = MetricNormProblem { m: &m, b_left: &bl, b_right: &br };
        let s = metric_opnorm(&p, 1e-10, 3, 4).unwrap();
        assert!((s - 3.0).abs() < 1e-7);
    }

    #[test]
    fn sobolev_metric_matches_diagonal_formula() {
        // A = diag(d): norm of identity from (A+1)^2-metric to L2 is
        // max 1/(d_i+1).
        let a = SparseOperator::from_diagonal(&[1.0, 3.0, 0.0]);
        let m = SparseOperator::identity(3);
        let bl = L2Metric { dim: 3 };
        let br = SobolevMetric { a: &a, power: 2, cg_tol: 1e-10 };
        let p = MetricNormProblem { m: &m, b_left: &bl, b_right: &br };
        let s = metric_opnorm(&p, 1e-10, 3, 5).unwrap();
        assert!((s - 1.0).abs() < 1e-6, "got {s}");
    }
}
