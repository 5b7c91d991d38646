//! Measurement of the quasi-unitarity defect of a form pair: the component
//! norms of the near-unitary intertwining, the transplanted resolvent and
//! heat defects, spectral comparison, and non-concentration constants.

use serde::{Deserialize, Serialize};

use crate::discretize::{assemble_form, Bc, CellMask, DiscreteSpace, Grid};
use crate::error::Result;
use crate::geometry::Point;
use crate::sparsela::{
    cg_solve, heat_apply, lanczos_smallest, metric_opnorm, power_of_resolvent_apply, FnOp,
    L2Metric, MetricNormProblem, SobolevMetric, SparseOperator,
};
use crate::transplant::{adjoint_check, FormPair};

/// Solver knobs shared by every defect estimate.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub tol_cg: f64,
    pub tol_norm: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol_cg: 1e-9, tol_norm: 1e-6, restarts: 3, seed: 1 }
    }
}

/// Measured components of the quasi-unitarity defect. All dimensionless.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeltaBreakdown {
    /// excess of ||J|| over 1
    pub delta_a_norm: f64,
    /// deviation of J' from the metric adjoint of J
    pub delta_a_adj: f64,
    /// ||(id - J'J) R^{1/2}||
    pub delta_b1: f64,
    /// ||(id - JJ') R~^{1/2}||
    pub delta_b2: f64,
    /// ||(J1 - J) R^{1/2}||
    pub delta_c1: f64,
    /// ||(J'1 - J') R~^{1/2}||
    pub delta_c2: f64,
    /// form closeness ||R~^{1/2} (Lap~ J1 - (J'1)* Lap) R^{k/2}||
    pub delta_d: f64,
    pub delta_max: f64,
}

/// Measure every defect component as a metric operator norm.
pub fn estimate_delta(pair: &FormPair, s: &SolverSettings) -> Result<DeltaBreakdown> {
    let lap = &pair.limit.laplacian;
    let lap_t = &pair.perturbed.laplacian;
    let dim_h = pair.limit.space.dim;
    let dim_ht = pair.perturbed.space.dim;
    let l2_h = L2Metric { dim: dim_h };
    let l2_ht = L2Metric { dim: dim_ht };
    let sob_h = SobolevMetric { a: lap, power: 1, cg_tol: s.tol_cg };
    let sob_ht = SobolevMetric { a: lap_t, power: 1, cg_tol: s.tol_cg };
    let sob_h_k = SobolevMetric { a: lap, power: pair.k, cg_tol: s.tol_cg };

    let j_norm = metric_opnorm(
        &MetricNormProblem { m: &pair.j, b_left: &l2_ht, b_right: &l2_h },
        s.tol_norm,
        s.restarts,
        s.seed,
    )?;
    let delta_a_norm = (j_norm - 1.0).max(0.0);
    let delta_a_adj = adjoint_check(pair, s.seed);

    let id_h = SparseOperator::identity(dim_h);
    let id_ht = SparseOperator::identity(dim_ht);
    let b1_op = id_h.sub(&pair.j_prime.matmul(&pair.j));
    let delta_b1 = metric_opnorm(
        &MetricNormProblem { m: &b1_op, b_left: &l2_h, b_right: &sob_h },
        s.tol_norm,
        s.restarts,
        s.seed.wrapping_add(1),
    )?;
    let b2_op = id_ht.sub(&pair.j.matmul(&pair.j_prime));
    let delta_b2 = metric_opnorm(
        &MetricNormProblem { m: &b2_op, b_left: &l2_ht, b_right: &sob_ht },
        s.tol_norm,
        s.restarts,
        s.seed.wrapping_add(2),
    )?;
    let c1_op = pair.j1.sub(&pair.j);
    let delta_c1 = metric_opnorm(
        &MetricNormProblem { m: &c1_op, b_left: &l2_ht, b_right: &sob_h },
        s.tol_norm,
        s.restarts,
        s.seed.wrapping_add(3),
    )?;
    let c2_op = pair.j1_prime.sub(&pair.j_prime);
    let delta_c2 = metric_opnorm(
        &MetricNormProblem { m: &c2_op, b_left: &l2_h, b_right: &sob_ht },
        s.tol_norm,
        s.restarts,
        s.seed.wrapping_add(4),
    )?;
    // bilinear form defect: rows pair with u in H~, columns with f in H
    let d_op = lap_t.matmul(&pair.j1).sub(&pair.j1_prime.transpose().matmul(lap));
    let delta_d = metric_opnorm(
        &MetricNormProblem { m: &d_op, b_left: &sob_ht, b_right: &sob_h_k },
        s.tol_norm,
        s.restarts,
        s.seed.wrapping_add(5),
    )?;

    let delta_max = [delta_a_norm, delta_a_adj, delta_b1, delta_b2, delta_c1, delta_c2, delta_d]
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok(DeltaBreakdown {
        delta_a_norm,
        delta_a_adj,
        delta_b1,
        delta_b2,
        delta_c1,
        delta_c2,
        delta_d,
        delta_max,
    })
}

fn tail_power(k: u32) -> u32 {
    assert!(k >= 2 && k.is_multiple_of(2), "defect measures need an even order k >= 2");
    (k - 2) / 2
}

/// Measured norm of `(JR - R~J) R^{(k-2)/2}` between the plain L2 metrics.
pub fn resolvent_defect(pair: &FormPair, s: &SolverSettings) -> Result<f64> {
    let lap = &pair.limit.laplacian;
    let lap_t = &pair.perturbed.laplacian;
    let tail = tail_power(pair.k);
    let tol = s.tol_cg;
    let op = FnOp {
        rows: pair.j.rows(),
        cols: pair.j.cols(),
        fwd: |f: &[f64]| -> Result<Vec<f64>> {
            let g = if tail > 0 { power_of_resolvent_apply(lap, tail, f, tol)? } else { f.to_vec() };
            let a = pair.j.apply(&cg_solve(lap, 1.0, &g, tol)?);
            let b = cg_solve(lap_t, 1.0, &pair.j.apply(&g), tol)?;
            Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
        },
        adj: |v: &[f64]| -> Result<Vec<f64>> {
            let jtv = pair.j.apply_transpose(v);
            let a = cg_solve(lap, 1.0, &jtv, tol)?;
            let b = pair.j.apply_transpose(&cg_solve(lap_t, 1.0, v, tol)?);
            let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            if tail > 0 { power_of_resolvent_apply(lap, tail, &d, tol) } else { Ok(d) }
        },
    };
    let bl = L2Metric { dim: pair.j.rows() };
    let br = L2Metric { dim: pair.j.cols() };
    metric_opnorm(
        &MetricNormProblem { m: &op, b_left: &bl, b_right: &br },
        s.tol_norm,
        s.restarts,
        s.seed.wrapping_add(10),
    )
}

/// Measured norm of `(J e^{-t Lap} - e^{-t Lap~} J) R^{(k-2)/2}`.
pub fn heat_defect(pair: &FormPair, t: f64, s: &SolverSettings) -> Result<f64> {
    assert!((0.05..=5.0).contains(&t), "heat defect probed only for t in [0.05, 5]");
    let lap = &pair.limit.laplacian;
    let lap_t = &pair.perturbed.laplacian;
    let tail = tail_power(pair.k);
    let tol = s.tol_cg;
    let kdim = 60;
    let op = FnOp {
        rows: pair.j.rows(),
        cols: pair.j.cols(),
        fwd: |f: &[f64]| -> Result<Vec<f64>> {
            let g = if tail > 0 { power_of_resolvent_apply(lap, tail, f, tol)? } else { f.to_vec() };
            let a = pair.j.apply(&heat_apply(lap, t, &g, kdim)?);
            let b = heat_apply(lap_t, t, &pair.j.apply(&g), kdim)?;
            Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
        },
        adj: |v: &[f64]| -> Result<Vec<f64>> {
            let a = heat_apply(lap, t, &pair.j.apply_transpose(v), kdim)?;
            let b = pair.j.apply_transpose(&heat_apply(lap_t, t, v, kdim)?);
            let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            if tail > 0 { power_of_resolvent_apply(lap, tail, &d, tol) } else { Ok(d) }
        },
    };
    let bl = L2Metric { dim: pair.j.rows() };
    let br = L2Metric { dim: pair.j.cols() };
    // a single restart: the heat operators damp everything outside the top
    // singular subspace so hard that any random start finds it
    metric_opnorm(
        &MetricNormProblem { m: &op, b_left: &bl, b_right: &br },
        s.tol_norm,
        1,
        s.seed.wrapping_add(20),
    )
}

/// Hausdorff distance between two finite spectra truncated to `[0, lambda]`.
/// None when either truncation is empty.
pub fn spectral_hausdorff(spec_a: &[f64], spec_b: &[f64], lambda: f64) -> Option<f64> {
    let a: Vec<f64> = spec_a.iter().copied().filter(|&x| x <= lambda).collect();
    let b: Vec<f64> = spec_b.iter().copied().filter(|&x| x <= lambda).collect();
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let side = |xs: &[f64], ys: &[f64]| -> f64 {
        xs.iter()
            .map(|&x| ys.iter().map(|&y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Some(side(&a, &b).max(side(&b, &a)))
}

/// One row of the eigenvalue/eigenvector transfer comparison.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigenTransferRow {
    pub lambda_limit: f64,
    pub lambda_perturbed: f64,
    /// `||J psi_0 - psi_eps||` for simple pairs; for degenerate clusters the
    /// projection residual of `J psi_0` onto the matched perturbed subspace
    pub transfer_error: f64,
    /// set when the cluster gap is under the pairing threshold
    pub ambiguous: bool,
}

const CLUSTER_GAP: f64 = 1e-6;

/// Compare the lowest `count` eigenpairs of the two forms, transplanting the
/// limit eigenvectors with `J`. Pairing is index-by-index (both sorted);
/// degenerate clusters of the limit spectrum are handled by subspace
/// projection.
pub fn eigen_transfer(pair: &FormPair, count: usize, s: &SolverSettings) -> Result<Vec<EigenTransferRow>> {
    // extra pairs so that a degenerate cluster straddling index `count`
    // is still projected against its full perturbed eigenspace
    let want = (count + 8).min(pair.limit.space.dim).min(pair.perturbed.space.dim).min(50);
    let limit = lanczos_smallest(
        &pair.limit.laplacian,
        pair.limit.space.mass,
        want,
        1e-9,
        s.tol_cg,
        s.seed.wrapping_add(30),
    )?;
    let pert = lanczos_smallest(
        &pair.perturbed.laplacian,
        pair.perturbed.space.mass,
        want,
        1e-9,
        s.tol_cg,
        s.seed.wrapping_add(31),
    )?;
    let mass = pair.perturbed.space.mass;
    let metric_norm = |v: &[f64]| (mass * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let metric_dot =
        |a: &[f64], b: &[f64]| mass * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // cluster the limit spectrum
    let mut rows = Vec::with_capacity(count);
    let mut start = 0;
    while start < count {
        let mut end = start + 1;
        while end < want && (limit[end].0 - limit[end - 1].0).abs() < CLUSTER_GAP * (limit[end].0.abs() + 1.0)
        {
            end += 1;
        }
        // the pairing is suspect when the next gap is marginal or the
        // cluster may extend past the computed window
        let ambiguous = (end == want && want < pair.limit.space.dim.min(pair.perturbed.space.dim))
            || (end < want
                && (limit[end].0 - limit[end - 1].0).abs()
                    < 10.0 * CLUSTER_GAP * (limit[end].0.abs() + 1.0));
        if end - start == 1 {
            let (l0, v0) = &limit[start];
            let (le, ve) = &pert[start];
            let jv = pair.j.apply(v0);
            let sign = if metric_dot(&jv, ve) >= 0.0 { 1.0 } else { -1.0 };
            let diff: Vec<f64> = jv.iter().zip(ve).map(|(a, b)| a - sign * b).collect();
            rows.push(EigenTransferRow {
                lambda_limit: *l0,
                lambda_perturbed: *le,
                transfer_error: metric_norm(&diff),
                ambiguous,
            });
        } else {
            // projection of each transplanted vector onto the matched
            // perturbed subspace (perturbed vectors are metric-orthonormal)
            for i in start..end.min(count) {
                let jv = pair.j.apply(&limit[i].1);
                let mut residual = jv.clone();
                for (_, ve) in &pert[start..end] {
                    let c = metric_dot(&jv, ve);
                    for (r, v) in residual.iter_mut().zip(ve) {
                        *r -= c * v;
                    }
                }
                rows.push(EigenTransferRow {
                    lambda_limit: limit[i].0,
                    lambda_perturbed: pert[i].0,
                    transfer_error: metric_norm(&residual),
                    ambiguous,
                });
            }
        }
        start = end;
    }
    Ok(rows)
}

/// Non-concentration constant of the pair (inner, outer): the square root of
/// the largest generalized eigenvalue of the inner L2 mass against the outer
/// H1 form. Regions are given as predicates on cell centers.
pub fn nonconcentration_constant(
    inner: &dyn Fn(&Point) -> bool,
    outer: &dyn Fn(&Point) -> bool,
    grid: &Grid,
    s: &SolverSettings,
) -> Result<f64> {
    let active: Vec<bool> = (0..grid.cell_count()).map(|i| outer(&grid.center(i))).collect();
    let mask = CellMask::new(*grid, active, Bc::Neumann)?;
    let indicator: Vec<f64> = mask
        .active_cells()
        .iter()
        .map(|&c| if inner(&grid.center(c)) { 1.0 } else { 0.0 })
        .collect();
    if indicator.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let form = assemble_form(DiscreteSpace::new(mask));
    let d = SparseOperator::from_diagonal(&indicator);
    let sob = SobolevMetric { a: &form.laplacian, power: 1, cg_tol: s.tol_cg };
    let lam = metric_opnorm(
        &MetricNormProblem { m: &d, b_left: &sob, b_right: &sob },
        s.tol_norm,
        s.restarts,
        s.seed.wrapping_add(40),
    )?;
    Ok(lam.sqrt())
}
