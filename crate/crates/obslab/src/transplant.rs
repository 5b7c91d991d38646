//! Identification operators between the unperturbed and perturbed discrete
//! spaces for the three obstacle scenarios. All four maps are exact sparse
//! matrices; compositions and adjoints hold to machine precision by
//! construction.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{
    assemble_form, classify_cells, sample_cutoff, Bc, CellMask, CutoffSpec, DiscreteForm,
    DiscreteSpace, Grid, Region,
};
use crate::error::{Error, Result};
use crate::geometry::{check_cover_multiplicity, tubular_band, ObstacleSet, SolidRegion};
use crate::sparsela::{
    metric_opnorm, FnOp, MetricNormProblem, SobolevMetric, SparseOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    NeuFade,
    DirFade,
    DirSolid,
}

/// The unit of certification: two energy forms and the four identification
/// operators between their spaces.
pub struct FormPair {
    pub kind: ScenarioKind,
    /// form of the limit space H
    pub limit: DiscreteForm,
    /// form of the perturbed space H~
    pub perturbed: DiscreteForm,
    /// J : H -> H~
    pub j: SparseOperator,
    /// J' : H~ -> H
    pub j_prime: SparseOperator,
    /// J1 : H -> H~ (form-domain version of J)
    pub j1: SparseOperator,
    /// J'1 : H~ -> H (form-domain version of J')
    pub j1_prime: SparseOperator,
    /// order of the equivalence (even)
    pub k: u32,
}

/// Restriction matrix from the space of `sup` onto the space of `sub`;
/// `sub`'s active cells must be a subset of `sup`'s.
fn restriction(sub: &CellMask, sup: &CellMask) -> SparseOperator {
    assert!(sub.is_subset_of(sup), "restriction needs nested masks");
    let triplets = sub
        .active_cells()
        .iter()
        .enumerate()
        .map(|(row, &cell)| {
            let col = sup.rank_of(cell).expect("nested mask");
            (row, col, 1.0)
        })
        .collect();
    SparseOperator::from_triplets(sub.dim(), sup.dim(), triplets).expect("valid restriction")
}

/// Neumann fading: H = full torus, H~ = torus minus the balls with the
/// Neumann form. J restricts, J' extends by zero, J'1 extends harmonically.
pub fn build_neu_fade(
    obstacles: &ObstacleSet,
    grid: &Grid,
    min_resolution: f64,
) -> Result<FormPair> {
    let full = classify_cells(grid, &Region::None, min_resolution, Bc::Neumann)?;
    let perforated = classify_cells(grid, &Region::Obstacles(obstacles), min_resolution, Bc::Neumann)?;
    check_ball_interiors(obstacles, &perforated)?;
    let j = restriction(&perforated, &full);
    let j_prime = j.transpose();
    let j1 = j.clone();
    let j1_prime = harmonic_extension(&perforated, &full)?;
    Ok(FormPair {
        kind: ScenarioKind::NeuFade,
        limit: assemble_form(DiscreteSpace::new(full)),
        perturbed: assemble_form(DiscreteSpace::new(perforated)),
        j,
        j_prime,
        j1,
        j1_prime,
        k: 2,
    })
}

fn check_ball_interiors(obstacles: &ObstacleSet, mask: &CellMask) -> Result<()> {
    let grid = &mask.grid;
    for (i, center) in obstacles.centers.centers().iter().enumerate() {
        let covered = (0..grid.cell_count()).any(|c| {
            mask.rank_of(c).is_none()
                && grid.torus.distance(&grid.center(c), center) < obstacles.radius
        });
        if !covered {
            let required_n = (grid.torus.side / obstacles.radius).ceil() as usize * 2;
            return Err(Error::Resolution {
                msg: format!("ball {i} contains no grid cell"),
                required_n,
            });
        }
    }
    Ok(())
}

/// Sparse harmonic extension from the active cells of `sub` to all cells of
/// `sup`: identity on active cells; on each connected component of removed
/// cells, the discrete Laplace equation with the adjacent active ring as
/// Dirichlet data (dense LU per component).
fn harmonic_extension(sub: &CellMask, sup: &CellMask) -> Result<SparseOperator> {
    let grid = &sub.grid;
    let m = grid.torus.m;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    // identity part
    for (row_sub, &cell) in sub.active_cells().iter().enumerate() {
        let row_sup = sup.rank_of(cell).expect("nested mask");
        triplets.push((row_sup, row_sub, 1.0));
    }
    // connected components of removed cells
    let removed: Vec<usize> = (0..grid.cell_count())
        .filter(|&c| sub.rank_of(c).is_none() && sup.rank_of(c).is_some())
        .collect();
    let mut seen = vec![false; grid.cell_count()];
    for &start in &removed {
        if seen[start] {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = vec![start];
        seen[start] = true;
        while let Some(c) = queue.pop() {
            component.push(c);
            for axis in 0..m {
                for dir in [-1isize, 1] {
                    let nb = grid.neighbor(c, axis, dir);
                    if !seen[nb] && sub.rank_of(nb).is_none() && sup.rank_of(nb).is_some() {
                        seen[nb] = true;
                        queue.push(nb);
                    }
                }
            }
        }
        component.sort_unstable();
        let local: std::collections::HashMap<usize, usize> =
            component.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let nloc = component.len();
        // interior Laplace system and its ring couplings
        let mut a = DMatrix::zeros(nloc, nloc);
        let mut ring_cols: Vec<usize> = Vec::new();
        let mut ring_rank: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut b_entries: Vec<(usize, usize)> = Vec::new(); // (local row, ring index)
        for (i, &c) in component.iter().enumerate() {
            for axis in 0..m {
                for dir in [-1isize, 1] {
                    let nb = grid.neighbor(c, axis, dir);
                    a[(i, i)] += 1.0;
                    if let Some(&jloc) = local.get(&nb) {
                        a[(i, jloc)] -= 1.0;
                    } else if let Some(r) = sub.rank_of(nb) {
                        let ring_idx = *ring_rank.entry(r).or_insert_with(|| {
                            ring_cols.push(r);
                            ring_cols.len() - 1
                        });
                        b_entries.push((i, ring_idx));
                    } else {
                        // neighbor outside sup: reflecting, drop the edge
                        a[(i, i)] -= 1.0;
                    }
                }
            }
        }
        let lu = a.lu();
        let mut ext = DMatrix::zeros(nloc, ring_cols.len());
        for ring_idx in 0..ring_cols.len() {
            let mut rhs = DVector::zeros(nloc);
            for &(row, ri) in &b_entries {
                if ri == ring_idx {
                    rhs[row] += 1.0;
                }
            }
            let x = lu.solve(&rhs).ok_or_else(|| {
                Error::Solver("singular local Laplace system in harmonic extension".into())
            })?;
            ext.set_column(ring_idx, &x);
        }
        for (i, &c) in component.iter().enumerate() {
            let row_sup = sup.rank_of(c).expect("component inside sup");
            for (ring_idx, &col_sub) in ring_cols.iter().enumerate() {
                let v = ext[(i, ring_idx)];
                if v != 0.0 {
                    triplets.push((row_sup, col_sub, v));
                }
            }
        }
    }
    SparseOperator::from_triplets(sup.dim(), sub.dim(), triplets)
}

/// Dirichlet fading: H = full torus, H~ = torus minus the balls with the
/// Dirichlet form. J restricts, J' = J'1 extend by zero, J1 multiplies by
/// the radial harmonic cutoff (zeroed on the ghost ring).
pub fn build_dir_fade(
    obstacles: &ObstacleSet,
    eps_plus: f64,
    grid: &Grid,
    min_resolution: f64,
) -> Result<FormPair> {
    let eps = obstacles.radius;
    let eta = obstacles.centers.sep();
    if !(eps < eps_plus && eps_plus <= eta / 4.0 + 1e-12 * eta) {
        return Err(Error::Config(format!(
            "dirichlet fading needs eps < eps_plus <= eta/4 (eps {eps}, eps_plus {eps_plus}, eta {eta})"
        )));
    }
    if eps_plus / grid.h < 4.0 {
        let required_n = (4.0 * grid.torus.side / eps_plus).ceil() as usize;
        return Err(Error::Resolution {
            msg: format!("cutoff outer radius {eps_plus} spans under 4 cells"),
            required_n,
        });
    }
    let full = classify_cells(grid, &Region::None, min_resolution, Bc::Neumann)?;
    let perforated =
        classify_cells(grid, &Region::Obstacles(obstacles), min_resolution, Bc::Dirichlet)?;
    check_ball_interiors(obstacles, &perforated)?;
    let j = restriction(&perforated, &full);
    let j_prime = j.transpose();
    let spec = CutoffSpec::RadialHarmonic { obstacles, eps, eps_plus };
    let chi_full = sample_cutoff(grid, &spec)?;
    let mut chi = perforated.restrict(&chi_full);
    // ghost ring: active cells touching an inactive cell carry value 0 so
    // that J1 lands in the Dirichlet form domain
    for (row, &cell) in perforated.active_cells().iter().enumerate() {
        let ghost = (0..grid.torus.m).any(|axis| {
            [-1isize, 1].iter().any(|&d| perforated.rank_of(grid.neighbor(cell, axis, d)).is_none())
        });
        if ghost {
            chi[row] = 0.0;
        }
    }
    let j1_triplets = perforated
        .active_cells()
        .iter()
        .enumerate()
        .filter(|(row, _)| chi[*row] != 0.0)
        .map(|(row, &cell)| (row, full.rank_of(cell).expect("full mask"), chi[row]))
        .collect();
    let j1 = SparseOperator::from_triplets(perforated.dim(), full.dim(), j1_triplets)?;
    let j1_prime = j_prime.clone();
    Ok(FormPair {
        kind: ScenarioKind::DirFade,
        limit: assemble_form(DiscreteSpace::new(full)),
        perturbed: assemble_form(DiscreteSpace::new(perforated)),
        j,
        j_prime,
        j1,
        j1_prime,
        k: 2,
    })
}

/// Dirichlet solidifying: H = torus minus the solid region S, H~ = torus
/// minus the balls (whose union must lie inside S), both Dirichlet.
/// J = J1 extend by zero, J' restricts, J'1 multiplies by the tubular cutoff.
pub fn build_dir_solid(
    obstacles: &ObstacleSet,
    solid: &SolidRegion,
    eta: f64,
    eps_tilde: f64,
    grid: &Grid,
    min_resolution: f64,
) -> Result<FormPair> {
    let torus = &grid.torus;
    let x0 = classify_cells(grid, &Region::Solid(solid), min_resolution, Bc::Dirichlet)?;
    let xeps = classify_cells(grid, &Region::Obstacles(obstacles), min_resolution, Bc::Dirichlet)?;
    if !x0.is_subset_of(&xeps) {
        return Err(Error::Geometry(
            "solidifying scenario needs the ball union inside the solid region".into(),
        ));
    }
    let (covers, _mult) = check_cover_multiplicity(&obstacles.centers, eta, solid, torus);
    if !covers {
        return Err(Error::Geometry(format!(
            "centers fail to eta-cover the solid region (eta = {eta})"
        )));
    }
    let band = tubular_band(*solid, eps_tilde, torus)?;
    let j = restriction(&x0, &xeps).transpose(); // zero-extension H -> H~
    let j_prime = j.transpose();
    let j1 = j.clone();
    let spec = CutoffSpec::Tubular { band: &band };
    let chi_full = sample_cutoff(grid, &spec)?;
    let chi0 = x0.restrict(&chi_full);
    let j1_prime_triplets = x0
        .active_cells()
        .iter()
        .enumerate()
        .filter(|(row, _)| chi0[*row] != 0.0)
        .map(|(row, &cell)| (row, xeps.rank_of(cell).expect("nested"), chi0[row]))
        .collect();
    let j1_prime = SparseOperator::from_triplets(x0.dim(), xeps.dim(), j1_prime_triplets)?;
    Ok(FormPair {
        kind: ScenarioKind::DirSolid,
        limit: assemble_form(DiscreteSpace::new(x0)),
        perturbed: assemble_form(DiscreteSpace::new(xeps)),
        j,
        j_prime,
        j1,
        j1_prime,
        k: 2,
    })
}

/// Maximal deviation of `J'` from the metric adjoint of `J` over a probing
/// basis (all unit vectors when the spaces are small, 100 seeded random
/// probes otherwise).
pub fn adjoint_check(pair: &FormPair, seed: u64) -> f64 {
    let mass = pair.limit.space.mass; // equal on both sides (same grid)
    let dim_h = pair.j.cols();
    let dim_ht = pair.j.rows();
    if dim_h.max(dim_ht) <= 5000 {
        return mass * pair.j.transpose().max_abs_difference(&pair.j_prime);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = 0.0f64;
    for _ in 0..100 {
        let f: Vec<f64> = (0..dim_h).map(|_| rng.gen::<f64>() - 0.5).collect();
        let u: Vec<f64> = (0..dim_ht).map(|_| rng.gen::<f64>() - 0.5).collect();
        let jf = pair.j.apply(&f);
        let jpu = pair.j_prime.apply(&u);
        let lhs: f64 = jf.iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.iter().zip(&jpu).map(|(a, b)| a * b).sum();
        dev = dev.max(mass * (lhs - rhs).abs());
    }
    dev
}

/// Measured H1-to-H1 operator norm of the harmonic extension `J'1`
/// (boundedness of the extension operator).
pub fn extension_h1_norm(pair: &FormPair, tol: f64, seed: u64) -> Result<f64> {
    let lap = &pair.limit.laplacian;
    let lap_t = &pair.perturbed.laplacian;
    let ext = &pair.j1_prime;
    let op = FnOp {
        rows: ext.rows(),
        cols: ext.cols(),
        fwd: |v: &[f64]| -> Result<Vec<f64>> {
            let e = ext.apply(v);
            let mut y = lap.apply(&e);
            for (yi, ei) in y.iter_mut().zip(&e) {
                *yi += ei;
            }
            Ok(y)
        },
        adj: |v: &[f64]| -> Result<Vec<f64>> {
            let mut y = lap.apply(v);
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi += vi;
            }
            Ok(ext.apply_transpose(&y))
        },
    };
    let bl = SobolevMetric { a: lap, power: 1, cg_tol: 1e-9 };
    let br = SobolevMetric { a: lap_t, power: 1, cg_tol: 1e-9 };
    let p = MetricNormProblem { m: &op, b_left: &bl, b_right: &br };
    metric_opnorm(&p, tol, 3, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_grid;
    use crate::geometry::{make_lattice_centers, SeparatedSet, Torus};

    fn t2() -> Torus {
        Torus::new(2, 1.0).unwrap()
    }

    fn small_neu_pair() -> FormPair {
        let grid = build_grid(t2(), 32).unwrap();
        let set = make_lattice_centers(&t2(), 0.5).unwrap();
        let obs = ObstacleSet::new(set, 1.0 / 8.0).unwrap();
        build_neu_fade(&obs, &grid, 4.0).unwrap()
    }

    fn small_dir_pair() -> FormPair {
        let grid = build_grid(t2(), 64).unwrap();
        let set = make_lattice_centers(&t2(), 0.5).unwrap(); // eta = 1/4
        let obs = ObstacleSet::new(set, 1.0 / 32.0).unwrap();
        build_dir_fade(&obs, 1.0 / 16.0, &grid, 2.0).unwrap()
    }

    fn small_solid_pair() -> FormPair {
        let grid = build_grid(t2(), 64).unwrap();
        let s =
            SolidRegion::box_from_corners([0.25, 0.25, 0.0], [0.75, 0.75, 0.0], &t2()).unwrap();
        let eps = 1.0 / 32.0;
        let all = make_lattice_centers(&t2(), 2.0 * eps).unwrap();
        let inside: Vec<_> = all
            .centers()
            .iter()
            .filter(|c| s.signed_distance(c, &t2()) <= -eps + 1e-12)
            .copied()
            .collect();
        let set = SeparatedSet::new(inside, eps, t2()).unwrap();
        let obs = ObstacleSet::new(set, eps).unwrap();
        build_dir_solid(&obs, &s, 2.0 * eps, 0.1, &grid, 2.0).unwrap()
    }

    #[test]
    fn neu_fade_jjprime_identity() {
        let pair = small_neu_pair();
        let prod = pair.j.matmul(&pair.j_prime);
        let id = SparseOperator::identity(pair.perturbed.space.dim);
        assert_eq!(prod.max_abs_difference(&id), 0.0);
    }

    #[test]
    fn neu_fade_restriction_kills_ball_support() {
        let pair = small_neu_pair();
        // f = indicator of removed cells, extended into the full space
        let grid = &pair.limit.space.mask.grid;
        let perforated = &pair.perturbed.space.mask;
        let f: Vec<f64> = pair
            .limit
            .space
            .mask
            .active_cells()
            .iter()
            .map(|&c| if perforated.rank_of(c).is_none() { 1.0 } else { 0.0 })
            .collect();
        assert!(f.contains(&1.0));
        let jf = pair.j.apply(&f);
        assert!(jf.iter().all(|&x| x == 0.0));
        assert_eq!(grid.n, 32);
    }

    #[test]
    fn harmonic_extension_preserves_constants() {
        let pair = small_neu_pair();
        let u = vec![1.0; pair.perturbed.space.dim];
        let eu = pair.j1_prime.apply(&u);
        for v in &eu {
            assert!((v - 1.0).abs() < 1e-10, "extension of constant drifted: {v}");
        }
    }

    #[test]
    fn harmonic_extension_maximum_principle() {
        let pair = small_neu_pair();
        let grid = &pair.limit.space.mask.grid;
        let u: Vec<f64> = pair
            .perturbed
            .space
            .mask
            .active_cells()
            .iter()
            .map(|&c| {
                let p = grid.center(c);
                (2.0 * std::f64::consts::PI * p[0]).sin() + 0.3 * p[1]
            })
            .collect();
        let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eu = pair.j1_prime.apply(&u);
        for v in &eu {
            assert!(*v >= min - 1e-10 && *v <= max + 1e-10);
        }
    }

    #[test]
    fn dir_fade_compositions() {
        let pair = small_dir_pair();
        // J J' = id on the perturbed space
        let prod = pair.j.matmul(&pair.j_prime);
        let id = SparseOperator::identity(pair.perturbed.space.dim);
        assert_eq!(prod.max_abs_difference(&id), 0.0);
        // J' J f = f restricted-and-zeroed: diagonal 0/1 matrix
        let jpj = pair.j_prime.matmul(&pair.j);
        for r in 0..jpj.rows() {
            for c in 0..jpj.cols() {
                let v = jpj.get(r, c);
                if r == c {
                    assert!(v == 0.0 || v == 1.0);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn dir_fade_j1_vanishes_on_ghost_ring() {
        let pair = small_dir_pair();
        let mask = &pair.perturbed.space.mask;
        let grid = &mask.grid;
        for (row, &cell) in mask.active_cells().iter().enumerate() {
            let ghost = (0..2).any(|axis| {
                [-1isize, 1].iter().any(|&d| mask.rank_of(grid.neighbor(cell, axis, d)).is_none())
            });
            if ghost {
                for c in 0..pair.j1.cols() {
                    assert_eq!(pair.j1.get(row, c), 0.0);
                }
            }
        }
    }

    #[test]
    fn dir_fade_cutoff_gradient_envelope() {
        // the sampled cutoff's discrete gradient obeys the analytic envelope
        let grid = build_grid(t2(), 128).unwrap();
        let set = SeparatedSet::new(vec![[0.5, 0.5, 0.0]], 0.25, t2()).unwrap();
        let eps = 1.0 / 16.0;
        let eps_plus = 3.0 / 16.0;
        let obs = ObstacleSet::new(set, eps).unwrap();
        let spec = CutoffSpec::RadialHarmonic { obstacles: &obs, eps, eps_plus };
        let chi = sample_cutoff(&grid, &spec).unwrap();
        // analytic sup of |chi'| on [eps, eps_plus] is at r = eps
        let dh = (eps_plus.ln() - eps.ln()).abs();
        let sup_slope = (1.0 / eps) / dh;
        let envelope = sup_slope * (1.0 + 2.0 * grid.h / eps);
        for cell in 0..grid.cell_count() {
            for axis in 0..2 {
                let nb = grid.neighbor(cell, axis, 1);
                let slope = (chi[nb] - chi[cell]).abs() / grid.h;
                assert!(slope <= envelope, "slope {slope} exceeds envelope {envelope}");
            }
        }
    }

    #[test]
    fn dir_fade_guards() {
        let grid = build_grid(t2(), 32).unwrap();
        let set = make_lattice_centers(&t2(), 0.5).unwrap();
        let obs = ObstacleSet::new(set.clone(), 1.0 / 16.0).unwrap();
        // eps_plus above eta/4
        assert!(build_dir_fade(&obs, 0.2, &grid, 2.0).is_err());
        // eps_plus under four cells
        let obs2 = ObstacleSet::new(set, 1.0 / 32.0).unwrap();
        assert!(matches!(
            build_dir_fade(&obs2, 1.0 / 16.0, &grid, 2.0),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn dir_solid_jprime_j_identity() {
        let pair = small_solid_pair();
        let prod = pair.j_prime.matmul(&pair.j);
        let id = SparseOperator::identity(pair.limit.space.dim);
        assert_eq!(prod.max_abs_difference(&id), 0.0);
    }

    #[test]
    fn dir_solid_jprime_kills_interior_support() {
        let pair = small_solid_pair();
        // u supported strictly inside S (off the balls): J' u = 0
        let s =
            SolidRegion::box_from_corners([0.25, 0.25, 0.0], [0.75, 0.75, 0.0], &t2()).unwrap();
        let mask = &pair.perturbed.space.mask;
        let grid = &mask.grid;
        let u: Vec<f64> = mask
            .active_cells()
            .iter()
            .map(|&c| if s.signed_distance(&grid.center(c), &t2()) < -0.01 { 1.0 } else { 0.0 })
            .collect();
        assert!(u.contains(&1.0));
        let jpu = pair.j_prime.apply(&u);
        assert!(jpu.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dir_solid_cutoff_support() {
        let pair = small_solid_pair();
        let mask = &pair.limit.space.mask;
        let grid = &mask.grid;
        let s =
            SolidRegion::box_from_corners([0.25, 0.25, 0.0], [0.75, 0.75, 0.0], &t2()).unwrap();
        let ones = vec![1.0; pair.perturbed.space.dim];
        let chi = pair.j1_prime.apply(&ones);
        for (row, &cell) in mask.active_cells().iter().enumerate() {
            let d = s.signed_distance(&grid.center(cell), &t2());
            if d >= 0.1 {
                assert!((chi[row] - 1.0).abs() < 1e-14);
            }
            assert!((0.0..=1.0 + 1e-14).contains(&chi[row]));
        }
    }

    #[test]
    fn dir_solid_rejects_balls_outside_s() {
        let grid = build_grid(t2(), 64).unwrap();
        let s =
            SolidRegion::box_from_corners([0.25, 0.25, 0.0], [0.75, 0.75, 0.0], &t2()).unwrap();
        let set = make_lattice_centers(&t2(), 1.0 / 8.0).unwrap(); // centers everywhere
        let obs = ObstacleSet::new(set, 1.0 / 32.0).unwrap();
        assert!(build_dir_solid(&obs, &s, 1.0 / 8.0, 0.1, &grid, 2.0).is_err());
    }

    #[test]
    fn adjoints_exact_all_builders() {
        assert!(adjoint_check(&small_neu_pair(), 1) <= 1e-12);
        assert!(adjoint_check(&small_dir_pair(), 1) <= 1e-12);
        assert!(adjoint_check(&small_solid_pair(), 1) <= 1e-12);
    }

    #[test]
    fn adjoint_check_detects_corruption() {
        let mut pair = small_neu_pair();
        let dim_h = pair.j.cols();
        let dim_ht = pair.j.rows();
        let mut bad = pair.j.transpose();
        let noise = SparseOperator::from_triplets(dim_h, dim_ht, vec![(0, 0, 0.37)]).unwrap();
        bad = bad.sub(&noise);
        pair.j_prime = bad;
        assert!(adjoint_check(&pair, 1) > 1e-6);
    }

    #[test]
    fn j_norm_is_one() {
        use crate::sparsela::{L2Metric, MetricNormProblem};
        for pair in [small_neu_pair(), small_dir_pair(), small_solid_pair()] {
            let bl = L2Metric { dim: pair.j.rows() };
            let br = L2Metric { dim: pair.j.cols() };
            let p = MetricNormProblem { m: &pair.j, b_left: &bl, b_right: &br };
            let n = metric_opnorm(&p, 1e-8, 3, 17).unwrap();
            assert!((n - 1.0).abs() <= 1e-6, "norm of J drifted: {n}");
        }
    }

    #[test]
    fn extension_h1_norm_finite() {
        let pair = small_neu_pair();
        let n = extension_h1_norm(&pair, 1e-6, 3).unwrap();
        assert!((1.0 - 1e-6..50.0).contains(&n), "H1 norm of extension: {n}");
    }
}
