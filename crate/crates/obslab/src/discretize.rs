//! Cell-centered finite-difference discretization of the torus and its
//! perforated subdomains. A cell is active iff its center lies outside the
//! removed region; Dirichlet conditions enter through ghost-zero edges,
//! Neumann conditions through edge omission.

use crate::error::{Error, Result};
use crate::geometry::{ObstacleSet, Point, SolidRegion, Torus, TubularBand};
use crate::sparsela::SparseOperator;

/// Default lower bound on obstacle-radius / grid-spacing.
pub const DEFAULT_RESOLUTION_GUARD: f64 = 8.0;

/// Periodic cell-centered grid: `n` cells per side, spacing `h = L/n`.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub torus: Torus,
    pub n: usize,
    pub h: f64,
}

pub fn build_grid(torus: Torus, n: usize) -> Result<Grid> {
    if n < 4 {
        return Err(Error::Resolution { msg: format!("grid with n = {n} is too coarse"), required_n: 4 });
    }
    Ok(Grid { torus, n, h: torus.side / n as f64 })
}

impl Grid {
    pub fn cell_count(&self) -> usize {
        self.n.pow(self.torus.m as u32)
    }

    /// Row-major flat index (axis 0 most significant).
    pub fn index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for &c in &coords[..self.torus.m] {
            idx = idx * self.n + c % self.n;
        }
        idx
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        let mut rest = idx;
        for a in (0..self.torus.m).rev() {
            c[a] = rest % self.n;
            rest /= self.n;
        }
        c
    }

    pub fn center(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for a in 0..self.torus.m {
            p[a] = (c[a] as f64 + 0.5) * self.h;
        }
        p
    }

    /// Index of the periodic neighbor one cell over along `axis`
    /// (`dir` is +1 or -1).
    pub fn neighbor(&self, idx: usize, axis: usize, dir: isize) -> usize {
        let mut c = self.coords(idx);
        c[axis] = (c[axis] as isize + dir).rem_euclid(self.n as isize) as usize;
        self.index(&c[..self.torus.m])
    }
}

/// Boundary behavior at inactive neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

/// Removed region presented to the classifier.
pub enum Region<'a> {
    /// Nothing removed; all cells active.
    None,
    /// Union of small balls; the resolution guard applies to their radius.
    Obstacles(&'a ObstacleSet),
    /// A solid region (cells inside it are removed).
    Solid(&'a SolidRegion),
    /// A solid region together with obstacle balls (both removed).
    SolidPlusObstacles(&'a SolidRegion, &'a ObstacleSet),
    /// Arbitrary predicate; no guard can be checked.
    Predicate(&'a dyn Fn(&Point) -> bool),
}

/// Active-cell mask over a grid.
#[derive(Debug, Clone)]
pub struct CellMask {
    pub grid: Grid,
    pub active: Vec<bool>,
    pub bc: Bc,
    /// grid index of each active cell, ascending
    active_cells: Vec<usize>,
    /// active-cell rank per grid index (usize::MAX when inactive)
    rank: Vec<usize>,
}

impl CellMask {
    pub fn new(grid: Grid, active: Vec<bool>, bc: Bc) -> Result<Self> {
        assert_eq!(active.len(), grid.cell_count());
        if !active.iter().any(|&a| a) {
            return Err(Error::Geometry("mask has no active cells".into()));
        }
        let mut active_cells = Vec::new();
        let mut rank = vec![usize::MAX; active.len()];
        for (i, &a) in active.iter().enumerate() {
            if a {
                rank[i] = active_cells.len();
                active_cells.push(i);
            }
        }
        Ok(Self { grid, active, bc, active_cells, rank })
    }

    pub fn dim(&self) -> usize {
        self.active_cells.len()
    }

    pub fn active_cells(&self) -> &[usize] {
        &self.active_cells
    }

    /// Rank of a grid cell among active cells, if active.
    pub fn rank_of(&self, grid_idx: usize) -> Option<usize> {
        let r = self.rank[grid_idx];
        (r != usize::MAX).then_some(r)
    }

    /// True iff every cell active here is active in `other` (same grid).
    pub fn is_subset_of(&self, other: &CellMask) -> bool {
        assert_eq!(self.grid.n, other.grid.n);
        self.active.iter().zip(&other.active).all(|(&a, &b)| !a || b)
    }

    /// Restrict a full-grid vector to active cells.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.grid.cell_count());
        self.active_cells.iter().map(|&i| full[i]).collect()
    }

    /// Portable row-major bitmap with a text header (debug aid).
    pub fn to_bitmap(&self) -> String {
        let mut s = format!("m={} n={} L={}\n", self.grid.torus.m, self.grid.n, self.grid.torus.side);
        for &a in &self.active {
            s.push(if a { '1' } else { '0' });
        }
        s.push('\n');
        s
    }
}

/// Classify cells: active iff the cell center lies outside the region.
/// For ball obstacles the guard `radius/h >= min_resolution` is enforced.
pub fn classify_cells(grid: &Grid, region: &Region, min_resolution: f64, bc: Bc) -> Result<CellMask> {
    if let Region::Obstacles(obs) | Region::SolidPlusObstacles(_, obs) = region {
        if !obs.is_empty() && obs.radius / grid.h < min_resolution {
            let required_n =
                (min_resolution * grid.torus.side / obs.radius).ceil() as usize;
            return Err(Error::Resolution {
                msg: format!(
                    "obstacle radius {} spans only {:.2} cells (guard {})",
                    obs.radius,
                    obs.radius / grid.h,
                    min_resolution
                ),
                required_n,
            });
        }
    }
    let t = &grid.torus;
    let inside = |x: &Point| -> bool {
        match region {
            Region::None => false,
            Region::Obstacles(obs) => crate::geometry::in_obstacle(x, obs),
            Region::Solid(s) => s.contains(x, t),
            Region::SolidPlusObstacles(s, obs) => {
                s.contains(x, t) || crate::geometry::in_obstacle(x, obs)
            }
            Region::Predicate(p) => p(x),
        }
    };
    let active: Vec<bool> = (0..grid.cell_count())
        .map(|i| !inside(&grid.center(i)))
        .collect();
    CellMask::new(*grid, active, bc)
}

/// Discrete L2 space over the active cells, with the uniform mass `h^m`.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    pub mask: CellMask,
    pub dim: usize,
    pub mass: f64,
}

impl DiscreteSpace {
    pub fn new(mask: CellMask) -> Self {
        let dim = mask.dim();
        let mass = mask.grid.h.powi(mask.grid.torus.m as i32);
        Self { mask, dim, mass }
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.mass * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }
}

/// Energy form on a discrete space: difference matrix `D` (edges x cells),
/// edge weights, and the operator `Lap = D^T W D / h^m` realized so that
/// `<Lap f, f>_mass` is the discrete Dirichlet energy.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    pub space: DiscreteSpace,
    /// signed difference matrix; ghost edges have a single +1 entry
    pub gradient: SparseOperator,
    /// the operator of the form w.r.t. the mass inner product
    pub laplacian: SparseOperator,
    /// number of ghost (Dirichlet boundary) edges
    pub ghost_edges: usize,
}

/// Assemble the energy form. Neumann: edges only between active cells.
/// Dirichlet: additionally one ghost-zero edge per active/inactive adjacency.
pub fn assemble_form(space: DiscreteSpace) -> DiscreteForm {
    let mask = &space.mask;
    let grid = &mask.grid;
    let m = grid.torus.m;
    let mut d_triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut edge = 0usize;
    let mut ghost_edges = 0usize;
    for (row, &cell) in mask.active_cells().iter().enumerate() {
        for axis in 0..m {
            let nb = grid.neighbor(cell, axis, 1);
            match mask.rank_of(nb) {
                Some(nb_row) => {
                    if nb != cell {
                        d_triplets.push((edge, row, -1.0));
                        d_triplets.push((edge, nb_row, 1.0));
                        edge += 1;
                    }
                }
                None => {
                    if mask.bc == Bc::Dirichlet {
                        d_triplets.push((edge, row, 1.0));
                        edge += 1;
                        ghost_edges += 1;
                    }
                }
            }
            // ghost edge on the minus side is owned by the active cell too
            let nb_minus = grid.neighbor(cell, axis, -1);
            if mask.rank_of(nb_minus).is_none() && mask.bc == Bc::Dirichlet {
                d_triplets.push((edge, row, 1.0));
                edge += 1;
                ghost_edges += 1;
            }
        }
    }
    let gradient = SparseOperator::from_triplets(edge, space.dim, d_triplets)
        .expect("assembly produces valid triplets");
    let mut laplacian = gradient.transpose().matmul(&gradient);
    laplacian.scale(1.0 / (grid.h * grid.h));
    let laplacian = laplacian
        .assert_symmetric(0.0)
        .expect("D^T D is symmetric by construction");
    DiscreteForm { space, gradient, laplacian, ghost_edges }
}

impl DiscreteForm {
    /// Discrete Dirichlet energy `sum_edges (df)^2 h^{m-2}`.
    pub fn energy(&self, f: &[f64]) -> f64 {
        let df = self.gradient.apply(f);
        let g = &self.space.mask.grid;
        let scale = g.h.powi(g.torus.m as i32 - 2);
        scale * df.iter().map(|x| x * x).sum::<f64>()
    }

    /// H1-norm squared: `||f||^2 + energy(f)`.
    pub fn h1_norm_sq(&self, f: &[f64]) -> f64 {
        self.space.inner(f, f) + self.energy(f)
    }
}

/// Cutoff profiles sampled at cell centers.
pub enum CutoffSpec<'a> {
    /// Radial harmonic profile around every obstacle center:
    /// 0 on `r <= eps`, 1 on `r >= eps_plus`, interpolated by the harmonic
    /// antiderivative in between.
    RadialHarmonic { obstacles: &'a ObstacleSet, eps: f64, eps_plus: f64 },
    /// Smoothstep in the signed distance to a solid region, rising from 0 at
    /// the boundary to 1 at distance `width`.
    Tubular { band: &'a TubularBand },
}

/// Antiderivative of `1/s^{m-1}`, the radial harmonic profile generator.
pub fn harmonic_antiderivative(m: usize, s: f64) -> f64 {
    if m == 2 {
        s.ln()
    } else {
        -1.0 / ((m as f64 - 2.0) * s.powi(m as i32 - 2))
    }
}

/// Evaluate the cutoff on every grid cell center (callers restrict to their
/// active sets). Values lie in [0, 1].
pub fn sample_cutoff(grid: &Grid, spec: &CutoffSpec) -> Result<Vec<f64>> {
    match spec {
        CutoffSpec::RadialHarmonic { obstacles, eps, eps_plus } => {
            if !(eps < eps_plus) {
                return Err(Error::Config(format!("cutoff needs eps < eps_plus, got {eps} >= {eps_plus}")));
            }
            let m = grid.torus.m;
            let h_eps = harmonic_antiderivative(m, *eps);
            let denom = harmonic_antiderivative(m, *eps_plus) - h_eps;
            let vals = (0..grid.cell_count())
                .map(|i| {
                    let r = obstacles.centers.distance_to(&grid.center(i));
                    if r <= *eps {
                        0.0
                    } else if r >= *eps_plus {
                        1.0
                    } else {
                        (harmonic_antiderivative(m, r) - h_eps) / denom
                    }
                })
                .collect();
            Ok(vals)
        }
        CutoffSpec::Tubular { band } => {
            let vals = (0..grid.cell_count())
                .map(|i| {
                    let d = band.region.signed_distance(&grid.center(i), &grid.torus);
                    smoothstep(d / band.width)
                })
                .collect();
            Ok(vals)
        }
    }
}

/// Clamped cubic smoothstep `3r^2 - 2r^3`; slope bounded by 3/2.
pub fn smoothstep(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r >= 1.0 {
        1.0
    } else {
        r * r * (3.0 - 2.0 * r)
    }
}

/// Euclidean norm (mass-weighted) of divided second differences over
/// interior stencils: per active cell and axis whose two axis neighbors are
/// both active.
pub fn discrete_h2_seminorm(form: &DiscreteForm, f: &[f64]) -> f64 {
    let mask = &form.space.mask;
    let grid = &mask.grid;
    let h2 = grid.h * grid.h;
    let mut sum = 0.0;
    for (row, &cell) in mask.active_cells().iter().enumerate() {
        for axis in 0..grid.torus.m {
            let p = mask.rank_of(grid.neighbor(cell, axis, 1));
            let m = mask.rank_of(grid.neighbor(cell, axis, -1));
            if let (Some(p), Some(m)) = (p, m) {
                let d2 = (f[p] - 2.0 * f[row] + f[m]) / h2;
                sum += d2 * d2;
            }
        }
    }
    (form.space.mass * sum).sqrt()
}
