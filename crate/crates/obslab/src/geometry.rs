//! Flat periodic geometry: the torus, separated center sets, ball unions and
//! solid regions with exact signed distance functions.
//!
//! Everything here is pure value-semantics; no mesh or grid is involved yet.

use crate::error::{Error, Result};

/// A point in the fundamental domain `[0, L)^m`. Components beyond the
/// dimension of the ambient torus are zero.
pub type Point = [f64; 3];

/// Flat torus `R^m / (L Z)^m` with `m` in {2, 3}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torus {
    pub m: usize,
    pub side: f64,
}

impl Torus {
    pub fn new(m: usize, side: f64) -> Result<Self> {
        if m != 2 && m != 3 {
            return Err(Error::Geometry(format!("dimension m must be 2 or 3, got {m}")));
        }
        if !(side > 0.0) {
            return Err(Error::Geometry(format!("side length must be positive, got {side}")));
        }
        Ok(Self { m, side })
    }

    /// Wrap a coordinate difference into `[-L/2, L/2]`.
    #[inline]
    pub fn wrap(&self, d: f64) -> f64 {
        let l = self.side;
        let mut d = d % l;
        if d > 0.5 * l {
            d -= l;
        } else if d < -0.5 * l {
            d += l;
        }
        d
    }

    /// Minimal periodic Euclidean distance between two points.
    #[inline]
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.distance_sq(x, y).sqrt()
    }

    #[inline]
    pub fn distance_sq(&self, x: &Point, y: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            let d = self.wrap(x[i] - y[i]);
            s += d * d;
        }
        s
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.m as i32)
    }
}

/// Minimal periodic Euclidean distance (free-function form).
pub fn torus_distance(x: &Point, y: &Point, torus: &Torus) -> f64 {
    torus.distance(x, y)
}

/// A finite set of centers with a claimed separation radius: every pair of
/// distinct centers has torus distance `>= 2 * sep`.
#[derive(Debug, Clone)]
pub struct SeparatedSet {
    centers: Vec<Point>,
    sep: f64,
    torus: Torus,
}

impl SeparatedSet {
    pub fn new(centers: Vec<Point>, sep: f64, torus: Torus) -> Result<Self> {
        if !(sep > 0.0) {
            return Err(Error::Geometry(format!("separation radius must be positive, got {sep}")));
        }
        let slack = 1e-12 * torus.side;
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                let d = torus.distance(&centers[i], &centers[j]);
                if d < 2.0 * sep - slack {
                    return Err(Error::Geometry(format!(
                        "centers {i} and {j} at distance {d:.6e} violate 2*sep = {:.6e}",
                        2.0 * sep
                    )));
                }
            }
        }
        Ok(Self { centers, sep, torus })
    }

    /// The empty set (used for the no-obstacle baseline). `sep` is infinite.
    pub fn empty(torus: Torus) -> Self {
        Self { centers: Vec::new(), sep: f64::INFINITY, torus }
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn sep(&self) -> f64 {
        self.sep
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Distance from `x` to the nearest center (infinite for the empty set).
    pub fn distance_to(&self, x: &Point) -> f64 {
        self.centers
            .iter()
            .map(|p| self.torus.distance_sq(x, p))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }
}

/// Regular lattice of centers with spacing `L / c` for an integer `c`,
/// offset by half a spacing in each axis. The separation radius is
/// `spacing / 2`.
pub fn make_lattice_centers(torus: &Torus, spacing: f64) -> Result<SeparatedSet> {
    if !(spacing > 0.0) {
        return Err(Error::Geometry(format!("lattice spacing must be positive, got {spacing}")));
    }
    let ratio = torus.side / spacing;
    let c = ratio.round();
    if c < 1.0 || (ratio - c).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Geometry(format!(
            "side/spacing = {ratio} is not a positive integer; pick spacing = L/c"
        )));
    }
    let c = c as usize;
    let mut centers = Vec::with_capacity(c.pow(torus.m as u32));
    let mut idx = vec![0usize; torus.m];
    loop {
        let mut p: Point = [0.0; 3];
        for (a, &i) in idx.iter().enumerate() {
            p[a] = (i as f64 + 0.5) * spacing;
        }
        centers.push(p);
        // odometer over m axes
        let mut axis = 0;
        loop {
            if axis == torus.m {
                return SeparatedSet::new(centers, 0.5 * spacing, *torus);
            }
            idx[axis] += 1;
            if idx[axis] < c {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Disjoint union of open balls of equal radius around a separated set.
#[derive(Debug, Clone)]
pub struct ObstacleSet {
    pub centers: SeparatedSet,
    pub radius: f64,
}

impl ObstacleSet {
    pub fn new(centers: SeparatedSet, radius: f64) -> Result<Self> {
        if centers.is_empty() {
            if radius < 0.0 {
                return Err(Error::Geometry("negative obstacle radius".into()));
            }
            return Ok(Self { centers, radius });
        }
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("ball radius must be positive, got {radius}")));
        }
        // open balls of radius == sep touch but stay disjoint
        if radius > centers.sep() * (1.0 + 1e-12) {
            return Err(Error::Geometry(format!(
                "ball radius {radius} exceeds separation {}; balls would overlap",
                centers.sep()
            )));
        }
        Ok(Self { centers, radius })
    }

    pub fn empty(torus: Torus) -> Self {
        Self { centers: SeparatedSet::empty(torus), radius: 0.0 }
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Open-ball membership: `x` is inside iff its torus distance to some center
/// is strictly below the radius.
pub fn in_obstacle(x: &Point, obstacles: &ObstacleSet) -> bool {
    if obstacles.is_empty() {
        return false;
    }
    obstacles.centers.distance_to(x) < obstacles.radius
}

/// Shape of a solid region, strictly contained in one fundamental domain.
#[derive(Debug, Clone, Copy)]
pub enum SolidRegion {
    /// Axis-aligned box given by its center and half-extents.
    Box { center: Point, half: Point },
    /// Round disk (m=2) / ball (m=3).
    Ball { center: Point, radius: f64 },
}

impl SolidRegion {
    /// Box from opposite corners (in fundamental-domain coordinates).
    pub fn box_from_corners(min: Point, max: Point, torus: &Torus) -> Result<Self> {
        let mut center = [0.0; 3];
        let mut half = [0.0; 3];
        for a in 0..torus.m {
            if !(max[a] > min[a]) {
                return Err(Error::Geometry(format!("box corners inverted on axis {a}")));
            }
            center[a] = 0.5 * (min[a] + max[a]);
            half[a] = 0.5 * (max[a] - min[a]);
            if half[a] >= 0.5 * torus.side {
                return Err(Error::Geometry(
                    "box must be strictly contained in one fundamental domain".into(),
                ));
            }
        }
        Ok(SolidRegion::Box { center, half })
    }

    pub fn ball(center: Point, radius: f64, torus: &Torus) -> Result<Self> {
        if !(radius > 0.0) || radius >= 0.5 * torus.side {
            return Err(Error::Geometry(format!("ball radius {radius} invalid for this torus")));
        }
        Ok(SolidRegion::Ball { center, radius })
    }

    /// Exact signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, x: &Point, torus: &Torus) -> f64 {
        match *self {
            SolidRegion::Box { center, half } => {
                let mut out_sq = 0.0;
                let mut inner = f64::NEG_INFINITY;
                for a in 0..torus.m {
                    let q = torus.wrap(x[a] - center[a]).abs() - half[a];
                    if q > 0.0 {
                        out_sq += q * q;
                    }
                    inner = inner.max(q);
                }
                if out_sq > 0.0 {
                    out_sq.sqrt()
                } else {
                    inner
                }
            }
            SolidRegion::Ball { center, radius } => torus.distance(x, &center) - radius,
        }
    }

    pub fn contains(&self, x: &Point, torus: &Torus) -> bool {
        self.signed_distance(x, torus) <= 0.0
    }

    /// Width of the collar in which the signed distance is a valid tubular
    /// coordinate (no self-intersection of the band under periodicity).
    pub fn collar_width(&self, torus: &Torus) -> f64 {
        match *self {
            SolidRegion::Box { half, .. } => {
                let mut w = f64::INFINITY;
                for &ha in &half[..torus.m] {
                    w = w.min(ha);
                    w = w.min(0.5 * torus.side - ha);
                }
                w
            }
            SolidRegion::Ball { radius, .. } => radius.min(0.5 * torus.side - radius),
        }
    }
}

/// Outer tubular band `{ x : 0 < d(x, S) < eps_t }` of a solid region.
#[derive(Debug, Clone, Copy)]
pub struct TubularBand {
    pub region: SolidRegion,
    pub width: f64,
}

pub fn tubular_band(region: SolidRegion, width: f64, torus: &Torus) -> Result<TubularBand> {
    let collar = region.collar_width(torus);
    if !(width > 0.0) || width >= collar {
        return Err(Error::Geometry(format!(
            "band width {width} must lie in (0, collar) with collar = {collar}"
        )));
    }
    Ok(TubularBand { region, width })
}

impl TubularBand {
    pub fn contains(&self, x: &Point, torus: &Torus) -> bool {
        let d = self.region.signed_distance(x, torus);
        d > 0.0 && d < self.width
    }
}

/// Verify that `S` is covered by the closed `eta`-neighbourhood of the
/// centers (checked on a sample grid of spacing `<= eta/8`) and compute the
/// maximal overlap multiplicity of the open `eta`-balls.
pub fn check_cover_multiplicity(
    set: &SeparatedSet,
    eta: f64,
    region: &SolidRegion,
    torus: &Torus,
) -> (bool, usize) {
    assert!(eta > 0.0, "eta must be positive");
    // Covering: closed neighbourhood convention (distance <= eta).
    let spacing = eta / 8.0;
    let n = (torus.side / spacing).ceil() as usize;
    let s = torus.side / n as f64;
    let slack = 1e-12 * torus.side;
    let mut covers = true;
    let mut idx = vec![0usize; torus.m];
    'outer: loop {
        let mut x: Point = [0.0; 3];
        for (a, &i) in idx.iter().enumerate() {
            x[a] = (i as f64 + 0.5) * s;
        }
        if region.contains(&x, torus) && set.distance_to(&x) > eta + slack {
            covers = false;
            break 'outer;
        }
        let mut axis = 0;
        loop {
            if axis == torus.m {
                break 'outer;
            }
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
    // Multiplicity: open balls B_eta(p), B_eta(q) intersect iff d(p,q) < 2 eta.
    let thr_sq = (2.0 * eta) * (2.0 * eta) * (1.0 - 1e-12);
    let mut mult = 0usize;
    for p in set.centers() {
        let count = set
            .centers()
            .iter()
            .filter(|q| torus.distance_sq(p, q) < thr_sq)
            .count();
        mult = mult.max(count);
    }
    (covers, mult)
}
