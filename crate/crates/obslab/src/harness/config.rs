//! Scenario configuration: the JSON schema, validation, and resolution of a
//! config into concrete per-epsilon geometry (snapped eta, cutoff radii,
//! grid size).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::discretize::{build_grid, Grid};
use crate::error::{Error, Result};
use crate::geometry::{make_lattice_centers, ObstacleSet, Point, SeparatedSet, SolidRegion, Torus};
use crate::quasiuni::SolverSettings;
use crate::theory::{capacity_regime, Regime};
use crate::transplant::{build_dir_fade, build_dir_solid, build_neu_fade, FormPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    NeuFade,
    DirFade,
    DirSolid,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::NeuFade => "neu_fade",
            Scenario::DirFade => "dir_fade",
            Scenario::DirSolid => "dir_solid",
        }
    }
}

/// How eta is derived from each epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaSchedule {
    /// `eta = eps^alpha` (requires eps < 1)
    Alpha(f64),
    /// `eta = ratio * eps`
    Ratio(f64),
    /// one explicit eta per epsilon
    List(Vec<f64>),
}

/// Solid region of the solidifying scenario, in fundamental-domain
/// coordinates (third component ignored for m = 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolidSpec {
    Box { min: Point, max: Point },
    Ball { center: Point, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub tol_cg: f64,
    pub tol_norm: f64,
    pub restarts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_cg: 1e-9, tol_norm: 1e-6, restarts: 3 }
    }
}

fn default_side() -> f64 {
    1.0
}
fn default_guard() -> f64 {
    4.0
}
fn default_eps_plus_ratio() -> f64 {
    0.25
}
fn default_eigen_count() -> usize {
    10
}
fn default_lambda_fraction() -> f64 {
    0.9
}
fn default_seed() -> u64 {
    1
}

/// One experiment: a scenario, an epsilon sweep, and solver knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub m: usize,
    #[serde(default = "default_side")]
    pub side: f64,
    /// fixed grid size; omitted means the smallest grid meeting the guards
    #[serde(default)]
    pub grid_n: Option<usize>,
    /// lower bound on obstacle-radius / grid-spacing
    #[serde(default = "default_guard")]
    pub resolution_guard: f64,
    /// strictly decreasing obstacle radii
    pub eps: Vec<f64>,
    pub eta: EtaSchedule,
    /// DirFade: cutoff outer radius as a fraction of eta (at most 1/4)
    #[serde(default = "default_eps_plus_ratio")]
    pub eps_plus_ratio: f64,
    /// DirSolid: exponent of the tubular-band width schedule
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub solid: Option<SolidSpec>,
    /// NeuFade only: run the unitary baseline with no obstacles at all
    #[serde(default)]
    pub no_obstacles: bool,
    /// eigenpairs per side to compare; 0 skips the spectral comparison
    #[serde(default = "default_eigen_count")]
    pub eigen_count: usize,
    /// spectral window top as a fraction of the highest compared limit
    /// eigenvalue
    #[serde(default = "default_lambda_fraction")]
    pub lambda_fraction: f64,
    /// heat defect probe times (each in [0.05, 5])
    #[serde(default)]
    pub heat_times: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Concrete geometry for one epsilon of the sweep.
#[derive(Debug, Clone)]
pub struct ResolvedEps {
    pub eps: f64,
    /// eta after snapping to an admissible lattice spacing
    pub eta: f64,
    /// DirFade cutoff outer radius
    pub eps_plus: Option<f64>,
    /// DirSolid tubular band width
    pub eps_tilde: Option<f64>,
    pub grid_n: usize,
    pub warnings: Vec<String>,
}

const MAX_GRID_N: usize = 4096;

impl ScenarioConfig {
    /// Parse and validate a config from JSON. Parse errors carry the path of
    /// the offending field.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(s);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| Error::Config(format!("at {}: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s)
    }

    pub fn torus(&self) -> Result<Torus> {
        Torus::new(self.m, self.side)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            tol_cg: self.tolerances.tol_cg,
            tol_norm: self.tolerances.tol_norm,
            restarts: self.tolerances.restarts,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m != 2 && self.m != 3 {
            return Err(Error::Config(format!("m must be 2 or 3, got {}", self.m)));
        }
        if !(self.side > 0.0) {
            return Err(Error::Config(format!("side must be positive, got {}", self.side)));
        }
        if self.eps.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        for (i, &e) in self.eps.iter().enumerate() {
            if !(e > 0.0 && e < 0.5 * self.side) {
                return Err(Error::Config(format!(
                    "eps[{i}] = {e} must lie in (0, side/2)"
                )));
            }
            if i > 0 && e >= self.eps[i - 1] {
                return Err(Error::Config(format!(
                    "eps must be strictly decreasing; eps[{i}] = {e} >= eps[{}] = {}",
                    i - 1,
                    self.eps[i - 1]
                )));
            }
        }
        match &self.eta {
            EtaSchedule::Alpha(a) => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(Error::Config(format!("eta.alpha = {a} must lie in (0, 1)")));
                }
                if self.eps.iter().any(|&e| e >= 1.0) {
                    return Err(Error::Config(
                        "eta.alpha schedules need eps < 1 so that eps^alpha > eps".into(),
                    ));
                }
            }
            EtaSchedule::Ratio(r) => {
                if !(*r > 1.0) {
                    return Err(Error::Config(format!("eta.ratio = {r} must exceed 1")));
                }
            }
            EtaSchedule::List(l) => {
                if l.len() != self.eps.len() {
                    return Err(Error::Config(format!(
                        "eta.list has {} entries for {} eps values",
                        l.len(),
                        self.eps.len()
                    )));
                }
                for (i, (&eta, &e)) in l.iter().zip(&self.eps).enumerate() {
                    if !(eta > e) {
                        return Err(Error::Config(format!(
                            "eta.list[{i}] = {eta} must exceed eps[{i}] = {e}"
                        )));
                    }
                }
            }
        }
        if !(self.resolution_guard >= 1.0) {
            return Err(Error::Config(format!(
                "resolution_guard = {} must be at least 1",
                self.resolution_guard
            )));
        }
        if !(self.lambda_fraction > 0.0 && self.lambda_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "lambda_fraction = {} must lie in (0, 1]",
                self.lambda_fraction
            )));
        }
        if self.eigen_count > 40 {
            return Err(Error::Config(format!(
                "eigen_count = {} exceeds the solver cap of 40",
                self.eigen_count
            )));
        }
        for &t in &self.heat_times {
            if !(0.05..=5.0).contains(&t) {
                return Err(Error::Config(format!("heat time {t} must lie in [0.05, 5]")));
            }
        }
        let tol = &self.tolerances;
        if !(tol.tol_cg > 0.0 && tol.tol_cg <= 1e-4) {
            return Err(Error::Config(format!("tol_cg = {} must lie in (0, 1e-4]", tol.tol_cg)));
        }
        if !(tol.tol_norm > 0.0 && tol.tol_norm <= 1e-2) {
            return Err(Error::Config(format!(
                "tol_norm = {} must lie in (0, 1e-2]",
                tol.tol_norm
            )));
        }
        if tol.restarts == 0 {
            return Err(Error::Config("tolerances.restarts must be at least 1".into()));
        }

        // scenario-specific fields
        if self.no_obstacles && self.scenario != Scenario::NeuFade {
            return Err(Error::Config("no_obstacles applies only to neu_fade".into()));
        }
        match self.scenario {
            Scenario::NeuFade | Scenario::DirFade => {
                if self.gamma.is_some() {
                    return Err(Error::Config("gamma applies only to dir_solid".into()));
                }
                if self.solid.is_some() {
                    return Err(Error::Config("solid applies only to dir_solid".into()));
                }
            }
            Scenario::DirSolid => {
                let gamma = self
                    .gamma
                    .ok_or_else(|| Error::Config("dir_solid requires gamma".into()))?;
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::Config(format!("gamma = {gamma} must lie in (0, 1)")));
                }
                if self.solid.is_none() {
                    return Err(Error::Config("dir_solid requires a solid region".into()));
                }
                self.solid_region()?; // corners sane
                // the schedule must actually solidify, otherwise the band
                // width (the base below raised to gamma) does not shrink
                for (i, &e) in self.eps.iter().enumerate() {
                    let eta = self.raw_eta(i);
                    let base = if self.m == 2 {
                        eta * eta * e.ln().abs()
                    } else {
                        let alpha = eta.ln() / e.ln();
                        if capacity_regime(self.m, alpha) != Regime::Solidifying {
                            return Err(Error::Config(format!(
                                "eta schedule at eps[{i}] = {e} gives alpha = {alpha:.4}, \
                                 below the capacity threshold; the obstacles do not solidify"
                            )));
                        }
                        eta.powi(self.m as i32) / e.powi(self.m as i32 - 2)
                    };
                    if !(base < 1.0) {
                        return Err(Error::Config(format!(
                            "band width base {base:.4} at eps[{i}] = {e} is not below 1; \
                             no gamma in (0, 1) yields a shrinking tubular band"
                        )));
                    }
                }
            }
        }
        if self.scenario == Scenario::DirFade
            && !(self.eps_plus_ratio > 0.0 && self.eps_plus_ratio <= 0.25)
        {
            return Err(Error::Config(format!(
                "eps_plus_ratio = {} must lie in (0, 1/4]",
                self.eps_plus_ratio
            )));
        }
        Ok(())
    }

    fn raw_eta(&self, i: usize) -> f64 {
        match &self.eta {
            EtaSchedule::Alpha(a) => self.eps[i].powf(*a),
            EtaSchedule::Ratio(r) => r * self.eps[i],
            EtaSchedule::List(l) => l[i],
        }
    }

    pub fn solid_region(&self) -> Result<SolidRegion> {
        let torus = self.torus()?;
        match self.solid.as_ref() {
            Some(SolidSpec::Box { min, max }) => SolidRegion::box_from_corners(*min, *max, &torus),
            Some(SolidSpec::Ball { center, radius }) => {
                SolidRegion::ball(*center, *radius, &torus)
            }
            None => Err(Error::Config("no solid region configured".into())),
        }
    }

    /// Resolve index `i` of the sweep into concrete geometry. Fading
    /// scenarios snap eta so that the obstacle lattice spacing `2 eta`
    /// divides the side; the solidifying scenario instead requires `2 eps`
    /// to divide the side exactly.
    pub fn resolve(&self, i: usize) -> Result<ResolvedEps> {
        let eps = self.eps[i];
        let mut warnings = Vec::new();
        let (eta, lattice_count) = match self.scenario {
            Scenario::NeuFade | Scenario::DirFade => {
                let raw = self.raw_eta(i);
                let mut c = (self.side / (2.0 * raw)).round().max(1.0) as usize;
                // snapping must keep eta above eps
                while c > 1 && self.side / (2.0 * c as f64) <= eps {
                    c -= 1;
                }
                let eta = self.side / (2.0 * c as f64);
                if !(eta > eps) {
                    return Err(Error::Config(format!(
                        "no lattice spacing 2*eta = side/c admits eta > eps = {eps}"
                    )));
                }
                if (eta - raw).abs() > 0.25 * raw {
                    warnings.push(format!(
                        "eta snapped from {raw:.6} to {eta:.6} to fit the lattice"
                    ));
                }
                (eta, c)
            }
            Scenario::DirSolid => {
                // solidifying: lattice spacing is 2 eps, eta is only the
                // covering radius
                let ratio = self.side / (2.0 * eps);
                if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                    return Err(Error::Config(format!(
                        "dir_solid needs side/(2 eps) integer; eps = {eps} gives {ratio}; \
                         pick eps = side/(2c)"
                    )));
                }
                let eta = self.raw_eta(i);
                if !(eta > eps) {
                    return Err(Error::Config(format!(
                        "covering radius eta = {eta} must exceed eps = {eps}"
                    )));
                }
                (eta, ratio.round() as usize)
            }
        };

        let eps_plus = (self.scenario == Scenario::DirFade).then_some(self.eps_plus_ratio * eta);
        if let Some(ep) = eps_plus {
            if !(ep > eps) {
                return Err(Error::Config(format!(
                    "cutoff outer radius eps_plus = {ep} must exceed eps = {eps}; \
                     raise eps_plus_ratio or eta"
                )));
            }
        }

        let eps_tilde = if self.scenario == Scenario::DirSolid {
            let gamma = self.gamma.expect("validated");
            let base = if self.m == 2 {
                eta * eta * eps.ln().abs()
            } else {
                eta.powi(self.m as i32) / eps.powi(self.m as i32 - 2)
            };
            let mut w = base.powf(gamma);
            let collar = self.solid_region()?.collar_width(&self.torus()?);
            if w >= 0.95 * collar {
                warnings.push(format!(
                    "band width {w:.6} clamped to 95% of the collar width {collar:.6}"
                ));
                w = 0.95 * collar;
            }
            Some(w)
        } else {
            None
        };

        let grid_n = self.pick_grid_n(eps, eps_plus, lattice_count)?;
        let h = self.side / grid_n as f64;
        if let Some(w) = eps_tilde {
            if w < 2.0 * h {
                warnings.push(format!(
                    "band width {w:.6} spans under 2 cells at n = {grid_n}"
                ));
            }
        }
        Ok(ResolvedEps { eps, eta, eps_plus, eps_tilde, grid_n, warnings })
    }

    fn pick_grid_n(&self, eps: f64, eps_plus: Option<f64>, lattice_count: usize) -> Result<usize> {
        // an empty obstacle set leaves nothing for the guard to resolve
        let mut need = if self.no_obstacles {
            0
        } else {
            (self.resolution_guard * self.side / eps).ceil() as usize
        };
        if let Some(ep) = eps_plus {
            // the cutoff builder needs eps_plus to span at least 4 cells
            need = need.max((4.0 * self.side / ep).ceil() as usize);
        }
        need = need.max(4);
        if let Some(n) = self.grid_n {
            if n < need {
                return Err(Error::Resolution {
                    msg: format!("configured grid_n = {n} is below the guards"),
                    required_n: need,
                });
            }
            return Ok(n);
        }
        // round up to a multiple of the lattice count so every obstacle sees
        // the same cell pattern
        let n = need.div_ceil(lattice_count) * lattice_count;
        if n > MAX_GRID_N {
            return Err(Error::Resolution {
                msg: format!("auto grid n = {n} exceeds the cap {MAX_GRID_N}"),
                required_n: n,
            });
        }
        Ok(n)
    }

    /// Build the grid and the form pair for one resolved epsilon.
    pub fn build_pair(&self, r: &ResolvedEps) -> Result<(Grid, FormPair)> {
        let torus = self.torus()?;
        let grid = build_grid(torus, r.grid_n)?;
        let guard = self.resolution_guard;
        let pair = match self.scenario {
            Scenario::NeuFade => {
                let obs = if self.no_obstacles {
                    ObstacleSet::empty(torus)
                } else {
                    let set = make_lattice_centers(&torus, 2.0 * r.eta)?;
                    ObstacleSet::new(set, r.eps)?
                };
                build_neu_fade(&obs, &grid, guard)?
            }
            Scenario::DirFade => {
                let set = make_lattice_centers(&torus, 2.0 * r.eta)?;
                let obs = ObstacleSet::new(set, r.eps)?;
                build_dir_fade(&obs, r.eps_plus.expect("resolved"), &grid, guard)?
            }
            Scenario::DirSolid => {
                let solid = self.solid_region()?;
                let all = make_lattice_centers(&torus, 2.0 * r.eps)?;
                let slack = 1e-12 * self.side;
                let inside: Vec<Point> = all
                    .centers()
                    .iter()
                    .filter(|c| solid.signed_distance(c, &torus) <= -r.eps + slack)
                    .copied()
                    .collect();
                if inside.is_empty() {
                    return Err(Error::Config(
                        "solid region admits no obstacle centers at this eps".into(),
                    ));
                }
                let set = SeparatedSet::new(inside, r.eps, torus)?;
                let obs = ObstacleSet::new(set, r.eps)?;
                build_dir_solid(
                    &obs,
                    &solid,
                    r.eta,
                    r.eps_tilde.expect("resolved"),
                    &grid,
                    guard,
                )?
            }
        };
        Ok((grid, pair))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neu_json() -> String {
        r#"{
            "scenario": "neu_fade",
            "m": 2,
            "eps": [0.0625, 0.03125],
            "eta": { "ratio": 4.0 },
            "seed": 7
        }"#
        .to_string()
    }

    #[test]
    fn parse_and_defaults() {
        let cfg = ScenarioConfig::from_json(&neu_json()).unwrap();
        assert_eq!(cfg.scenario, Scenario::NeuFade);
        assert_eq!(cfg.side, 1.0);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.eigen_count, 10);
    }

    #[test]
    fn unknown_field_reports_path() {
        let bad = r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.1], "eta": { "ratio": 4.0 },
                       "epsilon_plus": 0.3 }"#;
        let err = ScenarioConfig::from_json(bad).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn wrong_type_reports_path() {
        let bad = r#"{ "scenario": "neu_fade", "m": 2, "eps": "big", "eta": { "ratio": 4.0 } }"#;
        let err = ScenarioConfig::from_json(bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("eps"), "path missing from: {msg}");
    }

    #[test]
    fn eps_must_decrease() {
        let bad = r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.03, 0.06],
                       "eta": { "ratio": 4.0 } }"#;
        assert!(ScenarioConfig::from_json(bad).is_err());
    }

    #[test]
    fn gamma_only_for_solid() {
        let bad = r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.06], "eta": { "ratio": 4.0 },
                       "gamma": 0.5 }"#;
        assert!(ScenarioConfig::from_json(bad).is_err());
    }

    #[test]
    fn solid_requires_gamma_and_region() {
        let bad = r#"{ "scenario": "dir_solid", "m": 2, "eps": [0.0625],
                       "eta": { "ratio": 2.0 } }"#;
        assert!(ScenarioConfig::from_json(bad).is_err());
    }

    #[test]
    fn solid_rejects_fading_schedule() {
        // eta = eps^0.2 in m = 3 is below the capacity threshold 1/3
        let bad = r#"{ "scenario": "dir_solid", "m": 3, "eps": [0.0625],
                       "eta": { "alpha": 0.2 }, "gamma": 0.5,
                       "solid": { "box": { "min": [0.25, 0.25, 0.25],
                                           "max": [0.75, 0.75, 0.75] } } }"#;
        let err = ScenarioConfig::from_json(bad).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn resolve_snaps_eta() {
        let json = r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.0625, 0.03125],
                        "eta": { "alpha": 0.5 } }"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        let r = cfg.resolve(0).unwrap();
        // raw eta = 0.25 = 1/(2*2) needs no snapping
        assert!((r.eta - 0.25).abs() < 1e-12);
        let r = cfg.resolve(1).unwrap();
        // raw eta = 0.17678 snaps to 1/6
        assert!((r.eta - 1.0 / 6.0).abs() < 1e-12);
        assert!(r.eta > r.eps);
    }

    #[test]
    fn resolve_grid_multiple_of_lattice() {
        let json = r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.05],
                        "eta": { "list": [0.125] }, "resolution_guard": 4.0 }"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        let r = cfg.resolve(0).unwrap();
        // guard needs n >= 80; lattice count 4 divides the choice
        assert!(r.grid_n >= 80);
        assert_eq!(r.grid_n % 4, 0);
    }

    #[test]
    fn resolve_respects_fixed_grid() {
        let json = r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.0625],
                        "eta": { "ratio": 4.0 }, "grid_n": 128 }"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        assert_eq!(cfg.resolve(0).unwrap().grid_n, 128);
        let json = r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.0625],
                        "eta": { "ratio": 4.0 }, "grid_n": 16 }"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        assert!(matches!(cfg.resolve(0), Err(Error::Resolution { .. })));
    }

    #[test]
    fn dir_solid_needs_exact_eps() {
        let json = r#"{ "scenario": "dir_solid", "m": 2, "eps": [0.03],
                        "eta": { "ratio": 2.0 }, "gamma": 0.5,
                        "solid": { "box": { "min": [0.25, 0.25, 0.0],
                                            "max": [0.75, 0.75, 0.0] } } }"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        assert!(cfg.resolve(0).is_err());
    }

    #[test]
    fn build_pair_round_trip() {
        let json = r#"{ "scenario": "dir_fade", "m": 2, "eps": [0.03125],
                        "eta": { "ratio": 8.0 }, "resolution_guard": 2.0 }"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        let r = cfg.resolve(0).unwrap();
        assert_eq!(r.eps_plus, Some(0.25 * r.eta));
        let (grid, pair) = cfg.build_pair(&r).unwrap();
        assert_eq!(grid.n, r.grid_n);
        assert!(pair.perturbed.space.dim < pair.limit.space.dim);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ScenarioConfig::from_json(&neu_json()).unwrap();
        let s = serde_json::to_string(&cfg).unwrap();
        let back = ScenarioConfig::from_json(&s).unwrap();
        assert_eq!(back.eps, cfg.eps);
        assert_eq!(back.eta, cfg.eta);
    }
}
