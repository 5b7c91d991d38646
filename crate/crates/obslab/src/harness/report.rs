//! Report structures, the log-log rate fit, and deterministic serialization
//! to `report.json`, CSV tables, and a gnuplot script.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quasiuni::{DeltaBreakdown, EigenTransferRow};
use crate::theory::Regime;

pub const SCHEMA_VERSION: u32 = 1;

/// One recorded inequality: both sides and the slack, so a reader can audit
/// every claim without rerunning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn leq(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack: rhs - lhs, pass: lhs <= rhs }
    }
}

/// Heat defect at one probe time; `value` is absent when the probe was
/// skipped (with the reason in `note`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatDefectEntry {
    pub t: f64,
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Everything measured at one epsilon of the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsReport {
    pub eps: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_tilde: Option<f64>,
    pub grid_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent_defect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seven_delta_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub heat_defects: Vec<HeatDefectEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spectrum_limit: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spectrum_perturbed: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hausdorff: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transfer: Vec<EigenTransferRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// structured failure: the sweep continues past a broken epsilon
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EpsReport {
    pub fn failed(eps: f64, err: &Error) -> Self {
        Self {
            eps,
            eta: 0.0,
            eps_plus: None,
            eps_tilde: None,
            grid_n: 0,
            delta: None,
            resolvent_defect: None,
            seven_delta_bound: None,
            heat_defects: Vec::new(),
            spectrum_limit: Vec::new(),
            spectrum_perturbed: Vec::new(),
            lambda_window: None,
            hausdorff: None,
            transfer: Vec::new(),
            theory_rate: None,
            regime: None,
            assertions: Vec::new(),
            warnings: Vec::new(),
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// The full output of one scenario sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub schema: u32,
    pub scenario: String,
    pub m: usize,
    pub side: f64,
    pub seed: u64,
    pub package_version: String,
    pub results: Vec<EpsReport>,
    /// fit of measured delta_max against eps
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_fit: Option<RateFit>,
    /// fit of the predicted rate against eps, for comparison
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_fit: Option<RateFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// names of failed hard assertions; nonempty means exit code 1
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hard_failures: Vec<String>,
}

/// Least-squares fit of `log delta` against `log eps`. Points with a
/// nonpositive value are dropped (with a warning pushed to `warnings`);
/// fewer than 3 surviving points is an error.
pub fn fit_rate(points: &[(f64, f64)], warnings: &mut Vec<String>) -> Result<RateFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(e, d)| {
            let ok = e > 0.0 && d > 0.0;
            if !ok {
                warnings.push(format!("rate fit dropped nonpositive point ({e}, {d})"));
            }
            ok
        })
        .map(|&(e, d)| (e.ln(), d.ln()))
        .collect();
    if kept.len() < 3 {
        return Err(Error::Config(format!(
            "rate fit needs at least 3 positive points, have {}",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let sx: f64 = kept.iter().map(|p| p.0).sum();
    let sy: f64 = kept.iter().map(|p| p.1).sum();
    let mx = sx / n;
    let my = sy / n;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("rate fit needs at least two distinct eps values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = kept.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = kept
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    // a constant series is fit perfectly by slope 0
    let r_squared = if ss_tot <= 1e-30 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared, points_used: kept.len() })
}

/// Write `report.json`, `deltas.csv`, `spectra.csv`, and `plots.gp` into
/// `dir`. All numbers use the shortest round-trip float formatting, so
/// outputs are byte-identical across reruns with the same seed.
pub fn write_report(report: &SpectralReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    std::fs::write(dir.join("deltas.csv"), deltas_csv(report))?;
    std::fs::write(dir.join("spectra.csv"), spectra_csv(report))?;
    std::fs::write(dir.join("plots.gp"), plots_gp(report))?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<SpectralReport> {
    let s = std::fs::read_to_string(dir.join("report.json"))?;
    Ok(serde_json::from_str(&s)?)
}

fn csv_num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

fn deltas_csv(report: &SpectralReport) -> String {
    let mut s = String::from(
        "eps,delta_a_norm,delta_a_adj,delta_b1,delta_b2,delta_c1,delta_c2,delta_d,\
         delta_max,resolvent_defect,seven_delta_bound,hausdorff\n",
    );
    for r in &report.results {
        let d = r.delta.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.eps,
            csv_num(d.map(|d| d.delta_a_norm)),
            csv_num(d.map(|d| d.delta_a_adj)),
            csv_num(d.map(|d| d.delta_b1)),
            csv_num(d.map(|d| d.delta_b2)),
            csv_num(d.map(|d| d.delta_c1)),
            csv_num(d.map(|d| d.delta_c2)),
            csv_num(d.map(|d| d.delta_d)),
            csv_num(d.map(|d| d.delta_max)),
            csv_num(r.resolvent_defect),
            csv_num(r.seven_delta_bound),
            csv_num(r.hausdorff),
        );
    }
    s
}

fn spectra_csv(report: &SpectralReport) -> String {
    let mut s = String::from("eps,index,lambda_perturbed,lambda_limit,transfer_error\n");
    for r in &report.results {
        for (i, row) in r.transfer.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.eps, i, row.lambda_perturbed, row.lambda_limit, row.transfer_error
            );
        }
    }
    s
}

fn plots_gp(report: &SpectralReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script for the {} sweep", report.scenario);
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale xy\n");
    s.push_str("set xlabel 'eps'\n");
    s.push_str("set ylabel 'defect'\n");
    s.push_str("set key left top\n");
    s.push_str("set term pngcairo size 900,600\n");
    s.push_str("set output 'deltas.png'\n");
    s.push_str(
        "plot 'deltas.csv' using 1:9 skip 1 with linespoints title 'delta_max', \\\n     \
         'deltas.csv' using 1:10 skip 1 with linespoints title 'resolvent defect', \\\n     \
         'deltas.csv' using 1:11 skip 1 with lines title '7 delta bound'\n",
    );
    if let Some(fit) = &report.delta_fit {
        let _ = writeln!(
            s,
            "# fitted: delta_max ~ exp({:.6}) * eps^{:.6} (R^2 = {:.6})",
            fit.intercept, fit.slope, fit.r_squared
        );
    }
    s.push_str("set output 'hausdorff.png'\n");
    s.push_str(
        "plot 'deltas.csv' using 1:12 skip 1 with linespoints title 'spectral Hausdorff'\n",
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(points: &[(f64, f64)]) -> RateFit {
        fit_rate(points, &mut Vec::new()).unwrap()
    }

    #[test]
    fn fit_exact_power_law() {
        // delta = 3 eps^2
        let pts: Vec<(f64, f64)> =
            [0.1, 0.05, 0.025, 0.0125].iter().map(|&e| (e, 3.0 * e * e)).collect();
        let f = fit(&pts);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_constant_series() {
        let pts = [(0.1, 0.7), (0.05, 0.7), (0.025, 0.7)];
        let f = fit(&pts);
        assert!(f.slope.abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_drops_nonpositive_with_warning() {
        let pts = [(0.1, 0.5), (0.05, 0.0), (0.025, 0.2), (0.0125, 0.1), (0.00625, 0.05)];
        let mut warnings = Vec::new();
        let f = fit_rate(&pts, &mut warnings).unwrap();
        assert_eq!(f.points_used, 4);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn fit_too_few_points_errors() {
        let pts = [(0.1, 0.5), (0.05, 0.3)];
        assert!(fit_rate(&pts, &mut Vec::new()).is_err());
    }

    #[test]
    fn assertion_slack() {
        let a = Assertion::leq("x", 1.0, 3.0);
        assert!(a.pass);
        assert!((a.slack - 2.0).abs() < 1e-15);
        assert!(!Assertion::leq("y", 3.0, 1.0).pass);
    }

    fn tiny_report() -> SpectralReport {
        SpectralReport {
            schema: SCHEMA_VERSION,
            scenario: "neu_fade".into(),
            m: 2,
            side: 1.0,
            seed: 1,
            package_version: "0.0.0".into(),
            results: vec![EpsReport {
                eps: 0.0625,
                eta: 0.25,
                eps_plus: None,
                eps_tilde: None,
                grid_n: 64,
                delta: None,
                resolvent_defect: Some(0.1),
                seven_delta_bound: Some(0.7),
                heat_defects: vec![HeatDefectEntry { t: 0.1, value: Some(0.05), note: None }],
                spectrum_limit: vec![0.0, 39.0],
                spectrum_perturbed: vec![0.0, 40.0],
                lambda_window: Some(50.0),
                hausdorff: Some(1.0),
                transfer: Vec::new(),
                theory_rate: Some(0.2),
                regime: None,
                assertions: vec![Assertion::leq("resolvent<=7delta", 0.1, 0.7)],
                warnings: Vec::new(),
                error: None,
            }],
            delta_fit: None,
            theory_fit: None,
            warnings: Vec::new(),
            hard_failures: Vec::new(),
        }
    }

    #[test]
    fn report_round_trip_and_deterministic_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = tiny_report();
        write_report(&report, dir.path()).unwrap();
        let back = read_report(dir.path()).unwrap();
        assert_eq!(back.schema, SCHEMA_VERSION);
        assert_eq!(back.results.len(), 1);
        assert_eq!(back.results[0].resolvent_defect, Some(0.1));
        let csv1 = std::fs::read(dir.path().join("deltas.csv")).unwrap();
        write_report(&report, dir.path()).unwrap();
        let csv2 = std::fs::read(dir.path().join("deltas.csv")).unwrap();
        assert_eq!(csv1, csv2);
        let deltas = String::from_utf8(csv1).unwrap();
        // one row per eps plus the header
        assert_eq!(deltas.lines().count(), 1 + report.results.len());
        assert!(deltas.lines().next().unwrap().starts_with("eps,delta_a_norm"));
    }

    #[test]
    fn failed_eps_serializes() {
        let r = EpsReport::failed(0.01, &Error::Config("boom".into()));
        let s = serde_json::to_string(&r).unwrap();
        let back: EpsReport = serde_json::from_str(&s).unwrap();
        assert!(back.error.unwrap().contains("boom"));
    }
}
