//! Experiment orchestration: configs, sweeps, rate fits, reports, CLI.

pub mod acceptance;
pub mod config;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::harness::config::ScenarioConfig;
use crate::harness::report::write_report;
use crate::harness::run::{run_scenario, run_sweep};
use crate::theory::{capacity_regime, proven_fading_region};

#[derive(Parser)]
#[command(name = "obslab", version, about = "spectral convergence laboratory for perforated tori")]
struct Cli {
    /// worker threads (the OBSLAB_THREADS variable takes precedence)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario config and write its report
    Run {
        #[arg(long)]
        config: PathBuf,
        /// output directory (default: the config's out_dir, or the current
        /// directory)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "tol-cg")]
        tol_cg: Option<f64>,
        #[arg(long = "tol-norm")]
        tol_norm: Option<f64>,
    },
    /// Run several configs (files, or directories scanned for *.json), each
    /// into its own subdirectory of --out
    Sweep {
        #[arg(long, num_args = 1.., required = true)]
        config: Vec<PathBuf>,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the acceptance criteria and print one pass/fail line each
    Validate {
        /// subset of criterion numbers (1-12); omitted means all
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        criteria: Vec<usize>,
    },
    /// Tabulate the capacity regime over a schedule-exponent range
    Rates {
        #[arg(long)]
        m: usize,
        /// start:stop:step
        #[arg(long)]
        alpha: String,
    },
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Geometry(_) | Error::Resolution { .. } => 2,
        Error::Solver(_) | Error::Io(_) => 3,
    }
}

static THREAD_POOL: OnceLock<()> = OnceLock::new();

fn init_threads(cli_threads: Option<usize>) {
    let threads = std::env::var("OBSLAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .or(cli_threads);
    if let Some(t) = threads.filter(|&t| t > 0) {
        THREAD_POOL.get_or_init(|| {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        });
    }
}

/// Entry point behind `main`. Returns the process exit code: 0 success,
/// 1 failed invariant, 2 invalid configuration, 3 solver failure.
pub fn cli(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 2;
        }
    };
    init_threads(cli.threads);
    match cli.cmd {
        Cmd::Run { config, out, seed, tol_cg, tol_norm } => {
            cmd_run(&config, out, seed, tol_cg, tol_norm)
        }
        Cmd::Sweep { config, out, seed } => cmd_sweep(&config, &out, seed),
        Cmd::Validate { criteria } => cmd_validate(&criteria),
        Cmd::Rates { m, alpha } => cmd_rates(m, &alpha),
    }
}

fn load_with_overrides(
    path: &Path,
    seed: Option<u64>,
    tol_cg: Option<f64>,
    tol_norm: Option<f64>,
) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol_cg {
        cfg.tolerances.tol_cg = t;
    }
    if let Some(t) = tol_norm {
        cfg.tolerances.tol_norm = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    tol_cg: Option<f64>,
    tol_norm: Option<f64>,
) -> i32 {
    let cfg = match load_with_overrides(config, seed, tol_cg, tol_norm) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return exit_code_for(&e);
        }
    };
    let out_dir = out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let report = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return exit_code_for(&e);
        }
    };
    if let Err(e) = write_report(&report, &out_dir) {
        eprintln!("{e}");
        return exit_code_for(&e);
    }
    print_summary(&report, &out_dir);
    if report.hard_failures.is_empty() {
        0
    } else {
        1
    }
}

fn print_summary(report: &crate::harness::report::SpectralReport, out_dir: &Path) {
    println!("scenario {} (m = {}), {} eps values", report.scenario, report.m, report.results.len());
    for r in &report.results {
        match (&r.error, &r.delta) {
            (Some(e), _) => println!("  eps {:<12} FAILED: {e}", r.eps),
            (None, Some(d)) => println!(
                "  eps {:<12} n {:<5} delta_max {:.6e} resolvent {:.6e}",
                r.eps,
                r.grid_n,
                d.delta_max,
                r.resolvent_defect.unwrap_or(f64::NAN)
            ),
            (None, None) => println!("  eps {:<12} n {:<5} (no defect measured)", r.eps, r.grid_n),
        }
    }
    if let Some(f) = &report.delta_fit {
        println!(
            "  fitted slope {:.4} (R^2 = {:.4}, {} points)",
            f.slope, f.r_squared, f.points_used
        );
    }
    for w in &report.warnings {
        println!("  warning: {w}");
    }
    for h in &report.hard_failures {
        println!("  FAILED invariant: {h}");
    }
    println!("  report written to {}", out_dir.display());
}

fn collect_configs(paths: &[PathBuf]) -> Result<Vec<(String, PathBuf)>, Error> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::Config("sweep found no config files".into()));
    }
    Ok(files
        .into_iter()
        .map(|f| {
            let stem = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into());
            (stem, f)
        })
        .collect())
}

fn cmd_sweep(paths: &[PathBuf], out: &Path, seed: Option<u64>) -> i32 {
    let files = match collect_configs(paths) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return exit_code_for(&e);
        }
    };
    // reject every invalid config before any solve starts
    let mut configs = Vec::new();
    for (name, path) in &files {
        match load_with_overrides(path, seed, None, None) {
            Ok(c) => configs.push((name.clone(), c)),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return exit_code_for(&e);
            }
        }
    }
    let mut worst = 0;
    for (name, result) in run_sweep(&configs) {
        match result {
            Ok(report) => {
                let dir = out.join(&name);
                if let Err(e) = write_report(&report, &dir) {
                    eprintln!("{name}: {e}");
                    worst = worst.max(exit_code_for(&e));
                    continue;
                }
                print_summary(&report, &dir);
                if !report.hard_failures.is_empty() {
                    worst = worst.max(1);
                }
            }
            Err(e) => {
                eprintln!("{name}: {e}");
                worst = worst.max(exit_code_for(&e));
            }
        }
    }
    worst
}

fn cmd_validate(criteria: &[usize]) -> i32 {
    let outcomes = match acceptance::run_criteria(criteria) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return exit_code_for(&e);
        }
    };
    let mut all_pass = true;
    for o in &outcomes {
        println!("{o}");
        all_pass &= o.pass;
    }
    if all_pass {
        0
    } else {
        1
    }
}

fn cmd_rates(m: usize, alpha: &str) -> i32 {
    if m < 3 {
        eprintln!("rates needs m >= 3; the m = 2 threshold is logarithmic");
        return 2;
    }
    let parts: Vec<&str> = alpha.split(':').collect();
    let parsed: Option<Vec<f64>> = parts.iter().map(|s| s.parse::<f64>().ok()).collect();
    let bounds = match (parts.len(), parsed) {
        (3, Some(v)) if v[2] > 0.0 && v[0] > 0.0 && v[1] >= v[0] => v,
        _ => {
            eprintln!("--alpha must be start:stop:step with positive values");
            return 2;
        }
    };
    let (start, stop, step) = (bounds[0], bounds[1], bounds[2]);
    println!("{:<8} {:<12} proven fading", "alpha", "regime");
    let mut k = 0;
    loop {
        let a = start + k as f64 * step;
        if a > stop + 1e-12 {
            break;
        }
        if a >= 1.0 {
            break;
        }
        let regime = capacity_regime(m, a);
        println!("{a:<8.3} {:<12} {}", format!("{regime:?}"), proven_fading_region(m, a));
        k += 1;
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(args: &[&str]) -> Vec<String> {
        std::iter::once("obslab").chain(args.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(cli(argv(&["--help"])), 0);
    }

    #[test]
    fn unknown_subcommand_exits_two() {
        assert_eq!(cli(argv(&["frobnicate"])), 2);
    }

    #[test]
    fn missing_config_file_exits_three() {
        assert_eq!(cli(argv(&["run", "--config", "/nonexistent/x.json"])), 3);
    }

    #[test]
    fn malformed_config_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(&p, r#"{ "scenario": "neu_fade", "m": 2, "eps": "oops" }"#).unwrap();
        assert_eq!(cli(argv(&["run", "--config", p.to_str().unwrap()])), 2);
    }

    #[test]
    fn rates_table_runs() {
        assert_eq!(cli(argv(&["rates", "--m", "3", "--alpha", "0.1:0.9:0.1"])), 0);
        assert_eq!(cli(argv(&["rates", "--m", "2", "--alpha", "0.1:0.9:0.1"])), 2);
        assert_eq!(cli(argv(&["rates", "--m", "3", "--alpha", "nope"])), 2);
    }

    #[test]
    fn run_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.json");
        std::fs::write(
            &p,
            r#"{ "scenario": "neu_fade", "m": 2, "eps": [0.0625, 0.05, 0.03125],
                 "eta": { "list": [0.25, 0.25, 0.25] }, "resolution_guard": 2.0,
                 "eigen_count": 0 }"#,
        )
        .unwrap();
        let out = dir.path().join("out");
        let code = cli(argv(&[
            "run",
            "--config",
            p.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 0);
        assert!(out.join("report.json").is_file());
        assert!(out.join("deltas.csv").is_file());
        assert!(out.join("spectra.csv").is_file());
        assert!(out.join("plots.gp").is_file());
    }
}
