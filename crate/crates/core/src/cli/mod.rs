//! Command-line front end. Every subcommand is a thin wrapper over the
//! library; values printed or written are exactly the library's values.
//!
//! Exit codes: 0 pass, 1 usage or configuration error, 2 numerical failure
//! (an error from a computation, or a check that did not pass).

pub mod config;
pub mod reproduce;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::adjoint::{fit_c0, solve_backward, verify_gradient_bound};
use crate::conditions::{check_dh, check_h, ConditionReport};
use crate::error::{Error, Result};
use crate::expr::{parse, ScalarField};
use crate::heat::sample_f_curve;
use crate::measures::weighted_tv;
use crate::measures::{DiscreteMeasure, MeasureFlow};
use crate::metrics::{
    fortet_mourier_big_tp, fortet_mourier_tp, kantorovich_wp, weighted_dual_ww, MetricKind, MetricReport,
};
use crate::nonuniqueness::{construct_branches_with, default_bump_battery, osgood_test, weak_form_residual};
use crate::particles::run as run_particles;
use config::{ExperimentConfig, SaveMode};

pub use config::CONFIG_KEYS;
pub use reproduce::EXPERIMENT_IDS;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

/// Largest tolerated discrete maximum-principle excess in `adjoint`.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "fpk-lab", version, about = "Numerical laboratory for nonlinear Fokker-Planck-Kolmogorov equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "Wp")]
    Wp,
    #[value(name = "Tp")]
    BigTp,
    #[value(name = "tp")]
    SmallTp,
    #[value(name = "wW")]
    Ww,
    #[value(name = "tv")]
    Tv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    H,
    Dh,
    Both,
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance between two discrete measures given as JSON files.
    Metric {
        #[arg(long, value_enum)]
        kind: MetricArg,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Weight W for `wW` and `tv`.
        #[arg(long, default_value = "1")]
        weight: String,
        mu: PathBuf,
        sigma: PathBuf,
    },
    /// Sample f(β) and classify the Osgood integral.
    Osgood(ConfigArgs),
    /// Construct the stationary and moving branches.
    Branches(ConfigArgs),
    /// Weak-form residuals of constructed branches or of a flow file.
    Verify {
        #[command(flatten)]
        args: ConfigArgs,
        /// A `MeasureFlow` JSON file to verify instead of the constructed branches.
        #[arg(long)]
        flow: Option<PathBuf>,
    },
    /// Spot-check the uniqueness conditions on a box.
    Conditions {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long, value_enum, default_value = "both")]
        family: Family,
    },
    /// Solve the cut-off backward problem and check the gradient bound.
    Adjoint(ConfigArgs),
    /// Run the interacting-particle simulator.
    Simulate {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long, value_enum)]
        save_mode: Option<SaveMode>,
    },
    /// Run a named worked example.
    Reproduce {
        #[arg(value_parser = EXPERIMENT_IDS)]
        id: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
}

/// Runs the command line with the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    run_with(args, &mut out, &mut err)
}

/// Runs the command line, writing human output to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_NUMERIC,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Configuration, parse and I/O problems are usage errors; everything else
/// is a numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Writes a CSV file with a header row, `,` separators and LF line ends.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// The metric report the `metric` subcommand prints.
pub fn metric_report(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, kind: &MetricKind) -> Result<serde_json::Value> {
    let report = |r: MetricReport| json!({ "kind": kind, "value": r.value, "report": r });
    Ok(match kind {
        MetricKind::Wp { p } => report(kantorovich_wp(mu, sigma, *p)?),
        MetricKind::BigTp { p } => report(fortet_mourier_big_tp(mu, sigma, *p)?),
        MetricKind::SmallTp { p } => report(fortet_mourier_tp(mu, sigma, *p)?),
        MetricKind::Ww { weight } => report(weighted_dual_ww(mu, sigma, weight)?),
        MetricKind::Tv { weight } => json!({ "kind": kind, "value": weighted_tv(mu, sigma, weight)? }),
    })
}

struct Session {
    cfg: ExperimentConfig,
    dir: PathBuf,
}

impl Session {
    fn open(args: &ConfigArgs) -> Result<Self> {
        let cfg = ExperimentConfig::load(&args.config)?;
        let dir = args.output_dir.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir)?;
        Ok(Session { cfg, dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn initial(&self) -> DiscreteMeasure {
        self.cfg.initial.clone().unwrap_or_else(|| DiscreteMeasure::dirac(0.0))
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<bool> {
    match command {
        Command::Metric { kind, p, weight, mu, sigma } => {
            let weight: ScalarField = parse(&weight)?;
            let kind = match kind {
                MetricArg::Wp => MetricKind::Wp { p },
                MetricArg::BigTp => MetricKind::BigTp { p },
                MetricArg::SmallTp => MetricKind::SmallTp { p },
                MetricArg::Ww => MetricKind::Ww { weight },
                MetricArg::Tv => MetricKind::Tv { weight },
            };
            let (mu, sigma) = (load_measure(&mu)?, load_measure(&sigma)?);
            writeln!(out, "{}", serde_json::to_string_pretty(&metric_report(&mu, &sigma, &kind)?)?)?;
            Ok(true)
        }
        Command::Osgood(args) => {
            let s = Session::open(&args)?;
            let curve = sample_f_curve(s.cfg.functional()?, &s.initial(), &s.cfg.grid.betas()?)?;
            write_csv(&s.path("f_curve.csv"), &["beta", "f"], curve.iter().map(|&(b, f)| vec![b, f]))?;
            let report = osgood_test(&curve, s.cfg.grid.epsilon)?;
            write_json(&s.path("report.json"), &report)?;
            writeln!(out, "classification: {:?} (fitted exponent {})", report.classification, report.fitted_exponent)?;
            Ok(true)
        }
        Command::Branches(args) => {
            let s = Session::open(&args)?;
            let g = &s.cfg.grid;
            let pair = construct_branches_with(s.cfg.functional()?, &s.initial(), g.t_max, g.steps)?;
            let sep = pair.separation()?;
            write_csv(
                &s.path("branches.csv"),
                &["t", "tau", "W1_between_branches"],
                sep.iter().map(|&(t, tau, w)| vec![t, tau, w]),
            )?;
            write_json(&s.path("report.json"), &json!({ "t_max": g.t_max, "steps": g.steps, "tau": pair.tau }))?;
            writeln!(out, "branches written to {}", s.path("branches.csv").display())?;
            Ok(true)
        }
        Command::Verify { args, flow } => {
            let s = Session::open(&args)?;
            let a = s.cfg.functional()?;
            let drift = s.cfg.coefficients.as_ref().map(|c| c.drift.clone()).unwrap_or_default();
            let tests = default_bump_battery();
            let flows: Vec<(String, MeasureFlow)> = match flow {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    vec![("flow".into(), serde_json::from_str(&text)?)]
                }
                None => {
                    let g = &s.cfg.grid;
                    let pair = construct_branches_with(a, &s.initial(), g.t_max, g.steps)?;
                    vec![("stationary".into(), pair.stationary), ("moving".into(), pair.moving)]
                }
            };
            let mut rows = vec![];
            let mut worst = 0.0f64;
            let mut report = serde_json::Map::new();
            for (i, (name, f)) in flows.iter().enumerate() {
                let t = *f.times().last().expect("flows are non-empty");
                let r = weak_form_residual(f, a, &drift, &tests, t)?;
                for (j, v) in r.iter().enumerate() {
                    rows.push(vec![i as f64, j as f64, *v]);
                    worst = worst.max(*v);
                }
                report.insert(name.clone(), json!(r));
            }
            write_csv(&s.path("residuals.csv"), &["flow", "test", "residual"], rows)?;
            let passed = worst <= s.cfg.grid.residual_tol;
            report.insert("max_residual".into(), json!(worst));
            report.insert("passed".into(), json!(passed));
            write_json(&s.path("report.json"), &report)?;
            writeln!(out, "max residual {worst:e} (tolerance {:e})", s.cfg.grid.residual_tol)?;
            Ok(passed)
        }
        Command::Conditions { args, family } => {
            let s = Session::open(&args)?;
            let (spec, triple, mu) = (s.cfg.coefficients()?, s.cfg.lyapunov()?, s.initial());
            let opts = &s.cfg.grid.check;
            let mut reports: Vec<ConditionReport> = vec![];
            if matches!(family, Family::H | Family::Both) {
                reports.extend(check_h(spec, triple, &mu, opts)?);
            }
            if matches!(family, Family::Dh | Family::Both) {
                reports.extend(check_dh(spec, triple, &mu, opts)?);
            }
            for r in &reports {
                writeln!(out, "{}", r.summary())?;
                if let Some(profile) = &r.theta_profile {
                    write_csv(
                        &s.path("theta_profile.csv"),
                        &["x", "theta"],
                        profile.iter().map(|&(x, th)| vec![x, th]),
                    )?;
                }
            }
            write_json(&s.path("report.json"), &reports)?;
            Ok(reports.iter().all(|r| r.passes))
        }
        Command::Adjoint(args) => {
            let s = Session::open(&args)?;
            let p = s.cfg.backward_problem()?;
            let w = s.cfg.lyapunov.as_ref().map(|t| t.w.clone()).unwrap_or_else(|| ScalarField::constant(1.0));
            let c0 = fit_c0(&p, &w, s.cfg.grid.adjoint.delta)?;
            let sol = solve_backward(&p)?;
            let check = verify_gradient_bound(&sol, &w, c0, p.s)?;
            let excess = sol.max_principle_excess();
            sol.write_csv(BufWriter::new(File::create(s.path("solution.csv"))?))?;
            let passed = check.passes && excess <= MAX_PRINCIPLE_TOL;
            write_json(
                &s.path("report.json"),
                &json!({ "c0": c0, "gradient": check, "max_principle_excess": excess, "passed": passed }),
            )?;
            writeln!(
                out,
                "gradient margin {:e} (slack {:e}), max-principle excess {excess:e}",
                check.worst_margin, check.h_x
            )?;
            Ok(passed)
        }
        Command::Simulate { args, save_mode } => {
            let s = Session::open(&args)?;
            let cfg = s.cfg.sim_config()?;
            let settings = s.cfg.sim()?;
            let sim = run_particles(&cfg)?;
            let mode = save_mode.unwrap_or(settings.save_mode);
            match mode {
                SaveMode::Particles => {
                    sim.write_particles_csv(BufWriter::new(File::create(s.path("particles.csv"))?))?
                }
                SaveMode::Hist => {
                    sim.write_hist_csv(settings.bins, BufWriter::new(File::create(s.path("hist.csv"))?))?
                }
            }
            let moments: Vec<_> = sim
                .times
                .iter()
                .zip(&sim.positions)
                .map(|(t, x)| {
                    let n = x.len() as f64;
                    let mean = x.iter().sum::<f64>() / n;
                    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    json!({ "t": t, "mean": mean, "variance": var })
                })
                .collect();
            write_json(&s.path("report.json"), &json!({ "config": cfg, "moments": moments }))?;
            writeln!(out, "{} snapshots of {} particles written", sim.times.len(), cfg.n_particles)?;
            Ok(true)
        }
        Command::Reproduce { id, alpha, output_dir } => {
            let o = reproduce::reproduce(&id, alpha, &output_dir)?;
            writeln!(out, "{}: {}", o.id, if o.passed { "PASS" } else { "FAIL" })?;
            for f in &o.files {
                writeln!(out, "  {}", f.display())?;
            }
            Ok(o.passed)
        }
    }
}
