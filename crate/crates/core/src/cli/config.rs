//! The JSON experiment configuration read by every subcommand except
//! `metric`. The shipped schema lives in `schemas/experiment.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adjoint::BackwardProblem;
use crate::conditions::{CheckOptions, CoefficientSpec, Diffusion, DriftTerm, LyapunovTriple};
use crate::error::{Error, Result};
use crate::expr::{parse, ScalarField};
use crate::heat::{log_grid, FunctionalSpec};
use crate::measures::DiscreteMeasure;
use crate::metrics::MetricKind;
use crate::nonuniqueness::DEFAULT_BRANCH_STEPS;
use crate::particles::SimConfig;

/// Top-level keys, in schema order.
pub const CONFIG_KEYS: [&str; 9] =
    ["experiment", "coefficients", "lyapunov", "functional", "initial", "metric", "grid", "sim", "output_dir"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<DiscreteMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn named(experiment: &str) -> Self {
        ExperimentConfig {
            experiment: experiment.to_string(),
            coefficients: None,
            lyapunov: None,
            functional: None,
            initial: None,
            metric: None,
            grid: GridConfig::default(),
            sim: None,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn need<'a, T>(v: &'a Option<T>, key: &str, experiment: &str) -> Result<&'a T> {
        v.as_ref().ok_or_else(|| Error::Config(format!("experiment `{experiment}` needs the `{key}` key")))
    }

    pub fn coefficients(&self) -> Result<&CoefficientSpec> {
        Self::need(&self.coefficients, "coefficients", &self.experiment)
    }

    pub fn lyapunov(&self) -> Result<&LyapunovTriple> {
        Self::need(&self.lyapunov, "lyapunov", &self.experiment)
    }

    pub fn functional(&self) -> Result<&FunctionalSpec> {
        Self::need(&self.functional, "functional", &self.experiment)
    }

    pub fn initial(&self) -> Result<&DiscreteMeasure> {
        Self::need(&self.initial, "initial", &self.experiment)
    }

    pub fn sim(&self) -> Result<&SimSettings> {
        Self::need(&self.sim, "sim", &self.experiment)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = self.sim()?;
        Ok(SimConfig {
            n_particles: s.n_particles,
            dt: s.dt,
            t_end: s.t_end,
            seed: s.seed,
            coefficients: self.coefficients()?.clone(),
            initial: self.initial()?.clone(),
            save_every: s.save_every,
        })
    }

    /// The backward problem: `a` and `b` must be μ-independent fields.
    pub fn backward_problem(&self) -> Result<BackwardProblem> {
        let spec = self.coefficients()?;
        let a = match &spec.diffusion {
            Diffusion::Field { field } => field.clone(),
            Diffusion::Functional { .. } => {
                return Err(Error::Config("the adjoint solver needs a diffusion field a(x, t)".into()))
            }
        };
        let mut b = ScalarField::constant(0.0);
        for term in &spec.drift.terms {
            match term {
                DriftTerm::Local { field } => b = b + field.clone(),
                _ => return Err(Error::Config("the adjoint solver needs a local drift b(x, t)".into())),
            }
        }
        let g = &self.grid.adjoint;
        let mut p = BackwardProblem::new(a, b, g.psi.clone(), g.s).with_grid(g.nx, g.nt).with_radius(g.r);
        if let Some(m) = g.m {
            p.m = m;
        }
        if let Some(k) = g.kappa {
            p.kappa = k;
        }
        Ok(p)
    }
}

/// Numerical grids and tolerances; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_points: usize,
    /// Upper end `ε` of the Osgood integral.
    pub epsilon: f64,
    pub t_max: f64,
    pub steps: usize,
    /// Largest accepted weak-form residual.
    pub residual_tol: f64,
    /// Atoms per mixture component when a metric needs a discrete state.
    pub n_disc: usize,
    pub check: CheckOptions,
    pub adjoint: AdjointGrid,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            beta_min: 1e-12,
            beta_max: 1e-1,
            beta_points: 56,
            epsilon: 1e-1,
            t_max: 2.0,
            steps: DEFAULT_BRANCH_STEPS,
            residual_tol: 1e-4,
            n_disc: 1000,
            check: CheckOptions::default(),
            adjoint: AdjointGrid::default(),
        }
    }
}

impl GridConfig {
    pub fn betas(&self) -> Result<Vec<f64>> {
        if !(self.beta_min > 0.0 && self.beta_max > self.beta_min && self.beta_points >= 2) {
            return Err(Error::Config("need 0 < beta_min < beta_max and beta_points ≥ 2".into()));
        }
        Ok(log_grid(self.beta_min, self.beta_max, self.beta_points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjointGrid {
    pub s: f64,
    pub r: f64,
    pub nx: usize,
    pub nt: usize,
    pub m: Option<f64>,
    pub kappa: Option<f64>,
    pub psi: ScalarField,
    /// `δ` used when fitting `C₀`.
    pub delta: f64,
}

impl Default for AdjointGrid {
    fn default() -> Self {
        AdjointGrid {
            s: 0.5,
            r: 10.0,
            nx: 400,
            nt: 400,
            m: None,
            kappa: None,
            psi: parse("0.9*bump(x/2)").expect("default terminal data parses"),
            delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SaveMode {
    #[default]
    Particles,
    Hist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub n_particles: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub save_every: usize,
    pub save_mode: SaveMode,
    pub bins: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            n_particles: 10_000,
            dt: 0.01,
            t_end: 1.0,
            seed: 0,
            save_every: 10,
            save_mode: SaveMode::Particles,
            bins: 50,
        }
    }
}
