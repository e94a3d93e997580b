//! Heat kernel `Γ(t, x) = (4πt)^{-1/2} exp(−x²/(4t))`, heat evolution of
//! discrete initial data, and the scalar functional `f(β) = a(Γ(β,·) * ν)`.
//!
//! The kernel is the fundamental solution of `∂_t − Δ` (no ½ in front of the
//! Laplacian), so `Γ(t, ·)` has variance `2t`, not `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::measures::{DiscreteMeasure, GaussianComponent, GaussianMixture, Measure};
use crate::quadrature::QuadOptions;

pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok((4.0 * std::f64::consts::PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp())
}

/// `Γ(β, ·) * ν`: one component per atom of `ν`.
pub fn heat_convolve(beta: f64, nu: &DiscreteMeasure) -> Result<GaussianMixture> {
    if nu.dim() != 1 {
        return Err(Error::DimensionError { expected: 1, got: nu.dim() });
    }
    nu.ensure_probability()?;
    let comps = nu
        .points()?
        .into_iter()
        .zip(nu.weights())
        .map(|(mean, &weight)| GaussianComponent { mean, tau: beta, weight })
        .collect();
    GaussianMixture::new(comps)
}

/// A functional `a(μ)` of a one-dimensional probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    /// `a(μ) = (√π/2 · ∫|x| dμ)^{2α}`.
    AbsMomentPower { alpha: f64 },
    /// `a(μ) = ∫ K dμ`.
    KernelIntegral { kernel: ScalarField },
    /// `a(μ) = outer(∫ kernel dμ)`, with `outer` an expression in `x`.
    Custom { kernel: ScalarField, outer: ScalarField },
}

impl FunctionalSpec {
    pub fn abs_moment_power(alpha: f64) -> Self {
        FunctionalSpec::AbsMomentPower { alpha }
    }

    pub fn kernel_integral(kernel: ScalarField) -> Self {
        FunctionalSpec::KernelIntegral { kernel }
    }

    /// The constant functional `a ≡ c`.
    pub fn constant(c: f64) -> Self {
        FunctionalSpec::Custom { kernel: ScalarField::constant(0.0), outer: ScalarField::constant(c) }
    }

    /// `a(μ)`.
    pub fn eval(&self, mu: &Measure) -> Result<f64> {
        match self {
            FunctionalSpec::AbsMomentPower { alpha } => {
                let m1 = integrate_small(mu, f64::abs)?;
                Ok((0.5 * std::f64::consts::PI.sqrt() * m1).abs().powf(2.0 * alpha))
            }
            FunctionalSpec::KernelIntegral { kernel } => integrate_small(mu, |x| kernel.eval(x, 0.0)),
            FunctionalSpec::Custom { kernel, outer } => {
                let inner =
                    if kernel.as_constant() == Some(0.0) { 0.0 } else { integrate_small(mu, |x| kernel.eval(x, 0.0))? };
                outer.try_eval(inner, 0.0)
            }
        }
    }
}

/// `∫ f dμ` to absolute tolerance 1e−10, repeated with a tolerance relative
/// to the first estimate when the integral itself is below 1e−2. Values of
/// `f(β)` for tiny `β` would otherwise be pure quadrature noise.
fn integrate_small(mu: &Measure, f: impl Fn(f64) -> f64 + Copy) -> Result<f64> {
    let first = mu.integrate_fn(f)?;
    if first.abs() >= 1e-2 || first == 0.0 {
        return Ok(first);
    }
    let opts = QuadOptions { abs_tol: 1e-12 * first.abs(), ..QuadOptions::default() };
    mu.integrate_fn_opts(f, opts)
}

/// `f(β) = a(Γ(β, ·) * ν)`.
pub fn eval_functional(a: &FunctionalSpec, beta: f64, nu: &DiscreteMeasure) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::DomainError(format!("beta must be positive, got {beta}")));
    }
    let g = heat_convolve(beta, nu)?;
    a.eval(&Measure::Mixture(g))
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Default β grid for f-curves: 56 log-spaced points on `[1e−12, 1e−1]`.
pub fn default_beta_grid() -> Vec<f64> {
    log_grid(1e-12, 1e-1, 56)
}

/// Pointwise `(β, f(β))` on an increasing grid.
pub fn sample_f_curve(a: &FunctionalSpec, nu: &DiscreteMeasure, betas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if betas.iter().any(|&b| !(b > 0.0)) || betas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DomainError("beta grid must be positive and increasing".into()));
    }
    betas.par_iter().map(|&b| Ok((b, eval_functional(a, b, nu)?))).collect()
}
