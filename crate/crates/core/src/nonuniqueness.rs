//! Well-posedness of `∂_tμ = Δ(a(μ)μ)` through the scalar problem
//! `τ' = f(τ), τ(0) = 0`, where `f(β) = a(Γ(β,·) * ν)`.
//!
//! When `∫₀ dβ/f(β)` converges, `τ` can leave zero and `μ_t = Γ(τ(t),·) * ν`
//! is a second solution next to the stationary one. This module classifies
//! the integral, builds both branches and checks candidate flows against the
//! weak form of the equation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::conditions::{linspace, Drift};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::heat::{default_beta_grid, eval_functional, heat_convolve, sample_f_curve, FunctionalSpec};
use crate::measures::{DiscreteMeasure, Measure, MeasureFlow};
use crate::metrics::wasserstein1_measures;
use crate::quadrature::{integrate, QuadOptions};

/// Fitted exponents below this are classified convergent.
pub const CONVERGENT_BELOW: f64 = 0.95;
/// Fitted exponents at or above this (less a fitting tolerance) are divergent.
pub const DIVERGENT_FROM: f64 = 1.0;
/// Slack on [`DIVERGENT_FROM`] absorbing quadrature noise in sampled curves.
pub const EXPONENT_TOL: f64 = 1e-6;
/// Decades at the small end of the curve used for the exponent fit.
pub const FIT_DECADES: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub lower: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsgoodReport {
    pub epsilon: f64,
    /// Least-squares slope of `log f` against `log β` over the smallest
    /// four decades of the curve.
    pub fitted_exponent: f64,
    pub fit_range: (f64, f64),
    /// `∫_{εₖ}^{ε} dβ/f(β)` for `εₖ = ε·10^{−k}`.
    pub integral_estimates: Vec<IntegralEstimate>,
    pub classification: Classification,
}

/// Classify `∫₀^ε dβ/f(β)` from a sampled curve.
///
/// Integral estimates use the piecewise power-law interpolant of the curve,
/// integrated decade by decade in `log β`.
pub fn osgood_test(curve: &[(f64, f64)], epsilon: f64) -> Result<OsgoodReport> {
    if !(epsilon > 0.0) {
        return Err(Error::DomainError(format!("epsilon must be positive, got {epsilon}")));
    }
    let pts: Vec<(f64, f64)> = curve.iter().copied().filter(|&(b, _)| b <= epsilon * (1.0 + 1e-12)).collect();
    if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::DomainError("curve must be sorted by increasing beta".into()));
    }
    if let Some(&(b, f)) = pts.iter().find(|&&(b, f)| !(b > 0.0 && f > 0.0 && f.is_finite())) {
        return Err(Error::DomainError(format!("f must be positive on (0, ε]; f({b}) = {f}")));
    }
    let decades = match pts.first() {
        Some(&(b0, _)) => (epsilon / b0).log10(),
        None => 0.0,
    };
    if decades < FIT_DECADES - 1e-9 {
        return Err(Error::InsufficientData(format!(
            "curve covers {decades:.2} decades below ε = {epsilon}; need at least {FIT_DECADES}"
        )));
    }

    let logs: Vec<(f64, f64)> = pts.iter().map(|&(b, f)| (b.ln(), f.ln())).collect();
    let cut = logs[0].0 + FIT_DECADES * std::f64::consts::LN_10 + 1e-9;
    let fit: Vec<(f64, f64)> = logs.iter().copied().filter(|p| p.0 <= cut).collect();
    let exponent = ls_slope(&fit);

    let classification = if exponent < CONVERGENT_BELOW {
        Classification::Convergent
    } else if exponent >= DIVERGENT_FROM - EXPONENT_TOL {
        Classification::Divergent
    } else {
        Classification::Inconclusive
    };

    // ln f as a piecewise-linear function of ln β, extended by the end slopes.
    let interp = |s: f64| -> f64 {
        let n = logs.len();
        let k = match logs.binary_search_by(|p| p.0.total_cmp(&s)) {
            Ok(k) => return logs[k].1,
            Err(k) => k.clamp(1, n - 1),
        };
        let (a, b) = (logs[k - 1], logs[k]);
        a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
    };
    let integrand = |s: f64| (s - interp(s)).exp();
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 2000 };
    let mut estimates = vec![];
    let mut acc = 0.0;
    let mut upper = epsilon.ln();
    for k in 1..=decades.floor() as usize {
        let lower = epsilon.ln() - k as f64 * std::f64::consts::LN_10;
        acc += integrate(integrand, lower, upper, opts)?;
        estimates.push(IntegralEstimate { lower: lower.exp(), value: acc });
        upper = lower;
    }

    Ok(OsgoodReport {
        epsilon,
        fitted_exponent: exponent,
        fit_range: (fit[0].0.exp(), fit[fit.len() - 1].0.exp()),
        integral_estimates: estimates,
        classification,
    })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// A positive rate function `f(τ)`.
pub type RateFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Smallest tabulated `τ`; below it `t(τ)` follows the local power law.
const TAU_FLOOR: f64 = 1e-14;
const NODES_PER_DECADE: f64 = 4.0;
const TAU_CEIL: f64 = 1e15;

/// The maximal solution of `τ' = f(τ), τ(0) = 0`, obtained by inverting
/// `t(τ) = ∫₀^τ ds/f(s)`.
#[derive(Clone)]
pub struct TimeChange {
    rate: RateFn,
    nodes: Vec<f64>,
    cum: Vec<f64>,
    tail_exp: f64,
    t_max: f64,
}

impl std::fmt::Debug for TimeChange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeChange")
            .field("nodes", &self.nodes.len())
            .field("tail_exp", &self.tail_exp)
            .field("t_max", &self.t_max)
            .finish()
    }
}

const SEGMENT_OPTS: QuadOptions = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 2000 };

fn positive_rate(rate: &RateFn, tau: f64) -> Result<f64> {
    let f = rate(tau)?;
    if f > 0.0 && f.is_finite() {
        Ok(f)
    } else {
        Err(Error::DomainError(format!("rate must be positive at τ = {tau}, got {f}")))
    }
}

/// `∫_a^b ds/f(s)`, integrated in `log s`.
fn segment(rate: &RateFn, a: f64, b: f64) -> Result<f64> {
    if b == a {
        return Ok(0.0);
    }
    let err = std::sync::Mutex::new(None);
    let v = integrate(
        |u| {
            let s = u.exp();
            match positive_rate(rate, s) {
                Ok(f) => s / f,
                Err(e) => {
                    err.lock().unwrap().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        a.ln(),
        b.ln(),
        SEGMENT_OPTS,
    );
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    v
}

/// Build `τ(t)` on `[0, t_max]`.
///
/// Fails with `DivergentIntegral` when `∫₀ ds/f` diverges at 0 (only the
/// trivial branch exists) and with `BlowUp` when `τ` escapes to infinity
/// before `t_max`.
pub fn build_time_change(rate: RateFn, t_max: f64) -> Result<TimeChange> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::DomainError(format!("t_max must be positive, got {t_max}")));
    }
    let f0 = positive_rate(&rate, TAU_FLOOR)?;
    let f1 = positive_rate(&rate, 10.0 * TAU_FLOOR)?;
    let tail_exp = (f1 / f0).log10();
    if tail_exp >= DIVERGENT_FROM - EXPONENT_TOL {
        return Err(Error::DivergentIntegral(format!("f(τ) ~ τ^{tail_exp:.6} near 0, so ∫₀ dτ/f(τ) diverges")));
    }
    let ratio = 10f64.powf(1.0 / NODES_PER_DECADE);
    let mut nodes = vec![TAU_FLOOR];
    let mut cum = vec![TAU_FLOOR / (f0 * (1.0 - tail_exp))];
    while *cum.last().unwrap() < t_max {
        let a = *nodes.last().unwrap();
        let b = a * ratio;
        if b > TAU_CEIL {
            return Err(Error::BlowUp { time: *cum.last().unwrap() });
        }
        let next = cum.last().unwrap() + segment(&rate, a, b)?;
        nodes.push(b);
        cum.push(next);
    }
    Ok(TimeChange { rate, nodes, cum, tail_exp, t_max })
}

impl TimeChange {
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `t(τ) = ∫₀^τ ds/f(s)`.
    pub fn time_of(&self, tau: f64) -> Result<f64> {
        if tau <= 0.0 {
            return Ok(0.0);
        }
        if tau <= self.nodes[0] {
            return Ok(self.cum[0] * (tau / self.nodes[0]).powf(1.0 - self.tail_exp));
        }
        let j = self.nodes.partition_point(|&n| n <= tau) - 1;
        Ok(self.cum[j] + segment(&self.rate, self.nodes[j], tau)?)
    }

    /// `τ(t)`, the inverse of [`TimeChange::time_of`].
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::DomainError(format!("time must be nonnegative, got {t}")));
        }
        if t > self.t_max * (1.0 + 1e-12) {
            return Err(Error::DomainError(format!("time {t} beyond t_max = {}", self.t_max)));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t <= self.cum[0] {
            return Ok(self.nodes[0] * (t / self.cum[0]).powf(1.0 / (1.0 - self.tail_exp)));
        }
        let j = (self.cum.partition_point(|&c| c <= t) - 1).min(self.nodes.len() - 2);
        let (mut lo, mut hi) = (self.nodes[j], self.nodes[j + 1]);
        let (c0, c1) = (self.cum[j], self.cum[j + 1]);
        // Start from log-linear interpolation of the table.
        let mut tau = (lo.ln() + (hi.ln() - lo.ln()) * (t - c0) / (c1 - c0)).exp();
        for _ in 0..100 {
            let resid = c0 + segment(&self.rate, self.nodes[j], tau)? - t;
            if resid > 0.0 {
                hi = tau;
            } else {
                lo = tau;
            }
            let newton = tau - resid * positive_rate(&self.rate, tau)?;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let done = (next - tau).abs() <= 1e-15 * tau;
            tau = next;
            if done || hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(tau)
    }

    /// `f(τ(t))`, the exact derivative of `τ` at `t`.
    pub fn rate_at(&self, t: f64) -> Result<f64> {
        let tau = self.eval(t)?;
        if tau == 0.0 {
            return Ok(0.0);
        }
        (self.rate)(tau)
    }

    pub fn table(&self, times: &[f64]) -> Result<Vec<f64>> {
        times.par_iter().map(|&t| self.eval(t)).collect()
    }
}

/// The stationary and the moving solution from the same initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPair {
    pub stationary: MeasureFlow,
    pub moving: MeasureFlow,
    /// `τ` at each flow time.
    pub tau: Vec<f64>,
}

impl BranchPair {
    pub fn times(&self) -> &[f64] {
        self.moving.times()
    }

    /// `τ(t)` by linear interpolation of the table.
    pub fn tau_at(&self, t: f64) -> f64 {
        let ts = self.times();
        let k = ts.partition_point(|&s| s <= t);
        if k == 0 {
            return self.tau[0];
        }
        if k >= ts.len() {
            return self.tau[ts.len() - 1];
        }
        let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
        self.tau[k - 1] + w * (self.tau[k] - self.tau[k - 1])
    }

    /// `(t, τ(t), W₁(stationary_t, moving_t))` on the flow grid.
    pub fn separation(&self) -> Result<Vec<(f64, f64, f64)>> {
        let s = self.stationary.states();
        let m = self.moving.states();
        (0..self.times().len())
            .into_par_iter()
            .map(|k| Ok((self.times()[k], self.tau[k], wasserstein1_measures(&s[k], &m[k])?)))
            .collect()
    }
}

pub const DEFAULT_BRANCH_STEPS: usize = 200;
/// `|a(ν)|` above this rejects the initial datum as a non-zero of `a`.
pub const ZERO_TOL: f64 = 1e-12;

/// Both branches on a uniform grid with [`DEFAULT_BRANCH_STEPS`] steps.
pub fn construct_branches(a: &FunctionalSpec, nu: &DiscreteMeasure, t_max: f64) -> Result<BranchPair> {
    construct_branches_with(a, nu, t_max, DEFAULT_BRANCH_STEPS)
}

/// The rate `f(β) = a(Γ(β,·) * ν)` as a shareable closure.
pub fn functional_rate(a: &FunctionalSpec, nu: &DiscreteMeasure) -> RateFn {
    let (a, nu) = (a.clone(), nu.clone());
    Arc::new(move |beta| eval_functional(&a, beta, &nu))
}

pub fn construct_branches_with(
    a: &FunctionalSpec,
    nu: &DiscreteMeasure,
    t_max: f64,
    steps: usize,
) -> Result<BranchPair> {
    if steps < 2 {
        return Err(Error::DomainError("need at least two time steps".into()));
    }
    let a_nu = a.eval(&Measure::Discrete(nu.clone()))?;
    if a_nu.abs() > ZERO_TOL {
        return Err(Error::Precondition(format!("a(ν) = {a_nu} but the construction needs a(ν) = 0")));
    }
    let curve = sample_f_curve(a, nu, &default_beta_grid())?;
    let report = osgood_test(&curve, *default_beta_grid().last().unwrap())?;
    if report.classification != Classification::Convergent {
        return Err(Error::DivergentIntegral(format!(
            "Osgood classification is {:?} (fitted exponent {:.6}); only the stationary branch exists",
            report.classification, report.fitted_exponent
        )));
    }
    let tc = build_time_change(functional_rate(a, nu), t_max)?;
    let times = linspace(0.0, t_max, steps + 1);
    let tau = tc.table(&times)?;
    let moving = tau
        .iter()
        .map(
            |&b| if b == 0.0 { Ok(Measure::Discrete(nu.clone())) } else { Ok(Measure::Mixture(heat_convolve(b, nu)?)) },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchPair {
        stationary: MeasureFlow::stationary(times.clone(), nu)?,
        moving: MeasureFlow::new(times, moving)?,
        tau,
    })
}

/// The default test battery: bumps of radius 3 centred at −2, …, 2.
pub fn default_bump_battery() -> Vec<ScalarField> {
    (-2..=2).map(|c| ScalarField::bump(c as f64, 3.0)).collect()
}

/// Fewest flow points in `[0, t]` accepted by [`weak_form_residual`].
pub const MIN_RESIDUAL_POINTS: usize = 10;

/// `|∫φ dμ_t − ∫φ dν − ∫₀ᵗ (a(μ_s)∫φ'' dμ_s + ∫bφ' dμ_s) ds|` for each test
/// function, with Simpson's rule in time on the flow grid. `t` must be a
/// grid time.
pub fn weak_form_residual(
    flow: &MeasureFlow,
    a: &FunctionalSpec,
    b: &Drift,
    tests: &[ScalarField],
    t: f64,
) -> Result<Vec<f64>> {
    let times = flow.times();
    let k = times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
        .ok_or_else(|| Error::DomainError(format!("t = {t} is not a time of the flow")))?;
    if k + 1 < MIN_RESIDUAL_POINTS {
        return Err(Error::GridTooCoarse { points: k + 1, t, min: MIN_RESIDUAL_POINTS });
    }
    let states = &flow.states()[..=k];
    let a_vals: Vec<f64> = states.par_iter().map(|m| a.eval(m)).collect::<Result<_>>()?;
    let grid = &times[..=k];
    tests
        .par_iter()
        .map(|phi| {
            let d1 = phi.derivative()?;
            let d2 = d1.derivative()?;
            let mut g = Vec::with_capacity(states.len());
            for (i, m) in states.iter().enumerate() {
                let mut v = 0.0;
                if a_vals[i] != 0.0 {
                    v += a_vals[i] * m.integrate_fn(|x| d2.eval(x, 0.0))?;
                }
                if !b.is_zero() {
                    let s = grid[i];
                    v += m.integrate_fn(|x| b.eval(m, x, s).unwrap_or(f64::NAN) * d1.eval(x, 0.0))?;
                }
                g.push(v);
            }
            let lhs = states[k].integrate_fn(|x| phi.eval(x, 0.0))? - states[0].integrate_fn(|x| phi.eval(x, 0.0))?;
            Ok((lhs - simpson(grid, &g)).abs())
        })
        .collect()
}

/// Composite Simpson on a possibly non-uniform grid; an odd final interval
/// uses the quadratic through the last three points.
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() - 1;
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 <= n {
        let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
        total += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * y[i] + (h0 + h1).powi(2) / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if i < n {
        if n >= 2 {
            let (h0, h1) = (x[n - 1] - x[n - 2], x[n] - x[n - 1]);
            total += h1
                * (-h1 * h1 / (6.0 * h0 * (h0 + h1)) * y[n - 2]
                    + (h1 + 3.0 * h0) / (6.0 * h0) * y[n - 1]
                    + (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1)) * y[n]);
        } else {
            total += 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
        }
    }
    total
}

/// Step for the central differences in [`dirac_flow_residual`].
pub const PATH_FD_STEP: f64 = 1e-4;

/// `max_t |ẋ(t) − b(δ_{x(t)})|` for a candidate path of point masses under
/// the pure-drift equation `∂_tμ + ∂_x(b(μ)μ) = 0`.
pub fn dirac_flow_residual(x_path: impl Fn(f64) -> f64, b: &FunctionalSpec, t_grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let h = PATH_FD_STEP;
        let xdot = (x_path(t + h) - x_path(t - h)) / (2.0 * h);
        let drift = b.eval(&Measure::Discrete(DiscreteMeasure::dirac(x_path(t))))?;
        worst = worst.max((xdot - drift).abs());
    }
    Ok(worst)
}

/// `Φ(x) = π^{−1/2} ∫_{−∞}^x e^{−y²} dy`.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x)
}

/// Right side of `t g' = F(g)` for the drift example.
pub fn drift_example_f(g: f64) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    (-1.0 / (4.0 * g * g)).exp() / sqrt_pi + phi(1.0 / (2.0 * g)) / g - 1.0 / (2.0 * g) - g
}

/// `F'(g) = (½ − Φ(1/(2g)))/g² − 1`; the exponential terms cancel.
pub fn drift_example_f_prime(g: f64) -> f64 {
    (0.5 - phi(1.0 / (2.0 * g))) / (g * g) - 1.0
}

/// `τ' = ∫|y − t| Γ(τ, y) dy = 2√(τ/π) e^{−t²/(4τ)} + 2tΦ(t/(2√τ)) − t`.
pub fn drift_example_rhs(t: f64, tau: f64) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    2.0 * (tau.sqrt() / sqrt_pi) * (-t * t / (4.0 * tau)).exp() + 2.0 * t * phi(t / (2.0 * tau.sqrt())) - t
}

/// The same right side with `Φ(t²/(4τ))` in place of `Φ(t/(2√τ))`.
pub fn drift_example_rhs_as_printed(t: f64, tau: f64) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    2.0 * (tau.sqrt() / sqrt_pi) * (-t * t / (4.0 * tau)).exp() + 2.0 * t * phi(t * t / (4.0 * tau)) - t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftExampleReport {
    pub lambda: f64,
    /// The zero of `F` on `(0, 1)`.
    pub g0: f64,
    pub f_at_g0: f64,
    /// Largest `F'` on `g ∈ [0.05, 0.95]`.
    pub f_slope_max: f64,
    /// `max |τ' − rhs|` for `τ = g₀²t²` on `t ∈ [0.1, 2]`.
    pub ode_residual: f64,
    /// The same residual with the right side as typeset, `Φ(t²/(4τ))`.
    pub ode_residual_as_printed: f64,
}

/// Scalar analysis of `∂_tμ = ∂_x²(a(μ)μ) + λ∂_xμ`, `a(μ) = ∫|x| dμ`,
/// `μ₀ = δ₀`. Scaling reduces every `λ ≠ 0` to `λ = 1`.
pub fn drift_example_analysis(lambda: f64) -> Result<DriftExampleReport> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::DomainError(format!("lambda must be nonzero and finite, got {lambda}")));
    }
    let (mut lo, mut hi) = (1e-3, 1.0);
    let (f_lo, f_hi) = (drift_example_f(lo), drift_example_f(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::RootNotBracketed { lo, hi, f_lo, f_hi });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if drift_example_f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g0 = 0.5 * (lo + hi);
    let f_slope_max =
        linspace(0.05, 0.95, 181).into_iter().map(drift_example_f_prime).fold(f64::NEG_INFINITY, f64::max);
    let ts = linspace(0.1, 2.0, 191);
    let resid = |rhs: fn(f64, f64) -> f64| {
        ts.iter().map(|&t| (2.0 * g0 * g0 * t - rhs(t, g0 * g0 * t * t)).abs()).fold(0.0, f64::max)
    };
    Ok(DriftExampleReport {
        lambda,
        g0,
        f_at_g0: drift_example_f(g0),
        f_slope_max,
        ode_residual: resid(drift_example_rhs),
        ode_residual_as_printed: resid(drift_example_rhs_as_printed),
    })
}

/// `b(ρ) = inf_t min{W₁(μ_t, ρ), W₁(σ_t, ρ)}` over the sampled states of a
/// branch pair: a 1-Lipschitz functional in `W₁` vanishing on both branches.
#[derive(Debug, Clone)]
pub struct AddedDrift {
    states: Vec<Measure>,
}

impl AddedDrift {
    pub fn from_branches(pair: &BranchPair) -> Self {
        let mut states: Vec<Measure> = pair.moving.states().iter().skip(1).cloned().collect();
        states.push(pair.stationary.initial().clone());
        AddedDrift { states }
    }

    pub fn eval(&self, rho: &Measure) -> Result<f64> {
        let d: Vec<f64> = self.states.par_iter().map(|s| wasserstein1_measures(s, rho)).collect::<Result<_>>()?;
        Ok(d.into_iter().fold(f64::INFINITY, f64::min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::log_grid;

    fn power_curve(alpha: f64) -> Vec<(f64, f64)> {
        log_grid(1e-12, 1e-1, 56).into_iter().map(|b| (b, b.powf(alpha))).collect()
    }

    #[test]
    fn osgood_examples() {
        let r = osgood_test(&power_curve(0.5), 0.1).unwrap();
        assert_eq!(r.classification, Classification::Convergent);
        assert!((r.fitted_exponent - 0.5).abs() < 1e-12);
        let last = r.integral_estimates.last().unwrap().value;
        assert!((last - 2.0 * (0.1f64.sqrt() - 1e-6)).abs() < 1e-10, "{last}");
        assert_eq!(osgood_test(&power_curve(1.0), 0.1).unwrap().classification, Classification::Divergent);
        assert_eq!(osgood_test(&power_curve(0.97), 0.1).unwrap().classification, Classification::Inconclusive);
    }

    #[test]
    fn osgood_needs_four_decades() {
        let curve: Vec<_> = log_grid(1e-4, 1e-1, 20).into_iter().map(|b| (b, b)).collect();
        assert!(matches!(osgood_test(&curve, 0.1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn time_change_closed_forms() {
        let tc = build_time_change(Arc::new(|s: f64| Ok(s.sqrt())), 2.0).unwrap();
        assert!((tc.eval(2.0).unwrap() - 1.0).abs() < 1e-12);
        let tc = build_time_change(Arc::new(|s: f64| Ok(s.cbrt())), 1.0).unwrap();
        for t in [1e-9, 0.01, 0.3, 1.0] {
            let expect = (2.0 * t / 3.0f64).powf(1.5);
            assert!((tc.eval(t).unwrap() - expect).abs() <= 1e-12 * expect.max(1e-6));
        }
        assert!(matches!(build_time_change(Arc::new(|s: f64| Ok(s)), 1.0), Err(Error::DivergentIntegral(_))));
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [10, 11] {
            let x: Vec<f64> = (0..=n).map(|i| (i as f64 / n as f64).powi(2) * 2.0).collect();
            let y: Vec<f64> = x.iter().map(|&s| s * s).collect();
            assert!((simpson(&x, &y) - 8.0 / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn stationary_branch_has_zero_residual() {
        let nu = DiscreteMeasure::dirac(0.0);
        let flow = MeasureFlow::stationary(linspace(0.0, 1.0, 21), &nu).unwrap();
        let r = weak_form_residual(
            &flow,
            &FunctionalSpec::abs_moment_power(0.5),
            &Drift::zero(),
            &default_bump_battery(),
            1.0,
        )
        .unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
        assert!(matches!(
            weak_form_residual(&flow, &FunctionalSpec::constant(0.0), &Drift::zero(), &default_bump_battery(), 0.4),
            Err(Error::GridTooCoarse { points: 9, .. })
        ));
    }

    #[test]
    fn drift_example_sign_change_and_slope() {
        assert!(drift_example_f(0.01) > 0.0 && drift_example_f(0.99) < 0.0);
        for g in [0.05, 0.3, 0.6, 0.95] {
            let h = 1e-6;
            let fd = (drift_example_f(g + h) - drift_example_f(g - h)) / (2.0 * h);
            assert!((fd - drift_example_f_prime(g)).abs() < 1e-6);
        }
        let r = drift_example_analysis(1.0).unwrap();
        assert!(r.g0 > 0.0 && r.g0 < 1.0 && r.f_slope_max <= -1.0 + 1e-6 && r.ode_residual < 1e-9);
        assert!(drift_example_analysis(0.0).is_err());
    }

    #[test]
    fn drift_example_rhs_matches_quadrature() {
        for (t, tau) in [(0.3, 0.05), (1.0, 0.2), (1.5, 2.0)] {
            let rhs = crate::measures::GaussianMixture::new(vec![crate::measures::GaussianComponent {
                mean: 0.0,
                tau,
                weight: 1.0,
            }])
            .unwrap()
            .integrate_fn(|y| (y - t).abs())
            .unwrap();
            assert!((rhs - drift_example_rhs(t, tau)).abs() < 1e-9);
        }
    }
}
