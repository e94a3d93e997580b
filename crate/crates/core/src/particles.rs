//! Interacting-particle (McKean–Vlasov) simulation of
//! `∂_tμ = ∂_x²(aμ) − ∂_x(bμ)` by Euler–Maruyama:
//!
//! ```text
//! X_{k+1} = X_k + b(μ̂_k, X_k, t_k) dt + √(2 a(μ̂_k, X_k, t_k)) √dt ξ
//! ```
//!
//! The factor 2 matches the generator `a φ'' + b φ'` of the forward equation
//! to the Itô generator `½σ² φ'' + b φ'`.
//!
//! Randomness: particle `i` owns a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)` and switched to stream `i`. Its first draw places the
//! particle at the inverse CDF of `ν` at `(i + U)/N`; later draws are the
//! Gaussian increments. Output therefore depends only on the configuration,
//! never on the thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{CoefficientSpec, Diffusion, DriftTerm};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::measures::{discretize, DiscreteMeasure, Measure, MeasureFlow};
use crate::metrics::{distance, wasserstein_1d, MetricKind};

/// Positions beyond this magnitude abort the run.
pub const BLOWUP_LIMIT: f64 = 1e8;

/// Largest support for which `compare_flows` will call an LP-based metric.
pub const LP_SUPPORT_LIMIT: usize = 2000;

fn default_save_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_particles: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub coefficients: CoefficientSpec,
    pub initial: DiscreteMeasure,
    /// Save a snapshot every this many steps (the final step is always saved).
    #[serde(default = "default_save_every")]
    pub save_every: usize,
}

impl SimConfig {
    pub fn new(
        n_particles: usize,
        dt: f64,
        t_end: f64,
        seed: u64,
        coefficients: CoefficientSpec,
        initial: DiscreteMeasure,
    ) -> Self {
        SimConfig { n_particles, dt, t_end, seed, coefficients, initial, save_every: 1 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_save_every(mut self, k: usize) -> Self {
        self.save_every = k;
        self
    }

    /// Number of Euler steps; `t_end` must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        if self.n_particles < 2 {
            return Err(Error::DomainError(format!("need at least 2 particles, got {}", self.n_particles)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end && self.t_end.is_finite()) {
            return Err(Error::DomainError(format!("need 0 < dt ≤ T (dt = {}, T = {})", self.dt, self.t_end)));
        }
        if self.save_every == 0 {
            return Err(Error::DomainError("save_every must be positive".into()));
        }
        let n = (self.t_end / self.dt).round();
        if ((n * self.dt - self.t_end) / self.t_end).abs() > 1e-9 {
            return Err(Error::DomainError(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        Ok(n as usize)
    }
}

/// Particle positions at the saved times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub times: Vec<f64>,
    /// `positions[k][i]` is particle `i` at `times[k]`.
    pub positions: Vec<Vec<f64>>,
}

impl Simulation {
    /// Empirical measures at the saved times.
    pub fn flow(&self) -> Result<MeasureFlow> {
        let states = self
            .positions
            .iter()
            .map(|p| DiscreteMeasure::empirical(p).map(Measure::Discrete))
            .collect::<Result<Vec<_>>>()?;
        MeasureFlow::new(self.times.clone(), states)
    }

    /// Wide CSV: header `t,x0,x1,…`, one row per saved time.
    pub fn write_particles_csv(&self, mut w: impl Write) -> Result<()> {
        let n = self.positions.first().map_or(0, Vec::len);
        write!(w, "t")?;
        for i in 0..n {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for (t, row) in self.times.iter().zip(&self.positions) {
            write!(w, "{t}")?;
            for x in row {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Long CSV `t,bin_left,bin_right,mass` with `bins` equal bins spanning
    /// all saved positions.
    pub fn write_hist_csv(&self, bins: usize, mut w: impl Write) -> Result<()> {
        if bins == 0 {
            return Err(Error::DomainError("need at least one histogram bin".into()));
        }
        let all = self.positions.iter().flatten();
        let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
        let mut hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            hi = lo + 1.0;
        }
        let width = (hi - lo) / bins as f64;
        writeln!(w, "t,bin_left,bin_right,mass")?;
        for (t, row) in self.times.iter().zip(&self.positions) {
            let mut counts = vec![0usize; bins];
            for x in row {
                let k = (((x - lo) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
            for (k, c) in counts.iter().enumerate() {
                let left = lo + k as f64 * width;
                writeln!(w, "{t},{left},{},{}", left + width, *c as f64 / row.len() as f64)?;
            }
        }
        Ok(())
    }
}

/// Runs the particle system and returns the empirical flow.
pub fn simulate(cfg: &SimConfig) -> Result<MeasureFlow> {
    run(cfg)?.flow()
}

/// Runs the particle system and keeps raw positions.
pub fn run(cfg: &SimConfig) -> Result<Simulation> {
    let steps = cfg.steps()?;
    let n = cfg.n_particles;
    cfg.initial.ensure_probability()?;
    let atoms = cfg.initial.points()?;
    let cdf: Vec<f64> = cfg
        .initial
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();

    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(i as u64);
            r
        })
        .collect();
    let mut x: Vec<f64> = rngs
        .iter_mut()
        .enumerate()
        .map(|(i, r)| {
            let u = (i as f64 + r.gen::<f64>()) / n as f64;
            let k = cdf.partition_point(|&c| c < u).min(atoms.len() - 1);
            atoms[k]
        })
        .collect();

    let mut times = vec![0.0];
    let mut positions = vec![x.clone()];
    let sqrt_dt = cfg.dt.sqrt();
    let mut drift = vec![0.0; n];
    let mut diff = vec![0.0; n];
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        drift_values(&cfg.coefficients, &x, t, &mut drift)?;
        diffusion_values(&cfg.coefficients.diffusion, &x, t, &mut diff)?;
        x.par_iter_mut().zip(rngs.par_iter_mut()).zip(drift.par_iter().zip(&diff)).for_each(|((xi, r), (b, a))| {
            let xi_n: f64 = r.sample(StandardNormal);
            *xi += b * cfg.dt + (2.0 * a).sqrt() * sqrt_dt * xi_n;
        });
        let t_next = (k + 1) as f64 * cfg.dt;
        if x.iter().any(|v| !(v.abs() <= BLOWUP_LIMIT)) {
            return Err(Error::BlowUp { time: t_next });
        }
        if (k + 1) % cfg.save_every == 0 || k + 1 == steps {
            times.push(t_next);
            positions.push(x.clone());
        }
    }
    Ok(Simulation { times, positions })
}

fn diffusion_values(d: &Diffusion, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
    match d {
        Diffusion::Field { field } => {
            if let Some(c) = field.as_constant() {
                out.fill(c);
            } else {
                out.par_iter_mut().zip(x).try_for_each(|(o, &xi)| -> Result<()> {
                    *o = field.try_eval(xi, t)?;
                    Ok(())
                })?;
            }
        }
        Diffusion::Functional { functional } => {
            let mu = Measure::Discrete(DiscreteMeasure::empirical(x)?);
            out.fill(functional.eval(&mu)?);
        }
    }
    if let Some(i) = out.iter().position(|a| !(*a >= 0.0)) {
        return Err(Error::EvaluationError { x: x[i], t, msg: format!("diffusion is negative ({})", out[i]) });
    }
    Ok(())
}

/// `b(μ̂, xᵢ, t)` for every particle, with `μ̂` the empirical measure of `x`.
fn drift_values(spec: &CoefficientSpec, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
    out.fill(0.0);
    let n = x.len() as f64;
    for term in &spec.drift.terms {
        match term {
            DriftTerm::Local { field } => {
                out.par_iter_mut().zip(x).try_for_each(|(o, &xi)| -> Result<()> {
                    *o += field.try_eval(xi, t)?;
                    Ok(())
                })?;
            }
            DriftTerm::MomentScaled { factor, moment } => {
                let mut m = 0.0;
                for &y in x {
                    m += moment.try_eval(y, t)?;
                }
                m /= n;
                out.par_iter_mut().zip(x).try_for_each(|(o, &xi)| -> Result<()> {
                    *o += factor.try_eval(xi, t)? * m;
                    Ok(())
                })?;
            }
            DriftTerm::Interaction { kernel } => {
                let vals = interaction_values(kernel, x, t)?;
                out.iter_mut().zip(vals).for_each(|(o, v)| *o += v);
            }
        }
    }
    if let Some(i) = out.iter().position(|b| !b.is_finite()) {
        return Err(Error::EvaluationError { x: x[i], t, msg: "drift is not finite".into() });
    }
    Ok(())
}

/// `(1/N) Σⱼ k(xᵢ − xⱼ, t)` for every `i`.
pub fn interaction_values(kernel: &ScalarField, x: &[f64], t: f64) -> Result<Vec<f64>> {
    match PolyKernel::fit(kernel, x, t)? {
        Some(pk) => Ok(pk.apply(x)),
        None => {
            let n = x.len() as f64;
            x.par_iter()
                .map(|&xi| {
                    let mut s = 0.0;
                    for &y in x {
                        s += kernel.try_eval(xi - y, t)?;
                    }
                    Ok(s / n)
                })
                .collect()
        }
    }
}

const POLY_DEGREE: usize = 4;
const POLY_CHECKS: usize = 17;
const POLY_TOL: f64 = 1e-10;

/// A kernel that is a polynomial of degree ≤ 4 on `z ≥ 0` and on `z < 0`
/// over the particles' span. Interaction sums then reduce to prefix sums of
/// powers of the sorted positions.
#[derive(Debug)]
struct PolyKernel {
    /// Coefficients in `z` for `z ≥ 0` and `z < 0`.
    right: [f64; POLY_DEGREE + 1],
    left: [f64; POLY_DEGREE + 1],
}

impl PolyKernel {
    fn fit(kernel: &ScalarField, x: &[f64], t: f64) -> Result<Option<Self>> {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span == 0.0 {
            let k0 = kernel.try_eval(0.0, t)?;
            let mut right = [0.0; POLY_DEGREE + 1];
            right[0] = k0;
            return Ok(Some(PolyKernel { right, left: right }));
        }
        let right = fit_half(kernel, span, t)?;
        let left = fit_half(kernel, -span, t)?;
        Ok(match (right, left) {
            (Some(right), Some(left)) => Some(PolyKernel { right, left }),
            _ => None,
        })
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let center = x.iter().sum::<f64>() / n as f64;
        let mut ys: Vec<f64> = x.iter().map(|v| v - center).collect();
        ys.sort_by(f64::total_cmp);
        // prefix[m][l] = Σ_{j<m} y_j^l
        let mut prefix = vec![[0.0; POLY_DEGREE + 1]; n + 1];
        for (j, &y) in ys.iter().enumerate() {
            let mut p = 1.0;
            for l in 0..=POLY_DEGREE {
                prefix[j + 1][l] = prefix[j][l] + p;
                p *= y;
            }
        }
        let total = prefix[n];
        x.par_iter()
            .map(|&xi| {
                let u = xi - center;
                let m = ys.partition_point(|&y| y <= u);
                let below = prefix[m];
                let mut above = [0.0; POLY_DEGREE + 1];
                for l in 0..=POLY_DEGREE {
                    above[l] = total[l] - below[l];
                }
                (poly_sum(&self.right, u, &below) + poly_sum(&self.left, u, &above)) / n as f64
            })
            .collect()
    }
}

/// `Σ_y Σ_d c_d (u − y)^d` given power sums `s_l = Σ_y y^l`.
fn poly_sum(c: &[f64; POLY_DEGREE + 1], u: f64, s: &[f64; POLY_DEGREE + 1]) -> f64 {
    let mut total = 0.0;
    for (d, &cd) in c.iter().enumerate() {
        if cd == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        let mut acc = 0.0;
        for l in 0..=d {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            acc += binom * u.powi((d - l) as i32) * sign * s[l];
            binom = binom * (d - l) as f64 / (l + 1) as f64;
        }
        total += cd * acc;
    }
    total
}

/// Interpolate `k` on `[0, L]` (or `[L, 0]` for negative `L`) at Chebyshev
/// nodes, then check at other points including 0.
fn fit_half(kernel: &ScalarField, l: f64, t: f64) -> Result<Option<[f64; POLY_DEGREE + 1]>> {
    const M: usize = POLY_DEGREE + 1;
    let nodes: Vec<f64> =
        (0..M).map(|j| 0.5 * (1.0 + (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * M) as f64).cos())).collect();
    let mut a = [[0.0; M]; M];
    let mut rhs = [0.0; M];
    for (r, &s) in nodes.iter().enumerate() {
        let mut p = 1.0;
        for c in 0..M {
            a[r][c] = p;
            p *= s;
        }
        rhs[r] = kernel.try_eval(s * l, t)?;
    }
    let Some(cs) = solve_dense(a, rhs) else { return Ok(None) };
    let eval = |s: f64| cs.iter().rev().fold(0.0, |acc, c| acc * s + c);
    let mut scale = 1.0f64;
    let mut checks = Vec::with_capacity(POLY_CHECKS);
    for i in 0..POLY_CHECKS {
        let s = i as f64 / (POLY_CHECKS - 1) as f64;
        let k = kernel.try_eval(s * l, t)?;
        scale = scale.max(k.abs());
        checks.push((s, k));
    }
    // At z = 0 the left half borrows nothing: pairs with y = x use the right fit.
    let start = if l < 0.0 { 1 } else { 0 };
    if checks[start..].iter().any(|&(s, k)| (eval(s) - k).abs() > POLY_TOL * scale) {
        return Ok(None);
    }
    let mut out = [0.0; M];
    let mut lp = 1.0;
    for d in 0..M {
        out[d] = cs[d] / lp;
        lp *= l;
    }
    Ok(Some(out))
}

fn solve_dense<const M: usize>(mut a: [[f64; M]; M], mut b: [f64; M]) -> Option<[f64; M]> {
    for col in 0..M {
        let piv = (col..M).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..M {
            let f = a[r][col] / a[col][col];
            for c in col..M {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; M];
    for r in (0..M).rev() {
        let s: f64 = (r + 1..M).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Distance between two flows at each common time. Every time of the coarser
/// grid must appear in the finer one. Mixture states are
/// discretized with `n_disc` atoms per component; `W_p` uses the exact
/// one-dimensional formula, the other metrics the LP.
pub fn compare_flows(
    flow1: &MeasureFlow,
    flow2: &MeasureFlow,
    kind: &MetricKind,
    n_disc: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![];
    let mut j = 0;
    for (i, &t) in flow1.times().iter().enumerate() {
        let tol = 1e-9 * t.abs().max(1.0);
        while j < flow2.len() && flow2.times()[j] < t - tol {
            j += 1;
        }
        if j < flow2.len() && (flow2.times()[j] - t).abs() <= tol {
            let mu = to_discrete(&flow1.states()[i], n_disc)?;
            let sigma = to_discrete(&flow2.states()[j], n_disc)?;
            out.push((t, state_distance(&mu, &sigma, kind)?));
        }
    }
    let coarse = flow1.len().min(flow2.len());
    if out.len() < coarse {
        return Err(Error::GridMismatch(format!(
            "only {} of the coarser grid's {coarse} times appear in both flows",
            out.len()
        )));
    }
    Ok(out)
}

fn to_discrete(m: &Measure, n: usize) -> Result<DiscreteMeasure> {
    match m {
        Measure::Discrete(d) => Ok(d.clone()),
        Measure::Mixture(g) => discretize(g, n),
    }
}

fn state_distance(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, kind: &MetricKind) -> Result<f64> {
    if let MetricKind::Wp { p } = kind {
        if mu.dim() == 1 && sigma.dim() == 1 {
            return wasserstein_1d(mu, sigma, *p);
        }
    }
    if matches!(kind, MetricKind::Tv { .. }) {
        return distance(mu, sigma, kind);
    }
    if mu.len() > LP_SUPPORT_LIMIT || sigma.len() > LP_SUPPORT_LIMIT {
        return Err(Error::SizeLimit { rows: mu.len(), cols: sigma.len(), max: LP_SUPPORT_LIMIT });
    }
    distance(mu, sigma, kind)
}
