//! Finite-difference solver for the cut-off backward problem
//! `∂_t f + ζ_M(a f_xx + b f_x) = 0`, `f(·, s) = ψ`, and checks of the
//! gradient estimate `|f_x(x, t)| ≤ √W(x) e^{(C₀+1)(s−t)/2}`.
//!
//! The cutoff is `ζ_M(x) = η((1 + x²)^κ / M)`, where `η` is a fixed smooth
//! profile equal to 1 on `|x| ≤ 1` and 0 on `|x| ≥ 2`. Where `ζ_M` vanishes
//! the operator is switched off, so homogeneous Dirichlet data at `±R` are
//! harmless once `(1 + R²)^κ > 2M`.

use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::conditions::{dissipativity_constant, linspace, CheckBox, CheckOptions, CoefficientSpec, Diffusion, Drift};
use crate::error::{Error, Result};
use crate::expr::ScalarField;

fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// `η(x) = h(2 − |x|) / (h(2 − |x|) + h(|x| − 1))` with `h(s) = e^{−1/s}`.
pub fn eta(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        return 1.0;
    }
    if ax >= 2.0 {
        return 0.0;
    }
    let (p, q) = (h(2.0 - ax), h(ax - 1.0));
    p / (p + q)
}

pub fn eta_prime(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 || ax >= 2.0 {
        return 0.0;
    }
    let (u, v) = (2.0 - ax, ax - 1.0);
    let (p, q) = (h(u), h(v));
    let s = p + q;
    -x.signum() * p * q * (1.0 / (u * u) + 1.0 / (v * v)) / (s * s)
}

/// `|η'|²/η`, written so that it stays finite as `η → 0`.
fn eta_ratio(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 || ax >= 2.0 {
        return 0.0;
    }
    let (u, v) = (2.0 - ax, ax - 1.0);
    let (p, q) = (h(u), h(v));
    let k = 1.0 / (u * u) + 1.0 / (v * v);
    p * q * q * k * k / (p + q).powi(3)
}

/// `C = max(1, sup |η'|²/η)`, sampled once on a fine grid of `(1, 2)`.
pub fn eta_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let n = 200_000;
        (1..n).map(|i| eta_ratio(1.0 + i as f64 / n as f64)).fold(1.0, f64::max)
    })
}

/// The cutoff exponent `κ = min(δ, C⁻²)/32` for which the gradient bound is
/// proved to survive localisation.
pub fn safe_kappa(delta: f64) -> f64 {
    delta.min(eta_constant().powi(-2)) / 32.0
}

/// `ζ_M(x) = η((1 + x²)^κ / M)`.
pub fn cutoff(x: f64, kappa: f64, m: f64) -> f64 {
    eta((1.0 + x * x).powf(kappa) / m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackwardProblem {
    pub a: ScalarField,
    pub b: ScalarField,
    /// Terminal time `s`.
    pub s: f64,
    pub psi: ScalarField,
    /// Cutoff level `M > 1`.
    pub m: f64,
    pub kappa: f64,
    /// Half-width `R` of the box `[−R, R]`.
    pub r: f64,
    pub nx: usize,
    pub nt: usize,
}

pub const MIN_GRID: usize = 200;

impl BackwardProblem {
    /// Defaults: `R = 10`, `n_x = n_t = 400`, `M = 2` and [`safe_kappa`]
    /// with `δ = ½`. That `κ` is so small that `ζ_M ≡ 1` on the box.
    pub fn new(a: ScalarField, b: ScalarField, psi: ScalarField, s: f64) -> Self {
        BackwardProblem { a, b, s, psi, m: 2.0, kappa: safe_kappa(0.5), r: 10.0, nx: 400, nt: 400 }
    }

    pub fn with_grid(mut self, nx: usize, nt: usize) -> Self {
        self.nx = nx;
        self.nt = nt;
        self
    }

    pub fn with_cutoff(mut self, m: f64, kappa: f64) -> Self {
        self.m = m;
        self.kappa = kappa;
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn h_x(&self) -> f64 {
        2.0 * self.r / self.nx as f64
    }

    pub fn x_grid(&self) -> Vec<f64> {
        linspace(-self.r, self.r, self.nx + 1)
    }

    pub fn t_grid(&self) -> Vec<f64> {
        linspace(0.0, self.s, self.nt + 1)
    }

    /// `|x|` beyond which `ζ_M = 0`.
    pub fn cutoff_radius(&self) -> f64 {
        ((2.0 * self.m).powf(1.0 / self.kappa) - 1.0).max(0.0).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if self.nx < MIN_GRID || self.nt < MIN_GRID {
            return Err(Error::DomainError(format!("need n_x, n_t ≥ {MIN_GRID}, got {}, {}", self.nx, self.nt)));
        }
        if !(self.s > 0.0 && self.r > 0.0 && self.m > 1.0 && self.kappa > 0.0) {
            return Err(Error::DomainError("need s > 0, R > 0, M > 1, κ > 0".into()));
        }
        for x in self.x_grid() {
            if x.abs() > 0.5 * self.r && self.psi.try_eval(x, self.s)? != 0.0 {
                return Err(Error::Precondition(format!("ψ must vanish outside [−R/2, R/2]; ψ({x}) ≠ 0")));
            }
        }
        Ok(())
    }
}

/// `f(x_i, t_k)` on the space-time grid, rows indexed by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardSolution {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub psi: ScalarField,
}

impl BackwardSolution {
    pub fn h_x(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn terminal_max(&self) -> f64 {
        self.values.last().map(|row| row.iter().fold(0.0f64, |m, v| m.max(v.abs()))).unwrap_or(0.0)
    }

    /// `max_{k} max_i |f(x_i, t_k)| − max_i |ψ(x_i)|`.
    pub fn max_principle_excess(&self) -> f64 {
        let peak = self.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        peak - self.terminal_max()
    }

    /// Matrix CSV: first row `t` then the x-grid, then one row per time.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        write!(w, "t")?;
        for x in &self.x {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
        for (t, row) in self.t.iter().zip(&self.values) {
            write!(w, "{t}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Solve backward from `t = s` to `t = 0` by Crank–Nicolson, coefficients
/// frozen at each half step.
pub fn solve_backward(p: &BackwardProblem) -> Result<BackwardSolution> {
    p.validate()?;
    let xs = p.x_grid();
    let ts = p.t_grid();
    let n = xs.len();
    let hx = p.h_x();
    let dt = p.s / p.nt as f64;
    let zeta: Vec<f64> = xs.iter().map(|&x| cutoff(x, p.kappa, p.m)).collect();

    let mut values = vec![vec![0.0; n]; ts.len()];
    let last = &mut values[p.nt];
    for i in 1..n - 1 {
        last[i] = p.psi.try_eval(xs[i], p.s)?;
    }

    let m = n - 2;
    let (mut lo, mut di, mut up) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut rhs = vec![0.0; m];
    for k in (0..p.nt).rev() {
        let tm = 0.5 * (ts[k] + ts[k + 1]);
        for j in 0..m {
            let i = j + 1;
            let (a, b) = if zeta[i] == 0.0 {
                (0.0, 0.0)
            } else {
                let a = p.a.try_eval(xs[i], tm)?;
                if a < 0.0 {
                    return Err(Error::EvaluationError {
                        x: xs[i],
                        t: tm,
                        msg: format!("diffusion is negative ({a})"),
                    });
                }
                (zeta[i] * a, zeta[i] * p.b.try_eval(xs[i], tm)?)
            };
            let l = 0.5 * dt * (a / (hx * hx) - b / (2.0 * hx));
            let c = -dt * a / (hx * hx);
            let u = 0.5 * dt * (a / (hx * hx) + b / (2.0 * hx));
            let f = &values[k + 1];
            rhs[j] = l * f[i - 1] + (1.0 + c) * f[i] + u * f[i + 1];
            lo[j] = -l;
            di[j] = 1.0 - c;
            up[j] = -u;
        }
        let sol = thomas(&lo, &di, &up, &rhs)?;
        values[k][1..n - 1].copy_from_slice(&sol);
    }
    Ok(BackwardSolution { x: xs, t: ts, values, psi: p.psi.clone() })
}

/// Tridiagonal solve; `lo[0]` and `up[m−1]` are ignored.
fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = di.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut piv = di[0];
    for j in 0..m {
        if j > 0 {
            piv = di[j] - lo[j] * c[j - 1];
        }
        if !(piv.abs() > 1e-300) || !piv.is_finite() {
            return Err(Error::UnstableScheme(format!("zero pivot in tridiagonal solve at row {j}")));
        }
        c[j] = if j + 1 < m { up[j] / piv } else { 0.0 };
        d[j] = (rhs[j] - if j > 0 { lo[j] * d[j - 1] } else { 0.0 }) / piv;
    }
    for j in (0..m - 1).rev() {
        d[j] -= c[j] * d[j + 1];
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnstableScheme("non-finite values in tridiagonal solve".into()));
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    /// `min √W e^{(C₀+1)(s−t)/2} − |f_x|` over interior grid points.
    pub worst_margin: f64,
    pub worst_at: (f64, f64),
    pub h_x: f64,
    /// `worst_margin ≥ −h_x`.
    pub passes: bool,
}

/// Compare central-difference gradients with the bound `√W e^{(C₀+1)(s−t)/2}`. The
/// terminal data must satisfy `|ψ'| ≤ √W` on the grid.
pub fn verify_gradient_bound(sol: &BackwardSolution, w: &ScalarField, c0: f64, s: f64) -> Result<GradientCheck> {
    let dpsi = sol.psi.derivative()?;
    for &x in &sol.x {
        let (g, wx) = (dpsi.try_eval(x, s)?, w.try_eval(x, s)?);
        if g.abs() > wx.sqrt() * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("|ψ'({x})| = {} exceeds √W = {}", g.abs(), wx.sqrt())));
        }
    }
    let hx = sol.h_x();
    let sqrt_w: Vec<f64> = sol.x.iter().map(|&x| w.eval(x, s).sqrt()).collect();
    let mut worst = (f64::INFINITY, (f64::NAN, f64::NAN));
    for (k, row) in sol.values.iter().enumerate() {
        let growth = ((c0 + 1.0) * (s - sol.t[k]) / 2.0).exp();
        for i in 1..row.len() - 1 {
            let fx = (row[i + 1] - row[i - 1]) / (2.0 * hx);
            let margin = sqrt_w[i] * growth - fx.abs();
            if margin < worst.0 {
                worst = (margin, (sol.x[i], sol.t[k]));
            }
        }
    }
    Ok(GradientCheck { worst_margin: worst.0, worst_at: worst.1, h_x: hx, passes: worst.0 >= -hx })
}

/// `C₀` of `L W ≤ (C₀ − Λ)W` for the problem's coefficients on its box.
pub fn fit_c0(p: &BackwardProblem, w: &ScalarField, delta: f64) -> Result<f64> {
    let spec = CoefficientSpec::new(Diffusion::field(p.a.clone()), Drift::local(p.b.clone()));
    let opts = CheckOptions {
        bbox: CheckBox { x_min: -p.r, x_max: p.r, t_min: 0.0, t_max: p.s },
        grid_n: p.nx.max(100),
        delta,
        ..CheckOptions::default()
    };
    dissipativity_constant(&spec, w, &opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RichardsonReport {
    /// `max |f_h − f_{h/2}|` on the coarse nodes.
    pub coarse_diff: f64,
    /// `max |f_{h/2} − f_{h/4}|` on the coarse nodes.
    pub fine_diff: f64,
    pub ratio: f64,
}

/// Solve at `(n_x, n_t)`, doubled and quadrupled, and compare on the
/// coarse nodes. Second-order convergence gives a ratio near 4.
pub fn richardson(p: &BackwardProblem) -> Result<RichardsonReport> {
    let s1 = solve_backward(p)?;
    let s2 = solve_backward(&p.clone().with_grid(2 * p.nx, 2 * p.nt))?;
    let s4 = solve_backward(&p.clone().with_grid(4 * p.nx, 4 * p.nt))?;
    let mut d1: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for k in 0..=p.nt {
        for i in 0..=p.nx {
            let (a, b, c) = (s1.values[k][i], s2.values[2 * k][2 * i], s4.values[4 * k][4 * i]);
            d1 = d1.max((a - b).abs());
            d2 = d2.max((b - c).abs());
        }
    }
    Ok(RichardsonReport { coarse_diff: d1, fine_diff: d2, ratio: d1 / d2 })
}
