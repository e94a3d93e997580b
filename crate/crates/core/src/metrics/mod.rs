//! Exact probability metrics on finitely supported measures.
//!
//! Primal metrics (`W_p`, `T_p`) solve a transport LP and return the optimal
//! plan. The weighted dual metric `w_W` maximises `Σ f(zᵢ)(μ − σ)({zᵢ})` over
//! potentials on the union support with
//! `|f(zᵢ) − f(zⱼ)| ≤ |zᵢ − zⱼ|·max{√W(zᵢ), √W(zⱼ)}`; it is solved as a
//! transshipment problem (transport over the shortest-path closure of the
//! pairwise bounds) and certified by an explicit potential.

mod transport;
mod vertices;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::measures::{union_support, weight_values, DiscreteMeasure, Measure};
use crate::quadrature::{integrate, QuadOptions};

pub use transport::{solve_transport_lp, TransportPlan, TransportSolution, PLAN_TOL};
pub use vertices::{enumerate_polytope_vertices, MAX_ENUM_SUPPORT};

/// Tolerance for pairwise dual constraints in certificates.
pub const DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Plan { plan: TransportPlan },
    Potential { points: Vec<Vec<f64>>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStatus {
    pub iterations: usize,
    pub duality_gap: f64,
    /// Largest violation of a primal marginal or dual pairwise constraint.
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub value: f64,
    pub certificate: Certificate,
    pub solver_status: SolverStatus,
}

/// Which metric to compute; used by the CLI and flow comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    /// Kantorovich `W_p`.
    #[serde(rename = "Wp")]
    Wp { p: f64 },
    /// Fortet–Mourier `T_p` (probability couplings).
    #[serde(rename = "Tp")]
    BigTp { p: f64 },
    /// Fortet–Mourier `t_p` (signed couplings, via the dual form).
    #[serde(rename = "tp")]
    SmallTp { p: f64 },
    /// Weighted dual metric `w_W`.
    #[serde(rename = "wW")]
    Ww { weight: ScalarField },
    /// Weighted total variation `‖μ − σ‖_W`.
    Tv { weight: ScalarField },
}

/// Computes `kind` between two probability measures.
pub fn distance(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, kind: &MetricKind) -> Result<f64> {
    match kind {
        MetricKind::Wp { p } => kantorovich_wp(mu, sigma, *p).map(|r| r.value),
        MetricKind::BigTp { p } => fortet_mourier_big_tp(mu, sigma, *p).map(|r| r.value),
        MetricKind::SmallTp { p } => fortet_mourier_tp(mu, sigma, *p).map(|r| r.value),
        MetricKind::Ww { weight } => weighted_dual_ww(mu, sigma, weight).map(|r| r.value),
        MetricKind::Tv { weight } => crate::measures::weighted_tv(mu, sigma, weight),
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_pair(mu: &DiscreteMeasure, sigma: &DiscreteMeasure) -> Result<()> {
    mu.ensure_probability()?;
    sigma.ensure_probability()?;
    if mu.dim() != sigma.dim() {
        return Err(Error::DimensionError { expected: mu.dim(), got: sigma.dim() });
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("metric exponent must be >= 1, got {p}")))
    }
}

fn primal_report(
    mu: &DiscreteMeasure,
    sigma: &DiscreteMeasure,
    cost: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<(MetricReport, f64)> {
    let mut c = Vec::with_capacity(mu.len() * sigma.len());
    for x in mu.atoms() {
        for y in sigma.atoms() {
            c.push(cost(x, y));
        }
    }
    let sol = solve_transport_lp(&c, mu.weights(), sigma.weights())?;
    let rows = sol.plan.row_sums();
    let cols = sol.plan.col_sums();
    let max_violation = rows
        .iter()
        .zip(mu.weights())
        .chain(cols.iter().zip(sigma.weights()))
        .map(|(s, w)| (s - w).abs())
        .fold(0.0, f64::max);
    if max_violation > PLAN_TOL {
        return Err(Error::SolverFailure(format!("plan violates marginals by {max_violation:e}")));
    }
    let value = sol.primal.max(0.0);
    Ok((
        MetricReport {
            value,
            solver_status: SolverStatus { iterations: sol.iterations, duality_gap: sol.duality_gap(), max_violation },
            certificate: Certificate::Plan { plan: sol.plan },
        },
        value,
    ))
}

/// Kantorovich `W_p(μ, σ) = (min_P Σ |xᵢ − yⱼ|^p Pᵢⱼ)^{1/p}`.
pub fn kantorovich_wp(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, p: f64) -> Result<MetricReport> {
    check_pair(mu, sigma)?;
    check_p(p)?;
    let (mut report, cost) = primal_report(mu, sigma, |x, y| euclid(x, y).powf(p))?;
    report.value = cost.powf(1.0 / p);
    Ok(report)
}

/// The Fortet–Mourier cost `|x − y|(1 + max{|x|^{p−1}, |y|^{p−1}})`.
pub fn fortet_mourier_cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    euclid(x, y) * (1.0 + norm(x).powf(p - 1.0).max(norm(y).powf(p - 1.0)))
}

/// `T_p`: Fortet–Mourier cost minimised over probability couplings.
pub fn fortet_mourier_big_tp(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, p: f64) -> Result<MetricReport> {
    check_pair(mu, sigma)?;
    check_p(p)?;
    Ok(primal_report(mu, sigma, |x, y| fortet_mourier_cost(x, y, p))?.0)
}

/// The weight `W(x) = (1 + |x|^{p−1})²` for which `w_W = t_p`.
pub fn fortet_mourier_weight(p: f64) -> ScalarField {
    (1.0 + ScalarField::x().abs().powf(p - 1.0)).powf(2.0)
}

/// `t_p`, computed as `w_W` with `W = (1 + |x|^{p−1})²`.
pub fn fortet_mourier_tp(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, p: f64) -> Result<MetricReport> {
    check_p(p)?;
    weighted_dual_ww(mu, sigma, &fortet_mourier_weight(p))
}

/// Weighted dual metric `w_W` restricted to potentials on the union support.
pub fn weighted_dual_ww(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, w: &ScalarField) -> Result<MetricReport> {
    check_pair(mu, sigma)?;
    let (pts, wm, ws) = union_support(mu, sigma)?;
    let root_w: Vec<f64> = weight_values(w, &pts)?.into_iter().map(f64::sqrt).collect();
    let n = pts.len();
    let signed: Vec<f64> = wm.iter().zip(&ws).map(|(a, b)| a - b).collect();

    // Pairwise bounds and their shortest-path closure.
    let mut bound = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            bound[i * n + j] = euclid(&pts[i], &pts[j]) * root_w[i].max(root_w[j]);
        }
    }
    let mut closure = bound.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = closure[i * n + k];
            for j in 0..n {
                let via = dik + closure[k * n + j];
                if via < closure[i * n + j] {
                    closure[i * n + j] = via;
                }
            }
        }
    }

    let sources: Vec<usize> = (0..n).filter(|&i| signed[i] > 0.0).collect();
    let sinks: Vec<usize> = (0..n).filter(|&i| signed[i] < 0.0).collect();
    let (value, values, iterations, gap) = if sources.is_empty() || sinks.is_empty() {
        (0.0, vec![0.0; n], 0, 0.0)
    } else {
        let a: Vec<f64> = sources.iter().map(|&i| signed[i]).collect();
        let mut b: Vec<f64> = sinks.iter().map(|&j| -signed[j]).collect();
        // Rebalance rounding so both sides carry identical mass.
        let excess = a.iter().sum::<f64>() - b.iter().sum::<f64>();
        let last = b.len() - 1;
        b[last] = (b[last] + excess).max(0.0);
        let mut c = Vec::with_capacity(a.len() * b.len());
        for &i in &sources {
            for &j in &sinks {
                c.push(closure[i * n + j]);
            }
        }
        let sol = solve_transport_lp(&c, &a, &b)?;
        // f on sinks is −v; extend by the inf-convolution over sinks, which is
        // Lipschitz for the closure metric and dominates u on sources.
        let f: Vec<f64> = (0..n)
            .map(|z| sinks.iter().zip(&sol.v).map(|(&j, vj)| -vj + closure[z * n + j]).fold(f64::INFINITY, f64::min))
            .collect();
        (sol.primal.max(0.0), f, sol.iterations, sol.duality_gap())
    };

    let mut max_violation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_violation = max_violation.max(values[i] - values[j] - bound[i * n + j]);
        }
    }
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if max_violation > DUAL_TOL * scale {
        return Err(Error::SolverFailure(format!("dual certificate violated by {max_violation:e}")));
    }
    let dual_value: f64 = values.iter().zip(&signed).map(|(f, d)| f * d).sum();
    Ok(MetricReport {
        value,
        certificate: Certificate::Potential { points: pts, values },
        solver_status: SolverStatus {
            iterations,
            duality_gap: gap.max((dual_value - value).abs()),
            max_violation: max_violation.max(0.0),
        },
    })
}

/// Exact `W_p` between one-dimensional measures by monotone rearrangement:
/// `W_p^p = ∫₀¹ |F⁻¹(q) − G⁻¹(q)|^p dq`. Linear in the support size after
/// sorting, so it is the carrier for large empirical measures.
pub fn wasserstein_1d(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_pair(mu, sigma)?;
    check_p(p)?;
    let (x, wx) = (mu.points()?, mu.weights());
    let (y, wy) = (sigma.points()?, sigma.weights());
    let (mut i, mut j) = (0, 0);
    let (mut rx, mut ry) = (wx[0], wy[0]);
    let mut acc = 0.0;
    loop {
        let step = rx.min(ry);
        acc += step * (x[i] - y[j]).abs().powf(p);
        rx -= step;
        ry -= step;
        let adv_x = rx <= 1e-15;
        let adv_y = ry <= 1e-15;
        if adv_x {
            i += 1;
            if i == x.len() {
                break;
            }
            rx += wx[i];
        }
        if adv_y {
            j += 1;
            if j == y.len() {
                break;
            }
            ry += wy[j];
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `W₁ = ∫ |F_μ − F_σ| dx` for one-dimensional measures of either carrier,
/// integrated piecewise between the distribution functions' breakpoints.
/// Two discrete measures go through [`wasserstein_1d`].
pub fn wasserstein1_measures(mu: &Measure, sigma: &Measure) -> Result<f64> {
    if let (Measure::Discrete(a), Measure::Discrete(b)) = (mu, sigma) {
        return wasserstein_1d(a, b, 1.0);
    }
    let (mut pts, lo_a, hi_a) = mu.cdf_breakpoints()?;
    let (pts_b, lo_b, hi_b) = sigma.cdf_breakpoints()?;
    pts.extend(pts_b);
    let (lo, hi) = (lo_a.min(lo_b), hi_a.max(hi_b));
    pts.retain(|p| *p >= lo && *p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let (fa, fb) = (CdfTable::new(mu)?, CdfTable::new(sigma)?);
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 2000 };
    let mut total = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            total += integrate(|x| (fa.eval(mu, x) - fb.eval(sigma, x)).abs(), w[0], w[1], opts)?;
        }
    }
    Ok(total)
}

/// Distribution function with a cumulative table for discrete measures.
enum CdfTable {
    Steps { points: Vec<f64>, cumulative: Vec<f64> },
    Smooth,
}

impl CdfTable {
    fn new(m: &Measure) -> Result<Self> {
        Ok(match m {
            Measure::Discrete(d) => {
                let points = d.points()?;
                let cumulative = d
                    .weights()
                    .iter()
                    .scan(0.0, |acc, w| {
                        *acc += w;
                        Some(*acc)
                    })
                    .collect();
                CdfTable::Steps { points, cumulative }
            }
            Measure::Mixture(_) => CdfTable::Smooth,
        })
    }

    fn eval(&self, m: &Measure, x: f64) -> f64 {
        match self {
            CdfTable::Steps { points, cumulative } => match points.partition_point(|&p| p <= x) {
                0 => 0.0,
                k => cumulative[k - 1],
            },
            CdfTable::Smooth => m.cdf(x).unwrap_or(f64::NAN),
        }
    }
}
