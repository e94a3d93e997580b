//! Coefficient specifications and grid spot-checks of the Lyapunov-type
//! uniqueness conditions, plus the Gronwall stability bound.
//!
//! Every check fits its constants on a box grid and then measures margins on
//! a probe box of twice the spatial extent, so a constant that only holds
//! because the box was too small shows up as a negative margin. Margins are
//! reported per unit of the right-hand weight (for example `α − L_μW/W`),
//! which keeps them meaningful for exponential weights.
//!
//! Results read "passes on box": nothing here proves a global inequality.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::heat::{log_grid, FunctionalSpec};
use crate::measures::{weighted_tv, DiscreteMeasure, Measure};
use crate::metrics::weighted_dual_ww;
use crate::nonuniqueness::{osgood_test, Classification};
use crate::quadrature::{integrate, QuadOptions};

/// Tolerance on the worst margin for a report to pass.
pub const MARGIN_TOL: f64 = 1e-9;

/// Radii probed by the one-sided dissipativity estimate of `θ(x)`.
pub const THETA_RADII: [f64; 3] = [1e-3, 1e-1, 1.0];

/// Diffusion coefficient `a` in `∂_tμ = ∂_x²(aμ) − ∂_x(bμ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diffusion {
    /// `a(x, t)`.
    Field { field: ScalarField },
    /// `a(μ_t)`, independent of `x`.
    Functional { functional: FunctionalSpec },
}

impl Diffusion {
    pub fn constant(a: f64) -> Self {
        Diffusion::Field { field: ScalarField::constant(a) }
    }

    pub fn field(field: ScalarField) -> Self {
        Diffusion::Field { field }
    }

    /// `a(μ, x, t)`.
    pub fn value(&self, mu: &Measure, x: f64, t: f64) -> Result<f64> {
        match self {
            Diffusion::Field { field } => field.try_eval(x, t),
            Diffusion::Functional { functional } => functional.eval(mu),
        }
    }

    /// `∂_x a`, zero for functionals of `μ`.
    pub fn x_derivative(&self) -> Result<ScalarField> {
        match self {
            Diffusion::Field { field } => field.derivative(),
            Diffusion::Functional { .. } => Ok(ScalarField::constant(0.0)),
        }
    }
}

/// One additive piece of the drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftTerm {
    /// `b(x, t)`.
    Local { field: ScalarField },
    /// `∫ k(x − y, t) dμ(y)`; the kernel is written in the variable `x`,
    /// which stands for the difference `x − y`.
    Interaction { kernel: ScalarField },
    /// `factor(x, t) · ∫ moment(y, t) dμ(y)`.
    MomentScaled { factor: ScalarField, moment: ScalarField },
}

/// `b(μ, x, t)` as a sum of terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    pub terms: Vec<DriftTerm>,
}

impl Drift {
    pub fn zero() -> Self {
        Drift::default()
    }

    pub fn local(field: ScalarField) -> Self {
        Drift { terms: vec![DriftTerm::Local { field }] }
    }

    pub fn interaction(kernel: ScalarField) -> Self {
        Drift { terms: vec![DriftTerm::Interaction { kernel }] }
    }

    pub fn moment_scaled(factor: ScalarField, moment: ScalarField) -> Self {
        Drift { terms: vec![DriftTerm::MomentScaled { factor, moment }] }
    }

    pub fn with(mut self, term: DriftTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if no term depends on `μ`.
    pub fn is_local(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, DriftTerm::Local { .. }))
    }

    /// `b(μ, x, t)` for either carrier.
    pub fn eval(&self, mu: &Measure, x: f64, t: f64) -> Result<f64> {
        let mut total = 0.0;
        for term in &self.terms {
            total += match term {
                DriftTerm::Local { field } => field.try_eval(x, t)?,
                DriftTerm::Interaction { kernel } => match mu {
                    Measure::Discrete(m) => interaction_sum(kernel, m, x, t)?,
                    Measure::Mixture(_) => mu.integrate_fn(|y| kernel.eval(x - y, t))?,
                },
                DriftTerm::MomentScaled { factor, moment } => {
                    let f = factor.try_eval(x, t)?;
                    if f == 0.0 {
                        0.0
                    } else {
                        f * mu.integrate_fn(|y| moment.eval(y, t))?
                    }
                }
            };
        }
        if !total.is_finite() {
            return Err(Error::EvaluationError { x, t, msg: "drift is not finite".into() });
        }
        Ok(total)
    }

    pub fn eval_discrete(&self, mu: &DiscreteMeasure, x: f64, t: f64) -> Result<f64> {
        if mu.dim() != 1 {
            return Err(Error::DimensionError { expected: 1, got: mu.dim() });
        }
        self.eval(&Measure::Discrete(mu.clone()), x, t)
    }
}

fn interaction_sum(kernel: &ScalarField, mu: &DiscreteMeasure, x: f64, t: f64) -> Result<f64> {
    let mut s = 0.0;
    for (atom, &w) in mu.atoms().iter().zip(mu.weights()) {
        s += w * kernel.try_eval(x - atom[0], t)?;
    }
    Ok(s)
}

/// The pair `(a, b)` of a one-dimensional nonlinear FPK equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub diffusion: Diffusion,
    #[serde(default)]
    pub drift: Drift,
}

impl CoefficientSpec {
    pub fn new(diffusion: Diffusion, drift: Drift) -> Self {
        CoefficientSpec { diffusion, drift }
    }

    /// `L_μφ = a φ'' + b φ'`, given `φ'` and `φ''` at `x`. A vanishing
    /// coefficient drops its term, so kinks of `φ` do not leak NaNs.
    fn generator(a: f64, b: f64, d1: impl Fn() -> f64, d2: impl Fn() -> f64) -> f64 {
        let mut l = 0.0;
        if a != 0.0 {
            l += a * d2();
        }
        if b != 0.0 {
            l += b * d1();
        }
        l
    }
}

/// Lyapunov functions `V, W ≥ 1` and `U > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovTriple {
    #[serde(rename = "V")]
    pub v: ScalarField,
    #[serde(rename = "W")]
    pub w: ScalarField,
    #[serde(rename = "U")]
    pub u: ScalarField,
}

impl LyapunovTriple {
    pub fn new(v: ScalarField, w: ScalarField, u: ScalarField) -> Self {
        LyapunovTriple { v, w, u }
    }
}

/// Symbolic first and second derivatives of a Lyapunov function.
struct Jet {
    f: ScalarField,
    d1: ScalarField,
    d2: ScalarField,
}

impl Jet {
    fn new(f: &ScalarField) -> Result<Self> {
        let d1 = f.derivative()?;
        let d2 = d1.derivative()?;
        Ok(Jet { f: f.clone(), d1, d2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckBox {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for CheckBox {
    fn default() -> Self {
        CheckBox { x_min: -10.0, x_max: 10.0, t_min: 0.0, t_max: 1.0 }
    }
}

impl CheckBox {
    pub fn symmetric(r: f64) -> Self {
        CheckBox { x_min: -r, x_max: r, ..Default::default() }
    }

    /// Same centre and time span, `factor` times the spatial extent.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = 0.5 * (self.x_min + self.x_max);
        let h = 0.5 * (self.x_max - self.x_min) * factor;
        CheckBox { x_min: c - h, x_max: c + h, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckOptions {
    #[serde(rename = "box")]
    pub bbox: CheckBox,
    /// Spatial points on the fitting grid; the probe grid uses twice as many.
    pub grid_n: usize,
    pub t_points: usize,
    /// `δ_μ ∈ (0, 1)` in the dissipativity budget `Λ`.
    pub delta: f64,
    /// Declared modulus `G` of the (H3)/(DH3) Lipschitz conditions.
    pub g: ScalarField,
    pub probe_factor: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            bbox: CheckBox::default(),
            grid_n: 200,
            t_points: 3,
            delta: 0.5,
            g: ScalarField::x(),
            probe_factor: 2.0,
        }
    }
}

impl CheckOptions {
    pub fn with_box(mut self, bbox: CheckBox) -> Self {
        self.bbox = bbox;
        self
    }

    pub fn with_grid(mut self, grid_n: usize) -> Self {
        self.grid_n = grid_n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.grid_n < 100 {
            return Err(Error::DomainError(format!("grid_n must be at least 100, got {}", self.grid_n)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::DomainError(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.bbox.x_max > self.bbox.x_min && self.bbox.t_max >= self.bbox.t_min) {
            return Err(Error::DomainError("empty check box".into()));
        }
        if self.t_points == 0 || !(self.probe_factor >= 1.0) {
            return Err(Error::DomainError("need t_points ≥ 1 and probe_factor ≥ 1".into()));
        }
        Ok(())
    }

    fn points(&self, bbox: &CheckBox, n: usize) -> Vec<(f64, f64)> {
        let xs = linspace(bbox.x_min, bbox.x_max, n);
        let ts = if self.t_points == 1 || bbox.t_max == bbox.t_min {
            vec![bbox.t_min]
        } else {
            linspace(bbox.t_min, bbox.t_max, self.t_points)
        };
        ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect()
    }

    fn grid_points(&self) -> Vec<(f64, f64)> {
        self.points(&self.bbox, self.grid_n)
    }

    /// The box grid plus every probe point inside the box, so that interior
    /// refinement never produces a negative margin on its own.
    fn fit_points(&self) -> Vec<(f64, f64)> {
        let mut pts = self.grid_points();
        let b = &self.bbox;
        pts.extend(self.probe_points().into_iter().filter(|p| p.0 >= b.x_min && p.0 <= b.x_max));
        pts
    }

    fn probe_box(&self) -> CheckBox {
        self.bbox.scaled(self.probe_factor)
    }

    fn probe_points(&self) -> Vec<(f64, f64)> {
        self.points(&self.probe_box(), (self.grid_n as f64 * self.probe_factor).round() as usize)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    H1,
    H2,
    H3,
    H4,
    DH1,
    DH2,
    DH3,
    DH4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: ConditionId,
    #[serde(rename = "box")]
    pub bbox: CheckBox,
    pub probe_box: CheckBox,
    pub grid_n: usize,
    /// Minimum over the probe grid of the normalised `RHS − LHS`.
    pub worst_margin: f64,
    /// `(x, t)` where the worst margin occurs.
    pub worst_at: (f64, f64),
    /// Witnessed constants: the smallest values making margins nonnegative
    /// on the fitting grid.
    pub constants: BTreeMap<String, f64>,
    pub passes: bool,
    pub notes: Vec<String>,
    /// `(x, θ(x))` on the fitting grid at the first time, for (DH2).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_profile: Option<Vec<(f64, f64)>>,
}

impl ConditionReport {
    fn new(id: ConditionId, opts: &CheckOptions, worst: Worst) -> Self {
        ConditionReport {
            id,
            bbox: opts.bbox,
            probe_box: opts.probe_box(),
            grid_n: opts.grid_n,
            worst_margin: worst.0,
            worst_at: worst.1,
            constants: BTreeMap::new(),
            passes: worst.0 >= -MARGIN_TOL,
            notes: vec![],
            theta_profile: None,
        }
    }

    fn constant(mut self, name: &str, v: f64) -> Self {
        self.constants.insert(name.into(), v);
        self
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn summary(&self) -> String {
        let verdict = if self.passes { "passes on box" } else { "fails on box" };
        format!(
            "{:?} {verdict} [{}, {}]x[{}, {}]: worst margin {:.3e} at x={:.4}, t={:.4}",
            self.id,
            self.bbox.x_min,
            self.bbox.x_max,
            self.bbox.t_min,
            self.bbox.t_max,
            self.worst_margin,
            self.worst_at.0,
            self.worst_at.1
        )
    }
}

/// Evaluate `g` at every point in parallel; the first failure wins.
fn eval_grid(points: &[(f64, f64)], g: impl Fn(f64, f64) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|&(x, t)| {
            let v = g(x, t)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::EvaluationError { x, t, msg: "expression is not finite here".into() })
            }
        })
        .collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_with_loc(points: &[(f64, f64)], v: &[f64]) -> Worst {
    let mut best = (f64::INFINITY, (f64::NAN, f64::NAN));
    for (p, &m) in points.iter().zip(v) {
        if m < best.0 {
            best = (m, *p);
        }
    }
    best
}

/// Smallest margin and where it occurs.
type Worst = (f64, (f64, f64));

/// Fit `c = max ratio` on the box, then report `min(c − ratio)` on the probe.
fn fit_and_probe(
    opts: &CheckOptions,
    ratio: impl Fn(f64, f64) -> Result<f64> + Sync,
    floor: f64,
) -> Result<(f64, Worst)> {
    let fit = eval_grid(&opts.fit_points(), &ratio)?;
    let c = max_of(&fit).max(floor);
    let probe_pts = opts.probe_points();
    let probe = eval_grid(&probe_pts, &ratio)?;
    let margins: Vec<f64> = probe.iter().map(|r| c - r).collect();
    Ok((c, min_with_loc(&probe_pts, &margins)))
}

/// Deterministic comparison measures for the Lipschitz-type conditions:
/// small and large translations of `μ` and mixtures with distant atoms.
pub fn sample_partners(mu: &DiscreteMeasure) -> Result<Vec<DiscreteMeasure>> {
    let mut out = vec![];
    for dx in [-0.5, -0.05, 0.05, 0.5] {
        out.push(mu.translated(dx)?);
    }
    for (y, lam) in [(1.0, 0.1), (-1.0, 0.1), (2.0, 0.5)] {
        out.push(mu.mix(&DiscreteMeasure::dirac(y), lam)?);
    }
    Ok(out)
}

struct Setup<'a> {
    spec: &'a CoefficientSpec,
    mu: Measure,
    v: &'a ScalarField,
    w: Jet,
    u: Jet,
}

impl<'a> Setup<'a> {
    fn new(spec: &'a CoefficientSpec, triple: &'a LyapunovTriple, mu: &DiscreteMeasure) -> Result<Self> {
        if mu.dim() != 1 {
            return Err(Error::DimensionError { expected: 1, got: mu.dim() });
        }
        mu.ensure_probability()?;
        Ok(Setup {
            spec,
            mu: Measure::Discrete(mu.clone()),
            v: &triple.v,
            w: Jet::new(&triple.w)?,
            u: Jet::new(&triple.u)?,
        })
    }

    fn a(&self, x: f64, t: f64) -> Result<f64> {
        self.spec.diffusion.value(&self.mu, x, t)
    }

    fn b(&self, x: f64, t: f64) -> Result<f64> {
        self.spec.drift.eval(&self.mu, x, t)
    }

    fn l(&self, jet: &Jet, x: f64, t: f64) -> Result<f64> {
        let (a, b) = (self.a(x, t)?, self.b(x, t)?);
        Ok(CoefficientSpec::generator(a, b, || jet.d1.eval(x, t), || jet.d2.eval(x, t)))
    }

    fn theta(&self, x: f64, t: f64) -> Result<f64> {
        let bx = self.b(x, t)?;
        let mut worst = f64::NEG_INFINITY;
        for r in THETA_RADII {
            for y in [r, -r] {
                worst = worst.max((self.b(x + y, t)? - bx) * y / (y * y));
            }
        }
        Ok(worst)
    }

    /// `4|∂_x √a|²`, with `√a` smooth where `a = 0` only if `a' = 0` there.
    fn sigma_term(&self, da: &ScalarField, x: f64, t: f64) -> Result<f64> {
        let a = self.a(x, t)?;
        let d = if let Some(0.0) = da.as_constant() { 0.0 } else { da.eval(x, t) };
        if d == 0.0 {
            return Ok(0.0);
        }
        if a <= 0.0 {
            return Err(Error::EvaluationError { x, t, msg: "√A is not differentiable where A = 0".into() });
        }
        Ok(4.0 * d * d / (4.0 * a))
    }

    /// `Λ(x) = 2θ + δ|b|²/(1+x²) + δ|a|²/(1+x²)² + 4|∂_x√a|²`.
    fn lambda(&self, da: &ScalarField, delta: f64, x: f64, t: f64) -> Result<f64> {
        let (a, b) = (self.a(x, t)?, self.b(x, t)?);
        let q = 1.0 + x * x;
        Ok(2.0 * self.theta(x, t)? + delta * b * b / q + delta * a * a / (q * q) + self.sigma_term(da, x, t)?)
    }
}

/// Modulus side condition: `∫₀ du / h(u) = ∞` by the Osgood classifier.
fn osgood_side(h: impl Fn(f64) -> f64) -> Result<Classification> {
    let curve: Vec<(f64, f64)> = log_grid(1e-12, 1e-1, 56).into_iter().map(|u| (u, h(u))).collect();
    if curve.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::DomainError("G must be positive and finite on (0, 0.1]".into()));
    }
    Ok(osgood_test(&curve, 1e-1)?.classification)
}

const PAIR_NOTE: &str = "checked on sampled discrete pairs only, not all measures of the class";

/// Spot-check (H1)–(H4) for `μ` on the options' box.
pub fn check_h(
    spec: &CoefficientSpec,
    triple: &LyapunovTriple,
    mu: &DiscreteMeasure,
    opts: &CheckOptions,
) -> Result<Vec<ConditionReport>> {
    opts.validate()?;
    let s = Setup::new(spec, triple, mu)?;
    let fit_pts = opts.fit_points();
    let probe_pts = opts.probe_points();

    // (H1): λ = a itself; positivity is required, not just a nonnegative margin.
    let a_probe = eval_grid(&probe_pts, |x, t| s.a(x, t))?;
    let lambda_min = eval_grid(&fit_pts, |x, t| s.a(x, t)).map(|v| v.into_iter().fold(f64::INFINITY, f64::min))?;
    let worst = min_with_loc(&probe_pts, &a_probe);
    let mut h1 = ConditionReport::new(ConditionId::H1, opts, worst)
        .constant("lambda_min", lambda_min)
        .note("λ(x) is taken as a(x, t); Hölder continuity of a is not checked");
    h1.passes = worst.0 > 0.0;
    if let Diffusion::Functional { .. } = spec.diffusion {
        h1 = h1.note("diffusion depends on μ; (H1) is stated for μ-independent A");
    }

    // (H2): L_μW ≤ αW.
    let (alpha, worst) = fit_and_probe(opts, |x, t| Ok(s.l(&s.w, x, t)? / s.w.f.eval(x, t)), f64::NEG_INFINITY)?;
    let wv = eval_grid(&fit_pts, |x, t| Ok(s.w.f.eval(x, t) / s.v.eval(x, t).sqrt()))?;
    let h2 = ConditionReport::new(ConditionId::H2, opts, worst)
        .constant("alpha", alpha)
        .constant("w_over_sqrt_v", max_of(&wv));

    // (H3): λ⁻¹|b(μ) − b(σ)| ≤ √V · G(‖μ − σ‖_W), with the declared G scaled.
    let partners = sample_partners(mu)?;
    let mut pairs = vec![];
    for sigma in &partners {
        let d = weighted_tv(mu, sigma, &triple.w)?;
        let g = opts.g.try_eval(d, 0.0)?;
        pairs.push((Measure::Discrete(sigma.clone()), g));
    }
    let h3_ratio = |x: f64, t: f64| -> Result<f64> {
        let (bm, a, sv) = (s.b(x, t)?, s.a(x, t)?, s.v.eval(x, t).sqrt());
        let mut worst = 0.0f64;
        for (sigma, g) in &pairs {
            let db = (bm - spec.drift.eval(sigma, x, t)?).abs();
            if db > 0.0 {
                worst = worst.max(db / (a * sv * g));
            }
        }
        Ok(worst)
    };
    let (lip, worst) = fit_and_probe(opts, h3_ratio, 0.0)?;
    let side = osgood_side(|u| opts.g.eval(u.sqrt(), 0.0).powi(2))?;
    let mut h3 = ConditionReport::new(ConditionId::H3, opts, worst)
        .constant("modulus_scale", lip)
        .note(PAIR_NOTE)
        .note(format!("∫₀ du / G²(√u): {side:?}"));
    h3.passes &= side == Classification::Divergent;

    // (H4): W²λ⁻¹|b|² + a|U'|²/U² + |L_μU|/U ≤ βV.
    let h4_ratio = |x: f64, t: f64| -> Result<f64> {
        let (a, b) = (s.a(x, t)?, s.b(x, t)?);
        let (w, u, du) = (s.w.f.eval(x, t), s.u.f.eval(x, t), s.u.d1.eval(x, t));
        let lhs = w * w * b * b / a + a * du * du / (u * u) + (s.l(&s.u, x, t)? / u).abs();
        Ok(lhs / s.v.eval(x, t))
    };
    let (beta, worst) = fit_and_probe(opts, h4_ratio, 0.0)?;
    let h4 = ConditionReport::new(ConditionId::H4, opts, worst).constant("beta", beta);

    Ok(vec![h1, h2, h3, h4])
}

/// (DH2): `L_μW ≤ (C − Λ)W` with `Λ` from the dissipativity budget.
fn dh2_report(s: &Setup, da: &ScalarField, opts: &CheckOptions) -> Result<ConditionReport> {
    let ratio =
        |x: f64, t: f64| -> Result<f64> { Ok(s.l(&s.w, x, t)? / s.w.f.eval(x, t) + s.lambda(da, opts.delta, x, t)?) };
    let (c, worst) = fit_and_probe(opts, ratio, 0.0)?;
    let t0 = opts.bbox.t_min;
    let profile: Vec<(f64, f64)> = opts
        .grid_points()
        .iter()
        .filter(|p| p.1 == t0)
        .map(|&(x, t)| Ok((x, s.theta(x, t)?)))
        .collect::<Result<_>>()?;
    let theta_max = profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut dh2 = ConditionReport::new(ConditionId::DH2, opts, worst)
        .constant("C", c)
        .constant("delta", opts.delta)
        .constant("theta_max", theta_max)
        .note(format!("θ(x) probed with |y| ∈ {THETA_RADII:?}"));
    dh2.theta_profile = Some(profile);
    Ok(dh2)
}

/// The constant `C₀ ≥ 0` of `L W ≤ (C₀ − Λ)W` for μ-independent
/// coefficients, fitted on the options' box (no probe extension).
pub fn dissipativity_constant(spec: &CoefficientSpec, w: &ScalarField, opts: &CheckOptions) -> Result<f64> {
    if !spec.drift.is_local() {
        return Err(Error::DomainError("dissipativity constant needs a μ-independent drift".into()));
    }
    let one = ScalarField::constant(1.0);
    let triple = LyapunovTriple::new(one.clone(), w.clone(), one);
    let opts = CheckOptions { probe_factor: 1.0, ..opts.clone() };
    opts.validate()?;
    let s = Setup::new(spec, &triple, &DiscreteMeasure::dirac(0.0))?;
    let da = spec.diffusion.x_derivative()?;
    Ok(dh2_report(&s, &da, &opts)?.constants["C"])
}

/// Spot-check (DH1)–(DH4) for `μ` on the options' box.
pub fn check_dh(
    spec: &CoefficientSpec,
    triple: &LyapunovTriple,
    mu: &DiscreteMeasure,
    opts: &CheckOptions,
) -> Result<Vec<ConditionReport>> {
    opts.validate()?;
    let s = Setup::new(spec, triple, mu)?;
    let probe_pts = opts.probe_points();
    let da = spec.diffusion.x_derivative()?;
    // Twice differentiable in x, symbolically.
    da.derivative()?;

    // (DH1): A ≥ 0.
    let a_probe = eval_grid(&probe_pts, |x, t| s.a(x, t))?;
    let dh1 = ConditionReport::new(ConditionId::DH1, opts, min_with_loc(&probe_pts, &a_probe));

    let dh2 = dh2_report(&s, &da, opts)?;

    // (DH3): |b(μ) − b(σ)| ≤ V W^{−1/2} G(w_W(μ, σ)).
    let partners = sample_partners(mu)?;
    let mut pairs = vec![];
    for sigma in &partners {
        let d = weighted_dual_ww(mu, sigma, &triple.w)?.value;
        pairs.push((Measure::Discrete(sigma.clone()), opts.g.try_eval(d, 0.0)?));
    }
    let dh3_ratio = |x: f64, t: f64| -> Result<f64> {
        let bm = s.b(x, t)?;
        let scale = s.v.eval(x, t) / s.w.f.eval(x, t).sqrt();
        let mut worst = 0.0f64;
        for (sigma, g) in &pairs {
            let db = (bm - spec.drift.eval(sigma, x, t)?).abs();
            if db > 0.0 {
                worst = worst.max(db / (scale * g));
            }
        }
        Ok(worst)
    };
    let (lip, worst) = fit_and_probe(opts, dh3_ratio, 0.0)?;
    let side = osgood_side(|u| opts.g.eval(u, 0.0))?;
    let mut dh3 = ConditionReport::new(ConditionId::DH3, opts, worst)
        .constant("modulus_scale", lip)
        .note(PAIR_NOTE)
        .note(format!("∫₀ du / G(u): {side:?}"));
    dh3.passes &= side == Classification::Divergent;

    // (DH4): |aU'|√W/U + a|U'|²/U² + |L_μU|/U ≤ βV.
    let dh4_ratio = |x: f64, t: f64| -> Result<f64> {
        let a = s.a(x, t)?;
        let (w, u, du) = (s.w.f.eval(x, t), s.u.f.eval(x, t), s.u.d1.eval(x, t));
        let lhs = (a * du).abs() * w.sqrt() / u + a * du * du / (u * u) + (s.l(&s.u, x, t)? / u).abs();
        Ok(lhs / s.v.eval(x, t))
    };
    let (beta, worst) = fit_and_probe(opts, dh4_ratio, 0.0)?;
    let dh4 = ConditionReport::new(ConditionId::DH4, opts, worst).constant("beta", beta);

    Ok(vec![dh1, dh2, dh3, dh4])
}

/// Stability bound `F⁻¹(F(w₀) − Ct)` with `F(v) = ∫_v^1 du/G(u)`.
///
/// `G(u) = u` uses the closed form `w₀e^{Ct}`. Otherwise `F` is integrated
/// in `log u` and inverted by bisection; if `F(w₀) − Ct` falls below the
/// range of `F` the bound is infinite and `BoundBlowup` is returned.
pub fn gronwall_bound(g: &ScalarField, c: f64, w0: f64, t: f64) -> Result<f64> {
    if !(c >= 0.0 && w0 >= 0.0 && t >= 0.0) || !(c.is_finite() && w0.is_finite() && t.is_finite()) {
        return Err(Error::DomainError(format!("need C, w0, t ≥ 0 (got {c}, {w0}, {t})")));
    }
    if w0 == 0.0 || t == 0.0 || c == 0.0 {
        return Ok(w0);
    }
    if g.is_identity() {
        let v = w0 * (c * t).exp();
        return if v.is_finite() { Ok(v) } else { Err(Error::BoundBlowup(format!("w0·e^(Ct) overflows at t = {t}"))) };
    }
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 };
    // F(v) = ∫_{ln v}^{0} e^s / G(e^s) ds.
    let big_f = |v: f64| -> Result<f64> {
        let integrand = |s: f64| {
            let u = s.exp();
            u / g.eval(u, 0.0)
        };
        integrate(integrand, v.ln(), 0.0, opts)
    };
    let target = big_f(w0)? - c * t;
    let mut hi = w0.max(1.0);
    while big_f(hi)? > target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::BoundBlowup(format!("F(w0) − Ct = {target} is below the range of F")));
        }
    }
    let mut lo = w0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if big_f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
