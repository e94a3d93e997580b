//! Measure carriers: finitely supported measures, Gaussian mixtures produced
//! by heat evolution, and time-indexed flows of either.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::quadrature::{self, QuadOptions};

/// Atoms closer than this are merged by summing their weights.
pub const MERGE_TOL: f64 = 1e-12;
/// Mass tolerance for probability measures.
pub const MASS_TOL: f64 = 1e-12;
/// Half-width of the integration window in the standardised variable
/// `u = (x − m)/√(4τ)`; the Gaussian tail beyond it is below 1e−62.
pub const GAUSS_WINDOW: f64 = 12.0;

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A finitely supported, possibly signed, measure on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    dim: usize,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    dim: usize,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;
    fn try_from(r: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(r.dim, r.atoms, r.weights)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure { dim: m.dim, atoms: m.atoms, weights: m.weights }
    }
}

impl DiscreteMeasure {
    /// Builds a measure, merging atoms within [`MERGE_TOL`] of each other.
    /// Atoms come back sorted lexicographically.
    pub fn new(dim: usize, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        for a in &atoms {
            if a.len() != dim {
                return Err(Error::DimensionError { expected: dim, got: a.len() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasure("non-finite atom".into()));
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite weight".into()));
        }
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by(|&i, &j| {
            atoms[i]
                .iter()
                .zip(&atoms[j])
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut merged_atoms: Vec<Vec<f64>> = Vec::with_capacity(atoms.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for i in order {
            // In d = 1 sorting makes duplicates adjacent; in d > 1 near-ties in
            // the first coordinate can interleave, so look back a little.
            let hit = merged_atoms
                .iter()
                .rev()
                .take(if dim == 1 { 1 } else { 16 })
                .position(|a| dist(a, &atoms[i]) <= MERGE_TOL);
            match hit {
                Some(back) => {
                    let k = merged_atoms.len() - 1 - back;
                    merged_weights[k] += weights[i];
                }
                None => {
                    merged_atoms.push(atoms[i].clone());
                    merged_weights.push(weights[i]);
                }
            }
        }
        Ok(DiscreteMeasure { dim, atoms: merged_atoms, weights: merged_weights })
    }

    /// Like [`DiscreteMeasure::new`] but also requires a probability measure.
    pub fn probability(dim: usize, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(dim, atoms, weights)?;
        m.ensure_probability()?;
        Ok(m)
    }

    /// One-dimensional measure from points and weights.
    pub fn from_points(points: &[f64], weights: &[f64]) -> Result<Self> {
        Self::new(1, points.iter().map(|&p| vec![p]).collect(), weights.to_vec())
    }

    /// Uniform (empirical) measure on the given 1-d points.
    pub fn empirical(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        Self::from_points(points, &vec![w; points.len()])
    }

    pub fn dirac(x: f64) -> Self {
        DiscreteMeasure { dim: 1, atoms: vec![vec![x]], weights: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0) && (self.total_mass() - 1.0).abs() <= MASS_TOL
    }

    pub fn ensure_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!(
                "not a probability measure (mass {}, min weight {})",
                self.total_mass(),
                self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
            )))
        }
    }

    /// Atom coordinates of a one-dimensional measure.
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::DimensionError { expected: 1, got: self.dim });
        }
        Ok(self.atoms.iter().map(|a| a[0]).collect())
    }

    /// Euclidean norm of each atom.
    pub fn norms(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| norm(a)).collect()
    }

    /// Value of a scalar field at an atom: the coordinate itself in d = 1,
    /// the Euclidean norm in d > 1.
    pub(crate) fn field_arg(&self, i: usize) -> f64 {
        if self.dim == 1 {
            self.atoms[i][0]
        } else {
            norm(&self.atoms[i])
        }
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.field_arg(i))).sum()
    }

    pub fn mean(&self) -> Result<f64> {
        let pts = self.points()?;
        Ok(pts.iter().zip(&self.weights).map(|(x, w)| x * w).sum())
    }

    /// `∫|x|^p dμ`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        self.norms().iter().zip(&self.weights).map(|(r, w)| w * r.powf(p)).sum()
    }

    /// Shift every atom of a 1-d measure by `dx`.
    pub fn translated(&self, dx: f64) -> Result<Self> {
        let pts = self.points()?;
        let shifted: Vec<f64> = pts.iter().map(|x| x + dx).collect();
        Self::from_points(&shifted, &self.weights)
    }

    /// Convex combination `λ·self + (1−λ)·other` of two 1-d measures.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionError { expected: self.dim, got: other.dim });
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        let mut weights: Vec<f64> = self.weights.iter().map(|w| lambda * w).collect();
        weights.extend(other.weights.iter().map(|w| (1.0 - lambda) * w));
        Self::new(self.dim, atoms, weights)
    }
}

/// Points, then the weights `μ` and `σ` give each point.
type UnionSupport = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>);

/// Union support of two measures with the weight each assigns to every point.
pub(crate) fn union_support(mu: &DiscreteMeasure, sigma: &DiscreteMeasure) -> Result<UnionSupport> {
    if mu.dim != sigma.dim {
        return Err(Error::DimensionError { expected: mu.dim, got: sigma.dim });
    }
    // Merge the coordinate lists, then redistribute each measure's weights.
    let mut atoms = mu.atoms.clone();
    atoms.extend(sigma.atoms.iter().cloned());
    let support = DiscreteMeasure::new(mu.dim, atoms, vec![0.0; mu.len() + sigma.len()])?;
    let locate = |a: &Vec<f64>| -> usize {
        support.atoms.iter().position(|s| dist(s, a) <= MERGE_TOL).expect("atom belongs to the union support")
    };
    let mut wm = vec![0.0; support.len()];
    let mut ws = vec![0.0; support.len()];
    if mu.dim == 1 {
        // Both lists are sorted; walk them against the sorted support.
        let pts: Vec<f64> = support.atoms.iter().map(|a| a[0]).collect();
        let find = |x: f64| -> usize {
            let k = pts.partition_point(|&p| p < x - MERGE_TOL);
            if k < pts.len() && (pts[k] - x).abs() <= MERGE_TOL {
                k
            } else {
                k.saturating_sub(1)
            }
        };
        for (a, w) in mu.atoms.iter().zip(&mu.weights) {
            wm[find(a[0])] += w;
        }
        for (a, w) in sigma.atoms.iter().zip(&sigma.weights) {
            ws[find(a[0])] += w;
        }
    } else {
        for (a, w) in mu.atoms.iter().zip(&mu.weights) {
            wm[locate(a)] += w;
        }
        for (a, w) in sigma.atoms.iter().zip(&sigma.weights) {
            ws[locate(a)] += w;
        }
    }
    Ok((support.atoms, wm, ws))
}

fn field_arg_of(p: &[f64]) -> f64 {
    if p.len() == 1 {
        p[0]
    } else {
        norm(p)
    }
}

/// Evaluates a weight function on points and checks `W ≥ 1`.
pub(crate) fn weight_values(w: &ScalarField, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
    pts.iter()
        .map(|p| {
            let x = field_arg_of(p);
            let v = w.try_eval(x, 0.0)?;
            if v < 1.0 {
                Err(Error::InvalidWeight { at: x, value: v })
            } else {
                Ok(v)
            }
        })
        .collect()
}

/// Weighted total variation `‖μ − σ‖_W = Σ W(x)|μ({x}) − σ({x})|` over the
/// union support. In d > 1 the weight is evaluated at `|x|`.
pub fn weighted_tv(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, w: &ScalarField) -> Result<f64> {
    mu.ensure_probability()?;
    sigma.ensure_probability()?;
    let (pts, wm, ws) = union_support(mu, sigma)?;
    let wv = weight_values(w, &pts)?;
    Ok(wv.iter().zip(wm.iter().zip(&ws)).map(|(wx, (a, b))| wx * (a - b).abs()).sum())
}

/// One Gaussian component `weight · Γ(tau, x − mean)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: f64,
    pub tau: f64,
    pub weight: f64,
}

/// Mixture `Σ wᵢ Γ(τᵢ, x − mᵢ)` with `Γ(t, x) = (4πt)^{-1/2} exp(−x²/(4t))`,
/// i.e. each component has variance `2τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GaussianComponent>", into = "Vec<GaussianComponent>")]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
}

impl TryFrom<Vec<GaussianComponent>> for GaussianMixture {
    type Error = Error;
    fn try_from(c: Vec<GaussianComponent>) -> Result<Self> {
        GaussianMixture::new(c)
    }
}

impl From<GaussianMixture> for Vec<GaussianComponent> {
    fn from(g: GaussianMixture) -> Self {
        g.components
    }
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMeasure("mixture without components".into()));
        }
        for c in &components {
            if !(c.tau > 0.0 && c.tau.is_finite()) {
                return Err(Error::DomainError(format!("heat time must be positive, got {}", c.tau)));
            }
            if !(c.weight >= 0.0 && c.mean.is_finite()) {
                return Err(Error::InvalidMeasure("mixture component with negative weight".into()));
            }
        }
        let mass: f64 = components.iter().map(|c| c.weight).sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("mixture mass {mass} != 1")));
        }
        Ok(GaussianMixture { components })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    /// `∫ f dμ` with per-component substitution `u = (x − m)/√(4τ)` and
    /// adaptive Gauss–Kronrod on `[−12, 12]`.
    pub fn integrate_fn_opts(&self, f: impl Fn(f64) -> f64, opts: QuadOptions) -> Result<f64> {
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        let mut total = 0.0;
        for c in &self.components {
            if c.weight == 0.0 {
                continue;
            }
            let s = (4.0 * c.tau).sqrt();
            let v = quadrature::integrate(|u| f(c.mean + s * u) * (-u * u).exp(), -GAUSS_WINDOW, GAUSS_WINDOW, opts)?;
            total += c.weight * inv_sqrt_pi * v;
        }
        Ok(total)
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.integrate_fn_opts(f, QuadOptions::default())
    }
}

/// Either carrier; the state type of a [`MeasureFlow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Mixture(GaussianMixture),
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

impl From<GaussianMixture> for Measure {
    fn from(g: GaussianMixture) -> Self {
        Measure::Mixture(g)
    }
}

impl Measure {
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        match self {
            Measure::Discrete(m) => Ok(m.integrate_fn(f)),
            Measure::Mixture(g) => g.integrate_fn(f),
        }
    }

    pub fn integrate_fn_opts(&self, f: impl Fn(f64) -> f64, opts: QuadOptions) -> Result<f64> {
        match self {
            Measure::Discrete(m) => Ok(m.integrate_fn(f)),
            Measure::Mixture(g) => g.integrate_fn_opts(f, opts),
        }
    }

    pub fn is_probability(&self) -> bool {
        match self {
            Measure::Discrete(m) => m.is_probability(),
            Measure::Mixture(_) => true,
        }
    }

    /// Distribution function `μ((−∞, x])` of a one-dimensional measure.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Measure::Discrete(m) => {
                let pts = m.points()?;
                Ok(pts.iter().zip(m.weights()).filter(|(p, _)| **p <= x).map(|(_, w)| w).sum())
            }
            Measure::Mixture(g) => {
                Ok(g.components.iter().map(|c| c.weight * 0.5 * erfc(-(x - c.mean) / (2.0 * c.tau.sqrt()))).sum())
            }
        }
    }

    /// Points where the distribution function has kinks or jumps, and an
    /// interval outside which it is 0 or 1 to double precision.
    pub(crate) fn cdf_breakpoints(&self) -> Result<(Vec<f64>, f64, f64)> {
        match self {
            Measure::Discrete(m) => {
                let pts = m.points()?;
                let (lo, hi) = (pts[0], pts[pts.len() - 1]);
                Ok((pts, lo, hi))
            }
            Measure::Mixture(g) => {
                let mut pts: Vec<f64> = g.components.iter().map(|c| c.mean).collect();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for c in &g.components {
                    let r = GAUSS_WINDOW * (4.0 * c.tau).sqrt();
                    lo = lo.min(c.mean - r);
                    hi = hi.max(c.mean + r);
                }
                pts.push(lo);
                pts.push(hi);
                Ok((pts, lo, hi))
            }
        }
    }

    /// Discrete carrier: the measure itself, or the quantile discretisation
    /// of a mixture with `n` atoms per component.
    pub fn to_discrete(&self, n: usize) -> Result<DiscreteMeasure> {
        match self {
            Measure::Discrete(m) => Ok(m.clone()),
            Measure::Mixture(g) => discretize(g, n),
        }
    }
}

/// `∫ f dm`: exact summation for discrete measures, quadrature for mixtures
/// (absolute tolerance 1e−10).
pub fn integrate(m: &Measure, f: &ScalarField) -> Result<f64> {
    match m {
        Measure::Discrete(d) => {
            let mut total = 0.0;
            for i in 0..d.len() {
                total += d.weights[i] * f.try_eval(d.field_arg(i), 0.0)?;
            }
            Ok(total)
        }
        Measure::Mixture(g) => g.integrate_fn(|x| f.eval(x, 0.0)),
    }
}

/// Standard normal quantiles at `(k − ½)/n`, exactly antisymmetric.
pub(crate) fn normal_quantile_grid(n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut z = vec![0.0; n];
    for k in 0..n / 2 {
        let q = normal.inverse_cdf((k as f64 + 0.5) / n as f64);
        z[k] = q;
        z[n - 1 - k] = -q;
    }
    z
}

/// Quantile-grid discretisation: each component contributes `n` atoms at its
/// `(k − ½)/n` quantiles, each carrying `weight/n`.
pub fn discretize(g: &GaussianMixture, n_per_component: usize) -> Result<DiscreteMeasure> {
    if n_per_component < 2 {
        return Err(Error::DomainError("n_per_component must be at least 2".into()));
    }
    let z = normal_quantile_grid(n_per_component);
    let mut pts = Vec::with_capacity(n_per_component * g.components.len());
    let mut ws = Vec::with_capacity(pts.capacity());
    for c in &g.components {
        let sd = (2.0 * c.tau).sqrt();
        for &zk in &z {
            pts.push(c.mean + sd * zk);
            ws.push(c.weight / n_per_component as f64);
        }
    }
    DiscreteMeasure::from_points(&pts, &ws)
}

/// A candidate solution: states on a strictly increasing time grid from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFlow {
    times: Vec<f64>,
    states: Vec<Measure>,
}

impl MeasureFlow {
    pub fn new(times: Vec<f64>, states: Vec<Measure>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::InvalidMeasure(format!(
                "flow needs one state per time ({} times, {} states)",
                times.len(),
                states.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidMeasure("flow must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMeasure("flow times must be strictly increasing".into()));
        }
        if let Some(i) = states.iter().position(|s| !s.is_probability()) {
            return Err(Error::InvalidMeasure(format!("state {i} is not a probability measure")));
        }
        Ok(MeasureFlow { times, states })
    }

    /// The constant flow `μ_t ≡ ν` on the given grid.
    pub fn stationary(times: Vec<f64>, nu: &DiscreteMeasure) -> Result<Self> {
        let states = vec![Measure::Discrete(nu.clone()); times.len()];
        Self::new(times, states)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Measure] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &Measure {
        &self.states[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn heat(tau: f64) -> GaussianMixture {
        GaussianMixture::new(vec![GaussianComponent { mean: 0.0, tau, weight: 1.0 }]).unwrap()
    }

    #[test]
    fn second_moment_of_point_mass_is_zero() {
        let v = integrate(&DiscreteMeasure::dirac(0.0).into(), &parse("x^2").unwrap()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn absolute_moment_of_heat_kernel() {
        // E|X| for X ~ N(0, 2β) is 2√(β/π).
        for beta in [1.0, 0.25, 3.0] {
            let v = integrate(&heat(beta).into(), &parse("abs(x)").unwrap()).unwrap();
            assert!((v - 2.0 * (beta / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn normalisation() {
        let one = parse("1").unwrap();
        let g = GaussianMixture::new(vec![
            GaussianComponent { mean: -1.0, tau: 0.3, weight: 0.25 },
            GaussianComponent { mean: 2.0, tau: 1.7, weight: 0.75 },
        ])
        .unwrap();
        assert!((integrate(&g.into(), &one).unwrap() - 1.0).abs() < 1e-10);
        let d = DiscreteMeasure::from_points(&[0.0, 1.0, 5.0], &[0.2, 0.3, 0.5]).unwrap();
        assert!((integrate(&d.into(), &one).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicates_merge() {
        let m = DiscreteMeasure::from_points(&[1.0, 0.0, 1.0 + 1e-13, 2.0], &[0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.weights()[1], 0.5);
        assert!(m.is_probability());
    }

    #[test]
    fn weighted_tv_examples() {
        let d0 = DiscreteMeasure::dirac(0.0);
        let d1 = DiscreteMeasure::dirac(1.0);
        let d2 = DiscreteMeasure::dirac(2.0);
        let one = parse("1").unwrap();
        assert_eq!(weighted_tv(&d0, &d0, &parse("1+x^2").unwrap()).unwrap(), 0.0);
        assert_eq!(weighted_tv(&d0, &d1, &one).unwrap(), 2.0);
        assert_eq!(weighted_tv(&d0, &d2, &parse("1+x^2").unwrap()).unwrap(), 6.0);
    }

    #[test]
    fn weighted_tv_rejects_small_weight() {
        let r = weighted_tv(&DiscreteMeasure::dirac(0.0), &DiscreteMeasure::dirac(1.0), &parse("x").unwrap());
        assert!(matches!(r, Err(Error::InvalidWeight { .. })));
    }

    #[test]
    fn discretize_is_centred_and_sized() {
        let m = discretize(&heat(0.7), 101).unwrap();
        assert!(m.mean().unwrap().abs() < 1e-12);
        let m2 = discretize(&heat(1.0), 1000).unwrap();
        let second = m2.integrate_fn(|x| x * x);
        assert!((second - 2.0).abs() < 1e-2, "{second}");
        let mix = GaussianMixture::new(vec![
            GaussianComponent { mean: -3.0, tau: 0.5, weight: 0.5 },
            GaussianComponent { mean: 3.0, tau: 0.5, weight: 0.5 },
        ])
        .unwrap();
        assert_eq!(discretize(&mix, 40).unwrap().len(), 80);
        assert!(discretize(&mix, 1).is_err());
    }

    #[test]
    fn flow_validation() {
        let nu = DiscreteMeasure::dirac(0.0);
        assert!(MeasureFlow::stationary(vec![0.0, 0.5, 1.0], &nu).is_ok());
        assert!(MeasureFlow::stationary(vec![0.1, 0.5], &nu).is_err());
        assert!(MeasureFlow::stationary(vec![0.0, 0.5, 0.5], &nu).is_err());
    }

    #[test]
    fn serde_round_trip_merges_on_read() {
        let json = r#"{"dim":1,"atoms":[[0.0],[0.0],[1.0]],"weights":[0.25,0.25,0.5]}"#;
        let m: DiscreteMeasure = serde_json::from_str(json).unwrap();
        assert_eq!(m.len(), 2);
        let back: DiscreteMeasure = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
