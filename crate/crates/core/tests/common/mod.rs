//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use fpk_lab::measures::DiscreteMeasure;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability weights bounded away from zero.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

/// A discrete probability measure with `1..=max_support` atoms in `[lo, hi]`.
pub fn random_measure(rng: &mut ChaCha8Rng, max_support: usize, lo: f64, hi: f64) -> DiscreteMeasure {
    let n = rng.gen_range(1..=max_support);
    let pts: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    let w = random_weights(rng, n);
    DiscreteMeasure::from_points(&pts, &w).unwrap()
}

/// `min Σ c_ij P_ij` over couplings of `a` and `b`, solved by a general LP.
pub fn lp_transport(cost: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = cost.iter().map(|&c| pb.add_var(c, (0.0, f64::INFINITY))).collect();
    for i in 0..m {
        pb.add_constraint((0..n).map(|j| (vars[i * n + j], 1.0)), ComparisonOp::Eq, a[i]);
    }
    for j in 0..n {
        pb.add_constraint((0..m).map(|i| (vars[i * n + j], 1.0)), ComparisonOp::Eq, b[j]);
    }
    pb.solve().unwrap().objective()
}

/// `max Σ f_i d_i` subject to `f_i − f_j ≤ bound_ij` and `f_0 = 0`.
pub fn lp_dual_potential(bound: &[f64], d: &[f64]) -> f64 {
    let n = d.len();
    let mut pb = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> =
        (0..n)
            .map(|i| {
                if i == 0 {
                    pb.add_var(d[0], (0.0, 0.0))
                } else {
                    pb.add_var(d[i], (f64::NEG_INFINITY, f64::INFINITY))
                }
            })
            .collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pb.add_constraint([(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, bound[i * n + j]);
            }
        }
    }
    pb.solve().unwrap().objective()
}

/// Sorted union support of two one-dimensional measures with both weight vectors.
pub fn union_support(mu: &DiscreteMeasure, sigma: &DiscreteMeasure) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut pts: Vec<f64> = mu.points().unwrap().into_iter().chain(sigma.points().unwrap()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let weight_at = |m: &DiscreteMeasure, x: f64| -> f64 {
        m.points().unwrap().iter().zip(m.weights()).filter(|(p, _)| **p == x).map(|(_, w)| *w).sum()
    };
    let wm = pts.iter().map(|&x| weight_at(mu, x)).collect();
    let ws = pts.iter().map(|&x| weight_at(sigma, x)).collect();
    (pts, wm, ws)
}

/// `W₁ = ∫ |F_μ − F_σ| dx`, exact for discrete measures on the line.
pub fn w1_cdf(mu: &DiscreteMeasure, sigma: &DiscreteMeasure) -> f64 {
    let (pts, wm, ws) = union_support(mu, sigma);
    let (mut fm, mut fs, mut acc) = (0.0, 0.0, 0.0);
    for k in 0..pts.len() - 1 {
        fm += wm[k];
        fs += ws[k];
        acc += (fm - fs).abs() * (pts[k + 1] - pts[k]);
    }
    acc
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `Γ(t, x) = (4πt)^{−1/2} exp(−x²/(4t))`, written out independently.
pub fn gamma(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
}
