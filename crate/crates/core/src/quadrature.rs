//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! The local error estimate is the raw difference between the Kronrod and
//! the embedded 10-point Gauss value, which is pessimistic for smooth
//! integrands. Intervals with the largest estimate are bisected first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, err }
}

/// Integrates `f` over `[a, b]`. Converges once the summed error estimate
/// drops below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonIntegrable(format!("non-finite bounds [{a}, {b}]")));
    }
    if a > b {
        return integrate(f, b, a, opts).map(|v| -v);
    }
    let first = kronrod21(&f, a, b);
    if !first.value.is_finite() {
        return Err(Error::NonIntegrable(format!("integrand not finite on [{a}, {b}]")));
    }
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut total_err = first.err;
    heap.push(first);
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            // Re-sum to limit drift from incremental updates.
            return Ok(heap.iter().map(|s| s.value).sum());
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::NonIntegrable(format!(
                "budget of {} intervals exhausted on [{a}, {b}]; error estimate {total_err:e}",
                opts.max_intervals
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::NonIntegrable(format!("interval collapsed near {mid}")));
        }
        let left = kronrod21(&f, worst.a, mid);
        let right = kronrod21(&f, mid, worst.b);
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(Error::NonIntegrable(format!("integrand not finite near {mid}")));
        }
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
}

/// [`integrate`] with default options but an explicit absolute tolerance.
pub fn integrate_abs<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    integrate(f, a, b, QuadOptions { abs_tol, ..QuadOptions::default() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_bounds_subdivide() {
        let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 2000 };
        let v = integrate(|x| (-x).exp() * (10.0 * x).sin().abs(), 5.0, 0.0, opts).unwrap();
        let w = integrate(|x| (-x).exp() * (10.0 * x).sin().abs(), 0.0, 5.0, opts).unwrap();
        assert_eq!(v, -w);
    }

    #[test]
    fn gaussian_normalisation() {
        let v = integrate(|x| (-x * x).exp(), -12.0, 12.0, QuadOptions::default()).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn kink_is_resolved() {
        let v = integrate(|x: f64| (x - 0.3).abs(), -1.0, 1.0, QuadOptions::default()).unwrap();
        assert!((v - (0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7)).abs() < 1e-10);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let v = integrate(|x| x.sin(), 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((v + (1.0 - 1f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_rejected() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, QuadOptions::default());
        assert!(matches!(r, Err(Error::NonIntegrable(_))));
    }
}
