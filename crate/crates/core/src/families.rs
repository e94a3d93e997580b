//! Worked coefficient families and their Lyapunov triples.

use crate::conditions::{CheckBox, CheckOptions, CoefficientSpec, Diffusion, Drift, LyapunovTriple};
use crate::expr::{parse, ScalarField};
use crate::heat::FunctionalSpec;

fn field(src: &str) -> ScalarField {
    parse(src).expect("built-in expression parses")
}

/// `1 + |x|^p`, written with an even power when `p` is even.
fn one_plus_power(p: u32) -> ScalarField {
    if p.is_multiple_of(2) {
        ScalarField::constant(1.0) + ScalarField::x().powf(p as f64)
    } else {
        ScalarField::constant(1.0) + ScalarField::x().abs().powf(p as f64)
    }
}

/// `A = 1`, `b(μ, x) = −∫ (x − y)|x − y|^{n−1} dμ(y)`.
pub fn interaction_family(n: u32) -> CoefficientSpec {
    let kernel = if n == 1 { field("-x*abs(x)") } else { -(ScalarField::x() * ScalarField::x().abs().powf(n as f64)) };
    CoefficientSpec::new(Diffusion::constant(1.0), Drift::interaction(kernel))
}

/// `V = 1 + |x|^{2m}`, `W = 1 + |x|^k`, `U = 1 + x²`.
pub fn interaction_triple(m: u32, k: u32) -> LyapunovTriple {
    LyapunovTriple::new(one_plus_power(2 * m), one_plus_power(k), one_plus_power(2))
}

/// `A = 1`, `b(x) = x³`: the drift outgrows a quadratic `W`.
pub fn cubic_violation() -> (CoefficientSpec, LyapunovTriple) {
    let spec = CoefficientSpec::new(Diffusion::constant(1.0), Drift::local(field("x^3")));
    (spec, interaction_triple(4, 2))
}

/// `A = 0`, `b(μ, x) = −x ∫ exp(y²/3) dμ(y)`.
pub fn exponential_family() -> CoefficientSpec {
    CoefficientSpec::new(Diffusion::constant(0.0), Drift::moment_scaled(field("-x"), field("exp(x^2/3)")))
}

/// `V = exp(x²)`, `W = exp(|x|)`, `U = 1 + x²`.
pub fn exponential_triple() -> LyapunovTriple {
    LyapunovTriple::new(field("exp(x^2)"), field("exp(abs(x))"), field("1+x^2"))
}

/// Check options for the exponential family: box `[−5, 5] × [0, 1]`.
pub fn exponential_options() -> CheckOptions {
    CheckOptions::default().with_box(CheckBox::symmetric(5.0))
}

/// `a(μ) = ∫ x²/(1 + x²) dμ`: smooth, vanishing to second order at `δ₀`.
pub fn smooth_kernel_functional() -> FunctionalSpec {
    FunctionalSpec::kernel_integral(field("x^2/(1+x^2)"))
}

/// `b(μ) = ∫ |y|^{2/3} dμ(y)`, the drift of the point-mass counterexample.
pub fn two_thirds_drift() -> FunctionalSpec {
    FunctionalSpec::kernel_integral(ScalarField::x().abs().powf(2.0 / 3.0))
}
