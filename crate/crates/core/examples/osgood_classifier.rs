//! Sample `f(β) = a(Γ_β * δ₀)` for `a(μ) = (∫|x| dμ)^α` and classify the
//! Osgood integral `∫₀ dβ / f(β)` for a few exponents.

use fpk_lab::heat::{default_beta_grid, sample_f_curve, FunctionalSpec};
use fpk_lab::measures::DiscreteMeasure;
use fpk_lab::nonuniqueness::osgood_test;

pub fn run_example() -> fpk_lab::Result<()> {
    let betas = default_beta_grid();
    for alpha in [0.5, 1.0, 1.5] {
        let curve = sample_f_curve(&FunctionalSpec::abs_moment_power(alpha), &DiscreteMeasure::dirac(0.0), &betas)?;
        let report = osgood_test(&curve, 0.1)?;
        println!("alpha = {alpha}: exponent {:.4}, {:?}", report.fitted_exponent, report.classification);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fpk_lab::Result<()> {
    run_example()
}
