//! Two distinct solutions from the same initial datum `δ₀`: the stationary
//! one and a heat flow run on the time change `τ(t)`. Both satisfy the weak
//! form, and their distance grows from zero.

use fpk_lab::conditions::Drift;
use fpk_lab::heat::FunctionalSpec;
use fpk_lab::measures::DiscreteMeasure;
use fpk_lab::nonuniqueness::{construct_branches_with, default_bump_battery, weak_form_residual};

pub fn run_example() -> fpk_lab::Result<()> {
    let a = FunctionalSpec::abs_moment_power(0.5);
    let pair = construct_branches_with(&a, &DiscreteMeasure::dirac(0.0), 1.0, 40)?;

    let tests = default_bump_battery();
    for (name, flow) in [("stationary", &pair.stationary), ("moving", &pair.moving)] {
        let r = weak_form_residual(flow, &a, &Drift::zero(), &tests, 1.0)?;
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{name:>10}: worst residual {worst:.2e}");
    }

    for (t, tau, w1) in pair.separation()?.into_iter().step_by(10) {
        println!("t = {t:.3}  tau = {tau:.4}  W1 = {w1:.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fpk_lab::Result<()> {
    run_example()
}
