mod common;

use std::sync::Arc;

use fpk_lab::conditions::Drift;
use fpk_lab::heat::{log_grid, FunctionalSpec};
use fpk_lab::measures::{DiscreteMeasure, Measure};
use fpk_lab::nonuniqueness::{
    build_time_change, construct_branches, construct_branches_with, default_bump_battery, osgood_test, simpson,
    weak_form_residual, Classification,
};
use fpk_lab::Error;
use proptest::prelude::*;

fn power_curve(alpha: f64) -> Vec<(f64, f64)> {
    log_grid(1e-12, 1e-1, 56).into_iter().map(|b| (b, b.powf(alpha))).collect()
}

#[test]
fn classifier_guard_band() {
    assert_eq!(osgood_test(&power_curve(0.97), 0.1).unwrap().classification, Classification::Inconclusive);
    assert_eq!(osgood_test(&power_curve(1.0), 0.1).unwrap().classification, Classification::Divergent);
    let short: Vec<(f64, f64)> = log_grid(1e-3, 1e-1, 20).into_iter().map(|b| (b, b)).collect();
    assert!(matches!(osgood_test(&short, 0.1), Err(Error::InsufficientData(_))));
}

#[test]
fn convergent_estimates_settle() {
    let r = osgood_test(&power_curve(0.5), 0.1).unwrap();
    let inc: Vec<f64> = r.integral_estimates.windows(2).map(|w| w[1].value - w[0].value).collect();
    assert!(inc.windows(2).all(|w| w[1] < w[0]));
    // ∫₀^ε β^{-1/2} dβ = 2√ε.
    let total = r.integral_estimates.last().unwrap().value;
    assert!((total - 2.0 * 0.1f64.sqrt()).abs() < 1e-5);
}

#[test]
fn time_change_solves_the_rate_equation() {
    for alpha in [0.25, 0.5, 0.75] {
        let rate = Arc::new(move |b: f64| Ok(b.powf(alpha)));
        let t_max = 2.0;
        let tc = build_time_change(rate, t_max).unwrap();
        assert_eq!(tc.eval(0.0).unwrap(), 0.0);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..=50 {
            let t = 0.1 * t_max + (0.9 * t_max - h) * k as f64 / 50.0;
            let d = (tc.eval(t + h).unwrap() - tc.eval(t - h).unwrap()) / (2.0 * h);
            worst = worst.max((d - tc.eval(t).unwrap().powf(alpha)).abs());
        }
        assert!(worst < 1e-6, "α = {alpha}: {worst}");
    }
}

#[test]
fn divergent_functionals_have_only_the_stationary_branch() {
    let nu = DiscreteMeasure::dirac(0.0);
    for alpha in [1.0, 1.5] {
        let r = construct_branches(&FunctionalSpec::abs_moment_power(alpha), &nu, 1.0);
        assert!(matches!(r, Err(Error::DivergentIntegral(_))), "α = {alpha}");
    }
}

#[test]
fn branches_need_a_zero_of_the_functional() {
    let nu = DiscreteMeasure::dirac(1.0);
    let r = construct_branches(&FunctionalSpec::abs_moment_power(0.5), &nu, 1.0);
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn residual_shrinks_under_refinement() {
    let a = FunctionalSpec::abs_moment_power(0.5);
    let nu = DiscreteMeasure::dirac(0.0);
    let tests = default_bump_battery();
    let worst = |steps: usize| {
        let pair = construct_branches_with(&a, &nu, 1.0, steps).unwrap();
        weak_form_residual(&pair.moving, &a, &Drift::zero(), &tests, 1.0).unwrap().into_iter().fold(0.0, f64::max)
    };
    let (coarse, fine) = (worst(20), worst(80));
    assert!(fine < coarse, "{coarse} → {fine}");
    assert!(fine < 1e-4);
}

#[test]
fn wrong_flow_has_a_large_residual() {
    // The moving branch run at twice the speed is not a solution.
    let a = FunctionalSpec::abs_moment_power(0.5);
    let nu = DiscreteMeasure::dirac(0.0);
    let pair = construct_branches(&a, &nu, 2.0).unwrap();
    let fast = construct_branches(&FunctionalSpec::abs_moment_power(0.5), &nu, 4.0).unwrap();
    let states: Vec<Measure> = fast.moving.states().to_vec();
    let flow = fpk_lab::measures::MeasureFlow::new(pair.times().to_vec(), states).unwrap();
    let r = weak_form_residual(&flow, &a, &Drift::zero(), &default_bump_battery(), 2.0).unwrap();
    assert!(r.into_iter().fold(0.0, f64::max) > 1e-2);
}

#[test]
fn branch_separation_increases() {
    let pair = construct_branches(&FunctionalSpec::abs_moment_power(0.5), &DiscreteMeasure::dirac(0.0), 1.0).unwrap();
    let sep = pair.separation().unwrap();
    assert_eq!(sep[0].2, 0.0);
    assert!(sep.windows(2).all(|w| w[1].2 > w[0].2));
}

#[test]
fn nonuniform_simpson_is_exact_for_cubics() {
    let x = [0.0, 0.1, 0.35, 0.4, 0.9, 1.3, 2.0];
    let y: Vec<f64> = x.iter().map(|&t: &f64| t.powi(2) - 2.0 * t + 1.0).collect();
    let exact = 8.0 / 3.0 - 4.0 + 2.0;
    assert!((simpson(&x, &y) - exact).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn half_power_functional_is_lipschitz_in_w1(
        xs in prop::collection::vec(-5.0f64..5.0, 1..8),
        ys in prop::collection::vec(-5.0f64..5.0, 1..8),
    ) {
        let mu = DiscreteMeasure::empirical(&xs).unwrap();
        let sigma = DiscreteMeasure::empirical(&ys).unwrap();
        let a = FunctionalSpec::abs_moment_power(0.5);
        let gap = (a.eval(&Measure::Discrete(mu.clone())).unwrap() - a.eval(&Measure::Discrete(sigma.clone())).unwrap()).abs();
        prop_assert!(gap <= 0.5 * std::f64::consts::PI.sqrt() * common::w1_cdf(&mu, &sigma) + 1e-9);
    }
}
