mod common;

use fpk_lab::expr::{parse, ScalarField};
use fpk_lab::heat::heat_convolve;
use fpk_lab::measures::{
    discretize, integrate, weighted_tv, DiscreteMeasure, GaussianComponent, GaussianMixture, Measure,
};
use fpk_lab::metrics::wasserstein_1d;
use proptest::prelude::*;

fn measure() -> impl Strategy<Value = DiscreteMeasure> {
    (1usize..=8).prop_flat_map(|n| {
        (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(0.05f64..1.0, n)).prop_map(|(x, w)| {
            let s: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|v| v / s).collect();
            DiscreteMeasure::from_points(&x, &w).unwrap()
        })
    })
}

#[test]
fn mixture_integrals_match_simpson() {
    let g = GaussianMixture::new(vec![
        GaussianComponent { mean: -1.0, tau: 0.3, weight: 0.25 },
        GaussianComponent { mean: 2.0, tau: 1.5, weight: 0.75 },
    ])
    .unwrap();
    let density = |x: f64| 0.25 * common::gamma(0.3, x + 1.0) + 0.75 * common::gamma(1.5, x - 2.0);
    for src in ["abs(x)", "x^2", "exp(-x^2)", "1"] {
        let f = parse(src).unwrap();
        let got = integrate(&Measure::Mixture(g.clone()), &f).unwrap();
        let oracle = common::simpson(|x| f.eval(x, 0.0) * density(x), -40.0, 40.0, 40_000);
        assert!((got - oracle).abs() < 1e-9, "{src}: {got} vs {oracle}");
    }
}

#[test]
fn quantile_discretisation_moments() {
    let g = heat_convolve(1.0, &DiscreteMeasure::dirac(0.0)).unwrap();
    let d = discretize(&g, 1000).unwrap();
    assert!(d.mean().unwrap().abs() < 1e-12);
    assert!((d.abs_moment(2.0) - 2.0).abs() < 1e-2);
    let two = heat_convolve(0.5, &DiscreteMeasure::from_points(&[-1.0, 1.0], &[0.5, 0.5]).unwrap()).unwrap();
    assert_eq!(discretize(&two, 300).unwrap().len(), 600);
}

#[test]
fn discretisation_converges() {
    let g = heat_convolve(1.0, &DiscreteMeasure::dirac(0.3)).unwrap();
    let gaps: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&n| wasserstein_1d(&discretize(&g, n).unwrap(), &discretize(&g, 2 * n).unwrap(), 1.0).unwrap())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn duplicate_atoms_merge_by_weight() {
    let m = DiscreteMeasure::from_points(&[1.0, 1.0 + 1e-13, 2.0], &[0.25, 0.25, 0.5]).unwrap();
    assert_eq!(m.len(), 2);
    assert!((m.total_mass() - 1.0).abs() < 1e-15);
}

#[test]
fn invalid_measures_are_rejected() {
    assert!(DiscreteMeasure::from_points(&[0.0, 1.0], &[0.7, 0.7]).unwrap().ensure_probability().is_err());
    assert!(GaussianMixture::new(vec![GaussianComponent { mean: 0.0, tau: 0.0, weight: 1.0 }]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn integrate_is_linear(mu in measure(), sigma in measure(), lambda in 0.0f64..1.0, c in -3.0f64..3.0) {
        let f = parse("x^2").unwrap();
        let g = parse("exp(-abs(x))").unwrap();
        let fg = f.clone() + ScalarField::constant(c) * g.clone();
        let m = Measure::Discrete(mu.clone());
        let lhs = integrate(&m, &fg).unwrap();
        let rhs = integrate(&m, &f).unwrap() + c * integrate(&m, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));

        let mixed = Measure::Discrete(mu.mix(&sigma, lambda).unwrap());
        let lhs = integrate(&mixed, &f).unwrap();
        let rhs = lambda * integrate(&m, &f).unwrap() + (1.0 - lambda) * integrate(&Measure::Discrete(sigma), &f).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn weighted_tv_is_a_metric(a in measure(), b in measure(), c in measure()) {
        let w = parse("1+x^2").unwrap();
        let ab = weighted_tv(&a, &b, &w).unwrap();
        prop_assert!((ab - weighted_tv(&b, &a, &w).unwrap()).abs() <= 1e-12);
        prop_assert!(weighted_tv(&a, &a, &w).unwrap() == 0.0);
        if a != b {
            prop_assert!(ab > 0.0);
        }
        let bc = weighted_tv(&b, &c, &w).unwrap();
        let ac = weighted_tv(&a, &c, &w).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn unit_weight_gives_total_variation(a in measure(), b in measure()) {
        let (_, wa, wb) = common::union_support(&a, &b);
        let tv: f64 = wa.iter().zip(&wb).map(|(x, y)| (x - y).abs()).sum();
        prop_assert!((weighted_tv(&a, &b, &ScalarField::constant(1.0)).unwrap() - tv).abs() <= 1e-12);
    }
}
