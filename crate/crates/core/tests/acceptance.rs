//! Acceptance suite: twelve criteria, one PASS/FAIL line each. Runs without
//! the libtest harness so the lines always reach the output. Exits nonzero
//! if a criterion fails, except those listed as unattainable in `main`.
//! Run a single criterion with `ACCEPTANCE_ONLY=<n>`.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fpk_lab::adjoint::{fit_c0, richardson, solve_backward, verify_gradient_bound, BackwardProblem};
use fpk_lab::conditions::{
    check_dh, check_h, CheckBox, CheckOptions, CoefficientSpec, ConditionId, Diffusion, Drift, LyapunovTriple,
};
use fpk_lab::expr::{parse, ScalarField};
use fpk_lab::families;
use fpk_lab::heat::{default_beta_grid, eval_functional, log_grid, sample_f_curve, FunctionalSpec};
use fpk_lab::measures::{DiscreteMeasure, Measure};
use fpk_lab::metrics::{
    enumerate_polytope_vertices, fortet_mourier_big_tp, fortet_mourier_cost, fortet_mourier_tp, kantorovich_wp,
    solve_transport_lp, wasserstein1_measures,
};
use fpk_lab::nonuniqueness::{
    construct_branches, default_bump_battery, dirac_flow_residual, drift_example_analysis, osgood_test,
    weak_form_residual, Classification,
};
use fpk_lab::particles::{run, SimConfig};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// The shared instance set for the first two criteria.
fn sandwich_instances() -> Vec<(DiscreteMeasure, DiscreteMeasure, f64)> {
    let mut rng = common::rng(20_240_601);
    (0..1000)
        .map(|k| {
            let mu = common::random_measure(&mut rng, 8, -5.0, 5.0);
            let sigma = common::random_measure(&mut rng, 8, -5.0, 5.0);
            (mu, sigma, if k % 2 == 0 { 2.0 } else { 3.0 })
        })
        .collect()
}

fn fm_cost_matrix(mu: &DiscreteMeasure, sigma: &DiscreteMeasure, p: f64) -> Vec<f64> {
    let mut c = vec![];
    for x in mu.atoms() {
        for y in sigma.atoms() {
            c.push(fortet_mourier_cost(x, y, p));
        }
    }
    c
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut worst_low = f64::NEG_INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    let mut worst_oracle: f64 = 0.0;
    for (mu, sigma, p) in sandwich_instances() {
        let small = fortet_mourier_tp(&mu, &sigma, p).unwrap().value;
        let big = fortet_mourier_big_tp(&mu, &sigma, p).unwrap().value;
        let oracle = common::lp_transport(&fm_cost_matrix(&mu, &sigma, p), mu.weights(), sigma.weights());
        worst_oracle = worst_oracle.max((big - oracle).abs());
        worst_low = worst_low.max(small - big);
        worst_high = worst_high.max(big - 2.0 * p * small);
    }
    let elapsed = start.elapsed();
    verdict(
        worst_low <= 1e-7 && worst_high <= 1e-7 && worst_oracle <= 1e-7 && elapsed < Duration::from_secs(60),
        format!(
            "max(t_p − T_p) = {worst_low:.2e}, max(T_p − 2p·t_p) = {worst_high:.2e}, |T_p − LP oracle| ≤ {worst_oracle:.1e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// The Hölder step bounds `(1 + max{|x|^{p−1}, |y|^{p−1}})^{p/(p−1)}` by
/// `2^{1/(p−1)}(1 + |x|^p + |y|^p)`, so the provable constant carries an extra
/// `2^{1/p}`. The bound is evaluated as stated; the corrected one is reported.
fn criterion_2() -> Verdict {
    let mut worst_a = f64::NEG_INFINITY;
    let mut worst_b = f64::NEG_INFINITY;
    let mut worst_corrected = f64::NEG_INFINITY;
    for (mu, sigma, p) in sandwich_instances() {
        let wp = kantorovich_wp(&mu, &sigma, p).unwrap().value;
        let big = fortet_mourier_big_tp(&mu, &sigma, p).unwrap().value;
        worst_a = worst_a.max(wp - 2.0 * big.powf(1.0 / p));
        let rhs = (1.0 + mu.abs_moment(p) + sigma.abs_moment(p)).powf((p - 1.0) / p) * wp;
        worst_b = worst_b.max(big - rhs);
        worst_corrected = worst_corrected.max(big - 2f64.powf(1.0 / p) * rhs);
    }
    // Two nearby point masses already break the stated constant.
    let (d1, d2) = (DiscreteMeasure::dirac(1.0), DiscreteMeasure::dirac(1.001));
    let ratio = fortet_mourier_big_tp(&d1, &d2, 2.0).unwrap().value
        / (3f64.sqrt() * kantorovich_wp(&d1, &d2, 2.0).unwrap().value);
    verdict(
        worst_a <= 1e-7 && worst_b <= 1e-7,
        format!(
            "max(W_p − 2T_p^(1/p)) = {worst_a:.2e}, max(T_p − M^((p−1)/p)·W_p) = {worst_b:.2e} \
             (δ₁ vs δ₁.₀₀₁ at p = 2: ratio {ratio:.4}); with the factor 2^(1/p): {worst_corrected:.2e}"
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = common::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let a = common::random_weights(&mut rng, m);
        let b = common::random_weights(&mut rng, n);
        let cost: Vec<f64> = (0..m * n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let lp = solve_transport_lp(&cost, &a, &b).unwrap().primal;
        let vmin =
            enumerate_polytope_vertices(&a, &b).unwrap().iter().map(|v| v.cost(&cost)).fold(f64::INFINITY, f64::min);
        worst = worst.max((lp - vmin).abs());
    }
    verdict(worst <= 1e-9, format!("max |LP − vertex minimum| = {worst:.2e} over 200 instances"))
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let nu = DiscreteMeasure::dirac(0.0);
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let a = FunctionalSpec::abs_moment_power(alpha);
        for beta in log_grid(1e-10, 1e-1, 91) {
            let exact = beta.powf(alpha);
            let got = eval_functional(&a, beta, &nu).unwrap();
            worst = worst.max((got - exact).abs() / exact.max(1.0));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-8 && elapsed < Duration::from_secs(10),
        format!("max |f(β) − β^α| / max(1, β^α) = {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn criterion_5() -> Verdict {
    let nu = DiscreteMeasure::dirac(0.0);
    let mut cases: Vec<(String, FunctionalSpec, Classification)> = vec![];
    for alpha in [0.25, 0.5, 0.75] {
        cases.push((format!("α={alpha}"), FunctionalSpec::abs_moment_power(alpha), Classification::Convergent));
    }
    for alpha in [1.0, 1.5] {
        cases.push((format!("α={alpha}"), FunctionalSpec::abs_moment_power(alpha), Classification::Divergent));
    }
    cases.push(("smooth kernel".into(), families::smooth_kernel_functional(), Classification::Divergent));
    let mut pass = true;
    let mut parts = vec![];
    for (name, a, expected) in cases {
        let curve = sample_f_curve(&a, &nu, &default_beta_grid()).unwrap();
        let r = osgood_test(&curve, 0.1).unwrap();
        pass &= r.classification == expected;
        parts.push(format!("{name}: {:?} ({:.4})", r.classification, r.fitted_exponent));
    }
    verdict(pass, parts.join(", "))
}

fn criterion_6() -> Verdict {
    let a = FunctionalSpec::abs_moment_power(0.5);
    let nu = DiscreteMeasure::dirac(0.0);
    let pair = construct_branches(&a, &nu, 2.0).unwrap();
    let steps = pair.times().len() - 1;
    let tau_err = pair.times().iter().zip(&pair.tau).map(|(&t, &tau)| (tau - t * t / 4.0).abs()).fold(0.0, f64::max);
    let tests = default_bump_battery();
    let resid = [&pair.moving, &pair.stationary]
        .iter()
        .flat_map(|flow| weak_form_residual(flow, &a, &Drift::zero(), &tests, 2.0).unwrap())
        .fold(0.0, f64::max);
    // Mean absolute value of Γ(τ(1)) by quadrature of the density written out here.
    let tau1 = pair.tau_at(1.0);
    let oracle = 2.0 * common::simpson(|x| x * common::gamma(tau1, x), 0.0, 40.0 * tau1.sqrt(), 20_000);
    let k = pair.times().iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
    let w1 = wasserstein1_measures(&pair.moving.states()[k], &pair.stationary.states()[k]).unwrap();
    let w1_err = (w1 - oracle).abs();
    let closed = (oracle - 2.0 * (tau1 / PI).sqrt()).abs();
    verdict(
        tau_err <= 1e-6 && resid <= 1e-4 && w1_err <= 1e-4 && tests.len() == 5 && steps == 200 && closed < 1e-9,
        format!(
            "|τ − t²/4| ≤ {tau_err:.1e}, residual ≤ {resid:.1e} ({steps} steps), |W₁(t=1) − 2√(τ/π)| = {w1_err:.1e}"
        ),
    )
}

fn criterion_7() -> Verdict {
    let b = families::two_thirds_drift();
    let grid: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    let r_cube = dirac_flow_residual(|t| t.powi(3) / 27.0, &b, &grid).unwrap();
    let r_zero = dirac_flow_residual(|_| 0.0, &b, &grid).unwrap();
    let r_decoy = dirac_flow_residual(|t| t, &b, &grid).unwrap();
    // The drift of a point mass at x is |x|^{2/3}; check the cubic path by hand.
    let by_hand =
        grid.iter().map(|&t| (t * t / 9.0 - (t.powi(3) / 27.0).abs().powf(2.0 / 3.0)).abs()).fold(0.0, f64::max);
    verdict(
        r_cube < 1e-6 && r_zero < 1e-6 && r_decoy >= 0.1 && by_hand < 1e-12,
        format!("residuals t³/27: {r_cube:.1e}, 0: {r_zero:.1e}, decoy t: {r_decoy:.3}"),
    )
}

fn criterion_8() -> Verdict {
    let r = drift_example_analysis(1.0).unwrap();
    // τ = g₀²t² against τ' = ∫|y − t|Γ(τ, y) dy computed by direct quadrature.
    let mut worst: f64 = 0.0;
    for k in 0..=19 {
        let t = 0.1 + 0.1 * k as f64;
        let tau = r.g0 * r.g0 * t * t;
        let half = 14.0 * tau.sqrt();
        let rhs = common::simpson(|y| (y - t).abs() * common::gamma(tau, y), -half, t, 4000)
            + common::simpson(|y| (y - t).abs() * common::gamma(tau, y), t, half.max(t) + half, 4000);
        worst = worst.max((2.0 * r.g0 * r.g0 * t - rhs).abs());
    }
    verdict(
        r.g0 > 0.0 && r.g0 < 1.0 && r.f_slope_max <= -1.0 + 1e-6 && r.ode_residual < 1e-6 && worst < 1e-6,
        format!(
            "g₀ = {:.6}, max F' = {:.4}, ODE residual {:.1e} (quadrature oracle {worst:.1e})",
            r.g0, r.f_slope_max, r.ode_residual
        ),
    )
}

fn criterion_9() -> Verdict {
    let a = FunctionalSpec::abs_moment_power(0.5);
    let mut rng = common::rng(9);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..500 {
        let mu = common::random_measure(&mut rng, 8, -5.0, 5.0);
        let sigma = common::random_measure(&mut rng, 8, -5.0, 5.0);
        let am = a.eval(&Measure::Discrete(mu.clone())).unwrap();
        let as_ = a.eval(&Measure::Discrete(sigma.clone())).unwrap();
        let w1 = common::w1_cdf(&mu, &sigma);
        worst = worst.max((am - as_).abs() - 0.5 * PI.sqrt() * w1);
    }
    verdict(worst <= 1e-9, format!("max(|a(μ) − a(σ)| − (√π/2)W₁) = {worst:.3e} over 500 pairs"))
}

fn criterion_10() -> Verdict {
    let spec = families::interaction_family(1);
    let triple = families::interaction_triple(4, 2);
    let mu = DiscreteMeasure::dirac(0.0);
    let opts = CheckOptions::default();
    let coarse = check_h(&spec, &triple, &mu, &opts).unwrap();
    let fine = check_h(&spec, &triple, &mu, &opts.clone().with_grid(2 * opts.grid_n)).unwrap();
    let mut ratio: f64 = 1.0;
    for (c, f) in coarse.iter().zip(&fine) {
        for (k, v) in &c.constants {
            let w = f.constants[k];
            if v.abs() > 0.0 && w.abs() > 0.0 {
                ratio = ratio.max((v / w).max(w / v));
            }
        }
    }
    let (vspec, vtriple) = families::cubic_violation();
    let violation = check_h(&vspec, &vtriple, &mu, &opts).unwrap();
    let h2 = violation.iter().find(|r| r.id == ConditionId::H2).unwrap();
    let all = coarse.iter().all(|r| r.passes);
    verdict(
        all && !h2.passes && h2.worst_margin < 0.0 && ratio < 1.05,
        format!(
            "H1–H4 pass on [{}, {}]×[0, 1]: {all}; x³ violation H2 margin {:.3e}; grid-doubling ratio {ratio:.5}",
            opts.bbox.x_min, opts.bbox.x_max, h2.worst_margin
        ),
    )
}

fn criterion_11() -> Verdict {
    let battery =
        ["0.9*bump(x/2)", "0.6*x*bump(x/3)", "1.3*bump(x/3)", "0.45*bump(x)", "0.45*bump(x-1)-0.45*bump(x+1)", "0"];
    let w = ScalarField::constant(1.0);
    let mut pass = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_excess: f64 = 0.0;
    let mut ratios = vec![];
    for (name, drift) in [("heat", "0"), ("OU", "-x")] {
        let base =
            |psi: &str| BackwardProblem::new(parse("1").unwrap(), parse(drift).unwrap(), parse(psi).unwrap(), 0.5);
        for psi in battery {
            let p = base(psi).with_grid(400, 400);
            let c0 = fit_c0(&p, &w, 0.5).unwrap();
            let sol = solve_backward(&p).unwrap();
            let g = verify_gradient_bound(&sol, &w, c0, p.s).unwrap();
            pass &= g.passes;
            worst_margin = worst_margin.min(g.worst_margin);
            worst_excess = worst_excess.max(sol.max_principle_excess());
        }
        let r = richardson(&base(battery[0]).with_grid(200, 200)).unwrap();
        pass &= (3.5..=4.5).contains(&r.ratio);
        ratios.push(format!("{name} {:.3}", r.ratio));
    }
    pass &= worst_excess <= 1e-9;
    verdict(
        pass,
        format!(
            "min gradient margin {worst_margin:.3e} (≥ −h_x = −0.05), max-principle excess {worst_excess:.1e}, Richardson {}",
            ratios.join(", ")
        ),
    )
}

/// `∫ |F_N − Φ(x/√2)| dx` between an empirical measure and `Γ(1, ·)`.
fn w1_to_gaussian(points: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 2f64.sqrt()).unwrap();
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let lo = xs[0].min(-15.0);
    let hi = xs[xs.len() - 1].max(15.0);
    let mut acc = common::simpson(|x| normal.cdf(x), lo, xs[0], 64);
    for (k, w) in xs.windows(2).enumerate() {
        let level = (k + 1) as f64 / n;
        if w[1] > w[0] {
            acc += common::simpson(|x| (level - normal.cdf(x)).abs(), w[0], w[1], 4);
        }
    }
    acc + common::simpson(|x| 1.0 - normal.cdf(x), xs[xs.len() - 1], hi, 64)
}

fn criterion_12() -> Verdict {
    let start = Instant::now();
    let n = 10_000;
    let heat = CoefficientSpec::new(Diffusion::constant(1.0), Drift::zero());
    let delta0 = DiscreteMeasure::dirac(0.0);
    let mut worst_heat: f64 = 0.0;
    let mut deterministic = true;
    for seed in 0..10 {
        let cfg = SimConfig::new(n, 0.1, 1.0, seed, heat.clone(), delta0.clone());
        let sim = run(&cfg).unwrap();
        worst_heat = worst_heat.max(w1_to_gaussian(sim.positions.last().unwrap()));
        deterministic &= run(&cfg).unwrap().positions == sim.positions;
    }

    // Gronwall consistency for the interaction drift with unit Lyapunov weights.
    let spec = families::interaction_family(1);
    let one = ScalarField::constant(1.0);
    let unit = LyapunovTriple::new(one.clone(), one.clone(), one);
    let nu_a = DiscreteMeasure::from_points(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
    let nu_b = nu_a.translated(0.2).unwrap();
    let opts = CheckOptions::default().with_box(CheckBox::symmetric(5.0));
    let c = check_dh(&spec, &unit, &nu_a, &opts).unwrap()[1].constants["C"];
    let w0 = common::w1_cdf(&nu_a, &nu_b);
    let mut worst_excess = f64::NEG_INFINITY;
    for s in 0..10u64 {
        let ca = SimConfig::new(n, 0.01, 1.0, 2 * s, spec.clone(), nu_a.clone()).with_save_every(10);
        let cb = SimConfig::new(n, 0.01, 1.0, 2 * s + 1, spec.clone(), nu_b.clone()).with_save_every(10);
        let (sa, sb) = (run(&ca).unwrap(), run(&cb).unwrap());
        for ((t, pa), pb) in sa.times.iter().zip(&sa.positions).zip(&sb.positions) {
            let ea = DiscreteMeasure::empirical(pa).unwrap();
            let eb = DiscreteMeasure::empirical(pb).unwrap();
            let bound = w0 * (c * t).exp() + 5.0 / (n as f64).sqrt();
            worst_excess = worst_excess.max(common::w1_cdf(&ea, &eb) - bound);
        }
        if s == 0 {
            deterministic &= run(&ca).unwrap().positions == sa.positions;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst_heat <= 0.05 && worst_excess <= 0.0 && deterministic && elapsed < Duration::from_secs(300),
        format!(
            "heat W₁ ≤ {worst_heat:.4}; Gronwall (C = {c}, W₁(ν_a, ν_b) = {w0}) worst W₁ − bound = {worst_excess:.4}; bitwise deterministic: {deterministic}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 12] = [
        ("metric sandwich t_p ≤ T_p ≤ 2p·t_p", criterion_1),
        ("metric relations between W_p and T_p", criterion_2),
        ("LP optimum equals vertex enumeration", criterion_3),
        ("f-curve equals β^α", criterion_4),
        ("Osgood dichotomy", criterion_5),
        ("branch construction for α = 1/2", criterion_6),
        ("point-mass counterexample", criterion_7),
        ("drift example analysis", criterion_8),
        ("Lipschitz gap of the α = 1/2 functional", criterion_9),
        ("condition checks for the interaction family", criterion_10),
        ("adjoint gradient bound", criterion_11),
        ("particle simulator validation", criterion_12),
    ];
    // Criteria whose stated bound is false; they print FAIL without failing the run.
    let known_unattainable = [2];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {name}: {}", v.detail);
        failed += usize::from(!v.pass && !known_unattainable.contains(&id));
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed unexpectedly");
        std::process::exit(1);
    }
}
