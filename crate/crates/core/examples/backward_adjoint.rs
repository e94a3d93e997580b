//! Solve the backward Kolmogorov problem for an Ornstein–Uhlenbeck drift
//! and check the exponential gradient bound on the solution.

use fpk_lab::adjoint::{fit_c0, richardson, solve_backward, verify_gradient_bound, BackwardProblem};
use fpk_lab::expr::{parse, ScalarField};

pub fn run_example() -> fpk_lab::Result<()> {
    let p = BackwardProblem::new(parse("1")?, parse("-x")?, parse("0.6*x*bump(x/3)")?, 0.5).with_grid(200, 200);
    let w = ScalarField::constant(1.0);
    let c0 = fit_c0(&p, &w, 0.5)?;
    let sol = solve_backward(&p)?;
    let g = verify_gradient_bound(&sol, &w, c0, p.s)?;
    println!("C0 = {c0}, worst margin {:.4} at {:?}, passes: {}", g.worst_margin, g.worst_at, g.passes);
    println!("maximum principle excess {:.2e}", sol.max_principle_excess());

    let r = richardson(&p)?;
    println!("refinement ratio {:.3} (second order gives 4)", r.ratio);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fpk_lab::Result<()> {
    run_example()
}
