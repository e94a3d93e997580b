//! Spot-check both families of uniqueness conditions on built-in models.

use fpk_lab::conditions::{check_dh, check_h, CheckOptions};
use fpk_lab::families;
use fpk_lab::measures::DiscreteMeasure;

pub fn run_example() -> fpk_lab::Result<()> {
    let mu = DiscreteMeasure::from_points(&[-0.5, 1.0], &[0.5, 0.5])?;
    let spec = families::interaction_family(1);
    let triple = families::interaction_triple(4, 2);
    for r in check_h(&spec, &triple, &mu, &CheckOptions::default())? {
        println!("{}", r.summary());
    }

    let (spec, triple) = families::cubic_violation();
    for r in check_h(&spec, &triple, &DiscreteMeasure::dirac(0.0), &CheckOptions::default())? {
        println!("{}", r.summary());
    }

    let opts = families::exponential_options();
    for r in
        check_dh(&families::exponential_family(), &families::exponential_triple(), &DiscreteMeasure::dirac(0.0), &opts)?
    {
        println!("{}", r.summary());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fpk_lab::Result<()> {
    run_example()
}
