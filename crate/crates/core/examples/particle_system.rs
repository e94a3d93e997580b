//! Run the interacting-particle system from two nearby initial data and
//! track their Wasserstein distance.

use fpk_lab::families;
use fpk_lab::measures::DiscreteMeasure;
use fpk_lab::metrics::MetricKind;
use fpk_lab::particles::{compare_flows, simulate, SimConfig};

pub fn run_example() -> fpk_lab::Result<()> {
    let spec = families::interaction_family(1);
    let nu = DiscreteMeasure::from_points(&[-1.0, 1.0], &[0.5, 0.5])?;
    let shifted = nu.translated(0.05)?;

    let a = simulate(&SimConfig::new(2000, 0.01, 1.0, 0, spec.clone(), nu).with_save_every(20))?;
    let b = simulate(&SimConfig::new(2000, 0.01, 1.0, 1, spec, shifted).with_save_every(20))?;
    for (t, d) in compare_flows(&a, &b, &MetricKind::Wp { p: 1.0 }, 100)? {
        println!("t = {t:.2}  W1 = {d:.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fpk_lab::Result<()> {
    run_example()
}
