//! Every distance the library knows, evaluated on one pair of measures.

use fpk_lab::expr::parse;
use fpk_lab::measures::DiscreteMeasure;
use fpk_lab::metrics::{distance, kantorovich_wp, MetricKind};

pub fn run_example() -> fpk_lab::Result<()> {
    let mu = DiscreteMeasure::from_points(&[-1.0, 0.5, 2.0], &[0.2, 0.5, 0.3])?;
    let sigma = DiscreteMeasure::from_points(&[0.0, 1.5], &[0.6, 0.4])?;

    let kinds = [
        MetricKind::Wp { p: 1.0 },
        MetricKind::Wp { p: 2.0 },
        MetricKind::BigTp { p: 2.0 },
        MetricKind::SmallTp { p: 2.0 },
        MetricKind::Ww { weight: parse("1+x^2")? },
        MetricKind::Tv { weight: parse("1+abs(x)")? },
    ];
    for kind in &kinds {
        let label = serde_json::to_string(kind).expect("metric kinds serialise");
        println!("{label:<40} {:.6}", distance(&mu, &sigma, kind)?);
    }

    let w2 = kantorovich_wp(&mu, &sigma, 2.0)?;
    println!("W2 duality gap: {:.2e}", w2.solver_status.duality_gap);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fpk_lab::Result<()> {
    run_example()
}
