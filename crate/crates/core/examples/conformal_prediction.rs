//! Conformal prediction intervals for the next observation.

use possim::fixtures;
use possim::predict::{conformal_region, conformal_transducer, ConformityRanking};

fn main() -> possim::Result<()> {
    let z = fixtures::darwin().reals()?;
    let rho = ConformityRanking::distance_to_mean();
    for y in [20.0, 60.0, -70.0] {
        println!("plausibility of next value {y}: {:.4}", conformal_transducer(&z, &y, &rho)?);
    }
    let grid: Vec<f64> = (0..=400).map(|i| -100.0 + 0.5 * i as f64).collect();
    for alpha in [0.5, 0.2, 0.1] {
        let set = conformal_region(&z, &grid, alpha, &rho)?;
        let m = set.members();
        match (m.first(), m.last()) {
            (Some(lo), Some(hi)) => println!("alpha {alpha}: [{lo}, {hi}]"),
            _ => println!("alpha {alpha}: empty"),
        }
    }
    Ok(())
}
