//! Joint contour for the normal model on Darwin's paired plant heights.

use possim::fixtures;
use possim::im::{confidence_region, evaluate_grid, Axis, Grid, LikelihoodIm, MonteCarloConfig};
use possim::models::builtin;

fn main() -> possim::Result<()> {
    let im = LikelihoodIm::new(builtin::normal(), fixtures::darwin())?;
    let mle = im.mle().to_vec();
    println!("MLE (mean, sd) = ({:.2}, {:.2})", mle[0], mle[1]);

    let cfg = MonteCarloConfig::new(2000, 17);
    for theta in [[20.0, 36.0], [0.0, 40.0], [20.0, 70.0]] {
        let mc = im.contour_mc(&theta, &cfg)?;
        println!("pi({theta:?}): Monte Carlo {:.3}, Wilks {:.3}", mc.value, im.contour_wilks(&theta)?);
    }

    let grid = Grid::new(vec![Axis { min: -20.0, max: 60.0, steps: 81 }, Axis { min: 15.0, max: 90.0, steps: 76 }])?;
    let contour = im.wilks_contour();
    let values = evaluate_grid(&contour, &grid)?;
    let (peak, top) = values.argmax();
    println!("grid maximum {top:.3} at {peak:?}");
    for alpha in [0.5, 0.1, 0.05] {
        let region = confidence_region(&contour, &mle, alpha, &grid)?;
        println!("{:.0}% region: {} grid points", 100.0 * (1.0 - alpha), region.grid_members.map_or(0, |m| m.len()));
    }
    Ok(())
}
