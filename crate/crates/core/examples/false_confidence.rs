//! False confidence in a regression posterior versus the likelihood IM.
//!
//! Data come from a line whose root sits at -3. The posterior still assigns
//! high probability to "the root is above -1" surprisingly often.

use possim::diagnostics::{fcr_estimate, im_fcr_estimate, root_above, uniform_design, FcrSetup, FlatPriorRegression, DEFAULT_POSTERIOR_DRAWS};
use possim::im::MonteCarloConfig;
use possim::models::builtin;

fn main() -> possim::Result<()> {
    let setup = FcrSetup {
        model: builtin::linear_regression(),
        design: uniform_design(25, -2.0, 2.0, 20),
        theta_true: vec![0.3, 0.1, 1.0],
        reps: 1000,
        alphas: (1..=9).map(|k| k as f64 / 10.0).collect(),
        seed: 7,
    };
    let h = root_above(-1.0);
    let bayes = fcr_estimate(&FlatPriorRegression, &h, &setup, DEFAULT_POSTERIOR_DRAWS)?;
    let im = im_fcr_estimate(&h, &setup, &MonteCarloConfig::new(20_000, 11))?;
    println!("alpha  posterior  im");
    for ((a, b), (_, p)) in bayes.points.iter().zip(&im.points) {
        println!("{a:5.2}  {b:9.3}  {p:.3}");
    }
    Ok(())
}
