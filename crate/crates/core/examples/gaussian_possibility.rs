//! The possibility contour of a Gaussian law, in closed form and by
//! simulation from the probability-to-possibility transform.

use nalgebra::DMatrix;
use possim::possibility::{gaussian_contour, prob_to_poss, GaussianPossibilityParams};

fn main() -> possim::Result<()> {
    let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let params = GaussianPossibilityParams::new(vec![1.0, -1.0], cov)?;
    for y in [[1.0, -1.0], [2.0, 0.0], [-1.0, -2.5], [4.0, 1.0]] {
        let exact = gaussian_contour(&params, &y)?;
        let mc = prob_to_poss(|x| params.log_density(x), |rng| params.sample(rng), &y, 200_000, 3)?;
        println!("y = {y:?}: closed form {exact:.4}, simulated {mc:.4}");
    }
    Ok(())
}
