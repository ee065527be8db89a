//! Sampling the inner probabilistic approximation for a gamma model and
//! rebuilding the contour from the draws.

use std::sync::Arc;

use possim::credal::{calibrate_ellipsoid, sample_inner_approx, CalibrationOptions, EllipsoidApprox, SampleContour};
use possim::fixtures;
use possim::im::{LikelihoodIm, MonteCarloConfig};
use possim::models::builtin;

fn main() -> possim::Result<()> {
    let model = builtin::gamma();
    let im = LikelihoodIm::new(Arc::clone(&model), fixtures::gamma_synthetic())?;
    let mle = im.mle().to_vec();
    println!("MLE (shape, scale) = ({:.3}, {:.3})", mle[0], mle[1]);

    let cfg = MonteCarloConfig::new(1000, 12);
    let contour = im.mc_contour(cfg);
    let base = EllipsoidApprox::new(mle.clone(), &model.asymptotic_covariance(im.data(), &mle)?)?;
    let opts = CalibrationOptions { monotone_tol: 0.1, probes_per_alpha: 8, seed: 4, ..CalibrationOptions::default() };
    let ellipsoid = calibrate_ellipsoid(&contour, base, &opts)?;
    for (alpha, r) in ellipsoid.calibration().iter() {
        println!("alpha {alpha:.2}: whitened radius {r:.3}");
    }

    let draws = sample_inner_approx(&ellipsoid, 5000, 99);
    let rebuilt = SampleContour::new(&draws, |t| im.log_relative_likelihood(t).unwrap_or(f64::NEG_INFINITY));
    println!("{:>7} {:>7} {:>8} {:>8}", "shape", "scale", "direct", "samples");
    for (k, s) in [(2.157, 2.52), (1.5, 3.0), (3.0, 1.8), (1.2, 4.5), (3.5, 2.0)] {
        let t = [k, s];
        let direct = contour.evaluate(&t);
        let from_draws = rebuilt.at_score(im.log_relative_likelihood(&t)?);
        println!("{k:7.3} {s:7.3} {direct:8.3} {from_draws:8.3}");
    }
    Ok(())
}
