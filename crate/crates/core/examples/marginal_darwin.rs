//! Marginal contours for the mean difference in Darwin's data.
//!
//! The profile contour at zero reproduces the two-sided paired t-test.

use possim::fixtures;
use possim::im::{LikelihoodIm, MonteCarloConfig};
use possim::marginal::{marginal_grid, profile_contour, FeatureMap, ProfileOptions};
use possim::models::builtin;
use possim::special::student_t_two_sided;

fn main() -> possim::Result<()> {
    let data = fixtures::darwin();
    let z = data.reals()?;
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let s = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = mean / (s / n.sqrt());

    let im = LikelihoodIm::new(builtin::normal(), data)?;
    let mean_feature = FeatureMap::coordinate(0, 2, vec![(1.0, 200.0)]).with_pivotal(true).with_label("mean");
    let cfg = MonteCarloConfig::new(20_000, 5);
    let at_zero = profile_contour(&im, &mean_feature, &[0.0], &cfg, &ProfileOptions::default())?;
    println!("profile plausibility of a zero mean: {:.4}", at_zero.value);
    println!("paired t-test p-value:              {:.4}", student_t_two_sided(t, n - 1.0));

    let values: Vec<f64> = (0..=12).map(|i| -10.0 + 5.0 * i as f64).collect();
    let rows = marginal_grid(&im, &im.wilks_contour(), &mean_feature, &values, &MonteCarloConfig::new(4000, 6), &ProfileOptions::default())?;
    println!("{:>6}  {:>9}  {:>7}", "mean", "extension", "profile");
    for (phi, ext, pr) in rows {
        println!("{phi:6.1}  {ext:9.3}  {pr:7.3}");
    }
    Ok(())
}
