//! A nine-cell multinomial table and the marginal of its three block sums.

use std::sync::Arc;

use possim::fixtures;
use possim::im::{LikelihoodIm, MonteCarloConfig};
use possim::marginal::{profile_relative_likelihood, FeatureMap, PlugIn, plugin_profile_contour, ProfileOptions};
use possim::models::builtin;

fn main() -> possim::Result<()> {
    let model = builtin::multinomial(9)?;
    let im = LikelihoodIm::new(Arc::clone(&model), fixtures::multinomial_agresti())?;
    let mle = im.mle().to_vec();
    println!("cell MLEs: {:?}", mle.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>());
    let sums = FeatureMap::block_sums(3, 3);
    let phi_hat = sums.apply(&mle);
    println!("block-sum MLE: {:?}", phi_hat.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>());

    let cfg = MonteCarloConfig::new(2000, 8);
    for phi in [phi_hat.clone(), vec![0.2, 0.55, 0.25], vec![1.0 / 3.0; 3]] {
        let pr = profile_relative_likelihood(&im, &sums, &phi)?;
        let pl = plugin_profile_contour(&im, &sums, &phi, &cfg, PlugIn::FullMle, &ProfileOptions::default())?;
        println!("phi {:?}: profile log R {:.3}, plug-in plausibility {pl:.3}", phi.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>(), pr.log_relative);
    }
    Ok(())
}
