//! Logistic regression for O-ring failures against launch temperature.

use possim::fixtures;
use possim::models::{LogisticBinomial, Model};

fn main() -> possim::Result<()> {
    let model = LogisticBinomial::default();
    let data = fixtures::orings();
    let fit = model.mle(&data, None)?;
    println!("intercept {:.4}, slope {:.4}", fit.theta[0], fit.theta[1]);
    println!("temperature with 50% failure probability: {:.2}", LogisticBinomial::median_effective_covariate(&fit.theta));
    let cov = model.asymptotic_covariance(&data, &fit.theta)?;
    println!("standard errors: {:.4}, {:.4}", cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt());
    Ok(())
}
