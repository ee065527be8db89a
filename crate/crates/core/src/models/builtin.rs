//! Registry of the built-in models.

use std::sync::Arc;

use super::{Gamma, LinearRegression, LogisticBinomial, Model, Multinomial, Normal, NormalKnownSigma};
use crate::error::{Error, Result};

pub fn normal() -> Arc<dyn Model> {
    Arc::new(Normal)
}

pub fn normal_known_sigma(sigma: f64) -> Result<Arc<dyn Model>> {
    Ok(Arc::new(NormalKnownSigma::new(sigma)?))
}

pub fn gamma() -> Arc<dyn Model> {
    Arc::new(Gamma)
}

pub fn logistic_binomial(trials: u32) -> Result<Arc<dyn Model>> {
    Ok(Arc::new(LogisticBinomial::new(trials)?))
}

pub fn multinomial(categories: usize) -> Result<Arc<dyn Model>> {
    Ok(Arc::new(Multinomial::new(categories)?))
}

pub fn linear_regression() -> Arc<dyn Model> {
    Arc::new(LinearRegression)
}

/// The five model families with default hyperparameters (six binomial
/// trials, three multinomial categories).
pub fn builtin_models() -> Vec<Arc<dyn Model>> {
    vec![
        normal(),
        gamma(),
        Arc::new(LogisticBinomial::default()),
        Arc::new(Multinomial { categories: 3 }),
        linear_regression(),
    ]
}

/// Hyperparameters accepted by [`by_id`].
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    pub sigma: Option<f64>,
    pub trials: Option<u32>,
    pub categories: Option<usize>,
}

/// Looks a model up by its identifier.
pub fn by_id(id: &str, options: &ModelOptions) -> Result<Arc<dyn Model>> {
    match id {
        "normal" => Ok(normal()),
        "normal-known-sigma" => normal_known_sigma(options.sigma.ok_or_else(|| Error::Config("normal-known-sigma needs `sigma`".into()))?),
        "gamma" => Ok(gamma()),
        "logistic-binomial" => logistic_binomial(options.trials.unwrap_or(6)),
        "multinomial" => multinomial(options.categories.ok_or_else(|| Error::Config("multinomial needs `categories`".into()))?),
        "linear-regression" => Ok(linear_regression()),
        other => Err(Error::Config(format!("unknown model `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_five_models_with_distinct_names() {
        let models = builtin_models();
        let mut names: Vec<&str> = models.iter().map(|m| m.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 5);
        for m in &models {
            assert!(by_id(m.name(), &ModelOptions { categories: Some(3), ..Default::default() }).is_ok());
        }
        assert!(by_id("cauchy", &ModelOptions::default()).is_err());
    }
}
