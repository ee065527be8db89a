use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, MleFit, Model, Record};
use crate::error::{Error, Result};
use crate::rng::SimRng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn moments(data: &Dataset) -> (f64, f64, f64) {
    let n = data.len() as f64;
    let mut mean = 0.0;
    for r in data.records() {
        if let Record::Real(v) = r {
            mean += v;
        }
    }
    mean /= n;
    let mut ss = 0.0;
    for r in data.records() {
        if let Record::Real(v) = r {
            ss += (v - mean) * (v - mean);
        }
    }
    (n, mean, ss / n)
}

fn check_reals(data: &Dataset) -> Result<()> {
    let values = data.reals()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("normal data must be finite".into()));
    }
    Ok(())
}

/// `N(mu, sigma^2)` with `theta = (mu, sigma)`, `sigma > 0`.
#[derive(Debug, Clone, Default)]
pub struct Normal;

impl Normal {
    /// Relative likelihood written through the sufficient statistics; the
    /// law of this quantity under `theta` is free of `theta`.
    pub fn closed_form_relative_likelihood(data: &Dataset, theta: &[f64]) -> f64 {
        let (n, mean, var_hat) = moments(data);
        let ratio = var_hat / (theta[1] * theta[1]);
        ratio.powf(n / 2.0) * (-n * (mean - theta[0]).powi(2) / (2.0 * theta[1] * theta[1]) - n / 2.0 * (ratio - 1.0)).exp()
    }
}

impl Model for Normal {
    fn name(&self) -> &str {
        "normal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["mu".into(), "sigma".into()]
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && theta[0].is_finite() && theta[1].is_finite() && theta[1] > 0.0
    }

    fn validate_data(&self, data: &Dataset) -> Result<()> {
        check_reals(data)
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let (n, mean, var_hat) = moments(data);
        let s2 = theta[1] * theta[1];
        -0.5 * n * LN_2PI - n * theta[1].ln() - n * (var_hat + (mean - theta[0]).powi(2)) / (2.0 * s2)
    }

    fn simulate(&self, theta: &[f64], design: &Dataset, rng: &mut SimRng) -> Dataset {
        let records = (0..design.len())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                Record::Real(theta[0] + theta[1] * z)
            })
            .collect();
        design.with_records(records)
    }

    fn mle(&self, data: &Dataset, _init: Option<&[f64]>) -> Result<MleFit> {
        self.validate_data(data)?;
        let (_, mean, var_hat) = moments(data);
        if !(var_hat > 0.0) || var_hat <= 1e-28 * mean.abs().max(1.0).powi(2) {
            return Err(Error::BoundaryMle("sample has zero spread, so sigma_hat = 0".into()));
        }
        let theta = vec![mean, var_hat.sqrt()];
        let log_likelihood = self.log_likelihood(data, &theta);
        Ok(MleFit { theta, log_likelihood, iterations: 0, warning: None })
    }

    fn obs_information(&self, data: &Dataset, theta: &[f64]) -> DMatrix<f64> {
        let (n, mean, var_hat) = moments(data);
        let s = theta[1];
        let s2 = s * s;
        let d = mean - theta[0];
        let i_mm = n / s2;
        let i_ms = 2.0 * n * d / (s2 * s);
        let i_ss = -n / s2 + 3.0 * n * (var_hat + d * d) / (s2 * s2);
        DMatrix::from_row_slice(2, 2, &[i_mm, i_ms, i_ms, i_ss])
    }

    fn is_pivotal(&self) -> bool {
        true
    }

    fn domain_box(&self, data: &Dataset) -> Vec<(f64, f64)> {
        let (_, mean, var_hat) = moments(data);
        let sd = var_hat.sqrt().max(1e-6);
        vec![(mean - 10.0 * sd, mean + 10.0 * sd), (sd * 0.05, sd * 10.0)]
    }
}

/// `N(mu, sigma^2)` with known `sigma`; `theta = (mu)`.
#[derive(Debug, Clone)]
pub struct NormalKnownSigma {
    pub sigma: f64,
}

impl NormalKnownSigma {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }
}

impl Model for NormalKnownSigma {
    fn name(&self) -> &str {
        "normal-known-sigma"
    }

    fn dim(&self) -> usize {
        1
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["mu".into()]
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite()
    }

    fn validate_data(&self, data: &Dataset) -> Result<()> {
        check_reals(data)
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let (n, mean, var_hat) = moments(data);
        let s2 = self.sigma * self.sigma;
        -0.5 * n * LN_2PI - n * self.sigma.ln() - n * (var_hat + (mean - theta[0]).powi(2)) / (2.0 * s2)
    }

    fn simulate(&self, theta: &[f64], design: &Dataset, rng: &mut SimRng) -> Dataset {
        let records = (0..design.len())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                Record::Real(theta[0] + self.sigma * z)
            })
            .collect();
        design.with_records(records)
    }

    fn mle(&self, data: &Dataset, _init: Option<&[f64]>) -> Result<MleFit> {
        self.validate_data(data)?;
        let (_, mean, _) = moments(data);
        let theta = vec![mean];
        let log_likelihood = self.log_likelihood(data, &theta);
        Ok(MleFit { theta, log_likelihood, iterations: 0, warning: None })
    }

    fn obs_information(&self, data: &Dataset, _theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, data.len() as f64 / (self.sigma * self.sigma))
    }

    fn is_pivotal(&self) -> bool {
        true
    }

    fn domain_box(&self, data: &Dataset) -> Vec<(f64, f64)> {
        let (n, mean, _) = moments(data);
        let se = self.sigma / n.sqrt();
        vec![(mean - 10.0 * se, mean + 10.0 * se)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::relative_likelihood;

    #[test]
    fn closed_form_relative_likelihood_matches_generic() {
        let data = Dataset::from_reals("d", vec![1.0, 2.5, -0.5, 3.0, 0.2, 1.1]);
        let fit = Normal.mle(&data, None).unwrap();
        for theta in [[0.0, 1.0], [1.5, 2.0], [1.2, 0.7], [-3.0, 5.0]] {
            let generic = (Normal.log_likelihood(&data, &theta) - fit.log_likelihood).exp();
            let closed = Normal::closed_form_relative_likelihood(&data, &theta);
            assert!((generic - closed).abs() < 1e-10, "{theta:?}: {generic} vs {closed}");
        }
    }

    #[test]
    fn degenerate_sample_is_a_boundary_error() {
        let data = Dataset::from_reals("flat", vec![4.0; 6]);
        assert!(matches!(Normal.mle(&data, None), Err(Error::BoundaryMle(_))));
    }

    #[test]
    fn relative_likelihood_is_one_at_mle() {
        let data = Dataset::from_reals("d", vec![1.0, 2.0, 4.0]);
        let fit = Normal.mle(&data, None).unwrap();
        assert_eq!(relative_likelihood(&Normal, &data, &fit.theta).unwrap(), 1.0);
        assert!(relative_likelihood(&Normal, &data, &[0.0, -1.0]).is_err());
    }

    #[test]
    fn closed_form_information_matches_numeric() {
        let data = Dataset::from_reals("d", vec![1.0, 2.5, -0.5, 3.0, 0.2, 1.1]);
        let theta = [0.9, 1.4];
        let closed = Normal.obs_information(&data, &theta);
        let numeric = crate::models::numeric_information(|t| Normal.log_likelihood(&data, t), &theta);
        assert!((closed - numeric).amax() < 1e-4);
    }
}
