use nalgebra::DMatrix;
use rand_distr::Distribution;

use super::{Dataset, MleFit, Model, Record};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::special::{digamma, ln_gamma, trigamma};

/// Gamma distribution with `theta = (shape, scale)`.
#[derive(Debug, Clone, Default)]
pub struct Gamma;

struct Stats {
    n: f64,
    sum: f64,
    sum_log: f64,
}

fn stats(data: &Dataset) -> Stats {
    let mut s = Stats { n: 0.0, sum: 0.0, sum_log: 0.0 };
    for r in data.records() {
        if let Record::Real(v) = r {
            s.n += 1.0;
            s.sum += v;
            s.sum_log += v.ln();
        }
    }
    s
}

impl Model for Gamma {
    fn name(&self) -> &str {
        "gamma"
    }

    fn dim(&self) -> usize {
        2
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["shape".into(), "scale".into()]
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && theta.iter().all(|v| v.is_finite() && *v > 0.0)
    }

    fn validate_data(&self, data: &Dataset) -> Result<()> {
        let values = data.reals()?;
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("gamma data must be positive".into()));
        }
        Ok(())
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let s = stats(data);
        let (k, scale) = (theta[0], theta[1]);
        (k - 1.0) * s.sum_log - s.sum / scale - s.n * k * scale.ln() - s.n * ln_gamma(k)
    }

    fn simulate(&self, theta: &[f64], design: &Dataset, rng: &mut SimRng) -> Dataset {
        let dist = rand_distr::Gamma::new(theta[0], theta[1]).expect("shape and scale are positive");
        let records = (0..design.len()).map(|_| Record::Real(dist.sample(rng).max(f64::MIN_POSITIVE))).collect();
        design.with_records(records)
    }

    /// Newton iterations on `ln k - digamma(k) = ln(mean) - mean(ln x)`.
    fn mle(&self, data: &Dataset, _init: Option<&[f64]>) -> Result<MleFit> {
        self.validate_data(data)?;
        let st = stats(data);
        let mean = st.sum / st.n;
        let s = mean.ln() - st.sum_log / st.n;
        if !(s > 1e-14) {
            return Err(Error::BoundaryMle("all observations coincide, so the shape estimate is infinite".into()));
        }
        let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < 500 {
            iterations += 1;
            let f = k.ln() - digamma(k) - s;
            let df = 1.0 / k - trigamma(k);
            let mut next = k - f / df;
            if !(next > 0.0) {
                next = k / 2.0;
            }
            let done = (next - k).abs() <= 1e-14 * k;
            k = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { iterations, context: "gamma shape equation".into() });
        }
        let theta = vec![k, mean / k];
        let log_likelihood = self.log_likelihood(data, &theta);
        Ok(MleFit { theta, log_likelihood, iterations, warning: None })
    }

    fn obs_information(&self, data: &Dataset, theta: &[f64]) -> DMatrix<f64> {
        let st = stats(data);
        let (k, scale) = (theta[0], theta[1]);
        let i_kk = st.n * trigamma(k);
        let i_ks = st.n / scale;
        let i_ss = -st.n * k / (scale * scale) + 2.0 * st.sum / scale.powi(3);
        DMatrix::from_row_slice(2, 2, &[i_kk, i_ks, i_ks, i_ss])
    }

    fn domain_box(&self, data: &Dataset) -> Vec<(f64, f64)> {
        match self.mle(data, None) {
            Ok(fit) => vec![(fit.theta[0] / 20.0, fit.theta[0] * 20.0), (fit.theta[1] / 20.0, fit.theta[1] * 20.0)],
            Err(_) => vec![(1e-3, 1e3), (1e-3, 1e3)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn mle_recovers_generating_parameters() {
        let design = Dataset::from_reals("g", vec![1.0; 10_000]);
        let data = Gamma.simulate(&[2.0, 3.0], &design, &mut substream(5, 0));
        let fit = Gamma.mle(&data, None).unwrap();
        assert!((fit.theta[0] / 2.0 - 1.0).abs() < 0.05, "{:?}", fit.theta);
        assert!((fit.theta[1] / 3.0 - 1.0).abs() < 0.05, "{:?}", fit.theta);
    }

    #[test]
    fn score_vanishes_at_mle() {
        let data = Dataset::from_reals("g", vec![0.8, 2.4, 1.1, 5.2, 3.3, 0.4, 1.9]);
        let fit = Gamma.mle(&data, None).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut up = fit.theta.clone();
            let mut dn = fit.theta.clone();
            up[i] += h;
            dn[i] -= h;
            let g = (Gamma.log_likelihood(&data, &up) - Gamma.log_likelihood(&data, &dn)) / (2.0 * h);
            assert!(g.abs() < 1e-5, "score {g}");
        }
    }

    #[test]
    fn rejects_nonpositive_data() {
        let data = Dataset::from_reals("g", vec![1.0, -2.0]);
        assert!(Gamma.mle(&data, None).is_err());
        let flat = Dataset::from_reals("g", vec![2.0; 5]);
        assert!(matches!(Gamma.mle(&flat, None), Err(Error::BoundaryMle(_))));
    }

    #[test]
    fn closed_form_information_matches_numeric() {
        let data = Dataset::from_reals("g", vec![0.8, 2.4, 1.1, 5.2, 3.3, 0.4, 1.9]);
        let theta = [1.7, 1.4];
        let closed = Gamma.obs_information(&data, &theta);
        let numeric = crate::models::numeric_information(|t| Gamma.log_likelihood(&data, t), &theta);
        assert!((closed - numeric).amax() < 1e-3);
    }
}
