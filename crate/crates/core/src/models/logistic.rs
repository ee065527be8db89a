use nalgebra::{DMatrix, Matrix2, Vector2};
use rand_distr::{Binomial, Distribution};

use super::{Dataset, MleFit, Model, Record};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Binomial regression with logistic link: the response at covariate `x`
/// is `Bin(trials, F(theta_1 + theta_2 x))`, `F` the logistic CDF.
#[derive(Debug, Clone)]
pub struct LogisticBinomial {
    pub trials: u32,
}

impl Default for LogisticBinomial {
    fn default() -> Self {
        Self { trials: 6 }
    }
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^eta)` without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn ln_choose(n: u32, k: u32) -> f64 {
    crate::special::ln_gamma(n as f64 + 1.0) - crate::special::ln_gamma(k as f64 + 1.0) - crate::special::ln_gamma((n - k) as f64 + 1.0)
}

impl LogisticBinomial {
    pub fn new(trials: u32) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidInput("trial count must be at least one".into()));
        }
        Ok(Self { trials })
    }

    /// Covariate value where the success probability equals one half.
    pub fn median_effective_covariate(theta: &[f64]) -> f64 {
        -theta[0] / theta[1]
    }

    fn score_and_information(&self, pairs: &[(f64, f64)], theta: &[f64]) -> (Vector2<f64>, Matrix2<f64>) {
        let m = self.trials as f64;
        let mut g = Vector2::zeros();
        let mut h = Matrix2::zeros();
        for &(x, y) in pairs {
            let p = logistic(theta[0] + theta[1] * x);
            let r = y - m * p;
            g[0] += r;
            g[1] += r * x;
            let w = m * p * (1.0 - p);
            h[(0, 0)] += w;
            h[(0, 1)] += w * x;
            h[(1, 1)] += w * x * x;
        }
        h[(1, 0)] = h[(0, 1)];
        (g, h)
    }
}

impl Model for LogisticBinomial {
    fn name(&self) -> &str {
        "logistic-binomial"
    }

    fn dim(&self) -> usize {
        2
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["intercept".into(), "slope".into()]
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && theta.iter().all(|v| v.is_finite())
    }

    fn validate_data(&self, data: &Dataset) -> Result<()> {
        for (x, y) in data.pairs()? {
            if !x.is_finite() || y < 0.0 || y > self.trials as f64 || y.fract() != 0.0 {
                return Err(Error::InvalidInput(format!("response {y} is not a count in 0..={}", self.trials)));
            }
        }
        Ok(())
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let m = self.trials as f64;
        data.records()
            .iter()
            .map(|r| match r {
                Record::Pair(x, y) => {
                    let eta = theta[0] + theta[1] * x;
                    ln_choose(self.trials, *y as u32) + y * eta - m * softplus(eta)
                }
                Record::Real(_) => f64::NEG_INFINITY,
            })
            .sum()
    }

    fn simulate(&self, theta: &[f64], design: &Dataset, rng: &mut SimRng) -> Dataset {
        let records = design
            .records()
            .iter()
            .map(|r| {
                let x = match r {
                    Record::Pair(x, _) | Record::Real(x) => *x,
                };
                let p = logistic(theta[0] + theta[1] * x);
                let y = Binomial::new(self.trials as u64, p).expect("probability in [0, 1]").sample(rng);
                Record::Pair(x, y as f64)
            })
            .collect();
        design.with_records(records)
    }

    /// Newton-Raphson with step halving on the log-likelihood.
    fn mle(&self, data: &Dataset, init: Option<&[f64]>) -> Result<MleFit> {
        self.validate_data(data)?;
        let pairs = data.pairs()?;
        let mut theta = init.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0, 0.0]);
        let mut ll = self.log_likelihood(data, &theta);
        let mut iterations = 0;
        let mut warning = None;
        loop {
            if iterations >= 500 {
                return Err(Error::NonConvergence { iterations, context: "logistic Newton iterations".into() });
            }
            iterations += 1;
            let (g, h) = self.score_and_information(&pairs, &theta);
            let scale = 1.0 + ll.abs();
            if g.norm() <= 1e-9 * scale {
                break;
            }
            let Some(step) = h.try_inverse().map(|hi| hi * g) else {
                warning = Some("information matrix became singular; the data may be separated".to_string());
                break;
            };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..60 {
                let cand = vec![theta[0] + t * step[0], theta[1] + t * step[1]];
                let cand_ll = self.log_likelihood(data, &cand);
                if cand_ll >= ll - 1e-12 * scale {
                    theta = cand;
                    improved = cand_ll > ll;
                    ll = cand_ll;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
            if theta.iter().any(|v| v.abs() > 1e6) {
                warning = Some("estimates diverge; the likelihood supremum lies on the boundary (separation)".to_string());
                break;
            }
        }
        let extreme = pairs.iter().map(|(x, _)| (theta[0] + theta[1] * x).abs()).fold(0.0, f64::max);
        if warning.is_none() && extreme > 25.0 {
            warning = Some("fitted probabilities reach 0 or 1; the data are separated and the supremum lies at infinity".to_string());
        }
        Ok(MleFit { theta, log_likelihood: ll, iterations, warning })
    }

    fn obs_information(&self, data: &Dataset, theta: &[f64]) -> DMatrix<f64> {
        let pairs = data.pairs().unwrap_or_default();
        let (_, h) = self.score_and_information(&pairs, theta);
        DMatrix::from_row_slice(2, 2, h.as_slice())
    }

    fn domain_box(&self, data: &Dataset) -> Vec<(f64, f64)> {
        match self.mle(data, None) {
            Ok(fit) => {
                let se = self
                    .asymptotic_covariance(data, &fit.theta)
                    .map(|c| vec![c[(0, 0)].abs().sqrt(), c[(1, 1)].abs().sqrt()])
                    .unwrap_or_else(|_| vec![10.0, 1.0]);
                (0..2).map(|i| (fit.theta[i] - 10.0 * se[i], fit.theta[i] + 10.0 * se[i])).collect()
            }
            Err(_) => vec![(-100.0, 100.0), (-10.0, 10.0)],
        }
    }
}
