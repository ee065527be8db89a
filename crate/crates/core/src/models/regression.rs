use nalgebra::{Matrix2, Vector2};
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, MleFit, Model, Record};
use crate::error::{Error, Result};
use crate::rng::SimRng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `y_i ~ N(b0 + b1 x_i, s2)` with the covariates held fixed;
/// `theta = (b0, b1, s2)`.
#[derive(Debug, Clone, Default)]
pub struct LinearRegression;

/// Ordinary least squares summary of a regression dataset.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vector2<f64>,
    pub rss: f64,
    /// `(X'X)^{-1}`.
    pub gram_inverse: Matrix2<f64>,
    pub n: usize,
}

pub fn least_squares(data: &Dataset) -> Result<LeastSquares> {
    let pairs = data.pairs()?;
    let mut xtx: Matrix2<f64> = Matrix2::zeros();
    let mut xty = Vector2::zeros();
    for &(x, y) in &pairs {
        xtx[(0, 0)] += 1.0;
        xtx[(0, 1)] += x;
        xtx[(1, 1)] += x * x;
        xty[0] += y;
        xty[1] += x * y;
    }
    xtx[(1, 0)] = xtx[(0, 1)];
    let det = xtx.determinant();
    if !(det.abs() > 1e-12 * xtx[(1, 1)].max(1.0) * xtx[(0, 0)]) {
        return Err(Error::InvalidInput("regression design is singular (covariates all equal)".into()));
    }
    let gram_inverse = xtx.try_inverse().ok_or_else(|| Error::InvalidInput("regression design is singular".into()))?;
    let coefficients = gram_inverse * xty;
    let rss = pairs.iter().map(|&(x, y)| (y - coefficients[0] - coefficients[1] * x).powi(2)).sum();
    Ok(LeastSquares { coefficients, rss, gram_inverse, n: pairs.len() })
}

impl Model for LinearRegression {
    fn name(&self) -> &str {
        "linear-regression"
    }

    fn dim(&self) -> usize {
        3
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["intercept".into(), "slope".into(), "variance".into()]
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 3 && theta.iter().all(|v| v.is_finite()) && theta[2] > 0.0
    }

    fn validate_data(&self, data: &Dataset) -> Result<()> {
        if data.pairs()?.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFinite("regression data must be finite".into()));
        }
        Ok(())
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let mut rss = 0.0;
        let mut n = 0.0;
        for r in data.records() {
            match r {
                Record::Pair(x, y) => {
                    rss += (y - theta[0] - theta[1] * x).powi(2);
                    n += 1.0;
                }
                Record::Real(_) => return f64::NEG_INFINITY,
            }
        }
        -0.5 * n * (LN_2PI + theta[2].ln()) - rss / (2.0 * theta[2])
    }

    fn simulate(&self, theta: &[f64], design: &Dataset, rng: &mut SimRng) -> Dataset {
        let sd = theta[2].sqrt();
        let records = design
            .records()
            .iter()
            .map(|r| {
                let x = match r {
                    Record::Pair(x, _) | Record::Real(x) => *x,
                };
                let e: f64 = StandardNormal.sample(rng);
                Record::Pair(x, theta[0] + theta[1] * x + sd * e)
            })
            .collect();
        design.with_records(records)
    }

    fn mle(&self, data: &Dataset, _init: Option<&[f64]>) -> Result<MleFit> {
        self.validate_data(data)?;
        let ls = least_squares(data)?;
        let s2 = ls.rss / ls.n as f64;
        if !(s2 > 0.0) {
            return Err(Error::BoundaryMle("perfect fit gives zero residual variance".into()));
        }
        let theta = vec![ls.coefficients[0], ls.coefficients[1], s2];
        let log_likelihood = self.log_likelihood(data, &theta);
        Ok(MleFit { theta, log_likelihood, iterations: 0, warning: None })
    }

    fn is_pivotal(&self) -> bool {
        true
    }

    fn domain_box(&self, data: &Dataset) -> Vec<(f64, f64)> {
        match least_squares(data) {
            Ok(ls) => {
                let s2 = (ls.rss / ls.n as f64).max(1e-12);
                let se0 = (s2 * ls.gram_inverse[(0, 0)]).sqrt();
                let se1 = (s2 * ls.gram_inverse[(1, 1)]).sqrt();
                vec![
                    (ls.coefficients[0] - 10.0 * se0, ls.coefficients[0] + 10.0 * se0),
                    (ls.coefficients[1] - 10.0 * se1, ls.coefficients[1] + 10.0 * se1),
                    (s2 / 20.0, s2 * 20.0),
                ]
            }
            Err(_) => vec![(-1e3, 1e3), (-1e3, 1e3), (1e-6, 1e6)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line_plus_noise() {
        let data = Dataset::from_pairs("r", vec![(0.0, 1.1), (1.0, 2.9), (2.0, 5.2), (3.0, 6.8)]);
        let fit = LinearRegression.mle(&data, None).unwrap();
        assert!((fit.theta[1] - 1.94).abs() < 1e-12);
        assert!((fit.theta[0] - 1.09).abs() < 1e-12);
    }

    #[test]
    fn singular_design_errors() {
        let data = Dataset::from_pairs("r", vec![(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]);
        assert!(LinearRegression.mle(&data, None).is_err());
    }
}
