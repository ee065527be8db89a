use nalgebra::{DMatrix, DVector};
use rand_distr::{Binomial, Distribution};

use super::{xlogy, Dataset, MleFit, Model, Record};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::special::ln_gamma;

const SIMPLEX_TOL: f64 = 1e-9;

/// `Mult_K(n, theta)` over `K` categories; the dataset holds the `K` counts
/// as real records and `theta` lives on the probability simplex.
#[derive(Debug, Clone)]
pub struct Multinomial {
    pub categories: usize,
}

impl Multinomial {
    pub fn new(categories: usize) -> Result<Self> {
        if categories < 2 {
            return Err(Error::InvalidInput("a multinomial needs at least two categories".into()));
        }
        Ok(Self { categories })
    }

    pub fn counts(data: &Dataset) -> Result<Vec<f64>> {
        data.reals()
    }
}

impl Model for Multinomial {
    fn name(&self) -> &str {
        "multinomial"
    }

    fn dim(&self) -> usize {
        self.categories
    }

    fn dof(&self) -> usize {
        self.categories - 1
    }

    fn parameter_names(&self) -> Vec<String> {
        (1..=self.categories).map(|k| format!("p{k}")).collect()
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.categories
            && theta.iter().all(|v| v.is_finite() && *v >= 0.0)
            && (theta.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
    }

    fn validate_data(&self, data: &Dataset) -> Result<()> {
        let z = data.reals()?;
        if z.len() != self.categories {
            return Err(Error::DimensionMismatch { expected: self.categories, got: z.len() });
        }
        if z.iter().any(|c| !(*c >= 0.0) || c.fract() != 0.0) {
            return Err(Error::InvalidInput("multinomial counts must be non-negative integers".into()));
        }
        if z.iter().sum::<f64>() == 0.0 {
            return Err(Error::InvalidInput("multinomial counts sum to zero".into()));
        }
        Ok(())
    }

    /// Includes the multinomial coefficient; `0 * ln 0 = 0`.
    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let Ok(z) = data.reals() else { return f64::NEG_INFINITY };
        let n: f64 = z.iter().sum();
        let coef = ln_gamma(n + 1.0) - z.iter().map(|c| ln_gamma(c + 1.0)).sum::<f64>();
        coef + z.iter().zip(theta).map(|(c, p)| xlogy(*c, *p)).sum::<f64>()
    }

    /// Sequential conditional binomials.
    fn simulate(&self, theta: &[f64], design: &Dataset, rng: &mut SimRng) -> Dataset {
        let n = design.reals().map(|z| z.iter().sum::<f64>()).unwrap_or(0.0) as u64;
        let mut left = n;
        let mut mass_left = 1.0;
        let mut records = Vec::with_capacity(self.categories);
        for (k, p) in theta.iter().enumerate() {
            let c = if k + 1 == self.categories || left == 0 {
                left
            } else {
                let q = (p / mass_left).clamp(0.0, 1.0);
                Binomial::new(left, if q.is_finite() { q } else { 0.0 }).expect("probability in [0, 1]").sample(rng)
            };
            left -= c;
            mass_left -= p;
            records.push(Record::Real(c as f64));
        }
        design.with_records(records)
    }

    fn mle(&self, data: &Dataset, _init: Option<&[f64]>) -> Result<MleFit> {
        self.validate_data(data)?;
        let z = data.reals()?;
        let n: f64 = z.iter().sum();
        let theta: Vec<f64> = z.iter().map(|c| c / n).collect();
        let log_likelihood = self.log_likelihood(data, &theta);
        Ok(MleFit { theta, log_likelihood, iterations: 0, warning: None })
    }

    /// Fisher information is singular on the simplex; the covariance of
    /// `z / n` is returned directly instead.
    fn asymptotic_covariance(&self, data: &Dataset, theta: &[f64]) -> Result<DMatrix<f64>> {
        let n: f64 = data.reals()?.iter().sum();
        let t = DVector::from_column_slice(theta);
        Ok((DMatrix::from_diagonal(&t) - &t * t.transpose()) / n)
    }

    fn obs_information(&self, data: &Dataset, theta: &[f64]) -> DMatrix<f64> {
        let z = data.reals().unwrap_or_default();
        DMatrix::from_fn(self.categories, self.categories, |i, j| if i == j && theta[i] > 0.0 { z[i] / (theta[i] * theta[i]) } else { 0.0 })
    }

    fn domain_box(&self, _data: &Dataset) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.categories]
    }
}
