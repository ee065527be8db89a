//! Parametric sampling models and datasets.
//!
//! A [`Model`] bundles a log-likelihood, a simulator, a maximum likelihood
//! solver and the observed information; the built-in families live in
//! [`builtin`].

use std::fmt;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub mod builtin;
mod gamma;
mod logistic;
mod multinomial;
mod normal;
mod regression;

pub use gamma::Gamma;
pub use logistic::LogisticBinomial;
pub use multinomial::Multinomial;
pub use normal::{Normal, NormalKnownSigma};
pub use regression::{least_squares, LeastSquares, LinearRegression};

/// One observation: a real value, or a covariate/response pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Record {
    Real(f64),
    Pair(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub label: String,
    pub units: String,
    records: Vec<Record>,
}

impl Dataset {
    /// Builds a dataset; records must all have the same shape.
    pub fn new(label: impl Into<String>, records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidInput("dataset must contain at least one record".into()));
        }
        let pairs = matches!(records[0], Record::Pair(..));
        if records.iter().any(|r| matches!(r, Record::Pair(..)) != pairs) {
            return Err(Error::InvalidInput("records mix reals and pairs".into()));
        }
        Ok(Self { label: label.into(), units: String::new(), records })
    }

    pub fn from_reals(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self { label: label.into(), units: String::new(), records: values.into_iter().map(Record::Real).collect() }
    }

    pub fn from_pairs(label: impl Into<String>, pairs: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            units: String::new(),
            records: pairs.into_iter().map(|(x, y)| Record::Pair(x, y)).collect(),
        }
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_pairs(&self) -> bool {
        matches!(self.records.first(), Some(Record::Pair(..)))
    }

    /// The real-valued observations; errors when records are pairs.
    pub fn reals(&self) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| match r {
                Record::Real(v) => Ok(*v),
                Record::Pair(..) => Err(Error::InvalidInput(format!("dataset `{}` holds pairs, expected reals", self.label))),
            })
            .collect()
    }

    pub fn pairs(&self) -> Result<Vec<(f64, f64)>> {
        self.records
            .iter()
            .map(|r| match r {
                Record::Pair(x, y) => Ok((*x, *y)),
                Record::Real(_) => Err(Error::InvalidInput(format!("dataset `{}` holds reals, expected pairs", self.label))),
            })
            .collect()
    }

    /// Replaces the records while keeping label and units.
    pub fn with_records(&self, records: Vec<Record>) -> Self {
        Self { label: self.label.clone(), units: self.units.clone(), records }
    }

    /// Reads a CSV file with a header row: one column gives real records,
    /// two columns give `(x, y)` pairs.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(label, file)
    }

    pub fn from_csv_reader(label: impl Into<String>, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let width = rdr.headers()?.len();
        if !(1..=2).contains(&width) {
            return Err(Error::InvalidInput(format!("dataset CSV must have one or two columns, found {width}")));
        }
        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let parse = |i: usize| -> Result<f64> {
                row.get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("row {} is short", line + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("row {}: {e}", line + 1)))
            };
            records.push(if width == 1 { Record::Real(parse(0)?) } else { Record::Pair(parse(0)?, parse(1)?) });
        }
        Self::new(label, records)
    }
}

/// Outcome of a maximum likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Set when the supremum is approached at the boundary (e.g. separation).
    pub warning: Option<String>,
}

/// A parametric sampling model.
pub trait Model: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Parameter dimension.
    fn dim(&self) -> usize;

    /// Degrees of freedom for chi-square calibrations; differs from
    /// [`Model::dim`] when the parameter lives on a lower-dimensional set.
    fn dof(&self) -> usize {
        self.dim()
    }

    fn parameter_names(&self) -> Vec<String>;

    fn in_domain(&self, theta: &[f64]) -> bool;

    /// Rejects data the model cannot describe.
    fn validate_data(&self, data: &Dataset) -> Result<()>;

    /// Log-likelihood; `-inf` where the data are impossible under `theta`.
    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64;

    /// Draws a dataset of the same design (size, covariates) as `design`.
    fn simulate(&self, theta: &[f64], design: &Dataset, rng: &mut SimRng) -> Dataset;

    fn mle(&self, data: &Dataset, init: Option<&[f64]>) -> Result<MleFit>;

    /// Observed information `-d^2 log L` at `theta`, by central differences
    /// unless a model supplies the closed form.
    fn obs_information(&self, data: &Dataset, theta: &[f64]) -> DMatrix<f64> {
        numeric_information(|t| self.log_likelihood(data, t), theta)
    }

    /// Large-sample covariance of the estimator at `theta`.
    fn asymptotic_covariance(&self, data: &Dataset, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.obs_information(data, theta).try_inverse().ok_or(Error::SingularCovariance)
    }

    /// True when the law of the relative likelihood `R(Z, theta)` under
    /// `theta` does not depend on `theta`.
    fn is_pivotal(&self) -> bool {
        false
    }

    /// Coordinate box covering the plausible region; used to draw random
    /// domain points for sanity checks and default searches.
    fn domain_box(&self, data: &Dataset) -> Vec<(f64, f64)>;
}

/// Central-difference Hessian of `-f` at `x`.
pub fn numeric_information<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1e-2)).collect();
    let mut out = DMatrix::zeros(d, d);
    let f0 = f(x);
    for i in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h[i];
        xm[i] -= h[i];
        out[(i, i)] = -(f(&xp) - 2.0 * f0 + f(&xm)) / (h[i] * h[i]);
        for j in 0..i {
            let mut pp = x.to_vec();
            let mut pm = x.to_vec();
            let mut mp = x.to_vec();
            let mut mm = x.to_vec();
            pp[i] += h[i];
            pp[j] += h[j];
            pm[i] += h[i];
            pm[j] -= h[j];
            mp[i] -= h[i];
            mp[j] += h[j];
            mm[i] -= h[i];
            mm[j] -= h[j];
            let v = -(f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `exp(log L(theta) - log L(theta_hat))` for the observed data.
pub fn relative_likelihood(model: &dyn Model, data: &Dataset, theta: &[f64]) -> Result<f64> {
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: theta.len() });
    }
    if !model.in_domain(theta) {
        return Err(Error::OutsideDomain(theta.to_vec()));
    }
    let fit = model.mle(data, None)?;
    Ok(relative_from_logs(model.log_likelihood(data, theta), fit.log_likelihood).exp())
}

/// `log R` clamped into `[-inf, 0]`.
pub(crate) fn relative_from_logs(log_lik: f64, max_log_lik: f64) -> f64 {
    if log_lik == f64::NEG_INFINITY || log_lik.is_nan() {
        return f64::NEG_INFINITY;
    }
    (log_lik - max_log_lik).min(0.0)
}

/// `0 * ln(0) = 0`; `c * ln(0) = -inf` for `c > 0`.
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}
