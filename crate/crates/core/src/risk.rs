//! Inference on risk minimizers without a likelihood.
//!
//! The ranking of a candidate `theta` is its excess empirical risk,
//! `rho(z, theta) = -(r_z(theta) - r_z(theta_hat))`, and validification
//! replaces the unknown data distribution by the empirical one: bootstrap
//! resamples play the role of fresh data, with the full-sample minimizer as
//! the true minimizer and each resample's own minimizer as its estimate.

use rand::RngExt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{least_squares, Dataset, Record};
use crate::possibility::PossibilityContour;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    SquaredError,
    /// Misclassification indicator; responses are labels in `{0, 1}`.
    ZeroOne,
    /// Pinball loss for the `u`-quantile, `u` in `(0, 1)`.
    Check(f64),
}

/// How a parameter turns into a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    /// A single number predicting every real observation.
    Location,
    /// `theta_0 + theta_1 x` for `(x, y)` pairs; for zero-one loss the label
    /// is `1` when this score is positive.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossFunction {
    pub kind: LossKind,
    pub predictor: Predictor,
}

impl LossFunction {
    pub fn new(kind: LossKind, predictor: Predictor) -> Result<Self> {
        if let LossKind::Check(u) = kind {
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::InvalidInput(format!("check loss level must lie in (0, 1), got {u}")));
            }
        }
        Ok(Self { kind, predictor })
    }

    pub fn dim(&self) -> usize {
        match self.predictor {
            Predictor::Location => 1,
            Predictor::Linear => 2,
        }
    }

    /// Loss of one record; non-negative.
    pub fn loss(&self, record: &Record, theta: &[f64]) -> f64 {
        let (score, y) = match (self.predictor, record) {
            (Predictor::Location, Record::Real(y)) => (theta[0], *y),
            (Predictor::Linear, Record::Pair(x, y)) => (theta[0] + theta[1] * x, *y),
            (Predictor::Location, Record::Pair(_, y)) => (theta[0], *y),
            (Predictor::Linear, Record::Real(y)) => (theta[0], *y),
        };
        match self.kind {
            LossKind::SquaredError => (y - score).powi(2),
            LossKind::ZeroOne => {
                let label = match self.predictor {
                    Predictor::Linear => f64::from(u8::from(score > 0.0)),
                    Predictor::Location => score,
                };
                f64::from(u8::from(label != y))
            }
            LossKind::Check(u) => {
                let r = y - score;
                if r >= 0.0 {
                    u * r
                } else {
                    (u - 1.0) * r
                }
            }
        }
    }

    /// Mean loss over the records.
    pub fn empirical_risk(&self, data: &[Record], theta: &[f64]) -> f64 {
        data.iter().map(|r| self.loss(r, theta)).sum::<f64>() / data.len() as f64
    }
}

fn responses(data: &[Record]) -> Vec<f64> {
    data.iter()
        .map(|r| match r {
            Record::Real(y) | Record::Pair(_, y) => *y,
        })
        .collect()
}

/// Minimizer of a convex piecewise-linear risk over candidate points: the
/// midpoint of the minimizing candidates, which is again a minimizer when
/// the risk is flat between them.
fn argmin_candidates(loss: &LossFunction, data: &[Record], mut candidates: Vec<f64>) -> f64 {
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let risks: Vec<f64> = candidates.iter().map(|c| loss.empirical_risk(data, &[*c])).collect();
    let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * best.abs().max(1e-300);
    let winners: Vec<f64> = candidates.iter().zip(&risks).filter(|(_, r)| **r <= best + tol).map(|(c, _)| *c).collect();
    0.5 * (winners[0] + winners[winners.len() - 1])
}

/// Empirical risk minimizer.
///
/// Squared error is solved in closed form; check loss by scanning the
/// kinks (data points, or lines through pairs of points); zero-one loss by
/// scanning thresholds between sorted covariates in both orientations.
pub fn empirical_risk_minimize(data: &Dataset, loss: &LossFunction) -> Result<Vec<f64>> {
    let records = data.records();
    if records.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    match (loss.kind, loss.predictor) {
        (LossKind::SquaredError, Predictor::Location) => {
            let y = responses(records);
            Ok(vec![y.iter().sum::<f64>() / y.len() as f64])
        }
        (LossKind::SquaredError, Predictor::Linear) => {
            let ls = least_squares(data)?;
            Ok(vec![ls.coefficients[0], ls.coefficients[1]])
        }
        (LossKind::Check(_), Predictor::Location) => Ok(vec![argmin_candidates(loss, records, responses(records))]),
        (LossKind::Check(_), Predictor::Linear) => {
            let pairs = data.pairs()?;
            let mut best: Option<(f64, Vec<f64>)> = None;
            for i in 0..pairs.len() {
                for j in i + 1..pairs.len() {
                    let (x1, y1) = pairs[i];
                    let (x2, y2) = pairs[j];
                    if x1 == x2 {
                        continue;
                    }
                    let slope = (y2 - y1) / (x2 - x1);
                    let theta = vec![y1 - slope * x1, slope];
                    let r = loss.empirical_risk(records, &theta);
                    if best.as_ref().is_none_or(|b| r < b.0) {
                        best = Some((r, theta));
                    }
                }
            }
            best.map(|b| b.1).ok_or_else(|| Error::NonConvergence { iterations: 0, context: "check-loss regression needs two distinct covariates".into() })
        }
        (LossKind::ZeroOne, Predictor::Location) => {
            // the most frequent response
            let mut y = responses(records);
            y.sort_by(f64::total_cmp);
            let mut best = (0usize, y[0]);
            let mut i = 0;
            while i < y.len() {
                let j = y[i..].iter().take_while(|v| **v == y[i]).count();
                if j > best.0 {
                    best = (j, y[i]);
                }
                i += j;
            }
            Ok(vec![best.1])
        }
        (LossKind::ZeroOne, Predictor::Linear) => {
            let pairs = data.pairs()?;
            if pairs.iter().any(|(_, y)| *y != 0.0 && *y != 1.0) {
                return Err(Error::InvalidInput("zero-one loss needs labels in {0, 1}".into()));
            }
            let mut xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let mut cuts = vec![xs[0] - 1.0];
            cuts.extend(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            cuts.push(xs[xs.len() - 1] + 1.0);
            let mut best: Option<(f64, Vec<f64>)> = None;
            for &t in &cuts {
                for s in [1.0, -1.0] {
                    let theta = vec![-s * t, s];
                    let r = loss.empirical_risk(records, &theta);
                    if best.as_ref().is_none_or(|b| r < b.0) {
                        best = Some((r, theta));
                    }
                }
            }
            Ok(best.expect("at least two cuts").1)
        }
    }
}

pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Bootstrap contour for the risk minimizer.
#[derive(Debug, Clone)]
pub struct RiskIm {
    data: Dataset,
    loss: LossFunction,
    estimate: Vec<f64>,
    min_risk: f64,
    sorted_scores: Vec<f64>,
    redraws: usize,
}

impl RiskIm {
    /// Draws `boot` resamples (pairs kept together) under `seed`.
    pub fn new(data: Dataset, loss: LossFunction, boot: usize, seed: u64) -> Result<Self> {
        if boot < 500 {
            return Err(Error::InvalidInput(format!("at least 500 bootstrap resamples are needed, got {boot}")));
        }
        let estimate = empirical_risk_minimize(&data, &loss)?;
        let min_risk = loss.empirical_risk(data.records(), &estimate);
        let root = Stream::new(seed);
        let n = data.len();
        let results: Vec<Result<(f64, usize)>> = (0..boot)
            .into_par_iter()
            .map(|b| {
                let node = root.child(b as u64);
                for attempt in 0..50u64 {
                    let mut rng = if attempt == 0 { node.rng() } else { node.child(attempt).rng() };
                    let records: Vec<Record> = (0..n).map(|_| data.records()[rng.random_range(0..n)]).collect();
                    let resample = data.with_records(records);
                    if let Ok(own) = empirical_risk_minimize(&resample, &loss) {
                        let excess = loss.empirical_risk(resample.records(), &estimate) - loss.empirical_risk(resample.records(), &own);
                        return Ok(((-excess).min(0.0), attempt as usize));
                    }
                }
                Err(Error::TooManyRedraws { failed: 50, total: 1 })
            })
            .collect();
        let mut sorted_scores = Vec::with_capacity(boot);
        let mut redraws = 0;
        for r in results {
            let (s, extra) = r?;
            sorted_scores.push(s);
            redraws += extra;
        }
        if redraws * 100 > boot {
            return Err(Error::TooManyRedraws { failed: redraws, total: boot });
        }
        sorted_scores.sort_by(f64::total_cmp);
        Ok(Self { data, loss, estimate, min_risk, sorted_scores, redraws })
    }

    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    pub fn redraws(&self) -> usize {
        self.redraws
    }

    /// `-(r_z(theta) - r_z(theta_hat))`, at most zero.
    pub fn ranking(&self, theta: &[f64]) -> f64 {
        (-(self.loss.empirical_risk(self.data.records(), theta) - self.min_risk)).min(0.0)
    }

    pub fn contour(&self, theta: &[f64]) -> f64 {
        let score = self.ranking(theta);
        self.sorted_scores.partition_point(|v| *v <= score) as f64 / self.sorted_scores.len() as f64
    }

    pub fn as_contour(&self) -> PossibilityContour {
        let im = self.clone();
        PossibilityContour::new(self.loss.dim(), move |t| im.contour(t)).with_normalizer(self.estimate.clone())
    }
}

/// One-shot contour value at `theta`.
pub fn risk_im_contour(data: &Dataset, loss: &LossFunction, theta: &[f64], boot: usize, seed: u64) -> Result<f64> {
    Ok(RiskIm::new(data.clone(), *loss, boot, seed)?.contour(theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::from_reals("y", vec![3.1, -0.2, 1.4, 2.2, 0.9, 5.0, 1.1, 0.3])
    }

    #[test]
    fn squared_location_is_mean() {
        let loss = LossFunction::new(LossKind::SquaredError, Predictor::Location).unwrap();
        let t = empirical_risk_minimize(&sample(), &loss).unwrap();
        assert!((t[0] - 13.8 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn check_half_is_median() {
        let loss = LossFunction::new(LossKind::Check(0.5), Predictor::Location).unwrap();
        let t = empirical_risk_minimize(&sample(), &loss).unwrap();
        assert!((t[0] - 1.25).abs() < 1e-6, "{t:?}");
        let odd = Dataset::from_reals("y", vec![4.0, 1.0, 3.0]);
        assert_eq!(empirical_risk_minimize(&odd, &loss).unwrap(), vec![3.0]);
    }

    #[test]
    fn separable_labels_get_zero_training_error() {
        let data = Dataset::from_pairs("c", vec![(-2.0, 0.0), (-1.0, 0.0), (-0.5, 0.0), (0.5, 1.0), (1.5, 1.0), (3.0, 1.0)]);
        let loss = LossFunction::new(LossKind::ZeroOne, Predictor::Linear).unwrap();
        let t = empirical_risk_minimize(&data, &loss).unwrap();
        assert_eq!(loss.empirical_risk(data.records(), &t), 0.0);
    }

    #[test]
    fn contour_peaks_at_estimate_and_decreases() {
        let loss = LossFunction::new(LossKind::SquaredError, Predictor::Location).unwrap();
        let im = RiskIm::new(sample(), loss, 1000, 5).unwrap();
        let c = im.estimate()[0];
        assert_eq!(im.contour(&[c]), 1.0);
        let mut prev = 1.0;
        for i in 1..60 {
            let v = im.contour(&[c + 0.05 * i as f64]);
            assert!(v <= prev);
            prev = v;
        }
        assert!(RiskIm::new(sample(), loss, 100, 5).is_err());
    }

    #[test]
    fn check_loss_line_through_points() {
        let data = Dataset::from_pairs("q", vec![(0.0, 0.1), (1.0, 1.3), (2.0, 1.9), (3.0, 3.2), (4.0, 3.8)]);
        let loss = LossFunction::new(LossKind::Check(0.5), Predictor::Linear).unwrap();
        let t = empirical_risk_minimize(&data, &loss).unwrap();
        let r = loss.empirical_risk(data.records(), &t);
        for b0 in [-0.2, 0.0, 0.2] {
            for b1 in [0.8, 0.9, 1.0, 1.1] {
                assert!(loss.empirical_risk(data.records(), &[b0, b1]) >= r - 1e-12);
            }
        }
    }
}
