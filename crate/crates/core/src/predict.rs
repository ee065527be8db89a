//! Conformal prediction: the transducer plausibility of a candidate next
//! observation and the prediction sets it induces.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

type RhoFn<T> = dyn Fn(&[T], &T) -> f64 + Send + Sync;

/// Conformity score `rho(bag, candidate)`; larger means more conforming.
/// The score must not depend on the order of the bag.
pub struct ConformityRanking<T> {
    rho: Arc<RhoFn<T>>,
    description: String,
}

impl<T> Clone for ConformityRanking<T> {
    fn clone(&self) -> Self {
        Self { rho: Arc::clone(&self.rho), description: self.description.clone() }
    }
}

impl<T> fmt::Debug for ConformityRanking<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformityRanking").field("description", &self.description).finish_non_exhaustive()
    }
}

impl<T> ConformityRanking<T> {
    pub fn new<F>(description: impl Into<String>, rho: F) -> Self
    where
        F: Fn(&[T], &T) -> f64 + Send + Sync + 'static,
    {
        Self { rho: Arc::new(rho), description: description.into() }
    }

    pub fn score(&self, bag: &[T], candidate: &T) -> f64 {
        (self.rho)(bag, candidate)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl ConformityRanking<f64> {
    /// `-|y - mean(bag)|`.
    pub fn distance_to_mean() -> Self {
        Self::new("negative distance to the bag mean", |bag: &[f64], y: &f64| {
            let mean = bag.iter().sum::<f64>() / bag.len() as f64;
            -(y - mean).abs()
        })
    }

    /// `-|y - median(bag)|`.
    pub fn distance_to_median() -> Self {
        Self::new("negative distance to the bag median", |bag: &[f64], y: &f64| {
            let mut s = bag.to_vec();
            s.sort_by(f64::total_cmp);
            let n = s.len();
            let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
            -(y - median).abs()
        })
    }
}

/// Transducer plausibility of `candidate` as the next observation:
/// `(1/(n+1)) #{i: rho(bag without i, z_i) <= rho(z^n, candidate)}` over the
/// augmented bag `(z_1, ..., z_n, candidate)`.
pub fn conformal_transducer<T: Clone>(observed: &[T], candidate: &T, rho: &ConformityRanking<T>) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::InvalidInput("the transducer needs at least one observation".into()));
    }
    let reference = rho.score(observed, candidate);
    let mut bag: Vec<T> = observed.to_vec();
    let mut count = 1; // the candidate's own term ties with itself
    for i in 0..observed.len() {
        // swap the candidate into slot i so the bag holds everything but z_i
        let held = std::mem::replace(&mut bag[i], candidate.clone());
        if rho.score(&bag, &held) <= reference {
            count += 1;
        }
        bag[i] = held;
    }
    Ok(count as f64 / (observed.len() + 1) as f64)
}

/// Candidates whose transducer plausibility is at least `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet<T> {
    pub alpha: f64,
    /// Every grid point with its plausibility.
    pub values: Vec<(T, f64)>,
}

impl<T: Clone> PredictionSet<T> {
    pub fn members(&self) -> Vec<T> {
        self.values.iter().filter(|(_, v)| *v >= self.alpha).map(|(t, _)| t.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|(_, v)| *v < self.alpha)
    }
}

pub fn conformal_region<T>(observed: &[T], grid: &[T], alpha: f64, rho: &ConformityRanking<T>) -> Result<PredictionSet<T>>
where
    T: Clone + Send + Sync,
{
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let values = grid
        .par_iter()
        .map(|y| conformal_transducer(observed, y, rho).map(|v| (y.clone(), v)))
        .collect::<Result<Vec<_>>>()?;
    let set = PredictionSet { alpha, values };
    if set.is_empty() {
        log::warn!("prediction set at alpha = {alpha} is empty on this grid");
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_candidate_gets_one_over_n_plus_one() {
        let rho = ConformityRanking::distance_to_mean();
        let v = conformal_transducer(&[1.0, 2.0, 3.0], &100.0, &rho).unwrap();
        assert_eq!(v, 0.25);
    }

    #[test]
    fn all_equal_bag_gives_one() {
        let rho = ConformityRanking::distance_to_mean();
        assert_eq!(conformal_transducer(&[2.0; 5], &2.0, &rho).unwrap(), 1.0);
    }

    #[test]
    fn singleton_bag_region_is_whole_grid() {
        let rho = ConformityRanking::distance_to_mean();
        let grid: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let set = conformal_region(&[0.3], &grid, 0.5, &rho).unwrap();
        assert_eq!(set.members().len(), grid.len());
        assert!(set.values.iter().all(|(_, v)| *v == 0.5 || *v == 1.0));
    }

    #[test]
    fn empty_bag_is_an_error() {
        let rho = ConformityRanking::distance_to_mean();
        assert!(conformal_transducer(&[], &1.0, &rho).is_err());
    }
}
