//! False-confidence diagnostics.
//!
//! A data-dependent probability distribution suffers false confidence for a
//! hypothesis `H` when, with data generated at some `theta` outside `H`, it
//! still assigns `H` high probability with high frequency. The false
//! confidence rate at level `alpha` is estimated here at one fixed
//! `theta_true` outside `H`, which gives a lower bound on the rate's
//! supremum over the complement.

use std::sync::Arc;

use nalgebra::{Cholesky, Vector2};
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::im::{LikelihoodIm, MonteCarloConfig, PivotalReference};
use crate::models::{least_squares, Dataset, Model};
use crate::optimize::{maximize_in_box, MultiStart};
use crate::possibility::HypothesisSet;
use crate::rng::Stream;

/// A rule mapping data to posterior draws.
pub trait PosteriorProcedure: Send + Sync {
    fn label(&self) -> &str;

    fn sample_posterior(&self, data: &Dataset, seed: u64, draws: usize) -> Result<Vec<Vec<f64>>>;
}

/// Simple linear regression posterior under the flat prior on
/// `(b0, b1, log s2)`: `s2 ~ RSS / chi2_{n-2}` and
/// `(b0, b1) | s2 ~ N(b_hat, s2 (X'X)^{-1})`.
pub fn bayes_regression_posterior(data: &Dataset, draws: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = data.len();
    if n <= 3 {
        return Err(Error::InvalidInput(format!("the regression posterior needs n > 3, got {n}")));
    }
    let ls = least_squares(data)?;
    if !(ls.rss > 0.0) {
        return Err(Error::BoundaryMle("residual sum of squares is zero".into()));
    }
    let chol = Cholesky::new(ls.gram_inverse).ok_or(Error::SingularCovariance)?;
    let l = chol.l();
    let chi = ChiSquared::new((n - 2) as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let root = Stream::new(seed);
    Ok((0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.child(i as u64).rng();
            let s2 = ls.rss / chi.sample(&mut rng).max(f64::MIN_POSITIVE);
            let e = Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let b = ls.coefficients + l * e * s2.sqrt();
            vec![b[0], b[1], s2]
        })
        .collect())
}

/// [`bayes_regression_posterior`] as a [`PosteriorProcedure`].
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatPriorRegression;

impl PosteriorProcedure for FlatPriorRegression {
    fn label(&self) -> &str {
        "flat-prior regression posterior"
    }

    fn sample_posterior(&self, data: &Dataset, seed: u64, draws: usize) -> Result<Vec<Vec<f64>>> {
        bayes_regression_posterior(data, draws, seed)
    }
}

/// Fraction of draws inside `hypothesis`.
pub fn posterior_mass(draws: &[Vec<f64>], hypothesis: &HypothesisSet) -> f64 {
    if draws.is_empty() {
        return 0.0;
    }
    draws.iter().filter(|d| hypothesis.contains(d)).count() as f64 / draws.len() as f64
}

/// False confidence rates by level.
#[derive(Debug, Clone, PartialEq)]
pub struct FcrCurve {
    pub reps: usize,
    /// `(alpha, rate)` pairs in the order of the requested grid.
    pub points: Vec<(f64, f64)>,
}

/// Settings shared by the false confidence estimators.
#[derive(Debug, Clone)]
pub struct FcrSetup {
    pub model: Arc<dyn Model>,
    /// Design whose covariates (and size) every simulated dataset reuses.
    pub design: Dataset,
    pub theta_true: Vec<f64>,
    pub reps: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

impl FcrSetup {
    fn check(&self, hypothesis: &HypothesisSet) -> Result<()> {
        if self.reps < 200 {
            return Err(Error::InvalidInput(format!("false confidence estimates need at least 200 replicates, got {}", self.reps)));
        }
        if hypothesis.contains(&self.theta_true) {
            return Err(Error::InvalidInput("theta_true lies inside the hypothesis; false confidence is measured outside it".into()));
        }
        if !self.model.in_domain(&self.theta_true) {
            return Err(Error::OutsideDomain(self.theta_true.clone()));
        }
        Ok(())
    }

    fn dataset(&self, rep: usize) -> Dataset {
        let mut rng = Stream::new(self.seed).child(rep as u64).rng();
        self.model.simulate(&self.theta_true, &self.design, &mut rng)
    }

    fn curve(&self, scores: &[f64]) -> FcrCurve {
        // the event {score > 1 - alpha}
        let points = self
            .alphas
            .iter()
            .map(|&a| (a, scores.iter().filter(|s| **s > 1.0 - a).count() as f64 / scores.len() as f64))
            .collect();
        FcrCurve { reps: scores.len(), points }
    }
}

pub const DEFAULT_POSTERIOR_DRAWS: usize = 5000;

/// Posterior masses of `hypothesis` over the simulated datasets.
pub fn posterior_masses(procedure: &dyn PosteriorProcedure, hypothesis: &HypothesisSet, setup: &FcrSetup, draws: usize) -> Result<Vec<f64>> {
    setup.check(hypothesis)?;
    let root = Stream::new(setup.seed).child(u64::MAX);
    (0..setup.reps)
        .into_par_iter()
        .map(|r| {
            let data = setup.dataset(r);
            let post = procedure.sample_posterior(&data, root.child(r as u64).seed(), draws)?;
            Ok(posterior_mass(&post, hypothesis))
        })
        .collect()
}

/// Fraction of datasets whose posterior puts mass above `1 - alpha` on
/// `hypothesis`, for each `alpha`.
pub fn fcr_estimate(procedure: &dyn PosteriorProcedure, hypothesis: &HypothesisSet, setup: &FcrSetup, draws: usize) -> Result<FcrCurve> {
    let masses = posterior_masses(procedure, hypothesis, setup, draws)?;
    Ok(setup.curve(&masses))
}

/// Lower probabilities (necessity) of `hypothesis` under the likelihood IM
/// across the simulated datasets, for a pivotal model.
///
/// The contour is the reference-sample transform of `log R`, which is
/// increasing in `log R`; the supremum over the complement is therefore
/// found by maximizing `log R` over the complement inside the model's
/// domain box, then transforming once.
pub fn im_necessities(hypothesis: &HypothesisSet, setup: &FcrSetup, cfg: &MonteCarloConfig) -> Result<Vec<f64>> {
    setup.check(hypothesis)?;
    let model = setup.model.as_ref();
    let reference = PivotalReference::new(model, &setup.design, &setup.theta_true, cfg)?;
    let search = MultiStart { seed: setup.seed ^ 0x5ea2c4, ..MultiStart::default() };
    (0..setup.reps)
        .into_par_iter()
        .map(|r| {
            let im = LikelihoodIm::new(Arc::clone(&setup.model), setup.dataset(r))?;
            if !hypothesis.contains(im.mle()) {
                return Ok(0.0);
            }
            let bounds = model.domain_box(im.data());
            let (lower, upper): (Vec<f64>, Vec<f64>) = bounds.into_iter().unzip();
            let f = |t: &[f64]| im.log_relative_likelihood(t).unwrap_or(f64::NEG_INFINITY);
            let outside = |t: &[f64]| !hypothesis.contains(t) && model.in_domain(t);
            let sup = maximize_in_box(&f, &lower, &upper, &[], &search, outside).map(|o| o.value).unwrap_or(f64::NEG_INFINITY);
            Ok(1.0 - reference.plausibility(sup))
        })
        .collect()
}

/// False confidence rate of the likelihood IM: the frequency with which its
/// lower probability of `hypothesis` exceeds `1 - alpha`.
pub fn im_fcr_estimate(hypothesis: &HypothesisSet, setup: &FcrSetup, cfg: &MonteCarloConfig) -> Result<FcrCurve> {
    let nec = im_necessities(hypothesis, setup, cfg)?;
    Ok(setup.curve(&nec))
}

/// Covariates drawn once from `Unif(lo, hi)` and held fixed, paired with
/// placeholder responses.
pub fn uniform_design(n: usize, lo: f64, hi: f64, seed: u64) -> Dataset {
    use rand::RngExt;
    let mut rng = Stream::new(seed).rng();
    Dataset::from_pairs("design", (0..n).map(|_| (rng.random_range(lo..hi), 0.0)).collect())
}

/// The hypothesis `{-b0 / b1 > cut}` on regression parameters: the root of
/// the regression line lies above `cut`.
pub fn root_above(cut: f64) -> HypothesisSet {
    HypothesisSet::new(
        format!("regression root above {cut}"),
        move |t| t[1] != 0.0 && -t[0] / t[1] > cut,
        crate::possibility::Search::Everything,
    )
}
