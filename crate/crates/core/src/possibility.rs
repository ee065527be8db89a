//! Possibility calculus: contours, maxitive possibility measures, necessity
//! duals, the probability-to-possibility transform, Gaussian possibility
//! contours and credal-set membership.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optimize::{maximize_in_box, MultiStart};
use crate::rng::{substream, SimRng};
use crate::special::chi_square_sf;

type ContourFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type Predicate = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A map from parameter points to plausibility in `[0, 1]`.
///
/// Values are clamped into `[0, 1]` and `NaN` is read as zero, so downstream
/// code can rely on the range invariant.
#[derive(Clone)]
pub struct PossibilityContour {
    eval: Arc<ContourFn>,
    dim: usize,
    normalizer_hint: Option<Vec<f64>>,
}

impl fmt::Debug for PossibilityContour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PossibilityContour")
            .field("dim", &self.dim)
            .field("normalizer_hint", &self.normalizer_hint)
            .finish_non_exhaustive()
    }
}

impl PossibilityContour {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(dim > 0, "contours need a positive dimension");
        Self { eval: Arc::new(f), dim, normalizer_hint: None }
    }

    /// Records a point where the contour attains one.
    pub fn with_normalizer(mut self, point: Vec<f64>) -> Self {
        assert_eq!(point.len(), self.dim);
        self.normalizer_hint = Some(point);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalizer_hint(&self) -> Option<&[f64]> {
        self.normalizer_hint.as_deref()
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim);
        let v = (self.eval)(theta);
        if v.is_nan() {
            0.0
        } else {
            v.clamp(0.0, 1.0)
        }
    }

    /// Evaluates the contour at many points, in parallel.
    pub fn evaluate_many(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.par_iter().map(|p| self.evaluate(p)).collect()
    }
}

/// How a supremum over a hypothesis is searched.
#[derive(Debug, Clone)]
pub enum Search {
    /// Finite list of candidate points; only those satisfying the predicate count.
    Grid(Vec<Vec<f64>>),
    /// Multi-start Nelder–Mead inside a box, restricted to the predicate.
    Box { lower: Vec<f64>, upper: Vec<f64>, opts: MultiStart },
    /// The whole parameter space; its supremum is one by normalization.
    Everything,
    /// The empty set; its supremum is zero.
    Nothing,
}

/// A parameter subset given by a predicate plus a strategy for suprema.
#[derive(Clone)]
pub struct HypothesisSet {
    contains: Arc<Predicate>,
    search: Search,
    description: String,
}

impl fmt::Debug for HypothesisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypothesisSet")
            .field("description", &self.description)
            .field("search", &self.search)
            .finish_non_exhaustive()
    }
}

impl HypothesisSet {
    pub fn new<P>(description: impl Into<String>, contains: P, search: Search) -> Self
    where
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Self { contains: Arc::new(contains), search, description: description.into() }
    }

    /// The hypothesis consisting of exactly the listed points.
    pub fn points(description: impl Into<String>, points: Vec<Vec<f64>>) -> Self {
        let members = points.clone();
        Self::new(description, move |t| members.iter().any(|p| p.as_slice() == t), Search::Grid(points))
    }

    /// Points of `grid` that satisfy `contains`.
    pub fn on_grid<P>(description: impl Into<String>, contains: P, grid: Vec<Vec<f64>>) -> Self
    where
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Self::new(description, contains, Search::Grid(grid))
    }

    /// Predicate-restricted search inside a box with default multi-start settings.
    pub fn in_box<P>(description: impl Into<String>, contains: P, lower: Vec<f64>, upper: Vec<f64>) -> Self
    where
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Self::new(description, contains, Search::Box { lower, upper, opts: MultiStart::default() })
    }

    pub fn everything() -> Self {
        Self::new("everything", |_| true, Search::Everything)
    }

    pub fn nothing() -> Self {
        Self::new("nothing", |_| false, Search::Nothing)
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        (self.contains)(theta)
    }

    pub fn search(&self) -> &Search {
        &self.search
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// The complement predicate searched with `search`.
    pub fn complement_with(&self, search: Search) -> Self {
        let inner = Arc::clone(&self.contains);
        let search = match search {
            Search::Everything if matches!(self.search, Search::Everything) => Search::Nothing,
            s => s,
        };
        Self { contains: Arc::new(move |t| !inner(t)), search, description: format!("not ({})", self.description) }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Upper probability of `hypothesis`: the supremum of the contour over it.
pub fn possibility_of(contour: &PossibilityContour, hypothesis: &HypothesisSet) -> Result<f64> {
    match &hypothesis.search {
        Search::Everything => Ok(1.0),
        Search::Nothing => Ok(0.0),
        Search::Grid(points) => {
            let members: Vec<&Vec<f64>> = points.iter().filter(|p| hypothesis.contains(p)).collect();
            if members.is_empty() {
                return Err(Error::EmptyHypothesis(hypothesis.description.clone()));
            }
            for p in &members {
                check_dim(contour.dim(), p.len())?;
            }
            Ok(members.par_iter().map(|p| contour.evaluate(p)).reduce(|| 0.0, f64::max))
        }
        Search::Box { lower, upper, opts } => {
            check_dim(contour.dim(), lower.len())?;
            check_dim(contour.dim(), upper.len())?;
            let mut starts = Vec::new();
            if let Some(h) = contour.normalizer_hint() {
                starts.push(h.to_vec());
            }
            let f = |t: &[f64]| contour.evaluate(t);
            maximize_in_box(&f, lower, upper, &starts, opts, |t| hypothesis.contains(t))
                .map(|opt| opt.value.clamp(0.0, 1.0))
                .ok_or_else(|| Error::EmptyHypothesis(hypothesis.description.clone()))
        }
    }
}

/// Lower probability of `hypothesis`: one minus the possibility of its
/// complement, where `complement` searches the complement.
pub fn necessity_of(contour: &PossibilityContour, hypothesis: &HypothesisSet, complement: &HypothesisSet) -> Result<f64> {
    if matches!(hypothesis.search, Search::Everything) {
        return Ok(1.0);
    }
    let inner = Arc::clone(&hypothesis.contains);
    let outer = Arc::clone(&complement.contains);
    let restricted = HypothesisSet {
        contains: Arc::new(move |t| !inner(t) && outer(t)),
        search: complement.search.clone(),
        description: complement.description.clone(),
    };
    let sup = match possibility_of(contour, &restricted) {
        // sup over the empty set is zero
        Err(Error::EmptyHypothesis(_)) => 0.0,
        other => other?,
    };
    Ok(1.0 - sup)
}

/// Probability-to-possibility transform estimated from `draws` samples:
/// the fraction of draws whose density does not exceed the density at `y`.
pub fn prob_to_poss<D, S>(log_density: D, sampler: S, y: &[f64], draws: usize, seed: u64) -> Result<f64>
where
    D: Fn(&[f64]) -> f64 + Sync,
    S: Fn(&mut SimRng) -> Vec<f64> + Sync,
{
    if draws == 0 {
        return Err(Error::InvalidInput("draw count must be at least one".into()));
    }
    let at_y = log_density(y);
    if !at_y.is_finite() {
        return Err(Error::NonFinite(format!("log density at {y:?} is {at_y}")));
    }
    let hits: usize = (0..draws)
        .into_par_iter()
        .map(|m| {
            let mut rng = substream(seed, m as u64);
            let sample = sampler(&mut rng);
            usize::from(log_density(&sample) <= at_y)
        })
        .sum();
    Ok(hits as f64 / draws as f64)
}

/// Mean vector and covariance matrix of a Gaussian possibility measure.
#[derive(Debug, Clone)]
pub struct GaussianPossibilityParams {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    cholesky: DMatrix<f64>,
}

impl GaussianPossibilityParams {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: covariance.nrows() });
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::InvalidInput(format!("covariance is not symmetric (max asymmetry {asym:e})")));
        }
        let chol = covariance.clone().cholesky().ok_or(Error::SingularCovariance)?;
        let eig = covariance.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&e| e <= 0.0) {
            return Err(Error::SingularCovariance);
        }
        let precision = chol.inverse();
        let cholesky = chol.l();
        Ok(Self { mean: DVector::from_vec(mean), covariance, precision, cholesky })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(vec![0.0; d], DMatrix::identity(d, d)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower Cholesky factor of the covariance.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// Squared Mahalanobis distance `(y - m)' v^{-1} (y - m)`.
    pub fn mahalanobis2(&self, y: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(y) - &self.mean;
        (diff.transpose() * &self.precision * &diff)[(0, 0)]
    }

    /// Gaussian log density, used by the Monte Carlo route.
    pub fn log_density(&self, y: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let log_det: f64 = self.cholesky.diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det + self.mahalanobis2(y))
    }

    pub fn sample(&self, rng: &mut SimRng) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| StandardNormal.sample(rng)));
        (&self.mean + &self.cholesky * z).iter().copied().collect()
    }
}

/// Closed-form Gaussian possibility contour `1 - F_d(mahalanobis^2)`.
pub fn gaussian_contour(params: &GaussianPossibilityParams, y: &[f64]) -> Result<f64> {
    check_dim(params.dim(), y.len())?;
    Ok(chi_square_sf(params.mahalanobis2(y), params.dim()))
}

/// The Gaussian possibility contour as a [`PossibilityContour`].
pub fn gaussian_possibility(params: GaussianPossibilityParams) -> PossibilityContour {
    let d = params.dim();
    let hint = params.mean.iter().copied().collect();
    PossibilityContour::new(d, move |y| chi_square_sf(params.mahalanobis2(y), d)).with_normalizer(hint)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredalLevel {
    pub alpha: f64,
    /// Mass the candidate assigns to `{theta: contour(theta) > alpha}`.
    pub mass: f64,
    pub required: f64,
    /// Allowed Monte Carlo shortfall.
    pub slack: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredalReport {
    pub levels: Vec<CredalLevel>,
    pub accepted: bool,
    pub effective_size: f64,
}

/// Checks the level-set characterization of the credal set: a probability is
/// dominated by the possibility measure iff it gives mass at least `1 - alpha`
/// to every strict upper level set. `slack_sd` binomial standard errors (at the
/// weighted effective sample size) are tolerated.
pub fn credal_membership(
    sample: &[(Vec<f64>, f64)],
    contour: &PossibilityContour,
    alpha_grid: &[f64],
    slack_sd: f64,
) -> Result<CredalReport> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("credal membership needs a non-empty sample".into()));
    }
    if let Some(a) = alpha_grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidInput(format!("alpha {a} outside [0, 1]")));
    }
    if sample.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
    }
    let total: f64 = sample.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("weights sum to zero".into()));
    }
    let sum_sq: f64 = sample.iter().map(|(_, w)| w * w).sum();
    let effective_size = total * total / sum_sq;
    let values: Vec<(f64, f64)> = sample.par_iter().map(|(p, w)| (contour.evaluate(p), *w)).collect();
    let levels: Vec<CredalLevel> = alpha_grid
        .iter()
        .map(|&alpha| {
            let mass = values.iter().filter(|(v, _)| *v > alpha).map(|(_, w)| w).sum::<f64>() / total;
            let required = 1.0 - alpha;
            let slack = slack_sd * (alpha * (1.0 - alpha) / effective_size).sqrt();
            CredalLevel { alpha, mass, required, slack, satisfied: mass >= required - slack }
        })
        .collect();
    let accepted = levels.iter().all(|l| l.satisfied);
    Ok(CredalReport { levels, accepted, effective_size })
}
