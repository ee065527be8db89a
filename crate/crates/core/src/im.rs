//! Likelihood-based inferential models.
//!
//! The relative likelihood `R(z, theta)` ranks parameter values by their
//! compatibility with the data. Validification turns that ranking into a
//! possibility contour
//!
//! ```text
//! pi(theta) = P_theta{ R(Z, theta) <= R(z, theta) }
//! ```
//!
//! estimated by Monte Carlo over datasets of the observed design, or by the
//! large-sample chi-square approximation. Comparisons are made on the log
//! scale with `log R` clamped to at most zero, so the contour equals one
//! exactly at the maximum likelihood estimate.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{relative_from_logs, Dataset, MleFit, Model};
use crate::possibility::{possibility_of, HypothesisSet, PossibilityContour};
use crate::rng::{SimRng, Stream};
use crate::special::chi_square_sf;

/// Monte Carlo settings for validification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub replicates: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl MonteCarloConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, seed, parallel: true }
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }

    /// Same settings under a derived seed.
    pub fn reseeded(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::InvalidInput(format!("at least 100 Monte Carlo replicates are needed, got {}", self.replicates)));
        }
        static WARNED: std::sync::Once = std::sync::Once::new();
        if self.replicates < 1000 {
            WARNED.call_once(|| log::warn!("only {} Monte Carlo replicates; contour values carry visible noise", self.replicates));
        }
        Ok(())
    }
}

/// A Monte Carlo contour value with bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourEstimate {
    pub value: f64,
    pub replicates: usize,
    /// Replicates whose ranking could not be computed and were drawn again.
    pub redraws: usize,
    /// Replicates whose score tied the observed score exactly.
    pub ties: usize,
}

const MAX_ATTEMPTS: u64 = 50;

/// Validifies a ranking: the fraction of simulated datasets whose score does
/// not exceed `observed`.
///
/// `simulate` draws a dataset from the reference law; `score` ranks it.
/// Replicate `m` uses a generator derived from `(cfg.seed, m)` only. When
/// `score` fails the replicate is redrawn from a child stream; more than 1%
/// redraws is an error.
pub fn validify<S, R>(observed: f64, cfg: &MonteCarloConfig, simulate: S, score: R) -> Result<ContourEstimate>
where
    S: Fn(&mut SimRng) -> Dataset + Sync,
    R: Fn(&Dataset) -> Result<f64> + Sync,
{
    cfg.validate()?;
    if observed.is_nan() {
        return Err(Error::NonFinite("observed ranking is NaN".into()));
    }
    let root = Stream::new(cfg.seed);
    let one = |m: usize| -> Result<(f64, usize)> {
        let node = root.child(m as u64);
        let mut last = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = if attempt == 0 { node.rng() } else { node.child(attempt).rng() };
            let z = simulate(&mut rng);
            match score(&z) {
                Ok(s) if !s.is_nan() => return Ok((s, attempt as usize)),
                Ok(_) => last = Some(Error::NonFinite("replicate score is NaN".into())),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or(Error::TooManyRedraws { failed: MAX_ATTEMPTS as usize, total: 1 }))
    };
    let results: Vec<Result<(f64, usize)>> = if cfg.parallel {
        (0..cfg.replicates).into_par_iter().map(one).collect()
    } else {
        (0..cfg.replicates).map(one).collect()
    };
    let mut below = 0usize;
    let mut ties = 0usize;
    let mut redraws = 0usize;
    for r in results {
        let (s, extra) = r?;
        redraws += extra;
        if s <= observed {
            below += 1;
        }
        if s == observed {
            ties += 1;
        }
    }
    if redraws * 100 > cfg.replicates {
        return Err(Error::TooManyRedraws { failed: redraws, total: cfg.replicates });
    }
    Ok(ContourEstimate { value: below as f64 / cfg.replicates as f64, replicates: cfg.replicates, redraws, ties })
}

/// Log relative likelihood of `theta` for a dataset, refitting the MLE.
pub fn log_relative_likelihood_of(model: &dyn Model, data: &Dataset, theta: &[f64]) -> Result<f64> {
    let fit = model.mle(data, Some(theta))?;
    Ok(relative_from_logs(model.log_likelihood(data, theta), fit.log_likelihood))
}

/// Model, observed data and the fitted maximum likelihood estimate.
#[derive(Debug, Clone)]
pub struct LikelihoodIm {
    model: Arc<dyn Model>,
    data: Dataset,
    fit: MleFit,
}

impl LikelihoodIm {
    pub fn new(model: Arc<dyn Model>, data: Dataset) -> Result<Self> {
        model.validate_data(&data)?;
        let fit = model.mle(&data, None)?;
        if let Some(w) = &fit.warning {
            log::warn!("{}: {w}", model.name());
        }
        if !fit.log_likelihood.is_finite() {
            return Err(Error::NonFinite(format!("maximized log-likelihood is {}", fit.log_likelihood)));
        }
        Ok(Self { model, data, fit })
    }

    pub fn model(&self) -> &Arc<dyn Model> {
        &self.model
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn fit(&self) -> &MleFit {
        &self.fit
    }

    pub fn mle(&self) -> &[f64] {
        &self.fit.theta
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    fn check_point(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.model.dim() {
            return Err(Error::DimensionMismatch { expected: self.model.dim(), got: theta.len() });
        }
        if !self.model.in_domain(theta) {
            return Err(Error::OutsideDomain(theta.to_vec()));
        }
        Ok(())
    }

    /// `log R(z, theta)`, at most zero.
    pub fn log_relative_likelihood(&self, theta: &[f64]) -> Result<f64> {
        self.check_point(theta)?;
        Ok(relative_from_logs(self.model.log_likelihood(&self.data, theta), self.fit.log_likelihood))
    }

    pub fn relative_likelihood(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.log_relative_likelihood(theta)?.exp())
    }

    /// Monte Carlo contour at `theta` from replicate datasets of the observed
    /// design simulated at `theta`.
    pub fn contour_mc(&self, theta: &[f64], cfg: &MonteCarloConfig) -> Result<ContourEstimate> {
        let observed = self.log_relative_likelihood(theta)?;
        if observed == f64::NEG_INFINITY {
            return Ok(ContourEstimate { value: 0.0, replicates: 0, redraws: 0, ties: 0 });
        }
        let model = self.model.as_ref();
        validify(
            observed,
            cfg,
            |rng| model.simulate(theta, &self.data, rng),
            |z| log_relative_likelihood_of(model, z, theta),
        )
    }

    /// Large-sample contour `1 - F_d(-2 log R)`, `d` the model's degrees of
    /// freedom.
    pub fn contour_wilks(&self, theta: &[f64]) -> Result<f64> {
        let lr = self.log_relative_likelihood(theta)?;
        if lr == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(chi_square_sf(-2.0 * lr, self.model.dof()))
    }

    /// The Monte Carlo contour as an evaluable function; points outside the
    /// domain get plausibility zero.
    pub fn mc_contour(&self, cfg: MonteCarloConfig) -> PossibilityContour {
        let im = self.clone();
        PossibilityContour::new(self.dim(), move |t| im.contour_mc(t, &cfg).map(|e| e.value).unwrap_or(0.0))
            .with_normalizer(self.mle().to_vec())
    }

    pub fn wilks_contour(&self) -> PossibilityContour {
        let im = self.clone();
        PossibilityContour::new(self.dim(), move |t| im.contour_wilks(t).unwrap_or(0.0)).with_normalizer(self.mle().to_vec())
    }

    /// Contour computed from a reference sample of `log R`; valid when the
    /// model is pivotal.
    pub fn pivotal_contour(&self, reference: Arc<PivotalReference>) -> PossibilityContour {
        let im = self.clone();
        PossibilityContour::new(self.dim(), move |t| match im.log_relative_likelihood(t) {
            Ok(lr) => reference.plausibility(lr),
            Err(_) => 0.0,
        })
        .with_normalizer(self.mle().to_vec())
    }
}

/// Sorted Monte Carlo draws of `log R(Z, theta)` for a pivotal model, whose
/// law is the same at every `theta`; one sample then serves every contour
/// evaluation.
#[derive(Debug, Clone)]
pub struct PivotalReference {
    sorted: Vec<f64>,
}

impl PivotalReference {
    pub fn new(model: &dyn Model, design: &Dataset, theta: &[f64], cfg: &MonteCarloConfig) -> Result<Self> {
        if !model.is_pivotal() {
            return Err(Error::InvalidInput(format!("model `{}` is not pivotal", model.name())));
        }
        if !model.in_domain(theta) {
            return Err(Error::OutsideDomain(theta.to_vec()));
        }
        cfg.validate()?;
        let root = Stream::new(cfg.seed);
        let one = |m: usize| -> Result<f64> {
            let node = root.child(m as u64);
            for attempt in 0..MAX_ATTEMPTS {
                let mut rng = if attempt == 0 { node.rng() } else { node.child(attempt).rng() };
                let z = model.simulate(theta, design, &mut rng);
                if let Ok(v) = log_relative_likelihood_of(model, &z, theta) {
                    return Ok(v);
                }
            }
            Err(Error::TooManyRedraws { failed: MAX_ATTEMPTS as usize, total: 1 })
        };
        let mut sorted = if cfg.parallel {
            (0..cfg.replicates).into_par_iter().map(one).collect::<Result<Vec<f64>>>()?
        } else {
            (0..cfg.replicates).map(one).collect::<Result<Vec<f64>>>()?
        };
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    /// Fraction of reference draws at or below `log_r`.
    pub fn plausibility(&self, log_r: f64) -> f64 {
        if log_r >= 0.0 {
            return 1.0;
        }
        self.sorted.partition_point(|v| *v <= log_r) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

/// One coordinate axis of a rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 }).collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.steps - 1) as f64
    }
}

/// Rectangular grid, the Cartesian product of its axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one axis".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if a.steps < 2 {
                return Err(Error::InvalidInput(format!("axis {i} needs at least 2 steps")));
            }
            if !(a.min < a.max) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidInput(format!("axis {i} has bounds [{}, {}]", a.min, a.max)));
            }
        }
        Ok(Self { axes })
    }

    pub fn line(min: f64, max: f64, steps: usize) -> Result<Self> {
        Self::new(vec![Axis { min, max, steps }])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// All grid points, last coordinate varying fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = vec![Vec::with_capacity(self.dim())];
        for vals in &values {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn covers(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.axes.iter().zip(theta).all(|(a, t)| *t >= a.min && *t <= a.max)
    }
}

/// Contour values on grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridContour {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl GridContour {
    /// Grid point of largest plausibility (first on ties).
    pub fn argmax(&self) -> (&[f64], f64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (&self.points[best], self.values[best])
    }
}

pub fn evaluate_grid(contour: &PossibilityContour, grid: &Grid) -> Result<GridContour> {
    if grid.dim() != contour.dim() {
        return Err(Error::DimensionMismatch { expected: contour.dim(), got: grid.dim() });
    }
    let points = grid.points();
    let values = contour.evaluate_many(&points);
    Ok(GridContour { points, values })
}

/// Upper level set `{theta: contour(theta) >= alpha}`.
#[derive(Debug, Clone)]
pub struct ConfidenceRegion {
    pub alpha: f64,
    contour: PossibilityContour,
    /// Members among the grid points, plus the estimate.
    pub grid_members: Option<Vec<Vec<f64>>>,
}

impl ConfidenceRegion {
    pub fn contains(&self, theta: &[f64]) -> bool {
        self.contour.evaluate(theta) >= self.alpha
    }
}

/// Level set of `contour` at `alpha`, listed on `grid`. The grid must cover
/// `estimate` (where the contour is one); it is always reported as a member.
pub fn confidence_region(contour: &PossibilityContour, estimate: &[f64], alpha: f64, grid: &Grid) -> Result<ConfidenceRegion> {
    let values = evaluate_grid(contour, grid)?;
    region_from_grid(contour, &values, estimate, alpha, grid)
}

/// As [`confidence_region`], reusing already evaluated grid values.
pub fn region_from_grid(contour: &PossibilityContour, values: &GridContour, estimate: &[f64], alpha: f64, grid: &Grid) -> Result<ConfidenceRegion> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if !grid.covers(estimate) {
        return Err(Error::InvalidInput(format!("grid does not cover the estimate {estimate:?}; extend the grid")));
    }
    let mut members: Vec<Vec<f64>> =
        values.points.iter().zip(&values.values).filter(|(_, v)| **v >= alpha).map(|(p, _)| p.clone()).collect();
    if !members.iter().any(|p| p.as_slice() == estimate) {
        members.push(estimate.to_vec());
    }
    Ok(ConfidenceRegion { alpha, contour: contour.clone(), grid_members: Some(members) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub plausibility: f64,
    pub reject: bool,
}

/// Rejects `hypothesis` at level `alpha` when its plausibility is at most `alpha`.
pub fn test_hypothesis(contour: &PossibilityContour, hypothesis: &HypothesisSet, alpha: f64) -> Result<TestOutcome> {
    let plausibility = possibility_of(contour, hypothesis)?;
    Ok(TestOutcome { plausibility, reject: plausibility <= alpha })
}

/// Bisection tolerance for the constructors from tests and confidence sets.
pub const BISECTION_TOL: f64 = 1e-6;

fn probe_levels() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Contour induced by a nested family of tests of `null`.
///
/// `rejects(beta)` says whether the observed data fall in the size-`beta`
/// rejection region. The contour is `sup{beta: not rejects(beta)}` on the
/// null and one off it.
pub fn im_from_test_family<R>(rejects: R, null: HypothesisSet, dim: usize) -> Result<PossibilityContour>
where
    R: Fn(f64) -> bool,
{
    let probes = probe_levels();
    let mut seen_reject = false;
    for &b in &probes {
        let r = rejects(b);
        if seen_reject && !r {
            return Err(Error::NotNested(format!("rejection region at level {b} drops the data after an earlier level rejected")));
        }
        seen_reject |= r;
    }
    let level = if !rejects(1.0) {
        1.0
    } else if rejects(0.0) {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if rejects(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    Ok(PossibilityContour::new(dim, move |t| if null.contains(t) { level } else { 1.0 }))
}

/// Contour induced by a nested family of confidence sets for a feature.
///
/// `covers(beta, phi)` says whether the level-`beta` set (a `1 - beta`
/// confidence set) contains `phi`; `feature` maps parameters to features;
/// `witness` is a feature value contained in every set, certifying that the
/// contour attains one.
pub fn im_from_confidence_family<C, F>(covers: C, feature: F, witness: Vec<f64>, dim: usize) -> Result<PossibilityContour>
where
    C: Fn(f64, &[f64]) -> bool + Send + Sync + 'static,
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    for &b in &probe_levels() {
        if !covers(b.min(1.0 - BISECTION_TOL), &witness) {
            return Err(Error::Normalization(format!("the witness {witness:?} leaves the level-{b} set; the family has empty intersection")));
        }
    }
    Ok(PossibilityContour::new(dim, move |t| {
        let phi = feature(t);
        if covers(1.0, &phi) {
            return 1.0;
        }
        if !covers(0.0, &phi) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if covers(mid, &phi) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }))
}

/// How a diagnostic computes the contour for each simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourMethod {
    MonteCarlo(MonteCarloConfig),
    Wilks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceRow {
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub frequency: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Frequencies of `{pi_Z(theta) <= alpha}` across simulated datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceTable {
    pub reps: usize,
    pub rows: Vec<ExceedanceRow>,
}

impl ExceedanceTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Monte Carlo slack for a frequency estimated from `reps` Bernoulli trials.
pub fn exceedance_bound(alpha: f64, reps: usize) -> f64 {
    alpha + 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt()
}

/// Contour values at the true `theta` for `reps` datasets simulated there.
pub fn true_value_plausibilities(model: &Arc<dyn Model>, theta: &[f64], design: &Dataset, reps: usize, method: ContourMethod, seed: u64) -> Result<Vec<f64>> {
    if !model.in_domain(theta) {
        return Err(Error::OutsideDomain(theta.to_vec()));
    }
    let root = Stream::new(seed);
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let node = root.child(r as u64);
            let mut attempt = 0u64;
            let im = loop {
                let mut rng = if attempt == 0 { node.rng() } else { node.child(attempt).rng() };
                let z = model.simulate(theta, design, &mut rng);
                match LikelihoodIm::new(Arc::clone(model), z) {
                    Ok(im) => break im,
                    Err(e) if attempt + 1 >= MAX_ATTEMPTS => return Err(e),
                    Err(_) => attempt += 1,
                }
            };
            match method {
                ContourMethod::MonteCarlo(cfg) => {
                    // the outer loop already runs in parallel
                    let inner = MonteCarloConfig { seed: node.child(u64::MAX).seed(), parallel: false, ..cfg };
                    im.contour_mc(theta, &inner).map(|e| e.value)
                }
                ContourMethod::Wilks => im.contour_wilks(theta),
            }
        })
        .collect()
}

/// Strong-validity check: at each `theta` and `alpha`, the frequency of
/// `{pi_Z(theta) <= alpha}` over `reps` datasets must not exceed
/// `alpha + 3 sqrt(alpha (1 - alpha) / reps)`.
pub fn validity_diagnostic(
    model: &Arc<dyn Model>,
    thetas: &[Vec<f64>],
    design: &Dataset,
    alphas: &[f64],
    reps: usize,
    method: ContourMethod,
    seed: u64,
) -> Result<ExceedanceTable> {
    if reps < 500 {
        return Err(Error::InvalidInput(format!("validity diagnostics need at least 500 replicates, got {reps}")));
    }
    let mut rows = Vec::new();
    for (i, theta) in thetas.iter().enumerate() {
        let values = true_value_plausibilities(model, theta, design, reps, method, Stream::new(seed).child(i as u64).seed())?;
        for &alpha in alphas {
            let frequency = values.iter().filter(|v| **v <= alpha).count() as f64 / reps as f64;
            let bound = exceedance_bound(alpha, reps);
            rows.push(ExceedanceRow { theta: theta.clone(), alpha, frequency, bound, pass: frequency <= bound });
        }
    }
    Ok(ExceedanceTable { reps, rows })
}
