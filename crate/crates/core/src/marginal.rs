//! Marginal contours for a feature `phi = g(theta)` of the parameter.
//!
//! Fibers `{theta: g(theta) = phi}` are parametrized: a [`FeatureMap`]
//! carries an embedding `(phi, lambda) -> theta` with the nuisance `lambda`
//! ranging over a box, so suprema over a fiber become box-constrained
//! maximizations over `lambda`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::im::{validify, LikelihoodIm, MonteCarloConfig};
use crate::models::{numeric_information, relative_from_logs, Dataset, Model};
use crate::optimize::{maximize_in_box, MultiStart};
use crate::possibility::PossibilityContour;
use crate::rng::Stream;

type MapFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type EmbedFn = dyn Fn(&[f64], &[f64]) -> Option<Vec<f64>> + Send + Sync;

/// Tolerance on `|g(theta) - phi|` for points produced by an embedding.
pub const FIBER_TOL: f64 = 1e-8;

/// A feature of the parameter with a parametrized fiber.
#[derive(Clone)]
pub struct FeatureMap {
    label: String,
    feature_dim: usize,
    map: Arc<MapFn>,
    embed: Arc<EmbedFn>,
    nuisance: Arc<MapFn>,
    nuisance_box: Vec<(f64, f64)>,
    pivotal: bool,
}

impl fmt::Debug for FeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureMap")
            .field("label", &self.label)
            .field("feature_dim", &self.feature_dim)
            .field("nuisance_box", &self.nuisance_box)
            .field("pivotal", &self.pivotal)
            .finish_non_exhaustive()
    }
}

impl FeatureMap {
    /// `map` computes `g(theta)`; `embed(phi, lambda)` returns the fiber point
    /// with nuisance `lambda` (or `None` off the domain); `nuisance(theta)`
    /// recovers `lambda`, so that `embed(g(theta), nuisance(theta)) = theta`.
    pub fn new<M, E, N>(label: impl Into<String>, feature_dim: usize, map: M, embed: E, nuisance: N, nuisance_box: Vec<(f64, f64)>) -> Self
    where
        M: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        E: Fn(&[f64], &[f64]) -> Option<Vec<f64>> + Send + Sync + 'static,
        N: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            feature_dim,
            map: Arc::new(map),
            embed: Arc::new(embed),
            nuisance: Arc::new(nuisance),
            nuisance_box,
            pivotal: false,
        }
    }

    /// `g(theta) = theta[index]`, the remaining coordinates being the nuisance.
    pub fn coordinate(index: usize, dim: usize, nuisance_box: Vec<(f64, f64)>) -> Self {
        assert!(index < dim && nuisance_box.len() == dim - 1);
        Self::new(
            format!("theta[{index}]"),
            1,
            move |t| vec![t[index]],
            move |phi, lam| {
                let mut t = lam.to_vec();
                t.insert(index, phi[0]);
                Some(t)
            },
            move |t| {
                let mut l = t.to_vec();
                l.remove(index);
                l
            },
            nuisance_box,
        )
    }

    /// The identity feature; the fiber is a single point.
    pub fn identity(dim: usize) -> Self {
        Self::new("theta", dim, |t| t.to_vec(), |phi, _| Some(phi.to_vec()), |_| Vec::new(), Vec::new())
    }

    /// `g(theta) = theta[0] * theta[1]` on positive parameters, with
    /// `theta[0]` as nuisance.
    pub fn product(first_box: (f64, f64)) -> Self {
        Self::new(
            "theta[0] * theta[1]",
            1,
            |t| vec![t[0] * t[1]],
            |phi, lam| (lam[0] > 0.0 && phi[0] > 0.0).then(|| vec![lam[0], phi[0] / lam[0]]),
            |t| vec![t[0]],
            vec![first_box],
        )
    }

    /// Sums of consecutive blocks of a probability vector with `blocks`
    /// blocks of `size` entries. The nuisance is the within-block split in
    /// stick-breaking coordinates.
    pub fn block_sums(blocks: usize, size: usize) -> Self {
        assert!(blocks >= 1 && size >= 1);
        let per = size - 1;
        Self::new(
            format!("sums over {blocks} blocks of {size}"),
            blocks,
            move |t| t.chunks(size).map(|c| c.iter().sum()).collect(),
            move |phi, lam| {
                if phi.iter().any(|p| *p < 0.0) || (phi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return None;
                }
                let mut t = Vec::with_capacity(blocks * size);
                for b in 0..blocks {
                    let mut left = phi[b];
                    for j in 0..per {
                        let share = left * lam[b * per + j];
                        t.push(share);
                        left -= share;
                    }
                    t.push(left.max(0.0));
                }
                Some(t)
            },
            move |t| {
                let mut lam = Vec::with_capacity(blocks * per);
                for c in t.chunks(size) {
                    let mut left: f64 = c.iter().sum();
                    for v in &c[..per] {
                        lam.push(if left > 0.0 { (v / left).clamp(0.0, 1.0) } else { 0.5 });
                        left -= v;
                    }
                }
                lam
            },
            vec![(0.0, 1.0); blocks * per],
        )
    }

    /// Declares the profile relative likelihood of this feature pivotal, so
    /// a single fiber probe suffices.
    pub fn with_pivotal(mut self, pivotal: bool) -> Self {
        self.pivotal = pivotal;
        self
    }

    pub fn with_nuisance_box(mut self, nuisance_box: Vec<(f64, f64)>) -> Self {
        assert_eq!(nuisance_box.len(), self.nuisance_box.len());
        self.nuisance_box = nuisance_box;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn is_pivotal(&self) -> bool {
        self.pivotal
    }

    pub fn nuisance_box(&self) -> &[(f64, f64)] {
        &self.nuisance_box
    }

    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        (self.map)(theta)
    }

    pub fn nuisance_of(&self, theta: &[f64]) -> Vec<f64> {
        (self.nuisance)(theta)
    }

    /// Fiber point for `(phi, lambda)`, checked against the map.
    pub fn fiber_point(&self, phi: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
        let theta = (self.embed)(phi, lambda).ok_or_else(|| Error::OutsideDomain(lambda.to_vec()))?;
        let back = self.apply(&theta);
        let err = back.iter().zip(phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > FIBER_TOL * phi.iter().fold(1.0, |m: f64, v| m.max(v.abs())) {
            return Err(Error::InvalidInput(format!("embedding of {phi:?} misses the fiber by {err:e}")));
        }
        Ok(theta)
    }

    fn clamp_nuisance(&self, lambda: &mut [f64]) {
        for (l, (lo, hi)) in lambda.iter_mut().zip(&self.nuisance_box) {
            *l = l.clamp(*lo, *hi);
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.nuisance_box.iter().map(|b| (b.0, b.1)).unzip()
    }

    /// Maximizes `objective` over the fiber of `phi`; returns the maximizing
    /// parameter and value.
    fn fiber_sup<F>(&self, phi: &[f64], starts: &[Vec<f64>], opts: &MultiStart, objective: F) -> Result<(Vec<f64>, f64)>
    where
        F: Fn(&[f64]) -> f64,
    {
        if phi.len() != self.feature_dim {
            return Err(Error::DimensionMismatch { expected: self.feature_dim, got: phi.len() });
        }
        let f = |lam: &[f64]| match (self.embed)(phi, lam) {
            Some(t) => objective(&t),
            None => f64::NEG_INFINITY,
        };
        let (lower, upper) = self.bounds();
        let starts: Vec<Vec<f64>> = starts
            .iter()
            .map(|s| {
                let mut s = s.clone();
                self.clamp_nuisance(&mut s);
                s
            })
            .collect();
        let opt = maximize_in_box(&f, &lower, &upper, &starts, opts, |lam| (self.embed)(phi, lam).is_some())
            .ok_or_else(|| Error::EmptyHypothesis(format!("fiber of {phi:?} under `{}`", self.label)))?;
        let theta = self.fiber_point(phi, &opt.x)?;
        Ok((theta, opt.value))
    }
}

/// Extension-based marginal contour: the supremum of the joint contour over
/// the fiber of `phi`.
pub fn extension_contour(joint: &PossibilityContour, feature: &FeatureMap, phi: &[f64]) -> Result<f64> {
    let starts: Vec<Vec<f64>> = joint.normalizer_hint().map(|h| vec![feature.nuisance_of(h)]).unwrap_or_default();
    let (_, v) = feature.fiber_sup(phi, &starts, &MultiStart::default(), |t| joint.evaluate(t))?;
    Ok(v.clamp(0.0, 1.0))
}

/// Profile likelihood solution on one fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFit {
    /// `log R^pr(z, phi)`, at most zero.
    pub log_relative: f64,
    /// The constrained maximizer on the fiber.
    pub theta: Vec<f64>,
}

fn profile_with(model: &dyn Model, data: &Dataset, feature: &FeatureMap, phi: &[f64], max_ll: f64, start: &[f64], opts: &MultiStart) -> Result<ProfileFit> {
    if feature.apply(start) == phi {
        return Ok(ProfileFit { log_relative: relative_from_logs(model.log_likelihood(data, start), max_ll), theta: start.to_vec() });
    }
    let starts = vec![feature.nuisance_of(start)];
    let (theta, ll) = feature.fiber_sup(phi, &starts, opts, |t| if model.in_domain(t) { model.log_likelihood(data, t) } else { f64::NEG_INFINITY })?;
    if ll == f64::NEG_INFINITY {
        return Ok(ProfileFit { log_relative: f64::NEG_INFINITY, theta });
    }
    Ok(ProfileFit { log_relative: relative_from_logs(ll, max_ll), theta })
}

/// Relative profile likelihood `sup_{g(theta) = phi} R(z, theta)`.
pub fn profile_relative_likelihood(im: &LikelihoodIm, feature: &FeatureMap, phi: &[f64]) -> Result<ProfileFit> {
    profile_with(im.model().as_ref(), im.data(), feature, phi, im.fit().log_likelihood, im.mle(), &MultiStart::default())
}

/// Profile score of a replicate dataset: its own MLE is refitted first.
fn replicate_profile(model: &dyn Model, z: &Dataset, feature: &FeatureMap, phi: &[f64], start: &[f64], opts: &MultiStart) -> Result<f64> {
    let fit = model.mle(z, Some(start))?;
    Ok(profile_with(model, z, feature, phi, fit.log_likelihood, &fit.theta, opts)?.log_relative)
}

/// Options for profile-based marginal contours.
#[derive(Debug, Clone)]
pub struct ProfileOptions {
    /// Fiber points used for the outer supremum; ignored for pivotal features.
    pub probes: usize,
    /// Search settings for the profile maximization inside each replicate.
    pub replicate_search: MultiStart,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { probes: 8, replicate_search: MultiStart { restarts: 2, ..MultiStart::default() } }
    }
}

/// Profile contour estimate with the per-probe values behind the maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEstimate {
    pub value: f64,
    pub probes: Vec<(Vec<f64>, f64)>,
}

/// Fiber probes: the constrained MLE, then points stepped along each
/// nuisance coordinate by multiples of its curvature-based scale.
fn fiber_probes(im: &LikelihoodIm, feature: &FeatureMap, phi: &[f64], center: &[f64], count: usize) -> Vec<Vec<f64>> {
    let mut out = vec![center.to_vec()];
    let lam0 = feature.nuisance_of(center);
    let k = lam0.len();
    if k == 0 || count <= 1 {
        return out;
    }
    let model = im.model();
    let h = numeric_information(
        |lam| feature.fiber_point(phi, lam).map(|t| model.log_likelihood(im.data(), &t)).unwrap_or(f64::NEG_INFINITY),
        &lam0,
    );
    let scale: Vec<f64> = (0..k)
        .map(|i| {
            let c = h[(i, i)];
            let width = feature.nuisance_box[i].1 - feature.nuisance_box[i].0;
            if c.is_finite() && c > 0.0 {
                (1.0 / c.sqrt()).min(0.25 * width)
            } else {
                0.1 * width
            }
        })
        .collect();
    let mut mult = 1.0;
    'outer: loop {
        for i in 0..k {
            for sign in [1.0, -1.0] {
                if out.len() >= count {
                    break 'outer;
                }
                let mut lam = lam0.clone();
                lam[i] += sign * mult * scale[i];
                feature.clamp_nuisance(&mut lam);
                if let Ok(t) = feature.fiber_point(phi, &lam) {
                    if model.in_domain(&t) && !out.contains(&t) {
                        out.push(t);
                    }
                }
            }
        }
        mult += 1.0;
        if mult > 2.0 * count as f64 {
            break;
        }
    }
    out
}

/// Profile-based marginal contour at `phi`: the largest, over fiber probes
/// `theta_j`, of `P_{theta_j}{R^pr(Z, phi) <= R^pr(z, phi)}`.
pub fn profile_contour(im: &LikelihoodIm, feature: &FeatureMap, phi: &[f64], cfg: &MonteCarloConfig, opts: &ProfileOptions) -> Result<ProfileEstimate> {
    let observed = profile_relative_likelihood(im, feature, phi)?;
    if observed.log_relative == 0.0 {
        return Ok(ProfileEstimate { value: 1.0, probes: vec![(observed.theta, 1.0)] });
    }
    let count = if feature.pivotal { 1 } else { opts.probes.max(1) };
    let probes = fiber_probes(im, feature, phi, &observed.theta, count);
    let model = im.model().as_ref();
    let root = Stream::new(cfg.seed);
    let mut results = Vec::with_capacity(probes.len());
    for (j, theta) in probes.into_iter().enumerate() {
        let probe_cfg = cfg.reseeded(root.child(j as u64).seed());
        let est = validify(
            observed.log_relative,
            &probe_cfg,
            |rng| model.simulate(&theta, im.data(), rng),
            |z| replicate_profile(model, z, feature, phi, &theta, &opts.replicate_search),
        )?;
        results.push((theta, est.value));
    }
    let value = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ProfileEstimate { value, probes: results })
}

/// Where the plug-in profile contour simulates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlugIn {
    /// Simulate at the full MLE and rank against the estimated feature.
    FullMle,
    /// Simulate at `(phi, lambda_hat_phi)`, the constrained MLE on the fiber.
    NuisanceMle,
}

/// Profile contour with the outer supremum replaced by a single plug-in
/// parameter value.
pub fn plugin_profile_contour(im: &LikelihoodIm, feature: &FeatureMap, phi: &[f64], cfg: &MonteCarloConfig, variant: PlugIn, opts: &ProfileOptions) -> Result<f64> {
    let observed = profile_relative_likelihood(im, feature, phi)?;
    if observed.log_relative == 0.0 {
        return Ok(1.0);
    }
    let model = im.model().as_ref();
    let (theta, target) = match variant {
        PlugIn::FullMle => (im.mle().to_vec(), feature.apply(im.mle())),
        PlugIn::NuisanceMle => (observed.theta.clone(), phi.to_vec()),
    };
    let est = validify(
        observed.log_relative,
        cfg,
        |rng| model.simulate(&theta, im.data(), rng),
        |z| replicate_profile(model, z, feature, &target, &theta, &opts.replicate_search),
    )?;
    Ok(est.value)
}

/// Rows of a marginal contour grid: feature value, extension plausibility,
/// profile plausibility.
pub fn marginal_grid(
    im: &LikelihoodIm,
    joint: &PossibilityContour,
    feature: &FeatureMap,
    values: &[f64],
    cfg: &MonteCarloConfig,
    opts: &ProfileOptions,
) -> Result<Vec<(f64, f64, f64)>> {
    if feature.feature_dim() != 1 {
        return Err(Error::InvalidInput("marginal grids need a scalar feature".into()));
    }
    let root = Stream::new(cfg.seed);
    values
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            let ext = extension_contour(joint, feature, &[phi])?;
            let pr = profile_contour(im, feature, &[phi], &cfg.reseeded(root.child(i as u64).seed()), opts)?.value;
            Ok((phi, ext, pr))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin;
    use crate::special::normal_sf;

    fn darwin_like() -> LikelihoodIm {
        let data = Dataset::from_reals("d", vec![1.2, 0.4, -0.3, 2.2, 0.9, 1.7, 0.1, 1.4]);
        LikelihoodIm::new(builtin::normal(), data).unwrap()
    }

    fn mean_feature(im: &LikelihoodIm) -> FeatureMap {
        let s = im.mle()[1];
        FeatureMap::coordinate(0, 2, vec![(s / 50.0, s * 50.0)]).with_pivotal(true)
    }

    #[test]
    fn gaussian_joint_extension() {
        let joint = PossibilityContour::new(2, |t| (-(t[0] * t[0] + t[1] * t[1]) / 2.0).exp()).with_normalizer(vec![0.0, 0.0]);
        let f = FeatureMap::coordinate(0, 2, vec![(-5.0, 5.0)]);
        let v = extension_contour(&joint, &f, &[1.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-4);
        let id = FeatureMap::identity(2);
        assert_eq!(extension_contour(&joint, &id, &[0.3, -0.2]).unwrap(), joint.evaluate(&[0.3, -0.2]));
    }

    #[test]
    fn normal_mean_profile_matches_closed_form() {
        let im = darwin_like();
        let f = mean_feature(&im);
        let data = im.data().reals().unwrap();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let s2 = im.mle()[1].powi(2);
        for phi in [-0.5, 0.2, 0.8, 2.0] {
            let fit = profile_relative_likelihood(&im, &f, &[phi]).unwrap();
            let closed = (s2 / (s2 + (mean - phi).powi(2))).powf(n / 2.0);
            assert!((fit.log_relative.exp() - closed).abs() < 1e-8, "{phi}: {} vs {closed}", fit.log_relative.exp());
        }
        assert_eq!(profile_relative_likelihood(&im, &f, &[mean]).unwrap().log_relative, 0.0);
    }

    #[test]
    fn profile_dominates_fiber_points() {
        let im = darwin_like();
        let f = mean_feature(&im);
        let pr = profile_relative_likelihood(&im, &f, &[0.3]).unwrap().log_relative;
        for s in [0.2, 0.5, 0.9, 1.5, 3.0] {
            assert!(im.log_relative_likelihood(&[0.3, s]).unwrap() <= pr + 1e-12);
        }
    }

    #[test]
    fn known_sigma_profile_is_pivotal_oracle() {
        let data = Dataset::from_reals("d", vec![0.2, -0.4, 0.9, 0.1]);
        let im = LikelihoodIm::new(builtin::normal_known_sigma(1.0).unwrap(), data).unwrap();
        let f = FeatureMap::identity(1).with_pivotal(true);
        let cfg = MonteCarloConfig::new(20_000, 11);
        let phi = 1.0;
        let v = profile_contour(&im, &f, &[phi], &cfg, &ProfileOptions::default()).unwrap().value;
        let oracle = 2.0 * normal_sf(2.0 * (0.2 - phi).abs());
        assert!((v - oracle).abs() < 3.0 / (20_000f64).sqrt(), "{v} vs {oracle}");
        for variant in [PlugIn::FullMle, PlugIn::NuisanceMle] {
            let p = plugin_profile_contour(&im, &f, &[phi], &cfg, variant, &ProfileOptions::default()).unwrap();
            assert!((p - oracle).abs() < 3.0 / (20_000f64).sqrt(), "{variant:?}: {p} vs {oracle}");
        }
    }

    #[test]
    fn block_sum_embedding_round_trips() {
        let f = FeatureMap::block_sums(3, 3);
        let theta = [0.1, 0.05, 0.05, 0.2, 0.3, 0.1, 0.05, 0.1, 0.05];
        let phi = f.apply(&theta);
        let back = f.fiber_point(&phi, &f.nuisance_of(&theta)).unwrap();
        for (a, b) in back.iter().zip(theta) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn probes_lie_on_fiber() {
        let im = darwin_like();
        let f = mean_feature(&im).with_pivotal(false);
        let fit = profile_relative_likelihood(&im, &f, &[0.1]).unwrap();
        let probes = fiber_probes(&im, &f, &[0.1], &fit.theta, 8);
        assert_eq!(probes.len(), 8);
        for p in probes {
            assert!((p[0] - 0.1).abs() <= FIBER_TOL);
        }
    }
}
