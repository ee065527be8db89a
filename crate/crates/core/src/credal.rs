//! Sampling the inner probabilistic approximation of a possibility contour.
//!
//! The two-step scheme draws a level `A ~ Unif(0, 1)` and then a point on
//! the boundary of the `A`-level set. Level sets are replaced by ellipsoids
//! `{theta: (theta - c)' S^+ (theta - c) <= r(alpha)^2}` whose shape `S`
//! is the large-sample covariance at the estimate and whose radius is
//! calibrated against the contour along probe rays. The boundary point is
//! the affine image of a uniform point on the unit sphere.

use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::possibility::PossibilityContour;
use crate::rng::{SimRng, Stream};
use crate::special::chi_square_quantile;

/// Ellipsoidal surrogate for the level sets of a contour.
#[derive(Debug, Clone)]
pub struct EllipsoidApprox {
    center: DVector<f64>,
    /// `d x k` factor with `shape = factor * factor'`.
    factor: DMatrix<f64>,
    /// `k x d` whitening map, the pseudo-inverse of `factor`.
    whitener: DMatrix<f64>,
    /// Calibrated `(alpha, kappa)` pairs, increasing in alpha; the radius is
    /// `inflation * kappa * sqrt(chi2_k quantile(1 - alpha))` at each level.
    scale: Vec<(f64, f64)>,
    inflation: f64,
}

impl EllipsoidApprox {
    /// Ellipsoid with the given center and shape, radius equal to the
    /// Gaussian possibility radius (`kappa = 1`). Directions with eigenvalue
    /// below `1e-12` times the largest are dropped.
    pub fn new(center: Vec<f64>, shape: &DMatrix<f64>) -> Result<Self> {
        let d = center.len();
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: shape.nrows() });
        }
        let scale = shape.amax().max(f64::MIN_POSITIVE);
        if (shape - shape.transpose()).amax() > 1e-8 * scale {
            return Err(Error::InvalidInput("ellipsoid shape is not symmetric".into()));
        }
        let eig = shape.clone().symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::SingularCovariance);
        }
        if eig.eigenvalues.iter().any(|&e| e < -1e-10 * top) {
            return Err(Error::InvalidInput("ellipsoid shape has a negative eigenvalue".into()));
        }
        let keep: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > 1e-12 * top).collect();
        let k = keep.len();
        let mut factor = DMatrix::zeros(d, k);
        let mut whitener = DMatrix::zeros(k, d);
        for (j, &i) in keep.iter().enumerate() {
            let s = eig.eigenvalues[i].sqrt();
            let v = eig.eigenvectors.column(i);
            factor.set_column(j, &(v * s));
            whitener.set_row(j, &(v.transpose() / s));
        }
        Ok(Self { center: DVector::from_vec(center), factor, whitener, scale: vec![(0.5, 1.0)], inflation: 1.0 })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Rank of the shape matrix: the number of directions sampled.
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn center(&self) -> &[f64] {
        self.center.as_slice()
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn with_inflation(mut self, inflation: f64) -> Self {
        assert!(inflation > 0.0);
        self.inflation = inflation;
        self
    }

    /// Calibrated `(alpha, kappa)` pairs.
    pub fn calibration(&self) -> &[(f64, f64)] {
        &self.scale
    }

    fn gauss_radius(&self, alpha: f64) -> f64 {
        chi_square_quantile(1.0 - alpha, self.rank()).sqrt()
    }

    /// Radius of the `alpha` ellipsoid in whitened units; non-increasing in
    /// `alpha` with `radius(1) = 0`. Between calibrated levels the radius is
    /// interpolated linearly; outside them the end scale factors carry over.
    pub fn radius(&self, alpha: f64) -> f64 {
        if alpha >= 1.0 {
            return 0.0;
        }
        let alpha = alpha.max(0.0);
        if alpha == 0.0 {
            return f64::INFINITY;
        }
        let s = &self.scale;
        let (first, last) = (s[0], s[s.len() - 1]);
        let r = if alpha <= first.0 {
            first.1 * self.gauss_radius(alpha)
        } else if alpha >= last.0 {
            last.1 * self.gauss_radius(alpha)
        } else {
            let j = s.partition_point(|p| p.0 <= alpha);
            let (a0, k0) = s[j - 1];
            let (a1, k1) = s[j];
            let (r0, r1) = (k0 * self.gauss_radius(a0), k1 * self.gauss_radius(a1));
            r0 + (r1 - r0) * (alpha - a0) / (a1 - a0)
        };
        self.inflation * r
    }

    /// Whitened distance of `theta` from the center.
    pub fn whitened_norm(&self, theta: &[f64]) -> f64 {
        (&self.whitener * (DVector::from_column_slice(theta) - &self.center)).norm()
    }

    pub fn encloses(&self, theta: &[f64], alpha: f64) -> bool {
        self.whitened_norm(theta) <= self.radius(alpha)
    }

    /// Point at whitened radius `r` in unit direction `u`.
    pub fn point(&self, u: &[f64], r: f64) -> Vec<f64> {
        (&self.center + &self.factor * DVector::from_column_slice(u) * r).iter().copied().collect()
    }
}

/// Settings for [`calibrate_ellipsoid`].
#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    pub alpha_grid: Vec<f64>,
    pub probes_per_alpha: usize,
    /// Multiplier applied to every calibrated radius.
    pub inflation: f64,
    /// Relative bisection tolerance on the radius.
    pub rel_tol: f64,
    /// Allowed increase of the contour along a ray before it is declared
    /// non-monotone (absorbs Monte Carlo noise).
    pub monotone_tol: f64,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            alpha_grid: (1..=19).map(|i| i as f64 * 0.05).collect(),
            probes_per_alpha: 16,
            inflation: 1.1,
            rel_tol: 1e-4,
            monotone_tol: 1e-9,
            seed: 0xe11,
        }
    }
}

fn random_direction(k: usize, rng: &mut SimRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn probe_directions(k: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(count.max(2 * k));
    for i in 0..k {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; k];
            e[i] = s;
            dirs.push(e);
        }
    }
    let mut rng = Stream::new(seed).rng();
    while dirs.len() < count {
        dirs.push(random_direction(k, &mut rng));
    }
    dirs
}

/// Smallest radius along `u` beyond which the contour stays below `alpha`.
fn ray_radius(contour: &PossibilityContour, base: &EllipsoidApprox, index: usize, u: &[f64], alpha: f64, guess: f64, opts: &CalibrationOptions) -> Result<f64> {
    let at = |r: f64| contour.evaluate(&base.point(u, r));
    let mut lo = 0.0;
    let mut hi = guess.max(1e-8);
    let mut expansions = 0;
    while at(hi) >= alpha {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::NonConvergence { iterations: expansions, context: format!("level {alpha} set is unbounded along a probe ray") });
        }
    }
    while hi - lo > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if at(mid) >= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // monotonicity along the ray: inside values must not drop and rise again,
    // and the contour must stay below alpha past the crossing
    let mut prev = at(0.0);
    for i in 1..=8 {
        let v = at(hi * i as f64 / 8.0);
        if v > prev + opts.monotone_tol {
            return Err(Error::NotMonotoneAlongRay {
                direction: index,
                detail: format!("contour rises from {prev:.4} to {v:.4}, so it may be multimodal"),
            });
        }
        prev = v;
    }
    for f in [1.25, 1.5, 2.0, 3.0] {
        let v = at(hi * f);
        if v >= alpha + opts.monotone_tol {
            return Err(Error::NotMonotoneAlongRay {
                direction: index,
                detail: format!("contour returns to {v:.4} >= {alpha} past radius {hi:.4}"),
            });
        }
    }
    Ok(hi)
}

/// Calibrates ellipsoid radii against `contour`.
///
/// For each grid level the radius is the largest, over probe rays, of the
/// smallest whitened radius past which the contour stays below the level.
/// Radii are made non-increasing in alpha (only ever enlarging them) and
/// then multiplied by the inflation factor.
pub fn calibrate_ellipsoid(contour: &PossibilityContour, base: EllipsoidApprox, opts: &CalibrationOptions) -> Result<EllipsoidApprox> {
    if contour.dim() != base.dim() {
        return Err(Error::DimensionMismatch { expected: base.dim(), got: contour.dim() });
    }
    let mut grid: Vec<f64> = opts.alpha_grid.iter().copied().filter(|a| *a > 0.0 && *a < 1.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::InvalidInput("calibration needs at least one level in (0, 1)".into()));
    }
    let k = base.rank();
    let dirs = probe_directions(k, opts.probes_per_alpha.max(2 * k), opts.seed);
    let mut scale: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&alpha| -> Result<(f64, f64)> {
            let gauss = chi_square_quantile(1.0 - alpha, k).sqrt();
            let mut worst: f64 = 0.0;
            for (i, u) in dirs.iter().enumerate() {
                worst = worst.max(ray_radius(contour, &base, i, u, alpha, gauss, opts)?);
            }
            Ok((alpha, worst / gauss))
        })
        .collect::<Result<Vec<_>>>()?;
    // radii only ever grow to become non-increasing in alpha
    let gauss = |a: f64| chi_square_quantile(1.0 - a, k).sqrt();
    for i in (0..scale.len().saturating_sub(1)).rev() {
        let next = scale[i + 1].1 * gauss(scale[i + 1].0);
        scale[i].1 = scale[i].1.max(next / gauss(scale[i].0));
    }
    Ok(EllipsoidApprox { scale, inflation: opts.inflation, ..base })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredalDraw {
    pub alpha: f64,
    pub theta: Vec<f64>,
}

/// Draws from the inner approximation with their levels.
#[derive(Debug, Clone, PartialEq)]
pub struct CredalSampleSet {
    pub draws: Vec<CredalDraw>,
    pub seed: u64,
    pub m: usize,
}

impl CredalSampleSet {
    /// Equally weighted points, the input format of credal membership checks.
    pub fn weighted_points(&self) -> Vec<(Vec<f64>, f64)> {
        self.draws.iter().map(|d| (d.theta.clone(), 1.0)).collect()
    }
}

/// `m` draws of the two-step scheme: `A ~ Unif(0, 1)` (zero excluded), then
/// `center + r(A) * factor * u` with `u` uniform on the unit sphere.
pub fn sample_inner_approx(ellipsoid: &EllipsoidApprox, m: usize, seed: u64) -> CredalSampleSet {
    let k = ellipsoid.rank();
    let root = Stream::new(seed);
    let draws = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.child(i as u64).rng();
            let alpha = loop {
                let a: f64 = rng.random();
                if a > 0.0 {
                    break a;
                }
            };
            let u = random_direction(k, &mut rng);
            CredalDraw { alpha, theta: ellipsoid.point(&u, ellipsoid.radius(alpha)) }
        })
        .collect();
    CredalSampleSet { draws, seed, m }
}

/// Contour rebuilt from samples: the fraction of draws whose ranking does
/// not exceed the ranking at the evaluation point.
#[derive(Debug, Clone)]
pub struct SampleContour {
    sorted: Vec<f64>,
}

impl SampleContour {
    pub fn new<R>(samples: &CredalSampleSet, ranking: R) -> Self
    where
        R: Fn(&[f64]) -> f64 + Sync,
    {
        let mut sorted: Vec<f64> = samples.draws.par_iter().map(|d| ranking(&d.theta)).map(|v| if v.is_nan() { f64::NEG_INFINITY } else { v }).collect();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    /// Plausibility of a point whose ranking value is `score`.
    pub fn at_score(&self, score: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|v| *v <= score) as f64 / self.sorted.len() as f64
    }
}

/// `(1/M) #{m: ranking(theta_m) <= ranking(theta)}`.
pub fn contour_from_samples<R>(samples: &CredalSampleSet, ranking: R, theta: &[f64]) -> f64
where
    R: Fn(&[f64]) -> f64 + Sync,
{
    let score = ranking(theta);
    if samples.draws.is_empty() {
        return 0.0;
    }
    samples.draws.iter().filter(|d| ranking(&d.theta) <= score).count() as f64 / samples.draws.len() as f64
}
