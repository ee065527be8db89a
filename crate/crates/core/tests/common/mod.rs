//! Oracles and property checks shared by the integration targets.
#![allow(dead_code)]

use std::sync::Arc;

use possim::credal::sample_inner_approx;
use possim::credal::EllipsoidApprox;
use possim::im::{confidence_region, Axis, Grid, LikelihoodIm, MonteCarloConfig};
use possim::models::{builtin, Dataset, Model};
use possim::possibility::{gaussian_possibility, necessity_of, possibility_of, GaussianPossibilityParams, HypothesisSet, Search};
use possim::predict::ConformityRanking;
use possim::rng::Stream;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Two-sided Student-t p-value by composite Simpson quadrature of the
/// density on `[0, |t|]`.
pub fn t_p_value_by_quadrature(t: f64, dof: u32) -> f64 {
    let nu = dof as f64;
    // Gamma((nu + 1) / 2) / Gamma(nu / 2) via the half-integer recursion
    let half = |k: u32| -> f64 {
        // Gamma(k / 2)
        let mut g = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
        let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
        while x < k as f64 / 2.0 - 1e-12 {
            g *= x;
            x += 1.0;
        }
        g
    };
    let c = half(dof + 1) / (half(dof) * (nu * std::f64::consts::PI).sqrt());
    let f = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let a = t.abs();
    let n = 20_000;
    let h = a / n as f64;
    let mut s = f(0.0) + f(a);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}

/// Transducer by averaging over every ordering of the augmented bag: the
/// fraction of orderings whose last element scores no higher against the
/// rest than the candidate does against the observed bag.
pub fn transducer_by_permutations(observed: &[f64], candidate: f64, rho: &ConformityRanking<f64>) -> f64 {
    let reference = rho.score(observed, &candidate);
    let mut bag: Vec<f64> = observed.to_vec();
    bag.push(candidate);
    let mut idx: Vec<usize> = (0..bag.len()).collect();
    let (mut hits, mut total) = (0u64, 0u64);
    permute(&mut idx, 0, &mut |p| {
        let rest: Vec<f64> = p[..p.len() - 1].iter().map(|&i| bag[i]).collect();
        if rho.score(&rest, &bag[p[p.len() - 1]]) <= reference {
            hits += 1;
        }
        total += 1;
    });
    hits as f64 / total as f64
}

fn permute(v: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

pub fn normal_sample(n: usize, mean: f64, sd: f64, seed: u64) -> Dataset {
    let mut rng = Stream::new(seed).rng();
    builtin::normal().simulate(&[mean, sd], &Dataset::from_reals("design", vec![0.0; n]), &mut rng)
}

/// A dataset simulated from one of the builtin models, with the model.
pub fn builtin_case(which: usize, seed: u64) -> (Arc<dyn Model>, Dataset) {
    let mut rng = Stream::new(seed).rng();
    let reals = |n: usize| Dataset::from_reals("design", vec![0.0; n]);
    match which % 5 {
        0 => {
            let m = builtin::normal();
            let d = m.simulate(&[1.0, 2.0], &reals(12), &mut rng);
            (m, d)
        }
        1 => {
            let m = builtin::gamma();
            let d = m.simulate(&[2.0, 1.5], &reals(20), &mut rng);
            (m, d)
        }
        2 => {
            let m = builtin::logistic_binomial(6).unwrap();
            let design = Dataset::from_pairs("design", (0..15).map(|i| (50.0 + 2.0 * i as f64, 0.0)).collect());
            let d = m.simulate(&[8.0, -0.15], &design, &mut rng);
            (m, d)
        }
        3 => {
            let m = builtin::multinomial(3).unwrap();
            let d = m.simulate(&[0.2, 0.3, 0.5], &Dataset::from_reals("design", vec![40.0, 0.0, 0.0]), &mut rng);
            (m, d)
        }
        _ => {
            let m = builtin::linear_regression();
            let design = Dataset::from_pairs("design", (0..12).map(|i| (i as f64 / 4.0 - 1.5, 0.0)).collect());
            let d = m.simulate(&[0.3, 0.7, 1.0], &design, &mut rng);
            (m, d)
        }
    }
}

pub fn gaussian_params() -> impl Strategy<Value = GaussianPossibilityParams> {
    (1usize..=3)
        .prop_flat_map(|d| (proptest::collection::vec(-3.0..3.0f64, d), proptest::collection::vec(-1.0..1.0f64, d * d)))
        .prop_map(|(mean, a)| {
            let d = mean.len();
            let a = nalgebra::DMatrix::from_row_slice(d, d, &a);
            let cov = &a * a.transpose() + nalgebra::DMatrix::identity(d, d) * 0.25;
            GaussianPossibilityParams::new(mean, cov).unwrap()
        })
}

fn points_for(d: usize, count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-5.0..5.0f64, d), count)
}

/// A Gaussian contour with a finite grid split into two disjoint parts.
pub fn maxitivity_case() -> impl Strategy<Value = (GaussianPossibilityParams, Vec<Vec<f64>>, usize)> {
    gaussian_params().prop_flat_map(|p| {
        let d = p.dim();
        (Just(p), points_for(d, 12), 1usize..12)
    })
}

pub fn check_maxitivity((params, grid, cut): (GaussianPossibilityParams, Vec<Vec<f64>>, usize)) -> Result<(), TestCaseError> {
    let contour = gaussian_possibility(params);
    let a = HypothesisSet::points("A", grid[..cut].to_vec());
    let b = HypothesisSet::points("B", grid[cut..].to_vec());
    let union = HypothesisSet::points("A or B", grid.clone());
    let pa = possibility_of(&contour, &a).unwrap();
    let pb = possibility_of(&contour, &b).unwrap();
    prop_assert_eq!(possibility_of(&contour, &union).unwrap(), pa.max(pb));
    Ok(())
}

pub fn nesting_case() -> impl Strategy<Value = (u64, f64, f64)> {
    (any::<u64>(), 0.0..1.0f64, 0.0..1.0f64)
}

/// Level sets on a shared grid shrink as the level grows, for both the
/// Monte Carlo and the large-sample contour. Each set is computed from its
/// own pass over the grid.
pub fn check_nesting((seed, a, b): (u64, f64, f64)) -> Result<(), TestCaseError> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let im = LikelihoodIm::new(builtin::normal(), normal_sample(10, 0.0, 1.0, seed)).unwrap();
    let grid = Grid::new(vec![Axis { min: -3.0, max: 3.0, steps: 9 }, Axis { min: 0.1, max: 3.1, steps: 7 }]).unwrap();
    for contour in [im.wilks_contour(), im.mc_contour(MonteCarloConfig::new(100, seed).serial())] {
        let wide = confidence_region(&contour, im.mle(), lo, &grid).unwrap().grid_members.unwrap();
        let narrow = confidence_region(&contour, im.mle(), hi, &grid).unwrap().grid_members.unwrap();
        prop_assert!(narrow.iter().all(|p| wide.contains(p)));
    }
    Ok(())
}

pub fn unit_interval_case() -> impl Strategy<Value = (usize, u64, Vec<f64>)> {
    (0usize..5, any::<u64>(), proptest::collection::vec(-3.0..3.0f64, 3))
}

/// Contour values at arbitrary points, including points off the domain,
/// stay in `[0, 1]`.
pub fn check_unit_interval((which, seed, shift): (usize, u64, Vec<f64>)) -> Result<(), TestCaseError> {
    let (model, data) = builtin_case(which, seed);
    let im = LikelihoodIm::new(model, data).unwrap();
    let theta: Vec<f64> = im.mle().iter().zip(shift.iter().cycle()).map(|(m, s)| m + s * 0.3 * (1.0 + m.abs())).collect();
    for contour in [im.wilks_contour(), im.mc_contour(MonteCarloConfig::new(100, seed).serial())] {
        let v = contour.evaluate(&theta);
        prop_assert!((0.0..=1.0).contains(&v), "value {} at {:?}", v, theta);
    }
    Ok(())
}

pub fn mle_case() -> impl Strategy<Value = (usize, u64)> {
    (0usize..5, any::<u64>())
}

/// The contour equals one exactly at the maximum likelihood estimate.
pub fn check_mle_is_one((which, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let (model, data) = builtin_case(which, seed);
    let im = LikelihoodIm::new(model, data).unwrap();
    let mle = im.mle().to_vec();
    prop_assert_eq!(im.contour_mc(&mle, &MonteCarloConfig::new(100, seed).serial()).unwrap().value, 1.0);
    prop_assert_eq!(im.contour_wilks(&mle).unwrap(), 1.0);
    Ok(())
}

pub fn duality_case() -> impl Strategy<Value = (GaussianPossibilityParams, Vec<Vec<f64>>, Vec<bool>)> {
    gaussian_params().prop_flat_map(|p| {
        let d = p.dim();
        (Just(p), points_for(d, 10), proptest::collection::vec(any::<bool>(), 11))
    })
}

/// On a grid holding the mode, the lower probability never exceeds the
/// upper probability and equals one minus the complement's upper
/// probability.
pub fn check_duality((params, mut grid, mask): (GaussianPossibilityParams, Vec<Vec<f64>>, Vec<bool>)) -> Result<(), TestCaseError> {
    grid.push(params.mean().iter().copied().collect());
    let members: Vec<Vec<f64>> = grid.iter().zip(&mask).filter(|(_, m)| **m).map(|(p, _)| p.clone()).collect();
    prop_assume!(!members.is_empty());
    let contour = gaussian_possibility(params);
    let inside = members.clone();
    let h = HypothesisSet::new("masked", move |t| inside.iter().any(|p| p.as_slice() == t), Search::Grid(grid.clone()));
    let complement = HypothesisSet::new("grid", |_| true, Search::Grid(grid.clone()));
    let nec = necessity_of(&contour, &h, &complement).unwrap();
    let pos = possibility_of(&contour, &h).unwrap();
    prop_assert!(nec <= pos, "necessity {} above possibility {}", nec, pos);
    let outside: Vec<Vec<f64>> = grid.iter().filter(|p| !members.contains(p)).cloned().collect();
    let sup_out = if outside.is_empty() { 0.0 } else { possibility_of(&contour, &HypothesisSet::points("rest", outside)).unwrap() };
    prop_assert_eq!(nec, 1.0 - sup_out);
    Ok(())
}

pub fn determinism_case() -> impl Strategy<Value = (usize, u64)> {
    (0usize..5, any::<u64>())
}

/// Identical seeds give identical results, serial or parallel.
pub fn check_determinism((which, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let (model, data) = builtin_case(which, seed);
    let im = LikelihoodIm::new(Arc::clone(&model), data).unwrap();
    let theta: Vec<f64> = im.mle().iter().map(|m| m * 1.05 + 0.01).collect();
    prop_assume!(model.in_domain(&theta));
    let cfg = MonteCarloConfig::new(200, seed);
    let a = im.contour_mc(&theta, &cfg).unwrap();
    let b = im.contour_mc(&theta, &cfg).unwrap();
    let c = im.contour_mc(&theta, &cfg.serial()).unwrap();
    prop_assert_eq!(&a, &b);
    prop_assert_eq!(&a, &c);
    let ell = EllipsoidApprox::new(vec![0.0, 0.0], &nalgebra::DMatrix::identity(2, 2)).unwrap();
    prop_assert_eq!(sample_inner_approx(&ell, 64, seed), sample_inner_approx(&ell, 64, seed));
    Ok(())
}
