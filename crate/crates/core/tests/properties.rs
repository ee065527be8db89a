mod common;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use possim::im::LikelihoodIm;
use possim::marginal::{extension_contour, profile_relative_likelihood, FeatureMap};
use possim::models::{builtin, relative_likelihood, Dataset};
use possim::possibility::{gaussian_contour, gaussian_possibility, possibility_of, GaussianPossibilityParams, HypothesisSet, PossibilityContour};
use possim::predict::{conformal_region, conformal_transducer, ConformityRanking};
use possim::risk::{LossFunction, LossKind, Predictor, RiskIm};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn maxitivity_on_disjoint_grids(case in common::maxitivity_case()) {
        common::check_maxitivity(case)?;
    }

    #[test]
    fn necessity_is_dual_and_below_possibility(case in common::duality_case()) {
        common::check_duality(case)?;
    }

    #[test]
    fn larger_grid_hypotheses_are_more_plausible((params, grid, cut) in common::maxitivity_case()) {
        let contour = gaussian_possibility(params);
        let small = possibility_of(&contour, &HypothesisSet::points("A", grid[..cut].to_vec())).unwrap();
        let large = possibility_of(&contour, &HypothesisSet::points("B", grid.clone())).unwrap();
        prop_assert!(small <= large);
    }

    #[test]
    fn gaussian_contour_depends_only_on_whitened_radius(params in common::gaussian_params(), angle in 0.0..std::f64::consts::TAU, raw in proptest::collection::vec(-3.0..3.0f64, 3)) {
        let d = params.dim();
        let w: DVector<f64> = DVector::from_iterator(d, raw.into_iter().take(d));
        // rotate in the plane of the first two whitened axes
        let mut rot = DMatrix::identity(d, d);
        if d >= 2 {
            rot[(0, 0)] = angle.cos();
            rot[(0, 1)] = -angle.sin();
            rot[(1, 0)] = angle.sin();
            rot[(1, 1)] = angle.cos();
        } else {
            rot[(0, 0)] = -1.0;
        }
        let l = params.cholesky().clone();
        let y1: Vec<f64> = (params.mean() + &l * &w).iter().copied().collect();
        let y2: Vec<f64> = (params.mean() + &l * (&rot * &w)).iter().copied().collect();
        let (a, b) = (gaussian_contour(&params, &y1).unwrap(), gaussian_contour(&params, &y2).unwrap());
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn relative_likelihood_in_unit_interval((which, seed) in common::mle_case(), shift in proptest::collection::vec(-2.0..2.0f64, 3)) {
        let (model, data) = common::builtin_case(which, seed);
        let im = LikelihoodIm::new(Arc::clone(&model), data).unwrap();
        let theta: Vec<f64> = im.mle().iter().zip(&shift).map(|(m, s)| m + 0.2 * s * (1.0 + m.abs())).collect();
        if model.in_domain(&theta) {
            let r = relative_likelihood(model.as_ref(), im.data(), &theta).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn profile_dominates_fiber_members(seed in any::<u64>(), mean in -2.0..2.0f64, sd in 0.3..3.0f64) {
        let im = LikelihoodIm::new(builtin::normal(), common::normal_sample(12, 0.5, 1.3, seed)).unwrap();
        let feature = FeatureMap::coordinate(0, 2, vec![(0.01, 50.0)]);
        let pr = profile_relative_likelihood(&im, &feature, &[mean]).unwrap();
        prop_assert!(pr.log_relative >= im.log_relative_likelihood(&[mean, sd]).unwrap() - 1e-8);
    }

    #[test]
    fn extension_is_invariant_under_monotone_relabelling(seed in any::<u64>(), phi in -2.0..3.0f64) {
        let im = LikelihoodIm::new(builtin::normal(), common::normal_sample(12, 0.5, 1.3, seed)).unwrap();
        let joint = im.wilks_contour();
        let plain = FeatureMap::coordinate(0, 2, vec![(0.01, 50.0)]);
        // h(x) = exp(x) is strictly increasing
        let relabelled = FeatureMap::new(
            "exp(mean)",
            1,
            |t| vec![t[0].exp()],
            |phi, lam| (phi[0] > 0.0).then(|| vec![phi[0].ln(), lam[0]]),
            |t| vec![t[1]],
            vec![(0.01, 50.0)],
        );
        let a = extension_contour(&joint, &plain, &[phi]).unwrap();
        let b = extension_contour(&joint, &relabelled, &[phi.exp()]).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn transducer_lives_on_rank_lattice_and_ignores_order(z in proptest::collection::vec(-5.0..5.0f64, 1..12), y in -6.0..6.0f64, seed in any::<u64>()) {
        let rho = ConformityRanking::distance_to_median();
        let v = conformal_transducer(&z, &y, &rho).unwrap();
        let k = v * (z.len() + 1) as f64;
        prop_assert!((k - k.round()).abs() < 1e-9 && k >= 1.0 - 1e-9);
        let mut shuffled = z.clone();
        let len = shuffled.len();
        for i in 0..len {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % len as u64) as usize;
            shuffled.swap(i, j);
        }
        prop_assert_eq!(conformal_transducer(&shuffled, &y, &rho).unwrap(), v);
    }

    #[test]
    fn prediction_sets_shrink_with_alpha(z in proptest::collection::vec(-3.0..3.0f64, 2..15), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let rho = ConformityRanking::distance_to_mean();
        let grid: Vec<f64> = (0..61).map(|i| -6.0 + 0.2 * i as f64).collect();
        let wide = conformal_region(&z, &grid, lo, &rho).unwrap().members();
        let narrow = conformal_region(&z, &grid, hi, &rho).unwrap().members();
        prop_assert!(narrow.iter().all(|y| wide.contains(y)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn level_sets_are_nested(case in common::nesting_case()) {
        common::check_nesting(case)?;
    }

    #[test]
    fn contour_stays_in_unit_interval(case in common::unit_interval_case()) {
        common::check_unit_interval(case)?;
    }

    #[test]
    fn contour_is_one_at_the_mle(case in common::mle_case()) {
        common::check_mle_is_one(case)?;
    }

    #[test]
    fn seeds_determine_results(case in common::determinism_case()) {
        common::check_determinism(case)?;
    }

    #[test]
    fn risk_contour_is_one_at_the_minimizer(z in proptest::collection::vec(-3.0..3.0f64, 5..30), seed in any::<u64>()) {
        let data = Dataset::from_reals("z", z);
        let loss = LossFunction::new(LossKind::SquaredError, Predictor::Location).unwrap();
        let a = RiskIm::new(data.clone(), loss, 500, seed).unwrap();
        prop_assert_eq!(a.contour(a.estimate()), 1.0);
        let b = RiskIm::new(data, loss, 500, seed).unwrap();
        prop_assert_eq!(a.contour(&[0.25]), b.contour(&[0.25]));
    }
}

#[test]
fn identity_extension_is_the_joint() {
    let im = LikelihoodIm::new(builtin::normal(), common::normal_sample(10, 0.0, 1.0, 5)).unwrap();
    let joint: PossibilityContour = im.wilks_contour();
    let id = FeatureMap::identity(2);
    for theta in [[0.0, 1.0], [0.5, 0.7], [-1.0, 2.0]] {
        assert_eq!(extension_contour(&joint, &id, &theta).unwrap(), joint.evaluate(&theta));
    }
    let params = GaussianPossibilityParams::standard(1);
    assert_eq!(gaussian_contour(&params, &[0.0]).unwrap(), 1.0);
}
