//! Possibility contours built from a family of z-tests and from the
//! matching confidence intervals.

use possim::im::{im_from_confidence_family, im_from_test_family};
use possim::possibility::{HypothesisSet, Search};
use possim::special::{normal_quantile, normal_sf};

fn main() -> possim::Result<()> {
    let (zbar, n) = (0.42, 25.0_f64);
    let se = 1.0 / n.sqrt();
    let mu0 = 0.0;
    let stat = (zbar - mu0) / se;
    let p_value = 2.0 * normal_sf(stat.abs());
    let null = HypothesisSet::new("mean = 0", move |t| t[0] == mu0, Search::Everything);
    let tests = im_from_test_family(|beta| beta > 0.0 && stat.abs() >= normal_quantile(1.0 - beta / 2.0), null, 1)?;
    println!("test-based plausibility of mean 0: {:.6} (p-value {p_value:.6})", tests.evaluate(&[mu0]));

    let intervals = im_from_confidence_family(
        move |beta, phi| beta < 1.0 && (beta <= 0.0 || (phi[0] - zbar).abs() <= normal_quantile(1.0 - beta / 2.0) * se),
        |t| t.to_vec(),
        vec![zbar],
        1,
    )?;
    for mu in [0.0, 0.2, 0.42, 0.6, 0.8] {
        println!("interval-based plausibility of {mu}: {:.4}", intervals.evaluate(&[mu]));
    }
    Ok(())
}
