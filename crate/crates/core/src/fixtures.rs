//! Bundled datasets and the summary statistics they must reproduce.

use crate::error::{Error, Result};
use crate::models::{Dataset, LogisticBinomial, Model, Multinomial, Normal};

const DARWIN: &str = include_str!("../fixtures/darwin.csv");
const ORINGS: &str = include_str!("../fixtures/orings.csv");
const MULTINOMIAL: &str = include_str!("../fixtures/multinomial_agresti.csv");
const GAMMA: &str = include_str!("../fixtures/gamma_synthetic.csv");

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 4] = ["darwin", "orings", "multinomial_agresti", "gamma_synthetic"];

fn parse(label: &str, text: &str) -> Dataset {
    Dataset::from_csv_reader(label, text.as_bytes()).expect("bundled fixture parses")
}

/// Fifteen paired height differences in eighths of an inch.
pub fn darwin() -> Dataset {
    parse("darwin", DARWIN).with_units("eighths of an inch")
}

/// Launch temperature (F) and number of damaged o-rings out of six.
pub fn orings() -> Dataset {
    parse("orings", ORINGS).with_units("degrees F; failures of 6")
}

/// Nine category counts summing to 160.
pub fn multinomial_agresti() -> Dataset {
    parse("multinomial_agresti", MULTINOMIAL).with_units("counts")
}

/// Thirty synthetic gamma observations.
pub fn gamma_synthetic() -> Dataset {
    parse("gamma_synthetic", GAMMA)
}

pub fn by_name(name: &str) -> Result<Dataset> {
    match name {
        "darwin" => Ok(darwin()),
        "orings" => Ok(orings()),
        "multinomial_agresti" => Ok(multinomial_agresti()),
        "gamma_synthetic" => Ok(gamma_synthetic()),
        other => Err(Error::Config(format!("unknown fixture `{other}`; known: {}", NAMES.join(", ")))),
    }
}

/// Block sums of a probability vector over consecutive blocks of `block` entries.
pub fn block_sums(theta: &[f64], block: usize) -> Vec<f64> {
    theta.chunks(block).map(|c| c.iter().sum()).collect()
}

fn mismatch(name: &str, detail: String) -> Error {
    Error::FixtureMismatch { name: name.to_string(), detail }
}

/// Checks that a dataset carrying a known fixture name reproduces its
/// published summary statistics. Unknown names pass unchecked.
pub fn verify(name: &str, data: &Dataset) -> Result<()> {
    match name {
        "darwin" => {
            let fit = Normal.mle(data, None)?;
            let expected = [20.93, 36.46];
            if fit.theta.iter().zip(expected).any(|(a, b)| (a - b).abs() > 0.01) {
                return Err(mismatch(name, format!("MLE {:?} differs from (20.93, 36.46)", fit.theta)));
            }
        }
        "orings" => {
            let fit = LogisticBinomial::default().mle(data, None)?;
            let t50 = LogisticBinomial::median_effective_covariate(&fit.theta);
            if (t50 - 53.94).abs() > 0.05 {
                return Err(mismatch(name, format!("50% failure temperature {t50:.4} differs from 53.94")));
            }
        }
        "multinomial_agresti" => {
            let fit = Multinomial::new(data.len())?.mle(data, None)?;
            let sums = block_sums(&fit.theta, 3);
            let expected = [0.15, 0.6125, 0.2375];
            if sums.len() != 3 || sums.iter().zip(expected).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(mismatch(name, format!("block sums {sums:?} differ from (0.1500, 0.6125, 0.2375)")));
            }
        }
        _ => {}
    }
    Ok(())
}
