//! Bootstrap contour for the median, the minimizer of absolute-error risk.

use possim::fixtures;
use possim::risk::{LossFunction, LossKind, Predictor, RiskIm};

fn main() -> possim::Result<()> {
    let data = fixtures::darwin();
    let loss = LossFunction::new(LossKind::Check(0.5), Predictor::Location)?;
    let im = RiskIm::new(data, loss, 2000, 41)?;
    println!("empirical risk minimizer: {:.3} ({} redraws)", im.estimate()[0], im.redraws());
    for theta in [-10.0, 0.0, 10.0, 20.0, 30.0, 40.0] {
        println!("pi({theta:5.1}) = {:.3}", im.contour(&[theta]));
    }
    Ok(())
}
