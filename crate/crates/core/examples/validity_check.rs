//! Frequency of small plausibility at the true parameter.

use possim::im::{validity_diagnostic, ContourMethod, MonteCarloConfig};
use possim::models::{builtin, Dataset};

fn main() -> possim::Result<()> {
    let model = builtin::normal();
    let design = Dataset::from_reals("design", vec![0.0; 15]);
    let alphas = [0.01, 0.05, 0.1, 0.25, 0.5];
    for (label, method) in [("Monte Carlo", ContourMethod::MonteCarlo(MonteCarloConfig::new(500, 1))), ("Wilks", ContourMethod::Wilks)] {
        let table = validity_diagnostic(&model, &[vec![0.0, 1.0]], &design, &alphas, 1000, method, 2)?;
        println!("{label}:");
        for r in &table.rows {
            println!("  alpha {:4.2}  frequency {:.3}  bound {:.3}  {}", r.alpha, r.frequency, r.bound, if r.pass { "ok" } else { "exceeds" });
        }
    }
    Ok(())
}
