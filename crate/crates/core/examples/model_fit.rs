//! Fits the Mahalanobis GP (point estimate and Laplace-sampled metric) and an
//! ARD RBF GP to points of a 6-d embedding of Hartmann6 in D = 100, and
//! scores them on held-out points.
//!
//! cargo run --release --example model_fit -- [n_train] [seed]

use alebo::runner::{run_modelfit, ModelFitConfig};

fn main() -> alebo::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_train = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let result = run_modelfit(&ModelFitConfig::new("hartmann6_d100", 6, n_train, 50, seed))?;
    println!("{:<20} {:>8} {:>8} {:>10} {:>10}", "model", "R2", "MLPD", "mean var", "pred sd");
    for m in &result.metrics {
        println!(
            "{:<20} {:>8.3} {:>8.3} {:>10.2e} {:>10.3}",
            m.model, m.r_squared, m.mean_log_predictive_density, m.mean_predictive_variance, m.prediction_std
        );
    }
    println!("target sd {:.3}", result.metrics[0].target_std);
    Ok(())
}
