//! ALEBO on Hartmann6 whose active subspace is a random rotation of
//! D = 100 coordinates, against the axis-aligned variant.
//!
//! cargo run --release --example hartmann6_subspace -- [n_bo]

use alebo::runner::{run, Method, RunConfig};

fn main() -> alebo::Result<()> {
    let n_bo = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    for id in ["hartmann6_d100", "hartmann6_random_d100"] {
        let trace = run(&RunConfig::new(id, Method::Alebo, 10, n_bo, 0))?;
        let ms: f64 = trace.wall_times_ms().iter().sum();
        println!(
            "{id:<22} best {:.4} after {} evaluations (optimum {:.4}), {:.1}s",
            trace.final_best(),
            trace.records.len(),
            trace.optimum_value,
            ms / 1000.0
        );
    }
    Ok(())
}
