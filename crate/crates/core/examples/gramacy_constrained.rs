//! Constrained ALEBO on Gramacy embedded in D = 100: one GP per outcome,
//! feasibility-weighted EI, best feasible value per iteration.
//!
//! cargo run --release --example gramacy_constrained -- [seed]

use alebo::runner::{run, Method, RunConfig};

fn main() -> alebo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let trace = run(&RunConfig::new("gramacy_d100", Method::Alebo, 4, 40, seed))?;
    for r in trace.records.iter().step_by(5) {
        let best = r.best_feasible_so_far.map_or("none yet".to_string(), |b| format!("{b:.4}"));
        println!(
            "iter {:>2}: f {:>7.4} c {:>7.3?} feasible {:<5} best {best}",
            r.iteration, r.objective, r.constraints, r.feasible
        );
    }
    println!("final best {:.4} (optimum {:.4})", trace.final_best(), trace.optimum_value);
    Ok(())
}
