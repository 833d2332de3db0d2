//! Runs ALEBO, HeSBO, REMBO and Sobol on Branin embedded in D = 100 and
//! prints the best value each one finds.
//!
//! cargo run --release --example branin_comparison -- [replicates]

use std::time::Instant;

use alebo::benchmarks::problem_by_id;
use alebo::runner::{aggregate, run, run_sobol, Method, RunConfig};

fn main() -> alebo::Result<()> {
    let replicates: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let problem = problem_by_id("branin_d100")?;
    for method in [Method::Alebo, Method::Hesbo, Method::Rembo, Method::Sobol] {
        let start = Instant::now();
        let mut traces = Vec::new();
        for seed in 0..replicates as u64 {
            let trace = match method {
                Method::Sobol => run_sobol(&problem, 50, seed)?,
                _ => {
                    let mut cfg = RunConfig::new("branin_d100", method, 4, 40, seed);
                    if method == Method::Rembo {
                        cfg.n_bo = 42;
                    }
                    run(&cfg)?
                }
            };
            traces.push(trace);
        }
        let summary = aggregate(&traces)?;
        let finals: Vec<String> = traces.iter().map(|t| format!("{:.3}", t.final_best())).collect();
        println!(
            "{method:>6}: mean best {:.3}  median {:.3}  [{}]  ({:.1}s)",
            summary.iterations.last().unwrap().mean_best,
            summary.final_best.median,
            finals.join(", "),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
