//! Probability that a random embedding contains an optimum, for each
//! projection strategy, as d_e grows (D = 100, d = 6).
//!
//! cargo run --release --example popt_curves -- [n_mc]

use alebo::embedding::Strategy;
use alebo::popt::{hesbo_popt_analytic, popt_sweep, write_popt_csv};

fn main() -> alebo::Result<()> {
    let n_mc: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let des = [6, 8, 10, 12, 16, 20];
    let strategies = [Strategy::Hesbo, Strategy::Gaussian, Strategy::Hypersphere];
    let rows = popt_sweep(&strategies, 100, &[6], &des, n_mc, 0)?;
    println!("{:>12} {}", "d_e", des.map(|d| format!("{d:>6}")).join(""));
    for s in strategies {
        let cells: String = rows
            .iter()
            .filter(|r| r.strategy == s)
            .map(|r| format!("{:>6.3}", r.estimate.estimate))
            .collect();
        println!("{:>12} {cells}", s.to_string());
    }
    let exact: String = des.iter().map(|&de| format!("{:>6.3}", hesbo_popt_analytic(6, de))).collect();
    println!("{:>12} {exact}", "hesbo exact");
    println!();
    write_popt_csv(&rows, std::io::stdout().lock())
}
