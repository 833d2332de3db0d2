//! Runs a few HeSBO replicates, writes their trace files, reads them back and
//! aggregates them into the summary CSV and an SVG plot.
//!
//! cargo run --release --example trace_report -- [out_dir]

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use alebo::runner::{
    aggregate, read_trace, run_replicates, summary_svg, write_summary_csv, write_trace, Method, RunConfig,
};

fn main() -> alebo::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "trace_report".into()));
    std::fs::create_dir_all(&out)?;
    let mut cfg = RunConfig::new("branin_d100", Method::Hesbo, 4, 20, 0);
    cfg.replicates = 4;

    let mut paths = Vec::new();
    for t in run_replicates(&cfg)? {
        let path = out.join(format!("hesbo_seed{}.jsonl", t.config.seed));
        write_trace(&t, BufWriter::new(File::create(&path)?))?;
        paths.push(path);
    }
    let traces = paths
        .iter()
        .map(|p| read_trace(BufReader::new(File::open(p)?)))
        .collect::<alebo::Result<Vec<_>>>()?;
    let summary = aggregate(&traces)?;
    write_summary_csv(&summary, BufWriter::new(File::create(out.join("summary.csv"))?))?;
    std::fs::write(out.join("summary.svg"), summary_svg(&[("hesbo".into(), summary.clone())]))?;

    let last = summary.iterations.last().unwrap();
    println!(
        "{} traces, final mean best {:.3} +- {:.3}, mean log10 regret {:.2}; wrote {}",
        summary.n_traces,
        last.mean_best,
        2.0 * last.se_best,
        last.mean_log_regret.unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}
