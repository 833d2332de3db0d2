use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use alebo::embedding::Strategy;
use alebo::popt::{popt_sweep, write_popt_csv};
use alebo::runner::{
    aggregate, read_trace, run, run_modelfit, summary_svg, write_summary_csv, write_trace, ModelFitConfig,
    OptimizationTrace, RunConfig, Summary,
};
use alebo::{Error, Result};

#[derive(Parser)]
#[command(name = "alebo", version, about = "Linear-embedding Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replicate of a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trace files and summary.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimate the probability that an embedding contains an optimum.
    Popt {
        #[arg(long)]
        strategy: Strategy,
        #[arg(long = "big-d")]
        big_d: usize,
        #[arg(long = "true-d")]
        true_d: usize,
        #[arg(long = "embed-d-list", value_delimiter = ',')]
        embed_d_list: Vec<usize>,
        #[arg(long = "n-mc", default_value_t = 1000)]
        n_mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV path, or `-` for stdout.
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Compare surrogate predictions on held-out points of an embedding.
    Modelfit {
        #[arg(long, default_value = "hartmann6_d100")]
        problem: String,
        #[arg(long = "embed-d", default_value_t = 6)]
        embed_d: usize,
        #[arg(long = "n-train", default_value_t = 100)]
        n_train: usize,
        #[arg(long = "n-test", default_value_t = 50)]
        n_test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Repeat the experiment for each training size instead of `--n-train`.
        #[arg(long = "train-sizes", value_delimiter = ',')]
        train_sizes: Vec<usize>,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Aggregate trace files from a directory into curves.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output path; `.svg` draws the curves, anything else is CSV.
        #[arg(long)]
        out: String,
    },
}

fn output(path: &str) -> Result<Box<dyn Write>> {
    Ok(if path == "-" {
        Box::new(io::stdout().lock())
    } else {
        Box::new(BufWriter::new(File::create(path)?))
    })
}

fn cmd_run(config: &Path, out: &Path) -> Result<()> {
    let cfg = RunConfig::from_json(&fs::read_to_string(config)?)?;
    fs::create_dir_all(out)?;
    let mut traces = Vec::with_capacity(cfg.replicates);
    for i in 0..cfg.replicates {
        let rep = cfg.replicate(i);
        let trace = run(&rep)?;
        let name = format!("{}_{}_seed{}.jsonl", rep.problem_id, rep.method, rep.seed);
        write_trace(&trace, BufWriter::new(File::create(out.join(&name))?))?;
        eprintln!("replicate {i}: best {:.6} -> {name}", trace.final_best());
        traces.push(trace);
    }
    let summary = aggregate(&traces)?;
    write_summary_csv(&summary, BufWriter::new(File::create(out.join("summary.csv"))?))?;
    Ok(())
}

fn trace_label(t: &OptimizationTrace) -> String {
    let c = &t.config;
    let mut label = format!("{}_{}", c.problem_id, c.method);
    if let Some(k) = c.options.kernel {
        label.push_str(&format!("_{k:?}").to_lowercase());
    }
    if let Some(s) = c.options.strategy {
        label.push_str(&format!("_{s}"));
    }
    label
}

fn cmd_report(input: &Path, out: &str) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no .jsonl traces in {}", input.display())));
    }
    let mut groups: Vec<(String, Vec<OptimizationTrace>)> = Vec::new();
    for p in paths {
        let t = read_trace(BufReader::new(File::open(&p)?))?;
        let label = trace_label(&t);
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(t),
            None => groups.push((label, vec![t])),
        }
    }
    let summaries: Vec<(String, Summary)> = groups
        .into_iter()
        .map(|(l, ts)| Ok((l, aggregate(&ts)?)))
        .collect::<Result<_>>()?;
    let mut w = output(out)?;
    if out.ends_with(".svg") {
        w.write_all(summary_svg(&summaries).as_bytes())?;
    } else {
        writeln!(w, "label,n_traces,iteration,mean_best,se_best,mean_log_regret")?;
        for (label, s) in &summaries {
            let mut buf = Vec::new();
            write_summary_csv(s, &mut buf)?;
            for line in String::from_utf8_lossy(&buf).lines().skip(1) {
                writeln!(w, "{label},{},{line}", s.n_traces)?;
            }
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Popt {
            strategy,
            big_d,
            true_d,
            embed_d_list,
            n_mc,
            seed,
            out,
        } => {
            let rows = popt_sweep(&[strategy], big_d, &[true_d], &embed_d_list, n_mc, seed)?;
            write_popt_csv(&rows, output(&out)?)
        }
        Command::Modelfit {
            problem,
            embed_d,
            n_train,
            n_test,
            seed,
            train_sizes,
            out,
        } => {
            let sizes = if train_sizes.is_empty() { vec![n_train] } else { train_sizes };
            let mut w = output(&out)?;
            for (i, n) in sizes.into_iter().enumerate() {
                let result = run_modelfit(&ModelFitConfig::new(&problem, embed_d, n, n_test, seed))?;
                let mut buf = Vec::new();
                result.write_predictions_csv(&mut buf)?;
                let text = String::from_utf8_lossy(&buf);
                let skip = if i == 0 { 0 } else { 1 };
                for line in text.lines().skip(skip) {
                    writeln!(w, "{line}")?;
                }
                for m in &result.metrics {
                    eprintln!(
                        "n_train {n}: {:<20} R2 {:>7.3}  MLPD {:>8.3}  mean var {:.4}",
                        m.model, m.r_squared, m.mean_log_predictive_density, m.mean_predictive_variance
                    );
                }
            }
            Ok(())
        }
        Command::Report { input, out } => cmd_report(&input, &out),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
