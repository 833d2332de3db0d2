use serde::{Deserialize, Serialize};

use super::OptimizationTrace;
use crate::benchmarks::log_regret;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub mean_best: f64,
    /// Standard error of the mean; error bars are usually two of these.
    pub se_best: f64,
    pub mean_log_regret: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_traces: usize,
    pub iterations: Vec<IterationSummary>,
    pub final_best: Quantiles,
}

/// Linearly interpolated quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-iteration statistics of best-so-far series of equal length.
pub fn aggregate_series(series: &[Vec<f64>], optimum: Option<f64>) -> Result<Summary> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to aggregate".into()))?;
    let len = first.len();
    if len == 0 || series.iter().any(|s| s.len() != len) {
        return Err(Error::InvalidArgument(
            "traces must be nonempty and of equal length".into(),
        ));
    }
    let regrets: Option<Vec<Vec<f64>>> = optimum.map(|f| series.iter().map(|s| log_regret(s, f)).collect());
    let iterations = (0..len)
        .map(|t| {
            let column: Vec<f64> = series.iter().map(|s| s[t]).collect();
            let (mean_best, se_best) = mean_se(&column);
            let mean_log_regret = regrets
                .as_ref()
                .map(|r| r.iter().map(|s| s[t]).sum::<f64>() / series.len() as f64);
            IterationSummary {
                iteration: t,
                mean_best,
                se_best,
                mean_log_regret,
            }
        })
        .collect();
    let finals: Vec<f64> = series.iter().map(|s| s[len - 1]).collect();
    Ok(Summary {
        n_traces: series.len(),
        iterations,
        final_best: Quantiles {
            min: quantile(&finals, 0.0),
            q25: quantile(&finals, 0.25),
            median: quantile(&finals, 0.5),
            q75: quantile(&finals, 0.75),
            max: quantile(&finals, 1.0),
        },
    })
}

/// Aggregates replicate traces of one problem.
pub fn aggregate(traces: &[OptimizationTrace]) -> Result<Summary> {
    if let Some(t0) = traces.first() {
        if traces.iter().any(|t| t.config.problem_id != t0.config.problem_id) {
            return Err(Error::InvalidArgument("traces come from different problems".into()));
        }
    }
    let series: Vec<Vec<f64>> = traces.iter().map(|t| t.best_series()).collect();
    aggregate_series(&series, traces.first().map(|t| t.optimum_value))
}
