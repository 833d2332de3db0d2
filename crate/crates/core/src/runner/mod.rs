//! Optimization drivers for linear-embedding BO and its baselines.

mod aggregate;
mod modelfit;
mod report;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::acquisition::{optimize_acquisition_with, AcquisitionOptions, AcquisitionProblem};
use crate::benchmarks::{problem_by_id, AmbientProblem, Evaluation};
use crate::embedding::{generate_embedding, generate_rembo_embedding, EmbeddingSpec, SearchDomain, Strategy};
use crate::error::{Error, Result};
use crate::gp::{fit_gp, GpConfig, GpFit, KernelKind};
use crate::linalg::{derive_seed, rng_from_seed};
use crate::sobol::SobolSampler;

pub use aggregate::{aggregate, aggregate_series, quantile, IterationSummary, Quantiles, Summary};
pub use modelfit::{
    run_modelfit, ModelFitConfig, ModelFitMetrics, ModelFitResult, ModelPrediction, ARD_RBF, MAHALANOBIS_POINT,
    MAHALANOBIS_SAMPLED,
};
pub use report::{read_trace, summary_svg, write_summary_csv, write_trace, TraceLine};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Alebo,
    Rembo,
    Hesbo,
    Sobol,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Alebo => "alebo",
            Method::Rembo => "rembo",
            Method::Hesbo => "hesbo",
            Method::Sobol => "sobol",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alebo" => Ok(Method::Alebo),
            "rembo" => Ok(Method::Rembo),
            "hesbo" => Ok(Method::Hesbo),
            "sobol" => Ok(Method::Sobol),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

fn default_replicates() -> usize {
    1
}

fn default_laplace_samples() -> usize {
    16
}

fn default_gp_restarts() -> usize {
    8
}

fn default_acq_restarts() -> usize {
    16
}

fn default_acq_probes() -> usize {
    512
}

fn default_rembo_projections() -> usize {
    4
}

/// Tuning knobs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodOptions {
    #[serde(default = "default_laplace_samples")]
    pub laplace_samples: usize,
    #[serde(default = "default_gp_restarts")]
    pub gp_restarts: usize,
    #[serde(default = "default_acq_restarts")]
    pub acq_restarts: usize,
    #[serde(default = "default_acq_probes")]
    pub acq_probes: usize,
    #[serde(default = "default_rembo_projections")]
    pub rembo_projections: usize,
    /// Surrogate kernel override (ALEBO uses the Mahalanobis kernel, the
    /// other embedding methods ARD Matern-5/2).
    #[serde(default)]
    pub kernel: Option<KernelKind>,
    /// Projection strategy override for ALEBO (hypersphere by default).
    #[serde(default)]
    pub strategy: Option<Strategy>,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            laplace_samples: default_laplace_samples(),
            gp_restarts: default_gp_restarts(),
            acq_restarts: default_acq_restarts(),
            acq_probes: default_acq_probes(),
            rembo_projections: default_rembo_projections(),
            kernel: None,
            strategy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub problem_id: String,
    pub method: Method,
    /// Embedding dimension; ignored by Sobol.
    #[serde(default)]
    pub embed_dim: usize,
    /// Initial random points; defaults to 10, or 2 per projection for REMBO.
    #[serde(default)]
    pub n_init: Option<usize>,
    pub n_bo: usize,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub options: MethodOptions,
}

impl RunConfig {
    pub fn new(problem_id: &str, method: Method, embed_dim: usize, n_bo: usize, seed: u64) -> Self {
        RunConfig {
            schema: CONFIG_SCHEMA,
            problem_id: problem_id.to_string(),
            method,
            embed_dim,
            n_init: None,
            n_bo,
            seed,
            replicates: 1,
            options: MethodOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_points(&self) -> usize {
        self.n_init.unwrap_or(match self.method {
            Method::Rembo => 2 * self.options.rembo_projections,
            _ => 10,
        })
    }

    pub fn total_evaluations(&self) -> usize {
        self.initial_points() + self.n_bo
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {}, expected {CONFIG_SCHEMA}",
                self.schema
            )));
        }
        if self.method != Method::Sobol {
            if self.embed_dim == 0 {
                return Err(Error::Config("embed_dim must be positive".into()));
            }
            if self.initial_points() == 0 {
                return Err(Error::Config("n_init must be at least 1".into()));
            }
        } else if self.total_evaluations() == 0 {
            return Err(Error::Config("Sobol needs at least one evaluation".into()));
        }
        if self.method == Method::Rembo && self.options.rembo_projections == 0 {
            return Err(Error::Config("rembo_projections must be positive".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        Ok(())
    }

    /// Config of replicate `i`, whose seed is `seed + i`.
    pub fn replicate(&self, i: usize) -> RunConfig {
        RunConfig {
            seed: self.seed.wrapping_add(i as u64),
            replicates: 1,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Point in the embedding's own coordinates.
    pub embedded_point: Option<Vec<f64>>,
    pub ambient_point: Vec<f64>,
    pub objective: f64,
    pub constraints: Vec<f64>,
    pub feasible: bool,
    /// `None` until a feasible point has been evaluated.
    pub best_feasible_so_far: Option<f64>,
    pub wall_time_ms: f64,
    /// REMBO projection that proposed the point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub config: RunConfig,
    pub optimum_value: f64,
    pub records: Vec<TraceRecord>,
    pub best_point: Option<Vec<f64>>,
    pub best_value: Option<f64>,
}

impl OptimizationTrace {
    fn new(config: RunConfig, problem: &AmbientProblem) -> Self {
        OptimizationTrace {
            config,
            optimum_value: problem.optimum_value(),
            records: Vec::new(),
            best_point: None,
            best_value: None,
        }
    }

    fn push(
        &mut self,
        embedded: Option<&DVector<f64>>,
        ambient: &DVector<f64>,
        eval: Evaluation,
        started: Instant,
        projection: Option<usize>,
    ) {
        let feasible = eval.is_feasible(0.0);
        if feasible && self.best_value.is_none_or(|b| eval.objective < b) {
            self.best_value = Some(eval.objective);
            self.best_point = Some(ambient.iter().cloned().collect());
        }
        self.records.push(TraceRecord {
            iteration: self.records.len(),
            embedded_point: embedded.map(|y| y.iter().cloned().collect()),
            ambient_point: ambient.iter().cloned().collect(),
            objective: eval.objective,
            constraints: eval.constraints,
            feasible,
            best_feasible_so_far: self.best_value,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            projection,
        });
    }

    /// Best feasible value after each evaluation, `+inf` before the first
    /// feasible one.
    pub fn best_series(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.best_feasible_so_far.unwrap_or(f64::INFINITY))
            .collect()
    }

    pub fn final_best(&self) -> f64 {
        self.best_value.unwrap_or(f64::INFINITY)
    }

    pub fn wall_times_ms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.wall_time_ms).collect()
    }
}

/// Data gathered inside one embedding, in unit coordinates.
struct EmbeddedSearch {
    spec: EmbeddingSpec,
    domain: SearchDomain,
    inputs: Vec<DVector<f64>>,
    objectives: Vec<f64>,
    constraints: Vec<Vec<f64>>,
}

impl EmbeddedSearch {
    fn new(spec: EmbeddingSpec) -> Result<Self> {
        let domain = SearchDomain::for_region(&spec.feasible_region)?;
        Ok(EmbeddedSearch {
            spec,
            domain,
            inputs: Vec::new(),
            objectives: Vec::new(),
            constraints: Vec::new(),
        })
    }

    fn random_points(&self, n: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        self.domain.sampler.sample(n, &mut rng_from_seed(seed))
    }

    fn evaluate(
        &mut self,
        u: DVector<f64>,
        problem: &AmbientProblem,
        trace: &mut OptimizationTrace,
        started: Instant,
        projection: Option<usize>,
    ) -> Result<()> {
        let y = self.domain.to_embedded(&u);
        let x = self.spec.up_project(&y)?;
        let eval = problem.evaluate(&x)?;
        self.inputs.push(u);
        self.objectives.push(eval.objective);
        self.constraints.push(eval.constraints.clone());
        trace.push(Some(&y), &x, eval, started, projection);
        Ok(())
    }

    fn incumbent(&self) -> f64 {
        self.objectives
            .iter()
            .zip(&self.constraints)
            .filter(|(_, c)| c.iter().all(|v| *v <= 0.0))
            .map(|(f, _)| *f)
            .fold(f64::INFINITY, f64::min)
    }

    fn propose(&self, gp: &GpConfig, acq: &AcquisitionOptions, seed: u64) -> Result<DVector<f64>> {
        let n = self.inputs.len();
        let de = self.domain.dim();
        let x = DMatrix::from_fn(n, de, |i, j| self.inputs[i][j]);
        let fit_seed = derive_seed(seed, 0);
        let objective = fit_gp(&x, &DVector::from_vec(self.objectives.clone()), gp, fit_seed)?;
        let n_con = self.constraints.first().map_or(0, |c| c.len());
        let constraint_models = (0..n_con)
            .map(|j| {
                let t = DVector::from_fn(n, |i, _| self.constraints[i][j]);
                fit_gp(&x, &t, gp, derive_seed(seed, 1 + j as u64))
            })
            .collect::<Result<Vec<GpFit>>>()?;
        let problem = AcquisitionProblem::with_sampler(
            objective,
            constraint_models,
            self.incumbent(),
            self.domain.sampler.clone(),
        );
        Ok(optimize_acquisition_with(&problem, acq, derive_seed(seed, 1000))?.point)
    }
}

fn gp_config(kind: KernelKind, opts: &MethodOptions) -> GpConfig {
    let mut cfg = GpConfig::new(kind);
    cfg.restarts = opts.gp_restarts;
    cfg.laplace_samples = if kind.full_metric() { opts.laplace_samples } else { 0 };
    cfg
}

fn acq_options(opts: &MethodOptions) -> AcquisitionOptions {
    AcquisitionOptions {
        restarts: opts.acq_restarts,
        probes: opts.acq_probes,
        ..Default::default()
    }
}

fn check_method(config: &RunConfig, method: Method) -> Result<AmbientProblem> {
    if config.method != method {
        return Err(Error::Config(format!(
            "config is for {}, not {method}",
            config.method
        )));
    }
    config.validate()?;
    problem_by_id(&config.problem_id)
}

/// Single-embedding BO loop shared by ALEBO and HeSBO.
fn run_single_embedding(
    config: &RunConfig,
    problem: &AmbientProblem,
    spec: EmbeddingSpec,
    kernel: KernelKind,
) -> Result<OptimizationTrace> {
    let mut trace = OptimizationTrace::new(config.clone(), problem);
    let mut search = EmbeddedSearch::new(spec)?;
    let n_init = config.initial_points();
    let init = search.random_points(n_init, derive_seed(config.seed, 1))?;
    for (i, u) in init.into_iter().enumerate() {
        let started = Instant::now();
        search
            .evaluate(u, problem, &mut trace, started, None)
            .map_err(|e| e.at_iteration(i))?;
    }
    let gp = gp_config(kernel, &config.options);
    let acq = acq_options(&config.options);
    for t in 0..config.n_bo {
        let it = n_init + t;
        let started = Instant::now();
        let mut step = || -> Result<()> {
            let u = if search.inputs.len() < 2 {
                search.random_points(1, derive_seed(config.seed, 2 + it as u64))?.remove(0)
            } else {
                search.propose(&gp, &acq, derive_seed(config.seed, 2 + it as u64))?
            };
            search.evaluate(u, problem, &mut trace, started, None)
        };
        step().map_err(|e| e.at_iteration(it))?;
    }
    Ok(trace)
}

/// ALEBO: hypersphere embedding, polytope-constrained acquisition, and a
/// Mahalanobis GP with Laplace sampling of the metric.
pub fn run_alebo(config: &RunConfig) -> Result<OptimizationTrace> {
    let problem = check_method(config, Method::Alebo)?;
    let strategy = config.options.strategy.unwrap_or(Strategy::Hypersphere);
    if strategy == Strategy::Hesbo {
        return Err(Error::Config("ALEBO needs a dense projection strategy".into()));
    }
    let spec = generate_embedding(strategy, problem.ambient_dim, config.embed_dim, derive_seed(config.seed, 0))?;
    let kernel = config.options.kernel.unwrap_or(KernelKind::Mahalanobis);
    run_single_embedding(config, &problem, spec, kernel)
}

/// HeSBO: sign-hash embedding on `[-1, 1]^{d_e}` with an ARD GP.
pub fn run_hesbo(config: &RunConfig) -> Result<OptimizationTrace> {
    let problem = check_method(config, Method::Hesbo)?;
    let spec = generate_embedding(Strategy::Hesbo, problem.ambient_dim, config.embed_dim, derive_seed(config.seed, 0))?;
    let kernel = config.options.kernel.unwrap_or(KernelKind::ArdMatern52);
    run_single_embedding(config, &problem, spec, kernel)
}

/// REMBO: `k` independent Gaussian embeddings with clipping, each with its
/// own data and ARD GP, visited round-robin.
pub fn run_rembo(config: &RunConfig) -> Result<OptimizationTrace> {
    let problem = check_method(config, Method::Rembo)?;
    let k = config.options.rembo_projections;
    let mut searches = (0..k)
        .map(|j| {
            let spec = generate_rembo_embedding(problem.ambient_dim, config.embed_dim, derive_seed(config.seed, 100 + j as u64))?;
            EmbeddedSearch::new(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trace = OptimizationTrace::new(config.clone(), &problem);
    let n_init = config.initial_points();
    let mut init_counts = vec![0usize; k];
    for i in 0..n_init {
        init_counts[i % k] += 1;
    }
    let mut inits: Vec<std::vec::IntoIter<DVector<f64>>> = searches
        .iter()
        .enumerate()
        .map(|(j, s)| Ok(s.random_points(init_counts[j].max(1), derive_seed(config.seed, 200 + j as u64))?.into_iter()))
        .collect::<Result<_>>()?;
    for i in 0..n_init {
        let j = i % k;
        let started = Instant::now();
        let u = inits[j].next().expect("initial point count");
        searches[j]
            .evaluate(u, &problem, &mut trace, started, Some(j))
            .map_err(|e| e.at_iteration(i))?;
    }
    let gp = gp_config(config.options.kernel.unwrap_or(KernelKind::ArdMatern52), &config.options);
    let acq = acq_options(&config.options);
    for t in 0..config.n_bo {
        let it = n_init + t;
        let j = it % k;
        let started = Instant::now();
        let search = &mut searches[j];
        let step_seed = derive_seed(config.seed, 2 + it as u64);
        let u = if search.inputs.len() < 2 {
            search.random_points(1, step_seed).map(|mut v| v.remove(0))
        } else {
            search.propose(&gp, &acq, step_seed)
        }
        .map_err(|e| e.at_iteration(it))?;
        search
            .evaluate(u, &problem, &mut trace, started, Some(j))
            .map_err(|e| e.at_iteration(it))?;
    }
    Ok(trace)
}

/// Scrambled Sobol points in `[-1, 1]^D`.
pub fn run_sobol(problem: &AmbientProblem, n: usize, seed: u64) -> Result<OptimizationTrace> {
    let mut config = RunConfig::new(&problem.id, Method::Sobol, 0, n, seed);
    config.n_init = Some(0);
    let mut trace = OptimizationTrace::new(config, problem);
    let mut sobol = SobolSampler::new(problem.ambient_dim, Some(seed))?;
    for _ in 0..n {
        let started = Instant::now();
        let x = sobol.next_box();
        let eval = problem.evaluate(&x)?;
        trace.push(None, &x, eval, started, None);
    }
    Ok(trace)
}

/// Runs a single replicate of any method.
pub fn run(config: &RunConfig) -> Result<OptimizationTrace> {
    match config.method {
        Method::Alebo => run_alebo(config),
        Method::Hesbo => run_hesbo(config),
        Method::Rembo => run_rembo(config),
        Method::Sobol => {
            config.validate()?;
            let problem = problem_by_id(&config.problem_id)?;
            let mut trace = run_sobol(&problem, config.total_evaluations(), config.seed)?;
            trace.config = config.clone();
            Ok(trace)
        }
    }
}

/// Runs `config.replicates` replicates; replicate `i` uses seed `seed + i`.
pub fn run_replicates(config: &RunConfig) -> Result<Vec<OptimizationTrace>> {
    config.validate()?;
    (0..config.replicates).map(|i| run(&config.replicate(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::FeasibleRegion;

    fn quick(method: Method, problem: &str, n_bo: usize, seed: u64) -> RunConfig {
        let mut cfg = RunConfig::new(problem, method, 3, n_bo, seed);
        cfg.n_init = Some(if method == Method::Rembo { 4 } else { 5 });
        cfg.options.gp_restarts = 2;
        cfg.options.laplace_samples = 4;
        cfg.options.acq_restarts = 4;
        cfg.options.acq_probes = 64;
        cfg
    }

    fn check_trace(t: &OptimizationTrace, d: usize) {
        assert_eq!(t.records.len(), t.config.total_evaluations());
        let mut prev = f64::INFINITY;
        for r in &t.records {
            assert_eq!(r.ambient_point.len(), d);
            assert!(r.ambient_point.iter().all(|v| v.abs() <= 1.0));
            let b = r.best_feasible_so_far.unwrap_or(f64::INFINITY);
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn alebo_is_deterministic_and_feasible() {
        let cfg = quick(Method::Alebo, "branin_d20", 4, 3);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        check_trace(&a, 20);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.ambient_point, y.ambient_point);
            assert_eq!(x.objective.to_bits(), y.objective.to_bits());
        }
        let spec = generate_embedding(Strategy::Hypersphere, 20, 3, derive_seed(3, 0)).unwrap();
        let FeasibleRegion::Polytope(poly) = &spec.feasible_region else {
            panic!("dense embeddings are polytope-bounded")
        };
        for r in &a.records {
            let y = DVector::from_vec(r.embedded_point.clone().unwrap());
            assert!(poly.contains_with_tol(&y, 1e-6));
        }
    }

    #[test]
    fn zero_bo_iterations_keeps_initial_design() {
        let mut cfg = quick(Method::Alebo, "branin_d20", 0, 1);
        cfg.n_init = Some(10);
        let t = run(&cfg).unwrap();
        assert_eq!(t.records.len(), 10);
        let best = t.records.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
        assert_eq!(t.final_best(), best);
    }

    #[test]
    fn hesbo_never_clips() {
        let t = run(&quick(Method::Hesbo, "branin_d20", 3, 2)).unwrap();
        check_trace(&t, 20);
        for r in &t.records {
            let y = r.embedded_point.as_ref().unwrap();
            assert!(y.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn rembo_round_robin_accounting() {
        let mut cfg = quick(Method::Rembo, "branin_d20", 6, 4);
        cfg.n_init = None;
        let t = run(&cfg).unwrap();
        assert_eq!(t.records.len(), 8 + 6);
        check_trace(&t, 20);
        let mut counts = [0usize; 4];
        for (i, r) in t.records.iter().enumerate() {
            assert_eq!(r.projection, Some(i % 4));
            counts[r.projection.unwrap()] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), t.records.len());
        assert!(t.records[..8].iter().all(|r| r.projection.is_some()));
    }

    #[test]
    fn sobol_trace_starts_away_from_center_when_scrambled() {
        let problem = problem_by_id("branin_d30").unwrap();
        let t = run_sobol(&problem, 16, 5).unwrap();
        check_trace(&t, 30);
        assert!(t.records.iter().all(|r| r.embedded_point.is_none()));
        assert!(t.final_best() > problem.optimum_value());
    }

    #[test]
    fn constrained_runs_track_feasibility() {
        let t = run(&quick(Method::Alebo, "gramacy_d10", 4, 6)).unwrap();
        check_trace(&t, 10);
        for r in &t.records {
            assert_eq!(r.constraints.len(), 2);
            assert_eq!(r.feasible, r.constraints.iter().all(|c| *c <= 0.0));
        }
        if let Some(p) = &t.best_point {
            let problem = problem_by_id("gramacy_d10").unwrap();
            let e = problem.evaluate(&DVector::from_vec(p.clone())).unwrap();
            assert!(e.is_feasible(0.0));
            assert_eq!(Some(e.objective), t.best_value);
        }
    }

    #[test]
    fn config_json_rules() {
        let ok = r#"{"schema": 1, "problem_id": "branin_d100", "method": "alebo", "embed_dim": 4, "n_bo": 40, "seed": 7}"#;
        let cfg = RunConfig::from_json(ok).unwrap();
        assert_eq!(cfg.initial_points(), 10);
        assert_eq!(cfg.options, MethodOptions::default());
        let unknown = r#"{"schema": 1, "problem_id": "branin_d100", "method": "alebo", "embed_dim": 4, "n_bo": 40, "seed": 7, "budget": 3}"#;
        assert!(RunConfig::from_json(unknown).is_err());
        let wrong_schema = ok.replace(r#""schema": 1"#, r#""schema": 2"#);
        assert!(matches!(RunConfig::from_json(&wrong_schema), Err(Error::Config(_))));
        let no_init = ok.replace("40", r#"40, "n_init": 0"#);
        assert!(RunConfig::from_json(&no_init).is_err());
        let rembo = ok.replace("alebo", "rembo");
        assert_eq!(RunConfig::from_json(&rembo).unwrap().initial_points(), 8);
        let nested = ok.replace("40", r#"40, "options": {"kernel": "ard_matern52", "strategy": "gaussian"}"#);
        let cfg = RunConfig::from_json(&nested).unwrap();
        assert_eq!(cfg.options.kernel, Some(KernelKind::ArdMatern52));
        assert_eq!(cfg.options.strategy, Some(Strategy::Gaussian));
    }

    #[test]
    fn replicate_seeds_are_offsets() {
        let mut cfg = quick(Method::Sobol, "branin_d10", 5, 100);
        cfg.replicates = 3;
        let traces = run_replicates(&cfg).unwrap();
        let seeds: Vec<u64> = traces.iter().map(|t| t.config.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102]);
        let solo = run(&cfg.replicate(1)).unwrap();
        assert_eq!(solo.records, traces[1].records.iter().map(|r| TraceRecord { wall_time_ms: solo.records[r.iteration].wall_time_ms, ..r.clone() }).collect::<Vec<_>>());
    }

    #[test]
    fn wrong_method_is_rejected() {
        let cfg = quick(Method::Hesbo, "branin_d10", 1, 0);
        assert!(run_alebo(&cfg).is_err());
        let mut bad = quick(Method::Alebo, "nowhere_d10", 1, 0);
        assert!(matches!(run(&bad), Err(Error::UnknownProblem(_))));
        bad.problem_id = "branin_d10".into();
        bad.options.strategy = Some(Strategy::Hesbo);
        assert!(run(&bad).is_err());
    }
}
