use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use colsafe_core::benchmarks::ProblemSpec;
use colsafe_core::concentration::{
    check_self_normalized_bound, check_supermartingale, ConcentrationConfig, NoiseKind, WeightProcess,
};
use colsafe_core::estimator::NwEstimator;
use colsafe_core::gp::GpModel;
use colsafe_core::rng::mix_seed;
use colsafe_core::safe_learn::{run, ConfidenceModel, LoopConfig, NwModel, RunOutcome};
use colsafe_core::trace::TraceWriter;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Method, ProcessName};
use crate::output::{write_json, write_safe_set, Summary, SAFE_SET_FILE, SUMMARY_FILE, TRACE_FILE};
use crate::CliError;

pub const TIMING_FILE: &str = "timing.csv";
pub const COMPARE_FILE: &str = "compare.json";
pub const VERIFY_FILE: &str = "verify_bounds.json";

fn make_model(
    config: &ExperimentConfig,
    problem: &ProblemSpec,
    method: Method,
) -> Result<Box<dyn ConfidenceModel + Send>, CliError> {
    Ok(match method {
        Method::Colsafe => {
            let est = NwEstimator::new(config.estimator_config(problem)?, problem.dim(), problem.outputs())?;
            Box::new(NwModel::new(est))
        }
        Method::GpSafeopt => Box::new(
            GpModel::new(config.gp.params(), problem.dim(), problem.outputs())
                .map_err(|e| CliError::Config(format!("gp: {e}")))?,
        ),
    })
}

/// One run into `dir`: streams `trace.csv`, then writes `summary.json` and
/// `safe_set_final.csv`.
pub fn run_into(
    config: &ExperimentConfig,
    problem: &ProblemSpec,
    method: Method,
    seed: u64,
    dir: &Path,
    record_timing: bool,
) -> Result<(RunOutcome, Summary), CliError> {
    fs::create_dir_all(dir)?;
    let mut model = make_model(config, problem, method)?;
    let lipschitz = config.lipschitz(problem);
    let loop_config = LoopConfig {
        budget: config.budget,
        lipschitz,
        seed,
        record_timing,
    };
    let file = BufWriter::new(File::create(dir.join(TRACE_FILE))?);
    let mut trace = TraceWriter::new(file, problem.dim(), problem.constraints())?;
    let outcome = run(model.as_mut(), problem, &loop_config, &mut |record, _, _| {
        trace.write(record).map_err(colsafe_core::Error::from)
    })?;
    drop(trace);
    let summary = Summary::new(problem, &outcome, seed, config.budget, lipschitz);
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    write_safe_set(&dir.join(SAFE_SET_FILE), problem, &outcome)?;
    Ok((outcome, summary))
}

/// Runs the configured method `repeats` times in parallel. With more than
/// one repeat, run `r` uses seed `seed + r` and writes to `run-<r>`.
pub fn cmd_run(config: &ExperimentConfig) -> Result<Vec<Summary>, CliError> {
    let problem = config.build_problem()?;
    let out = &config.output_dir;
    if config.repeats == 1 {
        let (_, summary) = run_into(config, &problem, config.method, config.seed, out, config.record_timing)?;
        return Ok(vec![summary]);
    }
    (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let dir = out.join(format!("run-{r:03}"));
            let seed = config.seed.wrapping_add(r as u64);
            run_into(config, &problem, config.method, seed, &dir, config.record_timing).map(|(_, s)| s)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodComparison {
    pub method: String,
    pub iterations: usize,
    pub final_safe_size: usize,
    pub safe_sizes: Vec<usize>,
    pub total_violations: usize,
    pub best_guess_true_reward: f64,
    /// Mean of bound update, set update and acquisition per iteration.
    pub mean_update_select_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub problem: String,
    pub seed: u64,
    pub budget: usize,
    pub methods: Vec<MethodComparison>,
}

/// Runs both methods on the same problem and seed with timing enabled.
/// Writes one run directory per method, `timing.csv` and `compare.json`.
pub fn cmd_compare(config: &ExperimentConfig) -> Result<CompareReport, CliError> {
    let problem = config.build_problem()?;
    let out = &config.output_dir;
    fs::create_dir_all(out)?;
    let mut timing = BufWriter::new(File::create(out.join(TIMING_FILE))?);
    writeln!(timing, "method,n,t_ms,t_update_select_ms,safe_size")?;
    let mut methods = Vec::new();
    for method in [Method::Colsafe, Method::GpSafeopt] {
        let dir = out.join(method.as_str());
        let (outcome, summary) = run_into(config, &problem, method, config.seed, &dir, true)?;
        for r in outcome.records() {
            let t = &r.timings;
            writeln!(
                timing,
                "{method},{},{},{},{}",
                r.n,
                t.update_and_select_ms() + t.ingest_ms,
                t.update_and_select_ms(),
                r.safe_size
            )?;
        }
        let records = outcome.records();
        let mean = records.iter().map(|r| r.timings.update_and_select_ms()).sum::<f64>() / records.len().max(1) as f64;
        methods.push(MethodComparison {
            method: method.to_string(),
            iterations: records.len(),
            final_safe_size: summary.final_safe_size,
            safe_sizes: records.iter().map(|r| r.safe_size).collect(),
            total_violations: summary.total_violations,
            best_guess_true_reward: summary.best_guess.true_reward,
            mean_update_select_ms: mean,
        });
    }
    timing.flush()?;
    let report = CompareReport {
        problem: problem.name().to_string(),
        seed: config.seed,
        budget: config.budget,
        methods,
    };
    write_json(&out.join(COMPARE_FILE), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCell {
    pub delta: f64,
    pub length: usize,
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleCell {
    pub eta: f64,
    pub length: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub overflowed: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub sigma: f64,
    pub noise: NoiseKind,
    pub process: ProcessName,
    pub bound_multiplier: f64,
    pub self_normalized: Vec<BoundCell>,
    pub supermartingale: Vec<MartingaleCell>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .self_normalized
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("delta={} n={}: rate {} exceeds delta", c.delta, c.length, c.rate))
            .collect();
        out.extend(
            self.supermartingale
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("eta={}: mean {} exceeds 1 + 3 standard errors ({})", c.eta, c.mean, c.std_error)),
        );
        out
    }
}

/// Runs the concentration matrix and writes `verify_bounds.json`. The
/// report's `pass` is false iff some cell failed.
pub fn cmd_verify_bounds(config: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let v = &config.verify;
    let weights = match v.process {
        ProcessName::Uniform => WeightProcess::Uniform,
        ProcessName::Zero => WeightProcess::Zero,
    };
    let mut warnings = Vec::new();
    let cells: Vec<(f64, usize)> = v
        .deltas
        .iter()
        .flat_map(|&d| v.lengths.iter().map(move |&n| (d, n)))
        .collect();
    if cells.is_empty() && v.etas.is_empty() {
        warnings.push("verification matrix is empty; nothing was checked".to_string());
    }
    let mut self_normalized = Vec::new();
    for (k, &(delta, length)) in cells.iter().enumerate() {
        let cfg = ConcentrationConfig {
            length,
            noise_std: v.sigma,
            delta,
            trials: v.trials,
            noise: v.noise,
            weights: weights.clone(),
            seed: mix_seed(config.seed, k as u64),
            bound_multiplier: v.bound_multiplier,
        };
        let check = check_self_normalized_bound(&cfg)?;
        self_normalized.push(BoundCell {
            delta,
            length,
            trials: check.trials,
            violations: check.violations,
            rate: check.rate,
            pass: check.rate <= delta,
        });
    }
    let mut supermartingale = Vec::new();
    for (k, &eta) in v.etas.iter().enumerate() {
        let cfg = ConcentrationConfig {
            length: v.martingale_length,
            noise_std: v.sigma,
            delta: 0.5,
            trials: v.martingale_trials,
            noise: v.noise,
            weights: weights.clone(),
            seed: mix_seed(config.seed, (cells.len() + k) as u64),
            bound_multiplier: 1.0,
        };
        let m = check_supermartingale(&cfg, eta)?;
        supermartingale.push(MartingaleCell {
            eta,
            length: v.martingale_length,
            trials: m.trials,
            mean: m.mean,
            std_error: m.std_error,
            overflowed: m.overflowed,
            pass: m.within_bound(3.0),
        });
    }
    let pass = self_normalized.iter().all(|c| c.pass) && supermartingale.iter().all(|c| c.pass);
    let report = VerifyReport {
        sigma: v.sigma,
        noise: v.noise,
        process: v.process,
        bound_multiplier: v.bound_multiplier,
        self_normalized,
        supermartingale,
        warnings,
        pass,
    };
    fs::create_dir_all(&config.output_dir)?;
    write_json(&config.output_dir.join(VERIFY_FILE), &report)?;
    Ok(report)
}

/// Applies command-line overrides on top of a loaded config.
pub fn apply_overrides(config: &mut ExperimentConfig, seed: Option<u64>, out: Option<PathBuf>, repeats: Option<usize>) -> Result<(), CliError> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(o) = out {
        config.output_dir = o;
    }
    if let Some(r) = repeats {
        if r == 0 {
            return Err(CliError::Config("--repeats must be at least 1".into()));
        }
        config.repeats = r;
    }
    Ok(())
}
