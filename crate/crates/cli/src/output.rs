//! Files written by a single run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use colsafe_core::benchmarks::ProblemSpec;
use colsafe_core::safe_learn::{IterationRecord, RunOutcome};
use serde::Serialize;

use crate::CliError;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SAFE_SET_FILE: &str = "safe_set_final.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub index: usize,
    pub point: Vec<f64>,
    pub true_reward: f64,
    pub true_constraints: Vec<f64>,
}

impl PointReport {
    fn new(problem: &ProblemSpec, index: usize) -> Self {
        let truth = problem.truth_at(index);
        Self {
            index,
            point: problem.grid().point(index).to_vec(),
            true_reward: truth[0],
            true_constraints: truth[1..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WallTimes {
    pub bounds: f64,
    pub sets: f64,
    pub select: f64,
    pub ingest: f64,
    pub total: f64,
}

impl WallTimes {
    fn sum(records: &[IterationRecord]) -> Self {
        let mut w = WallTimes::default();
        for r in records {
            w.bounds += r.timings.bounds_ms;
            w.sets += r.timings.sets_ms;
            w.select += r.timings.select_ms;
            w.ingest += r.timings.ingest_ms;
        }
        w.total = w.bounds + w.sets + w.select + w.ingest;
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub method: String,
    pub problem: String,
    pub seed: u64,
    pub budget: usize,
    pub iterations: usize,
    pub converged: bool,
    pub lipschitz: f64,
    pub noise_std: f64,
    pub grid_size: usize,
    pub best_guess: PointReport,
    /// `l(â, 0)` after the final update; `null` when still unbounded.
    pub best_guess_lower_bound: Option<f64>,
    pub safe_optimum: Option<PointReport>,
    /// Safe optimum reward minus best guess reward.
    pub reward_gap: Option<f64>,
    /// Best exact reward over the safe seed.
    pub seed_reward: f64,
    /// Constraint violations by the exact outputs at the sampled points.
    pub total_violations: usize,
    pub intersection_violations: u64,
    pub final_safe_size: usize,
    pub wall_time_ms: WallTimes,
}

impl Summary {
    pub fn new(problem: &ProblemSpec, outcome: &RunOutcome, seed: u64, budget: usize, lipschitz: f64) -> Self {
        let best = PointReport::new(problem, outcome.best_guess);
        let optimum = problem.safe_optimum().map(|i| PointReport::new(problem, i));
        let lower = outcome.bounds.lower(outcome.best_guess, 0);
        Self {
            method: outcome.method.to_string(),
            problem: problem.name().to_string(),
            seed,
            budget,
            iterations: outcome.records().len(),
            converged: outcome.converged,
            lipschitz,
            noise_std: problem.noise_std(),
            grid_size: problem.grid().len(),
            reward_gap: optimum.as_ref().map(|o| o.true_reward - best.true_reward),
            best_guess: best,
            best_guess_lower_bound: lower.is_finite().then_some(lower),
            safe_optimum: optimum,
            seed_reward: problem
                .grid()
                .safe_seed()
                .iter()
                .map(|&s| problem.truth_at(s)[0])
                .fold(f64::NEG_INFINITY, f64::max),
            total_violations: outcome.total_true_violations(),
            intersection_violations: outcome.bounds.intersection_violations(),
            final_safe_size: outcome.state.safe.len(),
            wall_time_ms: WallTimes::sum(outcome.records()),
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Final membership of every grid point in `S`, `M` and `G`.
pub fn write_safe_set(path: &Path, problem: &ProblemSpec, outcome: &RunOutcome) -> Result<(), CliError> {
    let grid = problem.grid();
    let state = &outcome.state;
    let mut out = BufWriter::new(File::create(path)?);
    let coords: Vec<String> = (0..grid.dim()).map(|k| format!("a_{k}")).collect();
    writeln!(out, "idx,{},safe,maximizer,expander,e_n", coords.join(","))?;
    for p in 0..grid.len() {
        let point: Vec<String> = grid.point(p).iter().map(f64::to_string).collect();
        writeln!(
            out,
            "{p},{},{},{},{},{}",
            point.join(","),
            u8::from(state.safe.contains(p)),
            u8::from(state.maximizers.contains(p)),
            u8::from(state.expanders.contains(p)),
            state.expansion[p]
        )?;
    }
    out.flush()?;
    Ok(())
}
