//! The optimization loop shared by every confidence model.

use std::time::Instant;

use serde::Serialize;

use crate::benchmarks::ProblemSpec;
use crate::error::{check_dim, domain, Result};
use crate::estimator::{NwEstimator, Observation};
use crate::rng::mix_seed;

use super::bounds::{BoundState, IntervalTable};
use super::grid::DomainGrid;
use super::incremental::SetTracker;
use super::sets::{best_guess, compute_maximizers, select_next, PointSet};

/// Source of the per-iteration confidence intervals `Q_n`.
pub trait ConfidenceModel {
    fn name(&self) -> &'static str;

    fn ingest(&mut self, obs: Observation) -> Result<()>;

    /// Brings `table` up to date with everything ingested so far. `table`
    /// is owned by the loop and keeps its contents between calls, so a
    /// model only has to rewrite the entries that changed.
    fn refresh(&mut self, grid: &DomainGrid, table: &mut IntervalTable) -> Result<()>;
}

/// Nadaraya-Watson intervals with incremental refresh: a new observation
/// only changes the estimate at grid points inside its kernel support.
#[derive(Debug, Clone)]
pub struct NwModel {
    estimator: NwEstimator,
    // Table size at the last refresh; a mismatch forces a full rebuild.
    table_points: Option<usize>,
    // Observations not yet reflected in the interval table.
    pending_from: usize,
}

impl NwModel {
    pub fn new(estimator: NwEstimator) -> Self {
        Self {
            estimator,
            table_points: None,
            pending_from: 0,
        }
    }

    pub fn estimator(&self) -> &NwEstimator {
        &self.estimator
    }
}

impl ConfidenceModel for NwModel {
    fn name(&self) -> &'static str {
        "colsafe"
    }

    fn ingest(&mut self, obs: Observation) -> Result<()> {
        self.estimator.ingest(obs)
    }

    fn refresh(&mut self, grid: &DomainGrid, table: &mut IntervalTable) -> Result<()> {
        check_dim(grid.dim(), self.estimator.dim())?;
        if self.table_points != Some(table.points()) {
            for p in 0..grid.len() {
                table.set_from_estimator(p, &self.estimator, grid.point(p))?;
            }
            self.table_points = Some(table.points());
            self.pending_from = self.estimator.len();
            return Ok(());
        }
        let lambda = self.estimator.config().kernel.bandwidth();
        let mut dirty = vec![false; grid.len()];
        for t in self.pending_from..self.estimator.len() {
            let at = grid
                .index_of(self.estimator.observation_point(t))
                .ok_or_else(|| domain("observation is not on the grid"))?;
            for p in grid.near(at, lambda) {
                dirty[p] = true;
            }
        }
        for p in (0..grid.len()).filter(|&p| dirty[p]) {
            table.set_from_estimator(p, &self.estimator, grid.point(p))?;
        }
        self.pending_from = self.estimator.len();
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopConfig {
    pub budget: usize,
    pub lipschitz: f64,
    pub seed: u64,
    /// When false all timings are reported as zero, which makes traces
    /// byte-reproducible.
    pub record_timing: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub bounds_ms: f64,
    pub sets_ms: f64,
    pub select_ms: f64,
    pub ingest_ms: f64,
}

impl PhaseTimings {
    /// Bound update plus set computation plus acquisition.
    pub fn update_and_select_ms(&self) -> f64 {
        self.bounds_ms + self.sets_ms + self.select_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub n: usize,
    pub index: usize,
    pub point: Vec<f64>,
    pub measurements: Vec<f64>,
    pub safe_size: usize,
    pub maximizers_size: usize,
    pub expanders_size: usize,
    /// `e_n(a_n)`.
    pub expansion: usize,
    pub best_guess: usize,
    /// `l_n(â_n, 0)`.
    pub best_lower: f64,
    pub timings: PhaseTimings,
    /// Constraints violated by the exact outputs at `a_n`.
    pub true_violations: usize,
}

#[derive(Debug, Clone)]
pub struct LoopState {
    pub safe: PointSet,
    pub maximizers: PointSet,
    pub expanders: PointSet,
    /// `e_n(a)` for every grid point.
    pub expansion: Vec<usize>,
    pub best_guess: usize,
    pub history: Vec<IterationRecord>,
    tracker: SetTracker,
}

impl LoopState {
    fn initial(grid: &DomainGrid, outputs: usize, lipschitz: f64) -> Self {
        let tracker = SetTracker::new(grid, outputs, lipschitz);
        Self {
            safe: tracker.safe().clone(),
            maximizers: PointSet::empty(grid.len()),
            expanders: PointSet::empty(grid.len()),
            expansion: vec![0; grid.len()],
            best_guess: grid.safe_seed()[0],
            history: Vec::new(),
            tracker,
        }
    }

    /// Advances `S`, `M`, `G` and the best guess. `changed` lists the points
    /// whose bounds moved since the previous call.
    fn update_sets(&mut self, bounds: &BoundState, grid: &DomainGrid, changed: &[usize]) {
        self.tracker.update(bounds, grid, changed);
        self.safe = self.tracker.safe().clone();
        self.maximizers = compute_maximizers(&self.safe, bounds);
        self.expanders = self.tracker.expanders();
        self.expansion = self.tracker.counts().to_vec();
        self.best_guess = best_guess(&self.safe, bounds);
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub method: &'static str,
    pub state: LoopState,
    pub bounds: BoundState,
    /// `M_n ∪ G_n` ran empty before the budget was spent.
    pub converged: bool,
    /// Best guess after folding in the final measurement.
    pub best_guess: usize,
}

impl RunOutcome {
    pub fn records(&self) -> &[IterationRecord] {
        &self.state.history
    }

    pub fn total_true_violations(&self) -> usize {
        self.records().iter().map(|r| r.true_violations).sum()
    }
}

/// Receives every iteration right after its record is complete.
pub type Observer<'a> = dyn FnMut(&IterationRecord, &LoopState, &BoundState) -> Result<()> + 'a;

fn elapsed_ms(start: Instant, record: bool) -> f64 {
    if record {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// Runs up to `config.budget` iterations of bound update, set update,
/// acquisition, evaluation and ingestion. Stops early once no maximizer or
/// expander remains. Measurement noise for iteration `n` is seeded with
/// `mix_seed(config.seed, n)`.
pub fn run(
    model: &mut dyn ConfidenceModel,
    problem: &ProblemSpec,
    config: &LoopConfig,
    observer: &mut Observer<'_>,
) -> Result<RunOutcome> {
    if config.budget == 0 {
        return Err(domain("budget must be at least 1"));
    }
    if !(config.lipschitz.is_finite() && config.lipschitz > 0.0) {
        return Err(domain(format!("Lipschitz constant must be positive, got {}", config.lipschitz)));
    }
    let grid = problem.grid();
    let outputs = problem.outputs();
    let mut bounds = BoundState::new(grid, outputs);
    let mut table = IntervalTable::new(grid.len(), outputs);
    let mut state = LoopState::initial(grid, outputs, config.lipschitz);
    let mut converged = false;
    let timed = config.record_timing;

    for n in 1..=config.budget {
        let start = Instant::now();
        model.refresh(grid, &mut table)?;
        let changed = bounds.update_bounds(&table);
        let bounds_ms = elapsed_ms(start, timed);

        let start = Instant::now();
        state.update_sets(&bounds, grid, &changed);
        let sets_ms = elapsed_ms(start, timed);

        let start = Instant::now();
        let candidates = state.maximizers.union(&state.expanders);
        let next = select_next(&candidates, &bounds);
        let select_ms = elapsed_ms(start, timed);
        let Some(index) = next else {
            converged = true;
            break;
        };

        let measurements = problem.evaluate_index(index, mix_seed(config.seed, n as u64))?;
        let point = grid.point(index).to_vec();

        let start = Instant::now();
        model.ingest(Observation {
            point: point.clone(),
            values: measurements.clone(),
            iteration: n as u64,
        })?;
        let ingest_ms = elapsed_ms(start, timed);

        let record = IterationRecord {
            n,
            index,
            point,
            measurements,
            safe_size: state.safe.len(),
            maximizers_size: state.maximizers.len(),
            expanders_size: state.expanders.len(),
            expansion: state.expansion[index],
            best_guess: state.best_guess,
            best_lower: bounds.lower(state.best_guess, 0),
            timings: PhaseTimings {
                bounds_ms,
                sets_ms,
                select_ms,
                ingest_ms,
            },
            true_violations: problem.violations_at(index),
        };
        state.history.push(record);
        let last = state.history.last().expect("just pushed");
        observer(last, &state, &bounds)?;
    }

    // Fold the last measurement into the bounds before reporting.
    model.refresh(grid, &mut table)?;
    let changed = bounds.update_bounds(&table);
    state.update_sets(&bounds, grid, &changed);
    Ok(RunOutcome {
        method: model.name(),
        best_guess: state.best_guess,
        state,
        bounds,
        converged,
    })
}

/// [`run`] without an observer.
pub fn run_silent(model: &mut dyn ConfidenceModel, problem: &ProblemSpec, config: &LoopConfig) -> Result<RunOutcome> {
    run(model, problem, config, &mut |_, _, _| Ok(()))
}
