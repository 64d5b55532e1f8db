//! Confidence bounds, safe-set bookkeeping and the optimization loop.

mod bounds;
mod grid;
mod incremental;
mod run;
mod sets;

pub use bounds::{BoundState, Interval, IntervalTable};
pub use grid::DomainGrid;
pub use run::{run, run_silent, ConfidenceModel, IterationRecord, LoopConfig, LoopState, NwModel, Observer, PhaseTimings, RunOutcome};
pub use sets::{best_guess, compute_expanders, compute_maximizers, select_next, update_safe_set, PointSet};
