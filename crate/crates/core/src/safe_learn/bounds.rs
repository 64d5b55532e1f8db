use crate::error::{check_dim, Result};
use crate::estimator::NwEstimator;

use super::grid::DomainGrid;

/// Closed interval with extended-real endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn centered(center: f64, half_width: f64) -> Self {
        Self {
            lo: center - half_width,
            hi: center + half_width,
        }
    }
}

/// Confidence intervals `Q_n(a, i)` for every grid point and output,
/// stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTable {
    outputs: usize,
    cells: Vec<Interval>,
}

impl IntervalTable {
    /// Every cell starts as the whole real line.
    pub fn new(points: usize, outputs: usize) -> Self {
        Self {
            outputs,
            cells: vec![Interval::REAL_LINE; points * outputs],
        }
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn points(&self) -> usize {
        self.cells.len() / self.outputs
    }

    pub fn get(&self, point: usize, output: usize) -> Interval {
        self.cells[point * self.outputs + output]
    }

    pub fn set(&mut self, point: usize, output: usize, q: Interval) {
        self.cells[point * self.outputs + output] = q;
    }

    /// `Q_n = μ ± β` from one estimator query, or the real line without data.
    pub fn set_from_estimator(&mut self, point: usize, estimator: &NwEstimator, at: &[f64]) -> Result<()> {
        let e = estimator.estimate(at)?;
        for (i, mu) in e.mu.iter().enumerate() {
            let q = match mu {
                Some(m) => Interval::centered(*m, e.beta),
                None => Interval::REAL_LINE,
            };
            self.set(point, i, q);
        }
        Ok(())
    }
}

/// Running intersection `C_n = C_{n−1} ∩ Q_n` of the confidence intervals.
///
/// `lower` and `upper` are extended reals. The only arithmetic performed on
/// them is `x − c` for finite `c ≥ 0` and `upper − lower`, neither of which
/// can produce NaN because `lower < +∞` and `upper > −∞` always hold.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    outputs: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    intersection_violations: u64,
}

impl BoundState {
    /// `C_0`: constraints are known nonnegative on the seed, everything
    /// else is unconstrained.
    pub fn new(grid: &DomainGrid, outputs: usize) -> Self {
        let n = grid.len();
        let mut lower = vec![f64::NEG_INFINITY; n * outputs];
        let upper = vec![f64::INFINITY; n * outputs];
        for &s in grid.safe_seed() {
            for i in 1..outputs {
                lower[s * outputs + i] = 0.0;
            }
        }
        Self {
            outputs,
            lower,
            upper,
            intersection_violations: 0,
        }
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn points(&self) -> usize {
        self.lower.len() / self.outputs
    }

    pub fn lower(&self, point: usize, output: usize) -> f64 {
        self.lower[point * self.outputs + output]
    }

    pub fn upper(&self, point: usize, output: usize) -> f64 {
        self.upper[point * self.outputs + output]
    }

    /// `w_n = u_n − l_n`.
    pub fn width(&self, point: usize, output: usize) -> f64 {
        self.upper(point, output) - self.lower(point, output)
    }

    /// Number of `(point, output)` updates whose new interval was disjoint
    /// from the contained set.
    pub fn intersection_violations(&self) -> u64 {
        self.intersection_violations
    }

    /// Overwrites a cell. Meant for tests and diagnostics that need an
    /// arbitrary bound configuration; it does not enforce monotonicity.
    pub fn set_raw(&mut self, point: usize, output: usize, lower: f64, upper: f64) {
        assert!(lower <= upper && lower < f64::INFINITY && upper > f64::NEG_INFINITY);
        self.lower[point * self.outputs + output] = lower;
        self.upper[point * self.outputs + output] = upper;
    }

    /// Intersects one cell with `q`. An empty intersection keeps the
    /// previous interval and is counted. Returns whether the cell shrank.
    pub fn intersect(&mut self, point: usize, output: usize, q: Interval) -> bool {
        let k = point * self.outputs + output;
        let lo = self.lower[k].max(q.lo);
        let hi = self.upper[k].min(q.hi);
        if lo <= hi {
            let changed = lo != self.lower[k] || hi != self.upper[k];
            self.lower[k] = lo;
            self.upper[k] = hi;
            changed
        } else {
            self.intersection_violations += 1;
            false
        }
    }

    /// Intersects every cell with the matching entry of `table` and returns
    /// the points where some cell shrank, ascending.
    pub fn update_bounds(&mut self, table: &IntervalTable) -> Vec<usize> {
        assert_eq!(table.outputs(), self.outputs);
        assert_eq!(table.points(), self.points());
        let mut changed = Vec::new();
        for p in 0..self.points() {
            let mut any = false;
            for i in 0..self.outputs {
                any |= self.intersect(p, i, table.get(p, i));
            }
            if any {
                changed.push(p);
            }
        }
        changed
    }

    /// Full sweep: queries the estimator at every grid point and intersects.
    pub fn update_from_estimator(&mut self, estimator: &NwEstimator, grid: &DomainGrid) -> Result<()> {
        check_dim(grid.dim(), estimator.dim())?;
        check_dim(self.outputs, estimator.outputs())?;
        let mut table = IntervalTable::new(grid.len(), self.outputs);
        for p in 0..grid.len() {
            table.set_from_estimator(p, estimator, grid.point(p))?;
        }
        self.update_bounds(&table);
        Ok(())
    }
}
