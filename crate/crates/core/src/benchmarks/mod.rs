//! Benchmark problems with known ground truth.
//!
//! A [`ProblemSpec`] is a finite grid together with the exact reward and
//! constraint values at every grid point. Measurements add i.i.d. Gaussian
//! noise of scale σ, which is σ-sub-Gaussian.

pub mod lqr;
pub mod synthetic;

pub use lqr::{make_lqr_problem, LqrPlant, LQR_LIPSCHITZ, LQR_RESOLUTION};
pub use synthetic::make_synthetic_2d;

use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, domain, Error, Result};
use crate::rng::{derive_rng, Stream};
use crate::safe_learn::DomainGrid;

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    name: String,
    grid: DomainGrid,
    constraints: usize,
    noise_std: f64,
    lipschitz: f64,
    // Exact outputs, point-major, `constraints + 1` per point.
    truth: Vec<f64>,
}

impl ProblemSpec {
    /// Tabulates `h` on every grid point. `h` returns the reward followed by
    /// the `constraints` constraint values.
    pub fn from_fn(
        name: impl Into<String>,
        grid: DomainGrid,
        constraints: usize,
        noise_std: f64,
        lipschitz: f64,
        mut h: impl FnMut(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(domain(format!("noise scale must be nonnegative, got {noise_std}")));
        }
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(domain(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        let mut truth = Vec::with_capacity(grid.len() * (constraints + 1));
        for p in 0..grid.len() {
            let v = h(grid.point(p));
            check_dim(constraints + 1, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(domain(format!("non-finite ground truth at grid point {p}")));
            }
            truth.extend(v);
        }
        Ok(Self {
            name: name.into(),
            grid,
            constraints,
            noise_std,
            lipschitz,
            truth,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Number of constraints `q`.
    pub fn constraints(&self) -> usize {
        self.constraints
    }

    pub fn outputs(&self) -> usize {
        self.constraints + 1
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Declared Lipschitz constant for reward and constraints.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn with_noise_std(mut self, noise_std: f64) -> Result<Self> {
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(domain(format!("noise scale must be nonnegative, got {noise_std}")));
        }
        self.noise_std = noise_std;
        Ok(self)
    }

    /// Exact outputs at grid point `index`.
    pub fn truth_at(&self, index: usize) -> &[f64] {
        let q = self.outputs();
        &self.truth[index * q..(index + 1) * q]
    }

    /// Exact outputs at `a`, or `None` off the grid.
    pub fn ground_truth(&self, a: &[f64]) -> Option<&[f64]> {
        self.grid.index_of(a).map(|i| self.truth_at(i))
    }

    /// Noisy measurement `[f(a) + ω_0, g_1(a) + ω_1, …]`, a pure function of
    /// `(a, seed)`.
    pub fn evaluate(&self, a: &[f64], seed: u64) -> Result<Vec<f64>> {
        let index = self
            .grid
            .index_of(a)
            .ok_or_else(|| Error::Evaluation(format!("point {a:?} is not on the problem grid")))?;
        self.evaluate_index(index, seed)
    }

    /// [`ProblemSpec::evaluate`] at grid point `index`.
    pub fn evaluate_index(&self, index: usize, seed: u64) -> Result<Vec<f64>> {
        if index >= self.grid.len() {
            return Err(Error::Evaluation(format!("grid index {index} out of range")));
        }
        let mut values = self.truth_at(index).to_vec();
        if self.noise_std > 0.0 {
            let normal = Normal::new(0.0, self.noise_std).expect("validated noise scale");
            let mut rng = derive_rng(seed, Stream::ProblemNoise, 0);
            for v in &mut values {
                *v += normal.sample(&mut rng);
            }
        }
        Ok(values)
    }

    /// Number of constraints violated by the exact outputs at `index`.
    pub fn violations_at(&self, index: usize) -> usize {
        self.truth_at(index)[1..].iter().filter(|&&g| g < 0.0).count()
    }

    /// Grid point maximizing the exact reward subject to all exact
    /// constraints, smallest index on ties.
    pub fn safe_optimum(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for p in 0..self.grid.len() {
            if self.violations_at(p) > 0 {
                continue;
            }
            let f = self.truth_at(p)[0];
            if best.is_none_or(|(_, b)| f > b) {
                best = Some((p, f));
            }
        }
        best.map(|(p, _)| p)
    }

    /// Largest pairwise slope `|h(a) − h(a')| / ‖a − a'‖` over the grid,
    /// maximized over outputs. Quadratic in the grid size.
    pub fn empirical_lipschitz(&self) -> f64 {
        let n = self.grid.len();
        let q = self.outputs();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..a {
                let d = self.grid.distance(a, b);
                let (ha, hb) = (self.truth_at(a), self.truth_at(b));
                for i in 0..q {
                    worst = worst.max((ha[i] - hb[i]).abs() / d);
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ProblemSpec {
        let grid = DomainGrid::lattice(&[0.0], &[1.0], &[11], &[vec![0.0]], |_| true).unwrap();
        ProblemSpec::from_fn("toy", grid, 1, 0.1, 2.0, |a| vec![a[0], 0.5 - a[0]]).unwrap()
    }

    #[test]
    fn noise_free_evaluation_is_exact() {
        let p = toy().with_noise_std(0.0).unwrap();
        assert_eq!(p.evaluate(&[0.3], 1).unwrap(), p.ground_truth(&[0.3]).unwrap());
    }

    #[test]
    fn evaluation_is_deterministic_per_seed() {
        let p = toy();
        assert_eq!(p.evaluate(&[0.3], 9).unwrap(), p.evaluate(&[0.3], 9).unwrap());
        assert_ne!(p.evaluate(&[0.3], 9).unwrap(), p.evaluate(&[0.3], 10).unwrap());
    }

    #[test]
    fn off_grid_point_is_rejected() {
        assert!(toy().evaluate(&[0.35], 1).is_err());
        assert!(toy().evaluate(&[0.3, 0.0], 1).is_err());
    }

    #[test]
    fn empirical_mean_matches_truth() {
        let p = toy();
        let n = 10_000;
        let truth = p.ground_truth(&[0.3]).unwrap().to_vec();
        let mut sums = [0.0; 2];
        for s in 0..n {
            for (acc, v) in sums.iter_mut().zip(p.evaluate(&[0.3], s).unwrap()) {
                *acc += v;
            }
        }
        for (s, t) in sums.iter().zip(&truth) {
            assert!((s / n as f64 - t).abs() <= 4.0 * p.noise_std() / 100.0);
        }
    }

    #[test]
    fn optimum_and_slopes() {
        let p = toy();
        assert_eq!(p.grid().point(p.safe_optimum().unwrap()), &[0.5]);
        assert!((p.empirical_lipschitz() - 1.0).abs() < 1e-9);
        assert_eq!(p.violations_at(10), 1);
    }
}
