//! Exact Gaussian-process baseline.
//!
//! Deliberately naive: every refresh rebuilds the dense kernel matrix and
//! refactorizes it, so one iteration costs `O(n³ + n²·|A|)`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Error, Result};
use crate::estimator::Observation;
use crate::kernel::distance;
use crate::safe_learn::{ConfidenceModel, DomainGrid, Interval, IntervalTable};

const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpParams {
    /// Matérn ν = 3/2 length scale.
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    /// Interval half-width in posterior standard deviations.
    pub confidence_scale: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        Self {
            length_scale: 0.1,
            signal_variance: 1.0,
            noise_variance: 1e-4,
            confidence_scale: 2.0,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length_scale", self.length_scale),
            ("signal_variance", self.signal_variance),
            ("confidence_scale", self.confidence_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("gp {name} must be positive, got {v}")));
            }
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(domain(format!("gp noise_variance must be nonnegative, got {}", self.noise_variance)));
        }
        Ok(())
    }
}

/// Posterior mean and variance at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct GpModel {
    params: GpParams,
    dim: usize,
    outputs: usize,
    points: Vec<f64>,
    values: Vec<f64>,
    fitted: Option<Fit>,
}

#[derive(Debug, Clone)]
struct Fit {
    n: usize,
    chol: Cholesky<f64, Dyn>,
    // K⁻¹ Y, one column per output.
    weights: DMatrix<f64>,
    jitter: f64,
}

impl GpModel {
    pub fn new(params: GpParams, dim: usize, outputs: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            dim,
            outputs,
            points: Vec::new(),
            values: Vec::new(),
            fitted: None,
        })
    }

    pub fn params(&self) -> &GpParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Jitter added to the diagonal by the last successful fit.
    pub fn jitter(&self) -> Option<f64> {
        self.fitted.as_ref().map(|f| f.jitter)
    }

    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let s = 3f64.sqrt() * distance(a, b) / self.params.length_scale;
        self.params.signal_variance * (1.0 + s) * (-s).exp()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, obs: &Observation) -> Result<()> {
        check_dim(self.dim, obs.point.len())?;
        check_dim(self.outputs, obs.values.len())?;
        if obs.values.iter().chain(&obs.point).any(|v| !v.is_finite()) {
            return Err(domain("observation contains non-finite entries"));
        }
        self.points.extend_from_slice(&obs.point);
        self.values.extend_from_slice(&obs.values);
        self.fitted = None;
        Ok(())
    }

    /// Replaces the data set and refits.
    pub fn gp_fit(&mut self, observations: &[Observation]) -> Result<()> {
        self.points.clear();
        self.values.clear();
        for obs in observations {
            self.push(obs)?;
        }
        self.fit()
    }

    /// Builds and factorizes `K + σ_n² I` from scratch.
    pub fn fit(&mut self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            self.fitted = None;
            return Ok(());
        }
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let k = self.kernel(self.point(i), self.point(j));
                gram[(i, j)] = k;
                gram[(j, i)] = k;
            }
            gram[(i, i)] += self.params.noise_variance;
        }
        let targets = DMatrix::from_row_slice(n, self.outputs, &self.values);
        for jitter in JITTER_LADDER {
            let mut m = gram.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = m.cholesky() {
                let weights = chol.solve(&targets);
                self.fitted = Some(Fit {
                    n,
                    chol,
                    weights,
                    jitter,
                });
                return Ok(());
            }
        }
        Err(Error::Factorization {
            size: n,
            jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    fn fit_ref(&self) -> Result<Option<&Fit>> {
        if self.is_empty() {
            return Ok(None);
        }
        match &self.fitted {
            Some(f) if f.n == self.len() => Ok(Some(f)),
            _ => Err(domain("gp model has unfitted observations; call fit()")),
        }
    }

    pub fn predict(&self, a: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, a.len())?;
        let mut out = self.predict_many(a, 1)?;
        Ok(out.pop().expect("one prediction"))
    }

    /// Posterior at `m` points stored flat in `points`.
    pub fn predict_many(&self, points: &[f64], m: usize) -> Result<Vec<Prediction>> {
        check_dim(self.dim * m, points.len())?;
        let prior = self.params.signal_variance;
        let Some(fit) = self.fit_ref()? else {
            return Ok((0..m)
                .map(|_| Prediction {
                    mean: vec![0.0; self.outputs],
                    variance: prior,
                })
                .collect());
        };
        let n = fit.n;
        let cross = DMatrix::from_fn(n, m, |i, j| self.kernel(self.point(i), &points[j * self.dim..(j + 1) * self.dim]));
        let means = cross.transpose() * &fit.weights;
        let v = fit.chol.l().solve_lower_triangular(&cross).expect("cholesky factor is invertible");
        Ok((0..m)
            .map(|j| Prediction {
                mean: means.row(j).iter().copied().collect(),
                variance: (prior - v.column(j).norm_squared()).max(0.0),
            })
            .collect())
    }

    /// `[m − b·s, m + b·s]` for one output.
    pub fn gp_interval(&self, a: &[f64], output: usize) -> Result<Interval> {
        if output >= self.outputs {
            return Err(domain(format!("output index {output} out of range")));
        }
        let p = self.predict(a)?;
        Ok(Interval::centered(p.mean[output], self.params.confidence_scale * p.variance.sqrt()))
    }
}

impl ConfidenceModel for GpModel {
    fn name(&self) -> &'static str {
        "gp-safeopt"
    }

    fn ingest(&mut self, obs: Observation) -> Result<()> {
        self.push(&obs)
    }

    fn refresh(&mut self, grid: &DomainGrid, table: &mut IntervalTable) -> Result<()> {
        self.fit()?;
        let preds = self.predict_many(grid.points(), grid.len())?;
        let b = self.params.confidence_scale;
        for (p, pred) in preds.iter().enumerate() {
            let half = b * pred.variance.sqrt();
            for (i, m) in pred.mean.iter().enumerate() {
                table.set(p, i, Interval::centered(*m, half));
            }
        }
        Ok(())
    }
}
