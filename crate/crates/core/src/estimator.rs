//! Nadaraya-Watson estimation with high-probability error bounds.
//!
//! For a query point `a'` with kernel mass `κ(a') = Σ_t K_λ(a', a_t)` the
//! estimate of output `i` is the kernel-weighted mean of the measurements,
//! and the error bound is
//!
//! ```text
//! β(a') = L·λ + 2σ·α(a') / κ(a')
//! α(a') = sqrt(log(√2 / δ))                 if κ ≤ 1
//!       = sqrt(κ · log(sqrt(1 + κ) / δ))    if κ > 1
//! ```
//!
//! With no kernel mass the estimate is undefined and the bound is infinite.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Result};
use crate::kernel::KernelSpec;
use crate::spatial::RadiusIndex;

/// One experiment: the parameters tried and the noisy outputs measured there.
///
/// `values[0]` is the reward measurement and `values[1..]` the constraint
/// measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub point: Vec<f64>,
    pub values: Vec<f64>,
    pub iteration: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kernel: KernelSpec,
    /// Sub-Gaussian noise scale σ of the measurements.
    pub noise_std: f64,
    /// Failure probability δ of the bound.
    pub delta: f64,
    /// Lipschitz constant L shared by reward and constraints.
    pub lipschitz: f64,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return Err(domain(format!("noise scale must be positive, got {}", self.noise_std)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.lipschitz.is_finite() && self.lipschitz > 0.0) {
            return Err(domain(format!("Lipschitz constant must be positive, got {}", self.lipschitz)));
        }
        Ok(())
    }
}

/// Estimates of all outputs at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Per-output means; `None` when no observation carries kernel mass.
    pub mu: Vec<Option<f64>>,
    pub kappa: f64,
    pub alpha: f64,
    /// Shared by all outputs; `+∞` when `kappa == 0`.
    pub beta: f64,
}

/// `α` as a function of the kernel mass.
pub fn confidence_alpha(kappa: f64, delta: f64) -> f64 {
    if kappa <= 1.0 {
        (std::f64::consts::SQRT_2 / delta).ln().sqrt()
    } else {
        (kappa * ((1.0 + kappa).sqrt() / delta).ln()).sqrt()
    }
}

/// `β = L·λ + 2σ·α/κ`, or `+∞` without kernel mass.
pub fn confidence_beta(kappa: f64, alpha: f64, lipschitz: f64, bandwidth: f64, noise_std: f64) -> f64 {
    if kappa > 0.0 {
        lipschitz * bandwidth + 2.0 * noise_std * alpha / kappa
    } else {
        f64::INFINITY
    }
}

/// Append-only Nadaraya-Watson estimator over a fixed-radius index.
#[derive(Debug, Clone)]
pub struct NwEstimator {
    config: EstimatorConfig,
    outputs: usize,
    values: Vec<f64>,
    iterations: Vec<u64>,
    index: RadiusIndex,
    // Slightly inflated search radius; the kernel decides the exact support.
    search_r2: f64,
}

impl NwEstimator {
    /// `outputs` is `q + 1`: the reward plus `q` constraints.
    pub fn new(config: EstimatorConfig, dim: usize, outputs: usize) -> Result<Self> {
        config.validate()?;
        if dim == 0 || outputs == 0 {
            return Err(domain("estimator needs dim ≥ 1 and at least one output"));
        }
        let r = config.kernel.bandwidth() * (1.0 + 1e-9);
        Ok(Self {
            config,
            outputs,
            values: Vec::new(),
            iterations: Vec::new(),
            index: RadiusIndex::new(dim),
            search_r2: r * r,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn index(&self) -> &RadiusIndex {
        &self.index
    }

    pub fn observation_point(&self, t: usize) -> &[f64] {
        self.index.point(t)
    }

    pub fn observation_values(&self, t: usize) -> &[f64] {
        &self.values[t * self.outputs..(t + 1) * self.outputs]
    }

    pub fn observation_iteration(&self, t: usize) -> u64 {
        self.iterations[t]
    }

    pub fn ingest(&mut self, obs: Observation) -> Result<()> {
        check_dim(self.dim(), obs.point.len())?;
        if obs.values.len() != self.outputs {
            return Err(domain(format!(
                "observation carries {} values, expected {}",
                obs.values.len(),
                self.outputs
            )));
        }
        if obs.values.iter().chain(&obs.point).any(|v| !v.is_finite()) {
            return Err(domain("observation contains non-finite entries"));
        }
        self.index.push(&obs.point);
        self.values.extend_from_slice(&obs.values);
        self.iterations.push(obs.iteration);
        Ok(())
    }

    /// Ids of the observations within distance λ of `query`, ascending.
    pub fn radius_neighbors(&self, query: &[f64]) -> Result<Vec<usize>> {
        Ok(self.weighted_neighbors(query)?.into_iter().map(|(t, _)| t).collect())
    }

    // (id, K_λ) for every observation in the closed support ball.
    fn weighted_neighbors(&self, query: &[f64]) -> Result<Vec<(usize, f64)>> {
        check_dim(self.dim(), query.len())?;
        let kernel = &self.config.kernel;
        Ok(self
            .index
            .within_sq(query, self.search_r2)
            .into_iter()
            .filter(|&(_, d2)| kernel.in_support_sq(d2))
            .map(|(t, d2)| (t, kernel.weight_sq(d2)))
            .collect())
    }

    pub fn kappa(&self, query: &[f64]) -> Result<f64> {
        Ok(self.weighted_neighbors(query)?.iter().map(|&(_, w)| w).sum())
    }

    pub fn mu(&self, query: &[f64], output: usize) -> Result<Option<f64>> {
        self.check_output(output)?;
        Ok(self.estimate(query)?.mu[output])
    }

    pub fn alpha(&self, query: &[f64]) -> Result<f64> {
        Ok(confidence_alpha(self.kappa(query)?, self.config.delta))
    }

    pub fn beta(&self, query: &[f64]) -> Result<f64> {
        let kappa = self.kappa(query)?;
        Ok(self.beta_from_kappa(kappa))
    }

    fn beta_from_kappa(&self, kappa: f64) -> f64 {
        let c = &self.config;
        confidence_beta(
            kappa,
            confidence_alpha(kappa, c.delta),
            c.lipschitz,
            c.kernel.bandwidth(),
            c.noise_std,
        )
    }

    /// Means of all outputs plus `κ`, `α`, `β` from a single neighbor query.
    pub fn estimate(&self, query: &[f64]) -> Result<Estimate> {
        let neighbors = self.weighted_neighbors(query)?;
        let kappa: f64 = neighbors.iter().map(|&(_, w)| w).sum();
        let alpha = confidence_alpha(kappa, self.config.delta);
        let beta = self.beta_from_kappa(kappa);
        let mu = if kappa > 0.0 {
            let mut sums = vec![0.0; self.outputs];
            for &(t, w) in &neighbors {
                for (s, v) in sums.iter_mut().zip(self.observation_values(t)) {
                    *s += w * v;
                }
            }
            sums.into_iter().map(|s| Some(s / kappa)).collect()
        } else {
            vec![None; self.outputs]
        };
        Ok(Estimate {
            mu,
            kappa,
            alpha,
            beta,
        })
    }

    fn check_output(&self, output: usize) -> Result<()> {
        if output < self.outputs {
            Ok(())
        } else {
            Err(domain(format!("output index {output} out of range 0..{}", self.outputs)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn estimator(family: KernelFamily, noise_std: f64) -> NwEstimator {
        let config = EstimatorConfig {
            kernel: KernelSpec::new(family, 0.5, 0.1).unwrap(),
            noise_std,
            delta: 0.1,
            lipschitz: 1.75,
        };
        NwEstimator::new(config, 2, 2).unwrap()
    }

    fn obs(point: [f64; 2], values: [f64; 2]) -> Observation {
        Observation {
            point: point.to_vec(),
            values: values.to_vec(),
            iteration: 1,
        }
    }

    #[test]
    fn empty_state() {
        let est = estimator(KernelFamily::Boxcar, 0.1);
        assert_eq!(est.kappa(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(est.mu(&[0.0, 0.0], 0).unwrap(), None);
        assert_eq!(est.beta(&[0.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(est.radius_neighbors(&[0.0, 0.0]).unwrap().is_empty());
    }

    #[test]
    fn single_observation() {
        let mut est = estimator(KernelFamily::Boxcar, 0.1);
        est.ingest(obs([0.2, 0.2], [3.7, -1.0])).unwrap();
        assert_eq!(est.len(), 1);
        assert_eq!(est.index().len(), 1);
        assert_eq!(est.kappa(&[0.2, 0.2]).unwrap(), 1.0);
        assert_eq!(est.mu(&[0.2, 0.2], 0).unwrap(), Some(3.7));
        assert_eq!(est.mu(&[0.2, 0.2], 1).unwrap(), Some(-1.0));
        assert_eq!(est.mu(&[0.9, 0.9], 0).unwrap(), None);
        assert!(est.mu(&[0.2, 0.2], 2).is_err());
    }

    #[test]
    fn counts_and_averages() {
        let mut est = estimator(KernelFamily::Boxcar, 0.1);
        for k in 0..5 {
            est.ingest(obs([0.1 * k as f64 / 5.0, 0.0], [1.0, 0.0])).unwrap();
        }
        assert_eq!(est.kappa(&[0.05, 0.0]).unwrap(), 5.0);

        let mut est = estimator(KernelFamily::Boxcar, 0.1);
        est.ingest(obs([-0.2, 0.0], [1.0, 0.0])).unwrap();
        est.ingest(obs([0.2, 0.0], [3.0, 0.0])).unwrap();
        assert_eq!(est.mu(&[0.0, 0.0], 0).unwrap(), Some(2.0));
    }

    #[test]
    fn duplicates_are_retained() {
        let mut est = estimator(KernelFamily::Boxcar, 0.1);
        est.ingest(obs([0.0, 0.0], [1.0, 0.0])).unwrap();
        est.ingest(obs([0.0, 0.0], [2.0, 0.0])).unwrap();
        assert_eq!(est.kappa(&[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(est.mu(&[0.0, 0.0], 0).unwrap(), Some(1.5));
    }

    #[test]
    fn ingest_validation() {
        let mut est = estimator(KernelFamily::Boxcar, 0.1);
        assert!(est
            .ingest(Observation {
                point: vec![0.0],
                values: vec![0.0, 0.0],
                iteration: 1
            })
            .is_err());
        assert!(est
            .ingest(Observation {
                point: vec![0.0, 0.0],
                values: vec![0.0],
                iteration: 1
            })
            .is_err());
        assert!(est.ingest(obs([0.0, 0.0], [f64::NAN, 0.0])).is_err());
        assert!(est.kappa(&[0.0]).is_err());
        assert!(est.is_empty());
    }

    #[test]
    fn alpha_branches() {
        let a0 = confidence_alpha(0.0, 0.05);
        assert!((a0 - (2f64.sqrt() / 0.05).ln().sqrt()).abs() < 1e-15);
        // Continuous at κ = 1.
        for delta in [0.01, 0.3, 0.9] {
            let left = confidence_alpha(1.0, delta);
            let right = confidence_alpha(1.0 + 1e-12, delta);
            assert!((left - right).abs() < 1e-9);
        }
        // sqrt(4·log(√5/0.1)), extended precision.
        assert!((confidence_alpha(4.0, 0.1) - 3.525_509_352_823_274_5).abs() < 1e-12);
    }

    #[test]
    fn beta_values() {
        assert_eq!(confidence_beta(0.0, 1.0, 1.75, 0.5, 0.1), f64::INFINITY);
        assert_eq!(confidence_beta(3.0, 2.0, 1.75, 0.5, 0.0), 0.875);
        let b = confidence_beta(4.0, confidence_alpha(4.0, 0.1), 1.75, 0.5, 0.1);
        assert!((b - 1.051_275_467_641_163_7).abs() < 1e-12, "{b}");
    }

    #[test]
    fn beta_is_shared_and_matches_formula() {
        let mut est = estimator(KernelFamily::Epanechnikov, 0.1);
        est.ingest(obs([0.0, 0.0], [1.0, 2.0])).unwrap();
        est.ingest(obs([0.1, 0.0], [1.0, 2.0])).unwrap();
        let e = est.estimate(&[0.05, 0.0]).unwrap();
        let expected = confidence_beta(e.kappa, confidence_alpha(e.kappa, 0.1), 1.75, 0.5, 0.1);
        assert_eq!(e.beta, expected);
        assert_eq!(est.beta(&[0.05, 0.0]).unwrap(), expected);
    }
}
