//! Monte-Carlo checks of the noise concentration results behind the
//! estimator's error bound.
//!
//! For a bounded weight process `v_t` and i.i.d. σ-sub-Gaussian noise `ω_t`:
//!
//! * `E[exp(Σ_t η ω_t v_t / σ − ½ η² v_t²)] ≤ 1` for every real `η`;
//! * `|Σ v_t ω_t| ≤ sqrt(2σ² log(sqrt(1 + V_n)/δ)(1 + V_n))` with
//!   probability at least `1 − δ`, where `V_n = Σ v_t²`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::{derive_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Gaussian,
    /// `±σ` with equal probability.
    Rademacher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightProcess {
    /// i.i.d. uniform on `[0, 1]`.
    Uniform,
    Zero,
    /// A fixed sequence, e.g. kernel weights recorded from a run. Must be at
    /// least `length` long.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    /// Number of terms `n` per trial.
    pub length: usize,
    pub noise_std: f64,
    pub delta: f64,
    pub trials: usize,
    pub noise: NoiseKind,
    pub weights: WeightProcess,
    pub seed: u64,
    /// Scales the bound before comparing. Only values below 1 are useful and
    /// only for forcing failures in tests.
    pub bound_multiplier: f64,
}

impl ConcentrationConfig {
    pub fn new(length: usize, noise_std: f64, delta: f64, trials: usize, seed: u64) -> Self {
        Self {
            length,
            noise_std,
            delta,
            trials,
            noise: NoiseKind::Gaussian,
            weights: WeightProcess::Uniform,
            seed,
            bound_multiplier: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.trials == 0 {
            return Err(domain("concentration check needs length ≥ 1 and trials ≥ 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        // σ = 0 is accepted as the degenerate noise-free case.
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(domain(format!("noise scale must be nonnegative, got {}", self.noise_std)));
        }
        if !(self.bound_multiplier.is_finite() && self.bound_multiplier > 0.0) {
            return Err(domain("bound multiplier must be positive"));
        }
        if let WeightProcess::Fixed(w) = &self.weights {
            if w.len() < self.length {
                return Err(domain("fixed weight sequence is shorter than the trial length"));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(domain("fixed weights must be finite"));
            }
        }
        Ok(())
    }

    fn weight(&self, t: usize, rng: &mut ChaCha8Rng) -> f64 {
        match &self.weights {
            WeightProcess::Uniform => rng.random::<f64>(),
            WeightProcess::Zero => 0.0,
            WeightProcess::Fixed(w) => w[t],
        }
    }

    fn noise(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.noise {
            NoiseKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.noise_std * z
            }
            NoiseKind::Rademacher => {
                if rng.random::<bool>() {
                    self.noise_std
                } else {
                    -self.noise_std
                }
            }
        }
    }

    fn trial_rng(&self, trial: usize) -> ChaCha8Rng {
        derive_rng(self.seed, Stream::Concentration, trial as u64)
    }
}

/// `sqrt(2σ² log(sqrt(1 + V)/δ)(1 + V))`.
pub fn self_normalized_bound(v_sum: f64, noise_std: f64, delta: f64) -> f64 {
    let one_plus = 1.0 + v_sum;
    (2.0 * noise_std * noise_std * (one_plus.sqrt() / delta).ln() * one_plus).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
}

/// Fraction of trials in which `|S_n|` exceeds the self-normalized bound.
pub fn check_self_normalized_bound(cfg: &ConcentrationConfig) -> Result<BoundCheck> {
    cfg.validate()?;
    let violations = (0..cfg.trials)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = cfg.trial_rng(trial);
            let (mut s, mut v) = (0.0, 0.0);
            for t in 0..cfg.length {
                let w = cfg.weight(t, &mut rng);
                s += w * cfg.noise(&mut rng);
                v += w * w;
            }
            s.abs() > cfg.bound_multiplier * self_normalized_bound(v, cfg.noise_std, cfg.delta)
        })
        .count();
    Ok(BoundCheck {
        trials: cfg.trials,
        violations,
        rate: violations as f64 / cfg.trials as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleEstimate {
    /// Mean over the trials whose exponent stayed finite.
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    /// Trials whose exponent would overflow `exp`; excluded from `mean`.
    pub overflowed: usize,
}

impl MartingaleEstimate {
    pub fn within_bound(&self, standard_errors: f64) -> bool {
        self.overflowed == 0 && self.mean <= 1.0 + standard_errors * self.std_error
    }
}

/// Monte-Carlo estimate of `E[exp(Σ_t η ω_t v_t / σ − ½ η² v_t²)]`.
pub fn check_supermartingale(cfg: &ConcentrationConfig, eta: f64) -> Result<MartingaleEstimate> {
    cfg.validate()?;
    if cfg.noise_std <= 0.0 {
        return Err(domain("supermartingale check needs σ > 0"));
    }
    if !eta.is_finite() {
        return Err(domain("η must be finite"));
    }
    let exponents: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = cfg.trial_rng(trial);
            let mut e = 0.0;
            for t in 0..cfg.length {
                let w = cfg.weight(t, &mut rng);
                let omega = cfg.noise(&mut rng);
                e += eta * omega * w / cfg.noise_std - 0.5 * eta * eta * w * w;
            }
            e
        })
        .collect();
    let limit = f64::MAX.ln();
    let values: Vec<f64> = exponents.iter().filter(|&&e| e < limit).map(|e| e.exp()).collect();
    let overflowed = exponents.len() - values.len();
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(MartingaleEstimate {
        mean,
        std_error: (var / k).sqrt(),
        trials: cfg.trials,
        overflowed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_cases_never_violate() {
        let cfg = ConcentrationConfig::new(100, 0.0, 0.05, 500, 1);
        assert_eq!(check_self_normalized_bound(&cfg).unwrap().violations, 0);
        let cfg = ConcentrationConfig {
            weights: WeightProcess::Zero,
            ..ConcentrationConfig::new(100, 1.0, 0.05, 500, 1)
        };
        assert_eq!(check_self_normalized_bound(&cfg).unwrap().violations, 0);
    }

    #[test]
    fn zero_eta_or_zero_weights_give_exactly_one() {
        let cfg = ConcentrationConfig::new(20, 1.0, 0.05, 1000, 2);
        let m = check_supermartingale(&cfg, 0.0).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.std_error, 0.0);
        let cfg = ConcentrationConfig {
            weights: WeightProcess::Zero,
            ..cfg
        };
        assert_eq!(check_supermartingale(&cfg, 0.7).unwrap().mean, 1.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = ConcentrationConfig::new(50, 1.0, 0.3, 2000, 3);
        assert_eq!(check_self_normalized_bound(&cfg).unwrap(), check_self_normalized_bound(&cfg).unwrap());
    }

    #[test]
    fn forced_failure_hook() {
        let cfg = ConcentrationConfig {
            bound_multiplier: 0.01,
            ..ConcentrationConfig::new(50, 1.0, 0.1, 2000, 3)
        };
        assert!(check_self_normalized_bound(&cfg).unwrap().rate > 0.5);
    }

    #[test]
    fn rademacher_and_fixed_weights() {
        let cfg = ConcentrationConfig {
            noise: NoiseKind::Rademacher,
            weights: WeightProcess::Fixed(vec![0.5; 64]),
            ..ConcentrationConfig::new(64, 1.0, 0.05, 5000, 4)
        };
        assert!(check_self_normalized_bound(&cfg).unwrap().rate <= 0.05);
        assert!(check_supermartingale(&cfg, 1.0).unwrap().within_bound(3.0));
    }

    #[test]
    fn invalid_configs() {
        assert!(check_self_normalized_bound(&ConcentrationConfig::new(0, 1.0, 0.1, 1, 0)).is_err());
        assert!(check_self_normalized_bound(&ConcentrationConfig::new(1, 1.0, 1.0, 1, 0)).is_err());
        let short = ConcentrationConfig {
            weights: WeightProcess::Fixed(vec![1.0]),
            ..ConcentrationConfig::new(2, 1.0, 0.1, 1, 0)
        };
        assert!(check_self_normalized_bound(&short).is_err());
        assert!(check_supermartingale(&ConcentrationConfig::new(1, 0.0, 0.1, 1, 0), 1.0).is_err());
    }
}
