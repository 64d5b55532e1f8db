//! Experiment configuration files.
//!
//! TOML with nested sections. Every key is optional and falls back to the
//! synthetic 2-D defaults; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use colsafe_core::benchmarks::{self, ProblemSpec, LQR_RESOLUTION};
use colsafe_core::concentration::NoiseKind;
use colsafe_core::estimator::EstimatorConfig;
use colsafe_core::gp::GpParams;
use colsafe_core::kernel::{KernelFamily, KernelSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Colsafe,
    GpSafeopt,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Colsafe => "colsafe",
            Method::GpSafeopt => "gp-safeopt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemName {
    #[serde(rename = "synthetic-2d")]
    Synthetic2d,
    Lqr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub method: Method,
    pub budget: usize,
    pub seed: u64,
    pub repeats: usize,
    pub output_dir: PathBuf,
    /// Off by default so that traces are byte-reproducible.
    pub record_timing: bool,
    pub problem: ProblemConfig,
    pub estimator: EstimatorSection,
    pub kernel: KernelSection,
    pub gp: GpParamsSection,
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Colsafe,
            budget: 200,
            seed: 0,
            repeats: 1,
            output_dir: PathBuf::from("out"),
            record_timing: false,
            problem: ProblemConfig::default(),
            estimator: EstimatorSection::default(),
            kernel: KernelSection::default(),
            gp: GpParamsSection::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub name: ProblemName,
    pub noise_std: f64,
    /// Grid points per axis; the problem's default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            name: ProblemName::Synthetic2d,
            noise_std: 0.01,
            resolution: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    pub delta: f64,
    /// Overrides the problem's declared Lipschitz constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            delta: 0.05,
            lipschitz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub family: KernelFamily,
    pub bandwidth: f64,
    pub length_scale: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            family: KernelFamily::Epanechnikov,
            bandwidth: 0.05,
            length_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpParamsSection {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub confidence_scale: f64,
}

impl Default for GpParamsSection {
    fn default() -> Self {
        let p = GpParams::default();
        Self {
            length_scale: p.length_scale,
            signal_variance: p.signal_variance,
            noise_variance: p.noise_variance,
            confidence_scale: p.confidence_scale,
        }
    }
}

impl GpParamsSection {
    pub fn params(&self) -> GpParams {
        GpParams {
            length_scale: self.length_scale,
            signal_variance: self.signal_variance,
            noise_variance: self.noise_variance,
            confidence_scale: self.confidence_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessName {
    Uniform,
    Zero,
}

/// Monte-Carlo matrix for `verify-bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub deltas: Vec<f64>,
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub sigma: f64,
    pub noise: NoiseKind,
    pub process: ProcessName,
    /// Test hook; values below 1 shrink the bound and force failures.
    pub bound_multiplier: f64,
    pub etas: Vec<f64>,
    pub martingale_trials: usize,
    pub martingale_length: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.01, 0.05, 0.1],
            lengths: vec![100, 1000],
            trials: 10_000,
            sigma: 1.0,
            noise: NoiseKind::Gaussian,
            process: ProcessName::Uniform,
            bound_multiplier: 1.0,
            etas: vec![-1.0, -0.5, 0.5, 1.0],
            martingale_trials: 100_000,
            martingale_length: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        config.validate(text)?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks module preconditions, naming the offending key and its line.
    pub fn validate(&self, text: &str) -> Result<(), CliError> {
        let bad = |section: &str, key: &str, what: String| {
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            let at = line_of(text, section, key).map(|l| format!("line {l}: ")).unwrap_or_default();
            Err(CliError::Config(format!("{at}invalid value for `{full}`: {what}")))
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.budget == 0 {
            return bad("", "budget", "must be at least 1".into());
        }
        if self.repeats == 0 {
            return bad("", "repeats", "must be at least 1".into());
        }
        if !(self.problem.noise_std.is_finite() && self.problem.noise_std >= 0.0) {
            return bad("problem", "noise_std", "must be finite and nonnegative".into());
        }
        if let Some(r) = self.problem.resolution {
            if r < 2 {
                return bad("problem", "resolution", "must be at least 2".into());
            }
        }
        if !(self.estimator.delta > 0.0 && self.estimator.delta < 1.0) {
            return bad("estimator", "delta", "must lie in (0, 1)".into());
        }
        if let Some(l) = self.estimator.lipschitz {
            if !positive(l) {
                return bad("estimator", "lipschitz", "must be positive".into());
            }
        }
        if !positive(self.kernel.bandwidth) {
            return bad("kernel", "bandwidth", "must be positive".into());
        }
        if !positive(self.kernel.length_scale) {
            return bad("kernel", "length_scale", "must be positive".into());
        }
        for (key, v) in [
            ("length_scale", self.gp.length_scale),
            ("signal_variance", self.gp.signal_variance),
            ("confidence_scale", self.gp.confidence_scale),
        ] {
            if !positive(v) {
                return bad("gp", key, "must be positive".into());
            }
        }
        if !(self.gp.noise_variance.is_finite() && self.gp.noise_variance >= 0.0) {
            return bad("gp", "noise_variance", "must be finite and nonnegative".into());
        }
        let v = &self.verify;
        if let Some(d) = v.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return bad("verify", "deltas", format!("{d} is not in (0, 1)"));
        }
        if v.lengths.contains(&0) {
            return bad("verify", "lengths", "lengths must be at least 1".into());
        }
        if v.trials == 0 {
            return bad("verify", "trials", "must be at least 1".into());
        }
        if !positive(v.sigma) {
            return bad("verify", "sigma", "must be positive".into());
        }
        if !positive(v.bound_multiplier) {
            return bad("verify", "bound_multiplier", "must be positive".into());
        }
        if v.etas.iter().any(|e| !e.is_finite()) {
            return bad("verify", "etas", "must be finite".into());
        }
        if v.martingale_trials == 0 {
            return bad("verify", "martingale_trials", "must be at least 1".into());
        }
        if v.martingale_length == 0 {
            return bad("verify", "martingale_length", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.problem.resolution.unwrap_or(match self.problem.name {
            ProblemName::Synthetic2d => 31,
            ProblemName::Lqr => LQR_RESOLUTION,
        })
    }

    pub fn build_problem(&self) -> Result<ProblemSpec, CliError> {
        let res = self.resolution();
        let sigma = self.problem.noise_std;
        let p = match self.problem.name {
            ProblemName::Synthetic2d => benchmarks::make_synthetic_2d(res, sigma),
            ProblemName::Lqr => benchmarks::make_lqr_problem(res, sigma),
        };
        p.map_err(|e| CliError::Config(format!("cannot build problem: {e}")))
    }

    pub fn lipschitz(&self, problem: &ProblemSpec) -> f64 {
        self.estimator.lipschitz.unwrap_or(problem.lipschitz())
    }

    /// Estimator settings. The estimator needs σ > 0, so a noise-free
    /// problem is modeled with a negligible σ.
    pub fn estimator_config(&self, problem: &ProblemSpec) -> Result<EstimatorConfig, CliError> {
        let kernel = KernelSpec::new(self.kernel.family, self.kernel.bandwidth, self.kernel.length_scale)
            .map_err(|e| CliError::Config(format!("kernel: {e}")))?;
        Ok(EstimatorConfig {
            kernel,
            noise_std: self.problem.noise_std.max(f64::MIN_POSITIVE),
            delta: self.estimator.delta,
            lipschitz: self.lipschitz(problem),
        })
    }
}

/// 1-based line of `key` inside `[section]` (top level when empty).
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else {
            continue;
        };
        let k = k.trim();
        let (sec, k) = match k.rsplit_once('.') {
            Some((prefix, last)) if current.is_empty() => (prefix.trim().to_string(), last.trim()),
            _ => (current.clone(), k),
        };
        if sec == section && k == key {
            return Some(i + 1);
        }
    }
    None
}
