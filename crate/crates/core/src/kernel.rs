//! Compactly supported radial kernels.
//!
//! Every kernel here is evaluated on the normalized distance `v = ‖a − a'‖ / λ`
//! and vanishes for `v > 1`, so the pairwise weight [`KernelSpec::evaluate_pair`]
//! has support radius λ. The boundary `v = 1` is inside the support.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `1 − v²` on `[0, 1]`.
    Epanechnikov,
    /// Constant `1` on `[0, 1]`.
    Boxcar,
    /// Matérn ν = 3/2 in `v`, cut off outside the unit ball.
    TruncatedMatern32,
}

impl KernelFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Boxcar => "boxcar",
            KernelFamily::TruncatedMatern32 => "truncated-matern32",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            "boxcar" => Ok(KernelFamily::Boxcar),
            "truncated-matern32" => Ok(KernelFamily::TruncatedMatern32),
            other => Err(domain(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// A kernel family together with its bandwidth and shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    length_scale: f64,
}

impl KernelSpec {
    /// `length_scale` is only read by [`KernelFamily::TruncatedMatern32`] but
    /// must be positive regardless.
    pub fn new(family: KernelFamily, bandwidth: f64, length_scale: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(domain(format!("kernel bandwidth must be positive, got {bandwidth}")));
        }
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(domain(format!("kernel length scale must be positive, got {length_scale}")));
        }
        Ok(Self {
            family,
            bandwidth,
            length_scale,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Upper bound of the base kernel. All shipped families peak at `v = 0`
    /// with value 1.
    pub fn c_k(&self) -> f64 {
        1.0
    }

    /// Base kernel value `K(v)`.
    pub fn evaluate_base(&self, v: f64) -> Result<f64> {
        if v.is_nan() || v < 0.0 {
            return Err(domain(format!("kernel argument must be nonnegative, got {v}")));
        }
        Ok(self.base(v))
    }

    /// Normalized pairwise weight `K(‖a − a'‖ / λ) / c_K`, in `[0, 1]`.
    pub fn evaluate_pair(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dim(a.len(), b.len())?;
        Ok(self.weight_sq(squared_distance(a, b)))
    }

    /// Weight for a squared Euclidean distance. Callers must guarantee `d2 ≥ 0`.
    #[inline]
    pub fn weight_sq(&self, d2: f64) -> f64 {
        self.base(d2.sqrt() / self.bandwidth) / self.c_k()
    }

    /// Whether a point at squared distance `d2` lies in the closed support ball.
    #[inline]
    pub fn in_support_sq(&self, d2: f64) -> bool {
        d2.sqrt() / self.bandwidth <= 1.0
    }

    #[inline]
    fn base(&self, v: f64) -> f64 {
        if v > 1.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => 1.0 - v * v,
            KernelFamily::Boxcar => 1.0,
            KernelFamily::TruncatedMatern32 => {
                let s = 3f64.sqrt() * v / self.length_scale;
                (1.0 + s) * (-s).exp()
            }
        }
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}
