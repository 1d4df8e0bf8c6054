//! Continuous marginal distributions, given through their quantile functions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{RecordError, Result};

type QuantileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Per-component margin. Records, `T` and `R(n)` do not depend on the choice;
/// the value of the terminal record does.
#[derive(Clone)]
pub enum MarginSpec {
    /// Uniform on (0, 1).
    Uniform,
    /// `P(η ≤ x) = exp(x)` for `x ≤ 0`.
    NegExponential,
    /// Nondecreasing quantile function on (0, 1).
    Generic(Arc<QuantileFn>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginKind {
    Uniform,
    NegExponential,
    Generic,
}

impl fmt::Display for MarginKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarginKind::Uniform => "uniform",
            MarginKind::NegExponential => "neg-exponential",
            MarginKind::Generic => "generic",
        })
    }
}

impl fmt::Debug for MarginSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MarginSpec::{}", self.kind())
    }
}

impl FromStr for MarginSpec {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MarginSpec::Uniform),
            "neg-exponential" | "neg-exp" | "exponential" => Ok(MarginSpec::NegExponential),
            other => Err(RecordError::InvalidParameter(format!(
                "unknown margin '{other}' (expected uniform or neg-exponential)"
            ))),
        }
    }
}

impl MarginSpec {
    pub fn generic<F>(quantile: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        MarginSpec::Generic(Arc::new(quantile))
    }

    pub fn kind(&self) -> MarginKind {
        match self {
            MarginSpec::Uniform => MarginKind::Uniform,
            MarginSpec::NegExponential => MarginKind::NegExponential,
            MarginSpec::Generic(_) => MarginKind::Generic,
        }
    }

    /// Quantile without range checks, for the sampling hot loop.
    #[inline]
    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        match self {
            MarginSpec::Uniform => p,
            MarginSpec::NegExponential => p.ln(),
            MarginSpec::Generic(q) => q(p),
        }
    }

    /// Distribution function `F(x)`. For generic margins it is recovered by
    /// bisection on the quantile, `F(x) = sup{p : q(p) ≤ x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginSpec::Uniform => x.clamp(0.0, 1.0),
            MarginSpec::NegExponential => x.min(0.0).exp(),
            MarginSpec::Generic(q) => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if q(mid) <= x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }
}

/// Inverse-transform sample: maps `p ∈ (0, 1)` through the margin's quantile.
pub fn sample_margin(spec: &MarginSpec, unit_uniform: f64) -> Result<f64> {
    if !(unit_uniform > 0.0 && unit_uniform < 1.0) {
        return Err(RecordError::InvalidParameter(format!(
            "unit uniform must lie in (0, 1), got {unit_uniform}"
        )));
    }
    let x = spec.quantile_unchecked(unit_uniform);
    if x.is_nan() {
        return Err(RecordError::QuantileUndefined(unit_uniform));
    }
    Ok(x)
}
