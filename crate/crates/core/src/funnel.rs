//! Funnel boundaries and the gain nonlinearities of the funnel controller.
//!
//! A funnel boundary `phi` is a positive function of time; the tracking error
//! `e` is admissible at time `t` while `phi(t) * |e| < 1`. The controller
//! feeds back `psi(phi, e) = e / (1 - phi^2 |e|^2)`, which is a rescaled copy
//! of the monotone map `y / (1 - |y|^2)` on the open unit ball.

use serde::{Deserialize, Serialize};

use crate::error::{FunnelError, Result};
use crate::vector::norm;

/// Margins at or below this value are treated as having left the funnel.
pub const FUNNEL_GUARD: f64 = 1e-9;

/// Bracket width at which [`resolve_cubic`] stops bisecting.
pub const CUBIC_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunnelShape {
    /// `phi(t) = phi0 * eps^-2 * tanh(omega * t + eps)`.
    Tanh { phi0: f64, eps: f64, omega: f64 },
    /// Tabulated `(t, phi)` pairs, linearly interpolated and held constant
    /// after the last sample. Smoothness is the caller's responsibility.
    Custom { samples: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelSpec {
    #[serde(flatten)]
    pub shape: FunnelShape,
    /// Output dimension.
    pub m: usize,
}

impl FunnelSpec {
    pub fn tanh(phi0: f64, eps: f64, omega: f64, m: usize) -> Result<Self> {
        let spec = FunnelSpec {
            shape: FunnelShape::Tanh { phi0, eps, omega },
            m,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(samples: Vec<[f64; 2]>, m: usize) -> Result<Self> {
        let spec = FunnelSpec {
            shape: FunnelShape::Custom { samples },
            m,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks positivity of the boundary and of its infimum over `t >= 0`.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(FunnelError::config("funnel.m must be positive"));
        }
        match &self.shape {
            FunnelShape::Tanh { phi0, eps, omega } => {
                for (key, v) in [("phi0", phi0), ("eps", eps), ("omega", omega)] {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(FunnelError::config(format!(
                            "funnel.{key} must be positive and finite, got {v}"
                        )));
                    }
                }
            }
            FunnelShape::Custom { samples } => {
                if samples.is_empty() {
                    return Err(FunnelError::config("funnel.samples must not be empty"));
                }
                if samples[0][0] != 0.0 {
                    return Err(FunnelError::config("funnel.samples must start at t = 0"));
                }
                for w in samples.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return Err(FunnelError::config(
                            "funnel.samples times must be strictly increasing",
                        ));
                    }
                }
                if let Some(s) = samples.iter().find(|s| !(s[1].is_finite() && s[1] > 0.0)) {
                    return Err(FunnelError::config(format!(
                        "funnel.samples value at t = {} must be positive, got {}",
                        s[0], s[1]
                    )));
                }
            }
        }
        let inf = self.infimum();
        if !(inf > 0.0) {
            return Err(FunnelError::config(format!(
                "funnel infimum must be positive, got {inf}"
            )));
        }
        Ok(())
    }

    /// `inf_{t >= 0} phi(t)`. For the tanh shape the boundary is
    /// nondecreasing, so the infimum is attained at `t = 0`.
    pub fn infimum(&self) -> f64 {
        match &self.shape {
            FunnelShape::Tanh { phi0, eps, .. } => phi0 / (eps * eps) * eps.tanh(),
            FunnelShape::Custom { samples } => {
                samples.iter().map(|s| s[1]).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Evaluates `phi(t)`.
    pub fn value(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match &self.shape {
            FunnelShape::Tanh { phi0, eps, omega } => phi0 / (eps * eps) * (omega * t + eps).tanh(),
            FunnelShape::Custom { samples } => interpolate(samples, t),
        }
    }

    /// Funnel boundary `1 / phi(t)`.
    pub fn boundary(&self, t: f64) -> f64 {
        1.0 / self.value(t)
    }
}

fn interpolate(samples: &[[f64; 2]], t: f64) -> f64 {
    let idx = samples.partition_point(|s| s[0] <= t);
    if idx == 0 {
        return samples[0][1];
    }
    if idx == samples.len() {
        return samples[idx - 1][1];
    }
    let [t0, v0] = samples[idx - 1];
    let [t1, v1] = samples[idx];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Evaluates `phi(t)` for `spec`.
pub fn funnel_value(spec: &FunnelSpec, t: f64) -> f64 {
    spec.value(t)
}

/// Result of evaluating `psi(phi, e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainEvaluation {
    /// `1 / (1 - phi^2 |e|^2)`.
    pub gain_factor: f64,
    /// `gain_factor * e`.
    pub psi: Vec<f64>,
    /// `1 - phi |e|`.
    pub margin: f64,
}

/// `psi(phi, e) = e / (1 - phi^2 |e|^2)`, defined while `phi |e| < 1`.
///
/// Margins inside the guard band [`FUNNEL_GUARD`] are rejected so the gain
/// factor never overflows.
pub fn psi_gain(phi: f64, e: &[f64]) -> Result<GainEvaluation> {
    let scaled = phi * norm(e);
    let margin = 1.0 - scaled;
    if !(margin > FUNNEL_GUARD) {
        return Err(FunnelError::OutsideFunnel { product: scaled });
    }
    // 1 - s^2 = (1 - s)(1 + s) keeps precision near the boundary.
    let gain_factor = 1.0 / (margin * (1.0 + scaled));
    Ok(GainEvaluation {
        gain_factor,
        psi: e.iter().map(|v| gain_factor * v).collect(),
        margin,
    })
}

/// Scalar profile `r / (1 - r^2)` of the gain on `[0, 1)`.
pub fn gain_profile(r: f64) -> f64 {
    r / ((1.0 - r) * (1.0 + r))
}

/// `y / (1 - |y|^2)` on the open unit ball.
pub fn phi_nonlinearity(y: &[f64]) -> Result<Vec<f64>> {
    let r = norm(y);
    if !(r < 1.0) {
        return Err(FunnelError::Domain { norm: r });
    }
    let scale = 1.0 / ((1.0 - r) * (1.0 + r));
    Ok(y.iter().map(|v| scale * v).collect())
}

/// Root in `[0, 1)` of `lambda r^3 - |f| r^2 - (lambda + 1) r + |f|`.
///
/// The polynomial is positive at 0 and equals -1 at 1, and it vanishes
/// exactly where `lambda r + r / (1 - r^2) = |f|`, which is strictly
/// increasing in `r`. The root is therefore unique and bisection converges.
pub fn resolve_cubic(lambda: f64, f_norm: f64) -> f64 {
    resolve_cubic_to(lambda, f_norm, CUBIC_TOLERANCE)
}

pub(crate) fn resolve_cubic_to(lambda: f64, f_norm: f64, tol: f64) -> f64 {
    debug_assert!(lambda > 0.0 && f_norm >= 0.0);
    if f_norm == 0.0 {
        return 0.0;
    }
    let p = |r: f64| ((lambda * r - f_norm) * r - (lambda + 1.0)) * r + f_norm;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = p(mid);
        if v > 0.0 {
            lo = mid;
        } else if v < 0.0 {
            hi = mid;
        } else {
            return mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `lambda y + y / (1 - |y|^2) = f` for `y` in the open unit ball.
pub fn solve_resolvent(lambda: f64, f: &[f64]) -> Vec<f64> {
    let f_norm = norm(f);
    if f_norm == 0.0 {
        return vec![0.0; f.len()];
    }
    let rho = resolve_cubic(lambda, f_norm);
    f.iter().map(|v| rho / f_norm * v).collect()
}
