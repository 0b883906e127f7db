//! The funnel control law with its initial-consistency term.
//!
//! ```text
//! u(t) = u0 p(t) + k0 (psi(phi0, e0) p(t) - psi(phi(t), e(t)))
//! ```
//!
//! This is the dilated controller written so that `u(0) = u0` holds bitwise:
//! at `t = 0` the bump equals one and the two `psi` terms cancel exactly.

use serde::{Deserialize, Serialize};

use crate::error::{FunnelError, Result};
use crate::funnel::{psi_gain, FunnelSpec};
use crate::plants::DiscretePlant;
use crate::vector::{norm, sub};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BumpForm {
    /// `1 - (6s^5 - 15s^4 + 10s^3)` with `s = t / support_end`; C2 at both ends.
    Polynomial,
    /// `(1 - tanh(k (s - 1/2) / (s (1 - s)))) / 2`; smooth with all
    /// derivatives vanishing at both ends.
    TanhPlateau { steepness: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub support_end: f64,
    #[serde(flatten)]
    pub form: BumpForm,
}

impl BumpSpec {
    pub fn polynomial(support_end: f64) -> Self {
        BumpSpec {
            support_end,
            form: BumpForm::Polynomial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_end.is_finite() && self.support_end > 0.0) {
            return Err(FunnelError::config(format!(
                "bump.support_end must be positive, got {}",
                self.support_end
            )));
        }
        if let BumpForm::TanhPlateau { steepness } = self.form {
            if !(steepness.is_finite() && steepness > 0.0) {
                return Err(FunnelError::config("bump.steepness must be positive"));
            }
        }
        Ok(())
    }

    /// Evaluates `p(t)`: one at `t = 0`, zero from `support_end` on.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let s = t / self.support_end;
        if s >= 1.0 {
            return 0.0;
        }
        match self.form {
            BumpForm::Polynomial => 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s)),
            BumpForm::TanhPlateau { steepness } => {
                0.5 * (1.0 - (steepness * (s - 0.5) / (s * (1.0 - s))).tanh())
            }
        }
    }
}

pub fn bump_p(spec: &BumpSpec, t: f64) -> f64 {
    spec.value(t)
}

/// Controller data fixed at the initial time.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub k0: f64,
    pub bump: BumpSpec,
    pub funnel: FunnelSpec,
    pub u0: Vec<f64>,
    pub e0: Vec<f64>,
    pub phi0: f64,
    psi0: Vec<f64>,
}

impl ControllerConfig {
    /// Builds the controller for initial input `u0` and initial error `e0`.
    pub fn new(
        k0: f64,
        bump: BumpSpec,
        funnel: FunnelSpec,
        u0: Vec<f64>,
        e0: Vec<f64>,
    ) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(FunnelError::config(format!("k0 must be positive, got {k0}")));
        }
        bump.validate()?;
        funnel.validate()?;
        if u0.len() != funnel.m || e0.len() != funnel.m {
            return Err(FunnelError::config(format!(
                "initial data has dimension {}/{} but the funnel has m = {}",
                u0.len(),
                e0.len(),
                funnel.m
            )));
        }
        let phi0 = funnel.value(0.0);
        let product = phi0 * norm(&e0);
        if !(product < 1.0) {
            return Err(FunnelError::InitialFunnelViolation { product });
        }
        let psi0 = psi_gain(phi0, &e0)
            .map_err(|_| FunnelError::InitialFunnelViolation { product })?
            .psi;
        Ok(ControllerConfig {
            k0,
            bump,
            funnel,
            u0,
            e0,
            phi0,
            psi0,
        })
    }

    pub fn m(&self) -> usize {
        self.funnel.m
    }

    /// `psi(phi0, e0)`.
    pub fn psi0(&self) -> &[f64] {
        &self.psi0
    }

    /// The feedforward part `(u0 + k0 psi(phi0, e0)) p(t)`.
    pub fn feedforward(&self, t: f64) -> Vec<f64> {
        let p = self.bump.value(t);
        self.u0
            .iter()
            .zip(&self.psi0)
            .map(|(u, s)| (u + self.k0 * s) * p)
            .collect()
    }

    /// Control input for a known funnel value `phi` and error `e` at time `t`.
    pub fn input_from_error(&self, t: f64, phi: f64, e: &[f64]) -> Result<Vec<f64>> {
        let gain = psi_gain(phi, e)?;
        let p = self.bump.value(t);
        Ok(self
            .u0
            .iter()
            .zip(&self.psi0)
            .zip(&gain.psi)
            .map(|((u0, s0), s)| u0 * p + self.k0 * (s0 * p - s))
            .collect())
    }

    /// `u(t)` from the measured output `y` and the reference `y_ref`.
    pub fn control_input(&self, t: f64, y: &[f64], y_ref: &[f64]) -> Result<Vec<f64>> {
        let e = sub(y, y_ref);
        self.input_from_error(t, self.funnel.value(t), &e)
    }
}

/// Reads `u0 = B x0` and `e0 = C x0 - y_ref(0)` off the plant's initial state.
pub fn init_from_plant<P: DiscretePlant + ?Sized>(
    plant: &P,
    funnel: FunnelSpec,
    y_ref0: &[f64],
    k0: f64,
    bump: BumpSpec,
) -> Result<ControllerConfig> {
    if plant.io_dim() != funnel.m || y_ref0.len() != funnel.m {
        return Err(FunnelError::config(format!(
            "plant has m = {}, funnel m = {}, reference m = {}",
            plant.io_dim(),
            funnel.m,
            y_ref0.len()
        )));
    }
    let x0 = plant.initial_state();
    let u0 = plant.initial_input();
    let y0 = plant.output(&x0, &u0);
    let e0 = sub(&y0, y_ref0);
    ControllerConfig::new(k0, bump, funnel, u0, e0)
}
