//! Heat equation on a disc in polar coordinates with a uniform boundary flux
//! input `u = a x_r(r1)` and output `y = int x(r1, theta) r1 dtheta`.
//!
//! Finite volumes on the full `(r, theta)` grid: cell `(i, j)` has centre
//! `r_i = r0 + (i + 1/2) dr`, angle `theta_j = j dtheta` and area
//! `r_i dr dtheta`. On a disc the innermost radial face has radius zero, so
//! its flux vanishes identically and no special stencil is needed at the
//! origin. Time stepping is forward Euler.

use serde::{Deserialize, Serialize};

use super::DiscretePlant;
use crate::error::{FunnelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeatInitial {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `amplitude * (r1 - r)^2 * sin(theta)`.
    RadialSine { amplitude: f64 },
}

#[derive(Debug, Clone)]
pub struct RadialHeat {
    pub r0: f64,
    pub r1: f64,
    pub diffusivity: f64,
    pub kappa: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub initial: HeatInitial,
    dr: f64,
    dtheta: f64,
    weights: Vec<f64>,
}

impl RadialHeat {
    pub fn new(
        r0: f64,
        r1: f64,
        diffusivity: f64,
        kappa: f64,
        n_r: usize,
        n_theta: usize,
        initial: HeatInitial,
    ) -> Result<Self> {
        if !(r0 >= 0.0 && r0 < r1 && r1.is_finite()) {
            return Err(FunnelError::config(format!("radii must satisfy 0 <= r0 < r1, got {r0}, {r1}")));
        }
        if !(diffusivity.is_finite() && diffusivity > 0.0) {
            return Err(FunnelError::config("plant.diffusivity must be positive"));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(FunnelError::config("plant.kappa must be nonnegative"));
        }
        if n_r < 3 || n_theta < 3 {
            return Err(FunnelError::config(format!(
                "radial heat needs at least 3 points per variable, got {n_r} x {n_theta}"
            )));
        }
        let dr = (r1 - r0) / n_r as f64;
        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        let weights = (0..n_r)
            .flat_map(|i| std::iter::repeat_n((r0 + (i as f64 + 0.5) * dr) * dr * dtheta, n_theta))
            .collect();
        Ok(RadialHeat {
            r0,
            r1,
            diffusivity,
            kappa,
            n_r,
            n_theta,
            initial,
            dr,
            dtheta,
            weights,
        })
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn centre(&self, i: usize) -> f64 {
        self.r0 + (i as f64 + 0.5) * self.dr
    }

    fn face(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.dr
    }

    /// Ring `i` of the state.
    pub fn ring<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.n_theta..(i + 1) * self.n_theta]
    }

    /// Mean over `theta` of every ring.
    pub fn theta_means(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_r)
            .map(|i| self.ring(x, i).iter().sum::<f64>() / self.n_theta as f64)
            .collect()
    }

    /// Total heat `int x dA`.
    pub fn total_heat(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Diagonal magnitude of row `i`, counting the outer face as if it
    /// conducted (a safe overestimate for the Gershgorin bound).
    fn diagonal(&self, i: usize) -> f64 {
        let rc = self.centre(i);
        let radial = (self.face(i) + self.face(i + 1)) / (rc * self.dr * self.dr);
        let angular = 2.0 / (rc * rc * self.dtheta * self.dtheta);
        self.diffusivity * (radial + angular) + self.kappa
    }
}

impl DiscretePlant for RadialHeat {
    fn name(&self) -> &'static str {
        "radial_heat"
    }
    fn io_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        self.n_r * self.n_theta
    }
    fn alpha(&self) -> f64 {
        -self.kappa
    }
    fn mesh_width(&self) -> f64 {
        self.dr
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply_dynamics(&self, x: &[f64], u: &[f64], dxdt: &mut [f64]) {
        let (nr, nt) = (self.n_r, self.n_theta);
        let a = self.diffusivity;
        let dr2 = self.dr * self.dr;
        let dth2 = self.dtheta * self.dtheta;
        for i in 0..nr {
            let rc = self.centre(i);
            let (r_in, r_out) = (self.face(i), self.face(i + 1));
            for j in 0..nt {
                let k = i * nt + j;
                let xc = x[k];
                let inner = if i == 0 { 0.0 } else { r_in * (xc - x[k - nt]) };
                let outer = if i + 1 == nr {
                    // a x_r = u at the outer face
                    r_out * self.dr * u[0] / a
                } else {
                    r_out * (x[k + nt] - xc)
                };
                let left = x[i * nt + (j + nt - 1) % nt];
                let right = x[i * nt + (j + 1) % nt];
                dxdt[k] = a * ((outer - inner) / (rc * dr2) + (left - 2.0 * xc + right) / (rc * rc * dth2))
                    - self.kappa * xc;
            }
        }
    }

    /// Rectangle rule over the outer ring plus the ghost-cell correction
    /// `x(r1) = x_last + u dr / (2a)`.
    fn output(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let last = self.ring(x, self.n_r - 1).iter().sum::<f64>();
        vec![self.r1 * self.dtheta * last + self.feedthrough(0.0) * u[0]]
    }

    fn initial_state(&self) -> Vec<f64> {
        let n = self.state_dim();
        match self.initial {
            HeatInitial::Zero => vec![0.0; n],
            HeatInitial::Constant { value } => vec![value; n],
            HeatInitial::RadialSine { amplitude } => (0..n)
                .map(|k| {
                    let (i, j) = (k / self.n_theta, k % self.n_theta);
                    let d = self.r1 - self.centre(i);
                    amplitude * d * d * (j as f64 * self.dtheta).sin()
                })
                .collect(),
        }
    }

    fn initial_input(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn max_stable_dt(&self) -> f64 {
        let worst = (0..self.n_r).map(|i| self.diagonal(i)).fold(0.0, f64::max);
        1.0 / worst
    }

    fn step_free(&self, x: &mut [f64], work: &mut [f64], u_prev: &[f64], dt: f64) {
        self.apply_dynamics(x, u_prev, work);
        for (v, d) in x.iter_mut().zip(work.iter()) {
            *v += dt * d;
        }
    }

    /// `pi r1 dr / a`; the input only enters the state on the next step.
    fn feedthrough(&self, _dt: f64) -> f64 {
        std::f64::consts::PI * self.r1 * self.dr / self.diffusivity
    }

    fn close_boundary(&self, _x: &mut [f64], _u: &[f64], _dt: f64) {}
}
