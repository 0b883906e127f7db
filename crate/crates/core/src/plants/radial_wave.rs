//! Radially symmetric wave equation on a disc (or annulus) with Neumann
//! boundary input `u = w_r(r1)` and collocated velocity output
//! `y = int w_t(r1, theta) dsigma = 2 pi r1 w_t(r1)`.
//!
//! First-order form `p = w_t`, `q = w_r`:
//!
//! ```text
//! p_t = c^2 (r q)_r / r,    q_t = p_r
//! ```
//!
//! `p` sits on cell centres `r0 + (i + 1/2) dr`, `q` on the faces
//! `r0 + i dr`. The innermost face carries `q = 0` (its radius is zero on a
//! disc, so the coordinate singularity never enters a stencil); the outer
//! face carries the input.

use serde::{Deserialize, Serialize};

use super::DiscretePlant;
use crate::error::{FunnelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveInitial {
    #[default]
    Zero,
    /// `w_t(0, r) = amplitude * exp(-((r - centre) / width)^2)`, `w_r(0, r) = 0`.
    GaussianVelocity { amplitude: f64, centre: f64, width: f64 },
}

#[derive(Debug, Clone)]
pub struct RadialWave {
    pub r0: f64,
    pub r1: f64,
    pub speed: f64,
    pub cells: usize,
    pub initial: WaveInitial,
    dr: f64,
    weights: Vec<f64>,
}

impl RadialWave {
    /// State layout `[p_0, ..., p_{M-1}, q_1, ..., q_{M-1}]`.
    pub fn new(r0: f64, r1: f64, speed: f64, cells: usize, initial: WaveInitial) -> Result<Self> {
        if !(r0 >= 0.0 && r0 < r1 && r1.is_finite()) {
            return Err(FunnelError::config(format!("radii must satisfy 0 <= r0 < r1, got {r0}, {r1}")));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(FunnelError::config("wave speed must be positive"));
        }
        if cells < 3 {
            return Err(FunnelError::config(format!("radial wave needs at least 3 points, got {cells}")));
        }
        let dr = (r1 - r0) / cells as f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        let c2 = speed * speed;
        let mut weights: Vec<f64> = (0..cells).map(|i| two_pi * (r0 + (i as f64 + 0.5) * dr) * dr / c2).collect();
        weights.extend((1..cells).map(|i| two_pi * (r0 + i as f64 * dr) * dr));
        Ok(RadialWave {
            r0,
            r1,
            speed,
            cells,
            initial,
            dr,
            weights,
        })
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn centre(&self, i: usize) -> f64 {
        self.r0 + (i as f64 + 0.5) * self.dr
    }

    pub fn face(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.dr
    }

    fn q_at(&self, q_int: &[f64], u: f64, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else if i == self.cells {
            u
        } else {
            q_int[i - 1]
        }
    }

    fn update_p(&self, p: &mut [f64], q_int: &[f64], u: f64, dt: f64) {
        let c2 = self.speed * self.speed;
        for (i, pi) in p.iter_mut().enumerate() {
            let flux = self.face(i + 1) * self.q_at(q_int, u, i + 1) - self.face(i) * self.q_at(q_int, u, i);
            *pi += dt * c2 * flux / (self.centre(i) * self.dr);
        }
    }
}

impl DiscretePlant for RadialWave {
    fn name(&self) -> &'static str {
        "radial_wave"
    }
    fn io_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        2 * self.cells - 1
    }
    fn alpha(&self) -> f64 {
        0.0
    }
    fn mesh_width(&self) -> f64 {
        self.dr
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply_dynamics(&self, x: &[f64], u: &[f64], dxdt: &mut [f64]) {
        let (p, q_int) = x.split_at(self.cells);
        let (dp, dq) = dxdt.split_at_mut(self.cells);
        dp.fill(0.0);
        self.update_p(dp, q_int, u[0], 1.0);
        for i in 1..self.cells {
            dq[i - 1] = (p[i] - p[i - 1]) / self.dr;
        }
    }

    fn output(&self, x: &[f64], _u: &[f64]) -> Vec<f64> {
        vec![2.0 * std::f64::consts::PI * self.r1 * x[self.cells - 1]]
    }

    fn initial_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.state_dim()];
        if let WaveInitial::GaussianVelocity { amplitude, centre, width } = self.initial {
            for (i, p) in x[..self.cells].iter_mut().enumerate() {
                let s = (self.centre(i) - centre) / width;
                *p = amplitude * (-s * s).exp();
            }
        }
        x
    }

    fn initial_input(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn max_stable_dt(&self) -> f64 {
        self.dr / self.speed
    }

    fn step_free(&self, x: &mut [f64], _work: &mut [f64], _u_prev: &[f64], dt: f64) {
        let (p, q_int) = x.split_at_mut(self.cells);
        for i in 1..self.cells {
            q_int[i - 1] += dt * (p[i] - p[i - 1]) / self.dr;
        }
        self.update_p(p, q_int, 0.0, dt);
    }

    fn feedthrough(&self, dt: f64) -> f64 {
        let c2 = self.speed * self.speed;
        let last = self.cells - 1;
        2.0 * std::f64::consts::PI * self.r1 * dt * c2 * self.r1 / (self.centre(last) * self.dr)
    }

    fn close_boundary(&self, x: &mut [f64], u: &[f64], dt: f64) {
        let c2 = self.speed * self.speed;
        let last = self.cells - 1;
        x[last] += dt * c2 * self.r1 * u[0] / (self.centre(last) * self.dr);
    }

    fn state_scale(&self) -> Vec<f64> {
        let mut s = vec![self.speed; self.cells];
        s.extend(std::iter::repeat_n(1.0, self.cells - 1));
        s
    }
}
