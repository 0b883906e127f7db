//! Lossy transmission line (telegrapher's equations) with voltage inputs and
//! current outputs at both ends.
//!
//! Staggered grid: voltages live on the `M` nodes `z_j = a + j dx` (the two
//! end nodes carry the inputs), currents on the `M - 1` cell midpoints. The
//! interior update is the symplectic Euler (leapfrog) pair with the resistive
//! and conductive losses averaged over the step, which keeps the loss terms
//! unconditionally dissipative.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::port_hamiltonian::PortHamiltonianSpec;
use super::DiscretePlant;
use crate::error::{FunnelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParameters {
    /// Ohm per metre.
    pub resistance: f64,
    /// Henry per metre.
    pub inductance: f64,
    /// Siemens per metre.
    pub conductance: f64,
    /// Farad per metre.
    pub capacitance: f64,
    pub a: f64,
    pub b: f64,
}

impl LineParameters {
    /// Coaxial-cable values used by the `tline-6.1` preset.
    pub fn reference_line() -> Self {
        LineParameters {
            resistance: 463.59,
            inductance: 0.5062e-3,
            conductance: 29.111e-6,
            capacitance: 51.57e-9,
            a: 0.0,
            b: 1.0,
        }
    }

    /// `c0 = (LC)^{-1/2}`.
    pub fn wave_speed(&self) -> f64 {
        1.0 / (self.inductance * self.capacitance).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("resistance", self.resistance),
            ("inductance", self.inductance),
            ("conductance", self.conductance),
            ("capacitance", self.capacitance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FunnelError::config(format!("plant.{key} must be positive, got {v}")));
            }
        }
        if !(self.a < self.b) {
            return Err(FunnelError::config("plant.a must be smaller than plant.b"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LineInitial {
    #[default]
    Zero,
    /// Spatially constant current and voltage.
    Uniform { current: f64, voltage: f64 },
}

/// Port-Hamiltonian form with `x = (L I, C V)`, `H = diag(1/L, 1/C)`.
pub fn line_port_hamiltonian(p: &LineParameters) -> PortHamiltonianSpec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / p.inductance, 1.0 / p.capacitance]));
    PortHamiltonianSpec {
        d: 2,
        p1: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]),
        p0: DMatrix::from_row_slice(2, 2, &[-p.resistance, 0.0, 0.0, -p.conductance]),
        hamiltonian: Arc::new(move |_| h.clone()),
        wb: DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0]) * s,
        wc: DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0]) * s,
        interval: (p.a, p.b),
    }
}

#[derive(Debug, Clone)]
pub struct TransmissionLine {
    pub params: LineParameters,
    pub points: usize,
    pub initial: LineInitial,
    pub ph: PortHamiltonianSpec,
    dx: f64,
    alpha: f64,
    weights: Vec<f64>,
}

impl TransmissionLine {
    /// Line on `points` voltage nodes. The state is
    /// `[I_{1/2}, ..., I_{M-3/2}, V_1, ..., V_{M-2}]`.
    pub fn new(params: LineParameters, points: usize, initial: LineInitial) -> Result<Self> {
        params.validate()?;
        if points < 3 {
            return Err(FunnelError::config(format!("transmission line needs at least 3 points, got {points}")));
        }
        let ph = line_port_hamiltonian(&params);
        let bounds = ph.validate(points)?;
        // P0 + P0^T = diag(-2R, -2G), so mu = 2 min(R, G) and
        // alpha = -min(R, G) * lambda_min(H) / lambda_max(H).
        let alpha = ph.passivity_alpha(bounds);
        let dx = (params.b - params.a) / (points - 1) as f64;
        let cells = points - 1;
        let mut weights = vec![params.inductance * dx; cells];
        weights.extend(std::iter::repeat_n(params.capacitance * dx, points - 2));
        Ok(TransmissionLine {
            params,
            points,
            initial,
            ph,
            dx,
            alpha,
            weights,
        })
    }

    fn cells(&self) -> usize {
        self.points - 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Splits the state into currents (cells) and interior voltages.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.cells())
    }

    fn voltage(&self, v_int: &[f64], u: &[f64], j: usize) -> f64 {
        if j == 0 {
            u[0]
        } else if j == self.points - 1 {
            u[1]
        } else {
            v_int[j - 1]
        }
    }
}

impl DiscretePlant for TransmissionLine {
    fn name(&self) -> &'static str {
        "transmission_line"
    }
    fn io_dim(&self) -> usize {
        2
    }
    fn state_dim(&self) -> usize {
        2 * self.points - 3
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn mesh_width(&self) -> f64 {
        self.dx
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply_dynamics(&self, x: &[f64], u: &[f64], dxdt: &mut [f64]) {
        let LineParameters {
            resistance: r,
            inductance: l,
            conductance: g,
            capacitance: c,
            ..
        } = self.params;
        let (cur, v_int) = self.split(x);
        let (dcur, dv) = dxdt.split_at_mut(self.cells());
        for j in 0..self.cells() {
            let dv_dz = (self.voltage(v_int, u, j + 1) - self.voltage(v_int, u, j)) / self.dx;
            dcur[j] = (-dv_dz - r * cur[j]) / l;
        }
        for j in 1..self.points - 1 {
            let di_dz = (cur[j] - cur[j - 1]) / self.dx;
            dv[j - 1] = (-di_dz - g * v_int[j - 1]) / c;
        }
    }

    /// `y = (I(a), -I(b))`, read from the end cells.
    fn output(&self, x: &[f64], _u: &[f64]) -> Vec<f64> {
        vec![x[0], -x[self.cells() - 1]]
    }

    fn initial_state(&self) -> Vec<f64> {
        match self.initial {
            LineInitial::Zero => vec![0.0; self.state_dim()],
            LineInitial::Uniform { current, voltage } => {
                let mut x = vec![current; self.cells()];
                x.extend(std::iter::repeat_n(voltage, self.points - 2));
                x
            }
        }
    }

    fn initial_input(&self) -> Vec<f64> {
        match self.initial {
            LineInitial::Zero => vec![0.0, 0.0],
            LineInitial::Uniform { voltage, .. } => vec![voltage, voltage],
        }
    }

    /// Hyperbolic bound `c0 dt <= dx`.
    fn max_stable_dt(&self) -> f64 {
        self.dx / self.params.wave_speed()
    }

    fn step_free(&self, x: &mut [f64], _work: &mut [f64], _u_prev: &[f64], dt: f64) {
        let LineParameters {
            resistance: r,
            inductance: l,
            conductance: g,
            capacitance: c,
            ..
        } = self.params;
        let cells = self.cells();
        let (cur, v_int) = x.split_at_mut(cells);
        let (cv_keep, cv_div) = (c / dt - 0.5 * g, c / dt + 0.5 * g);
        for j in 1..self.points - 1 {
            let di_dz = (cur[j] - cur[j - 1]) / self.dx;
            v_int[j - 1] = (cv_keep * v_int[j - 1] - di_dz) / cv_div;
        }
        let (li_keep, li_div) = (l / dt - 0.5 * r, l / dt + 0.5 * r);
        for j in 0..cells {
            let left = if j == 0 { 0.0 } else { v_int[j - 1] };
            let right = if j + 1 == self.points - 1 { 0.0 } else { v_int[j] };
            cur[j] = (li_keep * cur[j] - (right - left) / self.dx) / li_div;
        }
    }

    fn feedthrough(&self, dt: f64) -> f64 {
        1.0 / (self.dx * (self.params.inductance / dt + 0.5 * self.params.resistance))
    }

    fn close_boundary(&self, x: &mut [f64], u: &[f64], dt: f64) {
        let d = self.feedthrough(dt);
        let last = self.cells() - 1;
        x[0] += d * u[0];
        x[last] -= d * u[1];
    }

    fn state_scale(&self) -> Vec<f64> {
        let mut s = vec![1.0 / self.params.inductance.sqrt(); self.cells()];
        s.extend(std::iter::repeat_n(1.0 / self.params.capacitance.sqrt(), self.points - 2));
        s
    }

    fn input_scale(&self) -> f64 {
        1.0 / self.params.capacitance.sqrt()
    }
}
