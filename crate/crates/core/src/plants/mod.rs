//! Discretized boundary control systems.
//!
//! Every plant is a semi-discrete linear system `dx/dt = A_h(x, u)` whose
//! boundary input `u` enters through the mesh closure and whose output
//! `y = C_h(x, u)` is a boundary trace. All three discretizations satisfy the
//! discrete energy balance
//!
//! ```text
//! <A_h(x, u), x>_h <= <u, C_h(x, u)> + alpha |x|_h^2
//! ```
//!
//! exactly (up to rounding), by summation by parts on staggered or
//! finite-volume stencils.
//!
//! Time stepping is split in two so the controller can close the boundary
//! loop implicitly: [`DiscretePlant::step_free`] advances the state as if the
//! new input were zero, after which the output is affine in the new input,
//! `y = y_free + D u` with the scalar feedthrough `D` from
//! [`DiscretePlant::feedthrough`]. [`DiscretePlant::close_boundary`] then
//! commits the input.

mod port_hamiltonian;
mod radial_heat;
mod radial_wave;
mod transmission_line;

pub use port_hamiltonian::{boundary_flow_effort, BoundaryPortValues, HamiltonianBounds, PortHamiltonianSpec};
pub use radial_heat::{HeatInitial, RadialHeat};
pub use radial_wave::{RadialWave, WaveInitial};
pub use transmission_line::{line_port_hamiltonian, LineInitial, LineParameters, TransmissionLine};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{FunnelError, Result};
use crate::par::{map_trials, Execution};
use crate::vector::{dot, weighted_dot};

pub trait DiscretePlant {
    fn name(&self) -> &'static str;
    /// Input/output dimension `m`.
    fn io_dim(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// Constant of the discrete energy balance.
    fn alpha(&self) -> f64;
    /// Characteristic mesh width `h`.
    fn mesh_width(&self) -> f64;
    /// Quadrature weights of the energy inner product, one per state entry.
    fn weights(&self) -> &[f64];

    /// Semi-discrete generator: writes `dx/dt` for state `x` and boundary input `u`.
    fn apply_dynamics(&self, x: &[f64], u: &[f64], dxdt: &mut [f64]);
    /// Boundary output for state `x` under boundary input `u`.
    fn output(&self, x: &[f64], u: &[f64]) -> Vec<f64>;

    fn initial_state(&self) -> Vec<f64>;
    /// Boundary input consistent with the initial state.
    fn initial_input(&self) -> Vec<f64>;

    /// Largest time step for which the free scheme is stable.
    fn max_stable_dt(&self) -> f64;
    /// Advances `x` by `dt`, using `u_prev` where the scheme needs the input
    /// of the current step and treating the new input as zero.
    fn step_free(&self, x: &mut [f64], work: &mut [f64], u_prev: &[f64], dt: f64);
    /// Scalar `D` with `output(x_closed, u) = output(x_free, 0) + D u`.
    fn feedthrough(&self, dt: f64) -> f64;
    /// Commits the new boundary input after [`DiscretePlant::step_free`].
    fn close_boundary(&self, x: &mut [f64], u: &[f64], dt: f64);

    /// Natural magnitude of each state entry, used when sampling random states.
    fn state_scale(&self) -> Vec<f64> {
        vec![1.0; self.state_dim()]
    }
    fn input_scale(&self) -> f64 {
        1.0
    }

    fn energy(&self, x: &[f64]) -> f64 {
        0.5 * weighted_dot(self.weights(), x, x)
    }
}

/// One of the three plants shipped with the crate.
// Built once per run; boxing the line would buy nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum PlantDescriptor {
    TransmissionLine(TransmissionLine),
    RadialWave(RadialWave),
    RadialHeat(RadialHeat),
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $body:expr) => {
        match $self {
            PlantDescriptor::TransmissionLine($p) => $body,
            PlantDescriptor::RadialWave($p) => $body,
            PlantDescriptor::RadialHeat($p) => $body,
        }
    };
}

impl DiscretePlant for PlantDescriptor {
    fn name(&self) -> &'static str {
        dispatch!(self, p => p.name())
    }
    fn io_dim(&self) -> usize {
        dispatch!(self, p => p.io_dim())
    }
    fn state_dim(&self) -> usize {
        dispatch!(self, p => p.state_dim())
    }
    fn alpha(&self) -> f64 {
        dispatch!(self, p => p.alpha())
    }
    fn mesh_width(&self) -> f64 {
        dispatch!(self, p => p.mesh_width())
    }
    fn weights(&self) -> &[f64] {
        dispatch!(self, p => p.weights())
    }
    fn apply_dynamics(&self, x: &[f64], u: &[f64], dxdt: &mut [f64]) {
        dispatch!(self, p => p.apply_dynamics(x, u, dxdt))
    }
    fn output(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        dispatch!(self, p => p.output(x, u))
    }
    fn initial_state(&self) -> Vec<f64> {
        dispatch!(self, p => p.initial_state())
    }
    fn initial_input(&self) -> Vec<f64> {
        dispatch!(self, p => p.initial_input())
    }
    fn max_stable_dt(&self) -> f64 {
        dispatch!(self, p => p.max_stable_dt())
    }
    fn step_free(&self, x: &mut [f64], work: &mut [f64], u_prev: &[f64], dt: f64) {
        dispatch!(self, p => p.step_free(x, work, u_prev, dt))
    }
    fn feedthrough(&self, dt: f64) -> f64 {
        dispatch!(self, p => p.feedthrough(dt))
    }
    fn close_boundary(&self, x: &mut [f64], u: &[f64], dt: f64) {
        dispatch!(self, p => p.close_boundary(x, u, dt))
    }
    fn state_scale(&self) -> Vec<f64> {
        dispatch!(self, p => p.state_scale())
    }
    fn input_scale(&self) -> f64 {
        dispatch!(self, p => p.input_scale())
    }
}

/// The plant seen through the input `u = k0 * u_scaled`, i.e. with input map
/// `k0^-1 B`. Running gain `k0` on the plant and gain 1 on this wrapper yields
/// the same state trajectory.
#[derive(Debug, Clone, Copy)]
pub struct InputScaled<'a, P: ?Sized> {
    pub plant: &'a P,
    pub k0: f64,
}

impl<P: DiscretePlant + ?Sized> InputScaled<'_, P> {
    fn scale(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| self.k0 * v).collect()
    }
}

impl<P: DiscretePlant + ?Sized> DiscretePlant for InputScaled<'_, P> {
    fn name(&self) -> &'static str {
        self.plant.name()
    }
    fn io_dim(&self) -> usize {
        self.plant.io_dim()
    }
    fn state_dim(&self) -> usize {
        self.plant.state_dim()
    }
    fn alpha(&self) -> f64 {
        self.plant.alpha()
    }
    fn mesh_width(&self) -> f64 {
        self.plant.mesh_width()
    }
    fn weights(&self) -> &[f64] {
        self.plant.weights()
    }
    fn apply_dynamics(&self, x: &[f64], u: &[f64], dxdt: &mut [f64]) {
        self.plant.apply_dynamics(x, &self.scale(u), dxdt)
    }
    fn output(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.plant.output(x, &self.scale(u))
    }
    fn initial_state(&self) -> Vec<f64> {
        self.plant.initial_state()
    }
    fn initial_input(&self) -> Vec<f64> {
        self.plant.initial_input().iter().map(|v| v / self.k0).collect()
    }
    fn max_stable_dt(&self) -> f64 {
        self.plant.max_stable_dt()
    }
    fn step_free(&self, x: &mut [f64], work: &mut [f64], u_prev: &[f64], dt: f64) {
        self.plant.step_free(x, work, &self.scale(u_prev), dt)
    }
    fn feedthrough(&self, dt: f64) -> f64 {
        self.plant.feedthrough(dt) * self.k0
    }
    fn close_boundary(&self, x: &mut [f64], u: &[f64], dt: f64) {
        self.plant.close_boundary(x, &self.scale(u), dt)
    }
    fn state_scale(&self) -> Vec<f64> {
        self.plant.state_scale()
    }
    fn input_scale(&self) -> f64 {
        self.plant.input_scale() / self.k0
    }
}

/// Tolerance constant of the passivity certificate: a plant passes when the
/// normalized violation stays below `PASSIVITY_SLOPE * h`.
pub const PASSIVITY_SLOPE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PassivityReport {
    pub plant: &'static str,
    pub trials: usize,
    pub mesh_width: f64,
    /// Max over trials of
    /// `(<A_h x, x> - <u, y> - alpha |x|^2) / |x|^2`.
    pub max_violation: f64,
    /// `PASSIVITY_SLOPE * h`.
    pub bound: f64,
    pub passed: bool,
}

/// Energy-balance residual `<A_h x, x> - <u, y> - alpha |x|^2` for one state.
pub fn passivity_residual<P: DiscretePlant + ?Sized>(plant: &P, x: &[f64], u: &[f64]) -> f64 {
    let mut dxdt = vec![0.0; x.len()];
    plant.apply_dynamics(x, u, &mut dxdt);
    let w = plant.weights();
    let y = plant.output(x, u);
    weighted_dot(w, &dxdt, x) - dot(u, &y) - plant.alpha() * weighted_dot(w, x, x)
}

/// Random states and inputs drawn at the plant's natural scale.
pub fn sample_state<P: DiscretePlant + ?Sized>(plant: &P, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let x = plant
        .state_scale()
        .iter()
        .map(|s| s * Distribution::<f64>::sample(&StandardNormal, rng))
        .collect();
    let u = (0..plant.io_dim())
        .map(|_| plant.input_scale() * Distribution::<f64>::sample(&StandardNormal, rng))
        .collect();
    (x, u)
}

pub fn passivity_certificate<P: DiscretePlant + Sync + ?Sized>(
    plant: &P,
    trials: usize,
    seed: u64,
) -> PassivityReport {
    passivity_certificate_with(Execution::default(), plant, trials, seed)
}

pub fn passivity_certificate_with<P: DiscretePlant + Sync + ?Sized>(
    exec: Execution,
    plant: &P,
    trials: usize,
    seed: u64,
) -> PassivityReport {
    let violations = map_trials(exec, trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let (x, u) = sample_state(plant, &mut rng);
        let norm2 = weighted_dot(plant.weights(), &x, &x);
        passivity_residual(plant, &x, &u) / norm2
    });
    let max_violation = violations.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let h = plant.mesh_width();
    let bound = PASSIVITY_SLOPE * h;
    PassivityReport {
        plant: plant.name(),
        trials,
        mesh_width: h,
        max_violation,
        bound,
        passed: max_violation <= bound,
    }
}

/// Dense matrices of the semi-discrete system `dx/dt = A x + B u`,
/// `y = C x + D u`, assembled by probing with unit vectors.
#[derive(Debug, Clone)]
pub struct StateSpaceMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

pub fn assemble_matrices<P: DiscretePlant + ?Sized>(plant: &P) -> StateSpaceMatrices {
    let n = plant.state_dim();
    let m = plant.io_dim();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    let mut c = DMatrix::zeros(m, n);
    let mut d = DMatrix::zeros(m, m);
    let zero_u = vec![0.0; m];
    let zero_x = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        plant.apply_dynamics(&unit, &zero_u, &mut col);
        a.set_column(j, &DVector::from_column_slice(&col));
        c.set_column(j, &DVector::from_vec(plant.output(&unit, &zero_u)));
        unit[j] = 0.0;
    }
    let mut unit_u = vec![0.0; m];
    for j in 0..m {
        unit_u[j] = 1.0;
        plant.apply_dynamics(&zero_x, &unit_u, &mut col);
        b.set_column(j, &DVector::from_column_slice(&col));
        d.set_column(j, &DVector::from_vec(plant.output(&zero_x, &unit_u)));
        unit_u[j] = 0.0;
    }
    StateSpaceMatrices { a, b, c, d }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventReport {
    pub beta: f64,
    /// `(beta - alpha) |x|_h^2`.
    pub lhs: f64,
    /// `<u, y>`.
    pub rhs: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Solves the steady problem `(beta I - A_h) x = 0` with boundary input `u`
/// and checks `(beta - alpha) |x|^2 <= <u, y> + 1e-8 |u|^2`.
pub fn resolvent_positivity_check<P: DiscretePlant + ?Sized>(
    plant: &P,
    beta: f64,
    u: &[f64],
) -> Result<ResolventReport> {
    let mats = assemble_matrices(plant);
    resolvent_positivity_with(plant, &mats, beta, u)
}

pub fn resolvent_positivity_with<P: DiscretePlant + ?Sized>(
    plant: &P,
    mats: &StateSpaceMatrices,
    beta: f64,
    u: &[f64],
) -> Result<ResolventReport> {
    if !(beta > plant.alpha()) {
        return Err(FunnelError::config(format!(
            "beta = {beta} must exceed alpha = {}",
            plant.alpha()
        )));
    }
    let n = plant.state_dim();
    let system = DMatrix::identity(n, n) * beta - &mats.a;
    let uv = DVector::from_column_slice(u);
    let rhs = &mats.b * &uv;
    let x = system
        .lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(FunnelError::Solve { beta })?;
    let y = &mats.c * &x + &mats.d * &uv;
    let xs = x.as_slice();
    let lhs = (beta - plant.alpha()) * weighted_dot(plant.weights(), xs, xs);
    let uy = dot(u, y.as_slice());
    let tolerance = 1e-8 * dot(u, u);
    Ok(ResolventReport {
        beta,
        lhs,
        rhs: uy,
        tolerance,
        passed: lhs <= uy + tolerance,
    })
}
