//! Meshes and the closed-loop time stepper.
//!
//! Each step advances the plant with the new boundary input set to zero,
//! after which the output is affine in that input: `y = y_free + D u`.
//! Writing the controller as `u = F(t) - k0 psi(phi, e)` turns the boundary
//! loop into
//!
//! ```text
//! e + D k0 psi(phi, e) = c,   c = y_free - y_ref + D F(t)
//! ```
//!
//! and with `z = phi e` this is `lambda z + z / (1 - |z|^2) = lambda phi c`
//! with `lambda = 1 / (D k0)`, solved exactly through the cubic. The
//! resulting error lies strictly inside the funnel whatever the step size.

use std::f64::consts::PI;
use std::fmt;

use crate::controller::{init_from_plant, ControllerConfig};
use crate::error::{FunnelError, Result};
use crate::funnel::{solve_resolvent, FUNNEL_GUARD};
use crate::plants::{DiscretePlant, PlantDescriptor, RadialHeat, RadialWave, TransmissionLine};
use crate::scenario::{PlantConfig, ReferenceSignal, Scenario};
use crate::vector::{norm, sub};

/// States whose largest entry exceeds this are reported as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Largest `dt / dr` allowed for the wave plant.
pub const WAVE_COURANT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    /// Spatial points (voltage nodes, radial cells, or cells per variable).
    pub points: usize,
    /// Time steps actually taken.
    pub steps: usize,
    /// Time steps given by the mesh formula (or `mesh.steps`) before the
    /// stability check.
    pub formula_steps: usize,
    pub dt: f64,
    /// `dx` or `dr`.
    pub dx: f64,
    pub dtheta: Option<f64>,
    pub scale: f64,
    /// Largest stable time step.
    pub dt_limit: f64,
    /// True when the formula's step violated the stability bound.
    pub dt_reduced: bool,
}

pub fn scaled_points(scenario: &Scenario) -> usize {
    ((scenario.mesh.scale * scenario.plant.points() as f64).floor() as usize).max(3)
}

/// Time steps given by the mesh rule of each scenario family.
pub fn formula_steps(plant: &PlantConfig, points: usize, horizon: f64) -> usize {
    let m = points as f64;
    let n = match plant {
        PlantConfig::TransmissionLine { a, b, .. } => {
            let c0 = plant.line_parameters().unwrap().wave_speed();
            (b - a) / (2.0 * c0 * horizon) * m
        }
        PlantConfig::RadialWave { r0, r1, speed, .. } => (r1 - r0) / (2.0 * speed * horizon) * m,
        PlantConfig::RadialHeat { r0, r1, .. } => {
            let l = r1 - r0;
            10.0 * horizon * (m * m / (l * l) + m / l + m * m / (4.0 * PI * PI))
        }
    };
    n.floor() as usize
}

pub fn build_plant(scenario: &Scenario, points: usize) -> Result<PlantDescriptor> {
    Ok(match scenario.plant {
        PlantConfig::TransmissionLine { initial, .. } => PlantDescriptor::TransmissionLine(TransmissionLine::new(
            scenario.plant.line_parameters().unwrap(),
            points,
            initial,
        )?),
        PlantConfig::RadialWave {
            r0, r1, speed, initial, ..
        } => PlantDescriptor::RadialWave(RadialWave::new(r0, r1, speed, points, initial)?),
        PlantConfig::RadialHeat {
            r0,
            r1,
            diffusivity,
            kappa,
            initial,
            ..
        } => PlantDescriptor::RadialHeat(RadialHeat::new(r0, r1, diffusivity, kappa, points, points, initial)?),
    })
}

fn stability_limit(plant: &PlantDescriptor) -> f64 {
    match plant {
        PlantDescriptor::RadialWave(w) => WAVE_COURANT * w.dr() / w.speed,
        other => other.max_stable_dt(),
    }
}

pub fn build_mesh(scenario: &Scenario) -> Result<MeshSpec> {
    Ok(build_plant_and_mesh(scenario)?.1)
}

pub fn build_plant_and_mesh(scenario: &Scenario) -> Result<(PlantDescriptor, MeshSpec)> {
    scenario.validate()?;
    let points = scaled_points(scenario);
    let plant = build_plant(scenario, points)?;
    let horizon = scenario.horizon;
    let formula = scenario
        .mesh
        .steps
        .unwrap_or_else(|| formula_steps(&scenario.plant, points, horizon));
    let dt_limit = stability_limit(&plant);
    let mut steps = formula;
    let dt_reduced = formula == 0 || horizon / formula as f64 > dt_limit;
    if dt_reduced {
        steps = (horizon / dt_limit).ceil() as usize;
    }
    if steps == 0 {
        return Err(FunnelError::config("mesh has no time steps"));
    }
    let dtheta = match &plant {
        PlantDescriptor::RadialHeat(h) => Some(h.dtheta()),
        _ => None,
    };
    let mesh = MeshSpec {
        points,
        steps,
        formula_steps: formula,
        dt: horizon / steps as f64,
        dx: plant.mesh_width(),
        dtheta,
        scale: scenario.mesh.scale,
        dt_limit,
        dt_reduced,
    };
    Ok((plant, mesh))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceStatus {
    Completed,
    FunnelViolation(f64),
    Diverged(f64),
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceStatus::Completed => write!(f, "completed"),
            TraceStatus::FunnelViolation(t) => write!(f, "funnel_violation t={t:e}"),
            TraceStatus::Diverged(t) => write!(f, "diverged t={t:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub m: usize,
    pub times: Vec<f64>,
    pub outputs: Vec<Vec<f64>>,
    pub references: Vec<Vec<f64>>,
    pub error_norms: Vec<f64>,
    /// `1 / phi(t)`.
    pub funnel_bounds: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub status: TraceStatus,
}

impl SimulationTrace {
    pub fn new(m: usize) -> Self {
        SimulationTrace {
            m,
            times: Vec::new(),
            outputs: Vec::new(),
            references: Vec::new(),
            error_norms: Vec::new(),
            funnel_bounds: Vec::new(),
            inputs: Vec::new(),
            energies: Vec::new(),
            status: TraceStatus::Completed,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, t: f64, y: &[f64], y_ref: &[f64], e_norm: f64, bound: f64, u: &[f64], energy: f64) {
        self.times.push(t);
        self.outputs.push(y.to_vec());
        self.references.push(y_ref.to_vec());
        self.error_norms.push(e_norm);
        self.funnel_bounds.push(bound);
        self.inputs.push(u.to_vec());
        self.energies.push(energy);
    }
}

/// Outcome of a single closed-loop step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Advanced,
    FunnelViolation,
    Diverged,
}

/// Plant, controller and reference advancing together on a uniform grid.
pub struct ClosedLoop<'a, P: DiscretePlant + ?Sized> {
    plant: &'a P,
    cfg: ControllerConfig,
    reference: &'a ReferenceSignal,
    dt: f64,
    feedthrough: f64,
    k: usize,
    x: Vec<f64>,
    work: Vec<f64>,
    u: Vec<f64>,
    y: Vec<f64>,
    y_ref: Vec<f64>,
    e: Vec<f64>,
    phi: f64,
}

impl<'a, P: DiscretePlant + ?Sized> ClosedLoop<'a, P> {
    pub fn new(plant: &'a P, cfg: ControllerConfig, reference: &'a ReferenceSignal, dt: f64) -> Self {
        let x = plant.initial_state();
        let u = cfg.u0.clone();
        let y = plant.output(&x, &u);
        let y_ref = reference.eval(0.0);
        let e = sub(&y, &y_ref);
        ClosedLoop {
            plant,
            phi: cfg.phi0,
            cfg,
            reference,
            dt,
            feedthrough: plant.feedthrough(dt),
            k: 0,
            work: vec![0.0; x.len()],
            x,
            u,
            y,
            y_ref,
            e,
        }
    }

    /// Controller set up from the plant's initial state.
    pub fn from_plant(
        plant: &'a P,
        scenario: &Scenario,
        reference: &'a ReferenceSignal,
        dt: f64,
        k0: f64,
    ) -> Result<Self> {
        let cfg = init_from_plant(plant, scenario.funnel.clone(), &reference.eval(0.0), k0, scenario.bump())?;
        Ok(Self::new(plant, cfg, reference, dt))
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.dt
    }
    pub fn step_index(&self) -> usize {
        self.k
    }
    pub fn state(&self) -> &[f64] {
        &self.x
    }
    pub fn input(&self) -> &[f64] {
        &self.u
    }
    pub fn output(&self) -> &[f64] {
        &self.y
    }
    pub fn reference(&self) -> &[f64] {
        &self.y_ref
    }
    pub fn error(&self) -> &[f64] {
        &self.e
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn controller(&self) -> &ControllerConfig {
        &self.cfg
    }

    /// `1 - phi |e|` at the current step.
    pub fn margin(&self) -> f64 {
        1.0 - self.phi * norm(&self.e)
    }

    pub fn energy(&self) -> f64 {
        self.plant.energy(&self.x)
    }

    pub fn step(&mut self) -> StepOutcome {
        let t = (self.k + 1) as f64 * self.dt;
        let m = self.u.len();
        self.plant.step_free(&mut self.x, &mut self.work, &self.u, self.dt);
        if self.x.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
            self.k += 1;
            return StepOutcome::Diverged;
        }
        let zero = vec![0.0; m];
        let y_free = self.plant.output(&self.x, &zero);
        let y_ref = self.reference.eval(t);
        let phi = self.cfg.funnel.value(t);
        let ff = self.cfg.feedforward(t);
        let gain = self.feedthrough * self.cfg.k0;
        let c: Vec<f64> = (0..m).map(|i| y_free[i] - y_ref[i] + self.feedthrough * ff[i]).collect();
        let e_solved = if gain > 0.0 {
            let lambda = 1.0 / gain;
            let f: Vec<f64> = c.iter().map(|v| phi * v / gain).collect();
            solve_resolvent(lambda, &f).into_iter().map(|z| z / phi).collect()
        } else {
            c
        };
        self.k += 1;
        self.phi = phi;
        self.y_ref = y_ref;
        let u = match self.cfg.input_from_error(t, phi, &e_solved) {
            Ok(u) => u,
            Err(_) => {
                self.e = e_solved;
                return StepOutcome::FunnelViolation;
            }
        };
        self.plant.close_boundary(&mut self.x, &u, self.dt);
        self.y = self.plant.output(&self.x, &u);
        self.u = u;
        self.e = sub(&self.y, &self.y_ref);
        if !self.u.iter().chain(&self.y).all(|v| v.is_finite()) {
            return StepOutcome::Diverged;
        }
        if !(self.margin() > FUNNEL_GUARD) {
            return StepOutcome::FunnelViolation;
        }
        StepOutcome::Advanced
    }

    fn record(&self, trace: &mut SimulationTrace) {
        trace.push(
            self.time(),
            &self.y,
            &self.y_ref,
            norm(&self.e),
            1.0 / self.phi,
            &self.u,
            self.energy(),
        );
    }

    /// Runs `steps` steps, recording every `stride`-th sample, the first and
    /// the last.
    pub fn run(mut self, steps: usize, stride: usize) -> SimulationTrace {
        let mut trace = SimulationTrace::new(self.u.len());
        self.record(&mut trace);
        let stride = stride.max(1);
        while self.k < steps {
            let outcome = self.step();
            let t = self.time();
            match outcome {
                StepOutcome::Advanced => {
                    if self.k.is_multiple_of(stride) || self.k == steps {
                        self.record(&mut trace);
                    }
                }
                StepOutcome::FunnelViolation => {
                    self.record(&mut trace);
                    trace.status = TraceStatus::FunnelViolation(t);
                    break;
                }
                StepOutcome::Diverged => {
                    self.record(&mut trace);
                    trace.status = TraceStatus::Diverged(t);
                    break;
                }
            }
        }
        trace
    }
}

/// Builds the mesh and plant, checks initial admissibility and runs the
/// closed loop to the horizon.
pub fn run_simulation(scenario: &Scenario) -> Result<SimulationTrace> {
    let (plant, mesh) = build_plant_and_mesh(scenario)?;
    let lp = ClosedLoop::from_plant(&plant, scenario, &scenario.reference, mesh.dt, scenario.k0)?;
    Ok(lp.run(mesh.steps, scenario.mesh.record_stride))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;

    #[test]
    fn line_mesh_formula() {
        let mut s = preset("tline-6.1").unwrap();
        let mesh = build_mesh(&s).unwrap();
        assert_eq!(mesh.points, 1000);
        assert_eq!(mesh.formula_steps, 1277);
        assert_eq!(mesh.steps, 1277);
        assert!(!mesh.dt_reduced);
        s.mesh.scale = 0.2;
        let mesh = build_mesh(&s).unwrap();
        assert_eq!(mesh.points, 200);
        assert_eq!(mesh.formula_steps, 255);
        assert!(mesh.dt <= mesh.dt_limit);
    }

    #[test]
    fn wave_mesh_formula_then_courant() {
        let mut s = preset("wave-6.2").unwrap();
        let mesh = build_mesh(&s).unwrap();
        assert_eq!(mesh.formula_steps, 250);
        assert!(mesh.dt_reduced);
        assert_eq!(mesh.steps, 16000);
        s.mesh.scale = 0.25;
        let mesh = build_mesh(&s).unwrap();
        assert_eq!(mesh.points, 500);
        assert_eq!(mesh.steps, 4000);
        assert!(mesh.dt / mesh.dx <= WAVE_COURANT + 1e-12);
    }

    #[test]
    fn heat_mesh_formula() {
        let s = preset("heat-6.3").unwrap();
        let mesh = build_mesh(&s).unwrap();
        assert_eq!(mesh.formula_steps, 33291);
        assert!(mesh.dt_reduced);
        assert!(mesh.dt <= mesh.dt_limit);
        assert_eq!(mesh.dtheta, Some(2.0 * PI / 25.0));
    }

    #[test]
    fn scaled_mesh_has_a_floor() {
        let mut s = preset("heat-6.3").unwrap();
        s.mesh.scale = 0.01;
        assert_eq!(build_mesh(&s).unwrap().points, 3);
    }

    #[test]
    fn zero_reference_keeps_zero_state() {
        let mut s = preset("tline-6.1").unwrap();
        s.mesh.scale = 0.05;
        s.reference = ReferenceSignal::ProductSine {
            a1: 0.0,
            omega1: 1.0,
            omega2: 1.0,
            a2: 0.0,
            omega3: 1.0,
        };
        let trace = run_simulation(&s).unwrap();
        assert_eq!(trace.status, TraceStatus::Completed);
        assert!(trace.energies.iter().all(|e| *e == 0.0));
        assert!(trace.inputs.iter().flatten().all(|u| *u == 0.0));
    }

    #[test]
    fn zero_input_step_matches_open_loop() {
        let s = preset("heat-6.3").unwrap();
        let (plant, mesh) = build_plant_and_mesh(&s).unwrap();
        let reference = ReferenceSignal::Sine { a: 0.0, omega: 1.0 };
        let mut lp = ClosedLoop::from_plant(&plant, &s, &reference, mesh.dt, 1.0).unwrap();
        let mut x = plant.initial_state();
        let mut work = vec![0.0; x.len()];
        plant.step_free(&mut x, &mut work, &[0.0], mesh.dt);
        assert_eq!(lp.step(), StepOutcome::Advanced);
        assert_eq!(lp.state(), &x[..]);
    }

    #[test]
    fn inadmissible_initial_error_fails_before_stepping() {
        let mut s = preset("heat-6.3").unwrap();
        s.plant = PlantConfig::RadialHeat {
            r0: 0.0,
            r1: 1.0,
            diffusivity: 1.0,
            kappa: 0.0,
            points: 10,
            initial: crate::plants::HeatInitial::Constant { value: 1.0 },
        };
        assert!(matches!(run_simulation(&s), Err(FunnelError::InitialFunnelViolation { .. })));
    }

    #[test]
    fn boundary_solve_lands_on_the_solved_error() {
        let mut s = preset("tline-6.1").unwrap();
        s.mesh.scale = 0.05;
        let (plant, mesh) = build_plant_and_mesh(&s).unwrap();
        let mut lp = ClosedLoop::from_plant(&plant, &s, &s.reference, mesh.dt, 1.0).unwrap();
        for _ in 0..20 {
            assert_eq!(lp.step(), StepOutcome::Advanced);
            assert!(lp.margin() > 0.0);
            // psi is evaluated at the solved error; the recomputed error
            // differs by rounding, which the gain 1 / margin^2 amplifies.
            let g = crate::funnel::psi_gain(lp.phi(), lp.error()).unwrap();
            let p = lp.controller().bump.value(lp.time());
            for (u, s) in lp.input().iter().zip(&g.psi) {
                if p == 0.0 {
                    assert!((u + s).abs() <= 1e-3 * s.abs().max(1.0), "{u} vs {s}");
                }
            }
        }
    }
}
