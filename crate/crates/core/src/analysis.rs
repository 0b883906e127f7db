//! Run summaries and the verification suites.

use std::fmt::Write as _;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::funnel::{phi_nonlinearity, resolve_cubic};
use crate::integrator::{build_plant, build_plant_and_mesh, ClosedLoop, SimulationTrace, StepOutcome, TraceStatus};
use crate::par::{join, map_trials, Execution};
use crate::plants::{
    assemble_matrices, passivity_certificate_with, resolvent_positivity_with, DiscretePlant, InputScaled,
};
use crate::scenario::Scenario;
use crate::vector::{dot, norm, sub};

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// `min_k (1 - phi(t_k) |e(t_k)|)`.
    pub min_margin: f64,
    pub max_error: f64,
    pub max_input: f64,
    /// Largest stored energy.
    pub energy_bound: f64,
    pub funnel_ok: bool,
    pub wall_time: Duration,
    pub samples: usize,
    pub status: TraceStatus,
}

/// `1 - phi(t_k) |e(t_k)|` per recorded sample.
pub fn funnel_margin_series(trace: &SimulationTrace) -> Vec<f64> {
    trace
        .error_norms
        .iter()
        .zip(&trace.funnel_bounds)
        .map(|(e, b)| 1.0 - e / b)
        .collect()
}

impl RunReport {
    pub fn from_trace(trace: &SimulationTrace, wall_time: Duration) -> Self {
        let min_margin = funnel_margin_series(trace).into_iter().fold(f64::INFINITY, f64::min);
        let fmax = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, f64::max);
        RunReport {
            min_margin,
            max_error: fmax(&mut trace.error_norms.iter().copied()),
            max_input: fmax(&mut trace.inputs.iter().map(|u| norm(u))),
            energy_bound: fmax(&mut trace.energies.iter().copied()),
            funnel_ok: min_margin > 0.0,
            wall_time,
            samples: trace.len(),
            status: trace.status,
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "status = {}\nsamples = {}\nmin_margin = {:.6e}\nmax_error = {:.6e}\nmax_input = {:.6e}\nenergy_bound = {:.6e}\nfunnel_ok = {}\nwall_time_s = {:.3}\n",
            self.status,
            self.samples,
            self.min_margin,
            self.max_error,
            self.max_input,
            self.energy_bound,
            self.funnel_ok,
            self.wall_time.as_secs_f64()
        )
    }
}

/// Radius of the ball the dissipativity samples are drawn from.
pub const SAMPLE_RADIUS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityReport {
    pub m: usize,
    pub trials: usize,
    /// Smallest `<phi(w) - phi(y), w - y>` seen.
    pub min_inner: f64,
    /// Largest `|lambda y + phi(y) - f|` of the surjectivity trials.
    pub max_residual: f64,
    /// Largest `|p(rho)|` at the computed cubic roots.
    pub max_cubic_residual: f64,
    pub failures: usize,
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, m: usize, radius: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm(&dir);
    let r = radius * rng.random::<f64>().powf(1.0 / m as f64);
    dir.iter().map(|v| v * r / n).collect()
}

/// Monotonicity of `y / (1 - |y|^2)` on random pairs plus surjectivity of
/// `lambda I + phi` through the cubic.
pub fn dissipativity_suite(exec: Execution, m: usize, trials: usize, seed: u64) -> DissipativityReport {
    let results = map_trials(exec, trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let w = uniform_in_ball(&mut rng, m, SAMPLE_RADIUS);
        let y = uniform_in_ball(&mut rng, m, SAMPLE_RADIUS);
        let pw = phi_nonlinearity(&w).unwrap();
        let py = phi_nonlinearity(&y).unwrap();
        let inner = dot(&sub(&pw, &py), &sub(&w, &y));

        let lambda = 10.0 * (1.0 - rng.random::<f64>());
        let f_norm = 10.0 * (1.0 - rng.random::<f64>());
        let dir: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f: Vec<f64> = dir.iter().map(|v| v * f_norm / norm(&dir)).collect();
        let rho = resolve_cubic(lambda, f_norm);
        let cubic = ((lambda * rho - f_norm) * rho - (lambda + 1.0)) * rho + f_norm;
        let ys: Vec<f64> = f.iter().map(|v| rho / f_norm * v).collect();
        let phi_y = phi_nonlinearity(&ys).unwrap();
        let lhs: Vec<f64> = ys.iter().zip(&phi_y).map(|(a, b)| lambda * a + b).collect();
        let residual = norm(&sub(&lhs, &f));
        let root_ok = rho > 0.0 && rho < 1.0 && cubic.abs() <= 1e-12;
        (inner, residual, cubic.abs(), inner >= -1e-12 && residual <= 1e-9 && root_ok)
    });
    DissipativityReport {
        m,
        trials,
        min_inner: results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        max_residual: results.iter().map(|r| r.1).fold(0.0, f64::max),
        max_cubic_residual: results.iter().map(|r| r.2).fold(0.0, f64::max),
        failures: results.iter().filter(|r| !r.3).count(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct K0Report {
    pub k0: f64,
    pub steps: usize,
    /// `max_k |x_k - x'_k|`.
    pub max_state_diff: f64,
    /// `max_k |x_k|`.
    pub max_state_norm: f64,
    pub relative: f64,
    pub status: TraceStatus,
}

/// Runs gain `k0` on the plant and gain 1 on the plant with its input scaled
/// by `k0` in lockstep and compares the states.
pub fn k0_equivalence_check(scenario: &Scenario, k0: f64) -> Result<K0Report> {
    let (plant, mesh) = build_plant_and_mesh(scenario)?;
    let scaled = InputScaled { plant: &plant, k0 };
    let mut a = ClosedLoop::from_plant(&plant, scenario, &scenario.reference, mesh.dt, k0)?;
    let mut b = ClosedLoop::from_plant(&scaled, scenario, &scenario.reference, mesh.dt, 1.0)?;
    let mut max_diff: f64 = 0.0;
    let mut max_norm: f64 = norm(a.state());
    let mut status = TraceStatus::Completed;
    for _ in 0..mesh.steps {
        let (oa, ob) = (a.step(), b.step());
        max_diff = max_diff.max(norm(&sub(a.state(), b.state())));
        max_norm = max_norm.max(norm(a.state()));
        let t = a.time();
        if oa != StepOutcome::Advanced || ob != StepOutcome::Advanced {
            status = if oa == StepOutcome::Diverged || ob == StepOutcome::Diverged {
                TraceStatus::Diverged(t)
            } else {
                TraceStatus::FunnelViolation(t)
            };
            break;
        }
    }
    Ok(K0Report {
        k0,
        steps: a.step_index(),
        max_state_diff: max_diff,
        max_state_norm: max_norm,
        relative: if max_norm > 0.0 { max_diff / max_norm } else { max_diff },
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub suites: Vec<SuiteResult>,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.suites.iter().filter(|s| !s.passed).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let _ = writeln!(out, "[{}] {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
        }
        let _ = writeln!(out, "failures = {}", self.failures());
        out
    }
}

/// Largest state dimension for which the dense resolvent solve is run on the
/// scenario mesh; finer meshes are checked on a coarsened copy.
pub const DENSE_SOLVE_LIMIT: usize = 1200;

/// Verification suites for the scenario's plant: passivity certificate,
/// resolvent positivity, and the dissipativity/surjectivity suite.
pub fn verify_scenario(exec: Execution, scenario: &Scenario, seed: u64) -> Result<VerificationReport> {
    let (plant, mesh) = build_plant_and_mesh(scenario)?;
    let mut report = VerificationReport::default();

    let m = plant.io_dim();
    let (cert, d) = join(
        exec,
        || passivity_certificate_with(exec, &plant, 1000, seed),
        || dissipativity_suite(exec, m, 10_000, seed),
    );
    report.suites.push(SuiteResult {
        name: format!("passivity certificate ({}, h = {:.3e})", cert.plant, cert.mesh_width),
        passed: cert.passed,
        detail: format!("max violation {:.3e} <= {:.3e}", cert.max_violation, cert.bound),
    });

    let mut points = mesh.points;
    let coarse;
    let target: &dyn DiscretePlant = if plant.state_dim() > DENSE_SOLVE_LIMIT {
        while points > 3 && build_plant(scenario, points)?.state_dim() > DENSE_SOLVE_LIMIT {
            points = (points * 3 / 4).max(3);
        }
        coarse = build_plant(scenario, points)?;
        &coarse
    } else {
        &plant
    };
    let mats = assemble_matrices(target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut failed = 0;
    let mut runs = 0;
    for beta in [0.5, 1.0, 5.0] {
        for _ in 0..20 {
            let u: Vec<f64> = (0..target.io_dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = resolvent_positivity_with(target, &mats, beta, &u)?;
            worst_gap = worst_gap.max(r.lhs - r.rhs - r.tolerance);
            failed += usize::from(!r.passed);
            runs += 1;
        }
    }
    report.suites.push(SuiteResult {
        name: format!("resolvent positivity ({} points)", points),
        passed: failed == 0,
        detail: format!("{runs} solves, {failed} failures, worst lhs - rhs - tol = {worst_gap:.3e}"),
    });

    report.suites.push(SuiteResult {
        name: format!("dissipativity and surjectivity (m = {m})"),
        passed: d.failures == 0,
        detail: format!(
            "{} pairs, min inner {:.3e}, max residual {:.3e}, failures {}",
            d.trials, d.min_inner, d.max_residual, d.failures
        ),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funnel::phi_nonlinearity;
    use crate::scenario::preset;

    #[test]
    fn zero_error_trace_has_unit_margins() {
        let mut t = SimulationTrace::new(1);
        for k in 0..5 {
            t.push(k as f64, &[0.0], &[0.0], 0.0, 0.5, &[0.0], 0.0);
        }
        assert!(funnel_margin_series(&t).iter().all(|m| *m == 1.0));
        t.push(5.0, &[1.0], &[0.0], 1.0, 2.0, &[0.0], 0.0);
        assert_eq!(*funnel_margin_series(&t).last().unwrap(), 0.5);
    }

    #[test]
    fn symmetric_pair_inner_product() {
        let pw = phi_nonlinearity(&[0.9]).unwrap();
        let py = phi_nonlinearity(&[-0.9]).unwrap();
        let inner = (pw[0] - py[0]) * 1.8;
        let oracle = 2.0 * (0.9 / 0.19) * 1.8;
        assert!((inner - oracle).abs() < 1e-12);
        assert!((inner - 17.052_631_578_947_37).abs() < 1e-12);
    }

    #[test]
    fn suite_passes_in_both_execution_modes() {
        let a = dissipativity_suite(Execution::Sequential, 2, 2000, 11);
        let b = dissipativity_suite(Execution::Parallel, 2, 2000, 11);
        assert_eq!(a, b);
        assert_eq!(a.failures, 0);
    }

    #[test]
    fn unit_gain_equivalence_is_exact() {
        let mut s = preset("tline-6.1").unwrap();
        s.mesh.scale = 0.05;
        let r = k0_equivalence_check(&s, 1.0).unwrap();
        assert_eq!(r.max_state_diff, 0.0);
        assert_eq!(r.status, TraceStatus::Completed);
    }
}
