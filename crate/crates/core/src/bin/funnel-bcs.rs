use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use funnel_bcs::analysis::{verify_scenario, RunReport};
use funnel_bcs::integrator::{build_mesh, run_simulation, TraceStatus};
use funnel_bcs::io::{emit_plot_svg, write_atomic, write_trace_csv};
use funnel_bcs::{load_scenario, Execution, FunnelError};

/// Run a funnel-controlled boundary control scenario and write its trace.
#[derive(Debug, Parser)]
#[command(name = "funnel-bcs", version)]
struct Args {
    /// Preset name (tline-6.1, wave-6.2, heat-6.3) or path to a TOML scenario.
    #[arg(long)]
    scenario: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Multiplier on the scenario's spatial resolution, in (0, 1].
    #[arg(long)]
    mesh_scale: Option<f64>,
    /// Controller gain dilation.
    #[arg(long)]
    k0: Option<f64>,
    /// Also write an SVG plot of the trace.
    #[arg(long)]
    plot: bool,
    /// Run the verification suites on the scenario's plant.
    #[arg(long)]
    verify: bool,
    /// Seed of the verification suites.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_IO: u8 = 1;
const EXIT_FUNNEL: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

fn exit_code(err: &FunnelError) -> u8 {
    match err {
        FunnelError::Io(_) => EXIT_IO,
        FunnelError::FunnelViolation { .. } | FunnelError::OutsideFunnel { .. } => EXIT_FUNNEL,
        FunnelError::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

fn run(args: &Args) -> Result<u8, FunnelError> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(s) = args.mesh_scale {
        scenario.mesh.scale = s;
    }
    if let Some(k0) = args.k0 {
        scenario.k0 = k0;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let mesh = build_mesh(&scenario)?;
    eprintln!(
        "{}: {} points, {} steps (formula {}), dt = {:.3e}{}",
        scenario.name,
        mesh.points,
        mesh.steps,
        mesh.formula_steps,
        mesh.dt,
        if mesh.dt_reduced { ", reduced for stability" } else { "" }
    );

    let start = Instant::now();
    let trace = run_simulation(&scenario)?;
    let report = RunReport::from_trace(&trace, start.elapsed());

    std::fs::create_dir_all(&args.out)?;
    let stem = scenario.name.replace(['/', '\\'], "_");
    write_trace_csv(&trace, &args.out.join(format!("{stem}.csv")))?;
    if args.plot {
        emit_plot_svg(&trace, &args.out.join(format!("{stem}.svg")))?;
    }

    let mut summary = format!("scenario = {}\n{}", scenario.name, report.to_text());
    let mut verify_failed = false;
    if args.verify {
        let v = verify_scenario(Execution::default(), &scenario, scenario.seed)?;
        verify_failed = v.failures() > 0;
        summary.push_str(&v.to_text());
    }
    write_atomic(&args.out.join(format!("{stem}.report.txt")), summary.as_bytes())?;
    print!("{summary}");

    Ok(match trace.status {
        TraceStatus::FunnelViolation(_) => EXIT_FUNNEL,
        TraceStatus::Diverged(_) => EXIT_DIVERGED,
        TraceStatus::Completed if verify_failed => EXIT_IO,
        TraceStatus::Completed => 0,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
