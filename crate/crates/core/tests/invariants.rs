use funnel_bcs::analysis::{funnel_margin_series, RunReport};
use funnel_bcs::integrator::{build_mesh, run_simulation, TraceStatus};
use funnel_bcs::plants::HeatInitial;
use funnel_bcs::scenario::PlantConfig;
use funnel_bcs::{preset, FunnelError, Scenario};

fn scaled(name: &str, scale: f64) -> Scenario {
    let mut s = preset(name).unwrap();
    s.mesh.scale = scale;
    s
}

#[test]
fn completed_runs_stay_uniformly_inside_the_funnel() {
    for (name, scale) in [("tline-6.1", 0.2), ("wave-6.2", 0.25), ("heat-6.3", 0.6)] {
        let trace = run_simulation(&scaled(name, scale)).unwrap();
        assert_eq!(trace.status, TraceStatus::Completed, "{name}");
        let delta = funnel_margin_series(&trace).into_iter().fold(f64::INFINITY, f64::min);
        println!("{name}: delta = {delta:.3e}");
        assert!(delta > 0.0, "{name}: delta = {delta}");
    }
}

#[test]
fn identical_scenarios_give_identical_traces() {
    let s = scaled("wave-6.2", 0.1);
    assert_eq!(run_simulation(&s).unwrap(), run_simulation(&s).unwrap());
}

#[test]
fn halving_dt_barely_moves_the_heat_error() {
    let s = preset("heat-6.3").unwrap();
    let base = build_mesh(&s).unwrap();
    let mut fine = s.clone();
    fine.mesh.steps = Some(2 * base.steps);
    let coarse_err = RunReport::from_trace(&run_simulation(&s).unwrap(), Default::default()).max_error;
    let fine_trace = run_simulation(&fine).unwrap();
    assert_eq!(fine_trace.status, TraceStatus::Completed);
    let fine_err = RunReport::from_trace(&fine_trace, Default::default()).max_error;
    let change = (fine_err - coarse_err).abs() / coarse_err;
    println!("max |e|: {coarse_err:.6e} -> {fine_err:.6e} ({change:.3e})");
    assert!(change < 0.1);
}

#[test]
fn inadmissible_initial_error_is_rejected_before_stepping() {
    let mut s = scaled("heat-6.3", 0.4);
    if let PlantConfig::RadialHeat { initial, .. } = &mut s.plant {
        *initial = HeatInitial::Constant { value: 10.0 };
    }
    assert!(matches!(run_simulation(&s), Err(FunnelError::InitialFunnelViolation { .. })));
}
