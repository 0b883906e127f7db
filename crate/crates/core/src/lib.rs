//! Funnel control of boundary control systems.
//!
//! The funnel controller
//!
//! ```text
//! u(t) = (u0 + k0 psi(phi(0), e0)) p(t) - k0 psi(phi(t), e(t)),
//! psi(phi, e) = e / (1 - phi^2 |e|^2)
//! ```
//!
//! keeps the tracking error `e = y - y_ref` of an impedance-passive boundary
//! control system inside the funnel `phi(t) |e(t)| < 1`. This crate closes
//! that loop around three discretized plants (a lossy transmission line, a
//! radially symmetric wave on a disc and heat conduction on a disc), runs the
//! simulations and checks the structural properties the result relies on.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod controller;
pub mod error;
pub mod funnel;
pub mod integrator;
pub mod io;
pub mod par;
pub mod plants;
pub mod scenario;
pub mod vector;

pub use controller::{bump_p, init_from_plant, BumpForm, BumpSpec, ControllerConfig};
pub use error::{FunnelError, Result};
pub use funnel::{funnel_value, phi_nonlinearity, psi_gain, resolve_cubic, FunnelShape, FunnelSpec, GainEvaluation};
pub use integrator::{build_mesh, run_simulation, ClosedLoop, MeshSpec, SimulationTrace, TraceStatus};
pub use par::Execution;
pub use plants::{DiscretePlant, PlantDescriptor};
pub use scenario::{load_scenario, preset, ReferenceSignal, Scenario};
