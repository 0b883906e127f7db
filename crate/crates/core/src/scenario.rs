//! Scenario files: plant, funnel, reference, controller and mesh settings in
//! TOML, plus the three built-in presets.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::BumpSpec;
use crate::error::{FunnelError, Result};
use crate::funnel::FunnelSpec;
use crate::plants::{HeatInitial, LineInitial, LineParameters, WaveInitial};

pub const PRESETS: [&str; 3] = ["tline-6.1", "wave-6.2", "heat-6.3"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    TransmissionLine {
        resistance: f64,
        inductance: f64,
        conductance: f64,
        capacitance: f64,
        a: f64,
        b: f64,
        /// Voltage nodes before scaling.
        points: usize,
        #[serde(default)]
        initial: LineInitial,
    },
    RadialWave {
        r0: f64,
        r1: f64,
        #[serde(default = "unit")]
        speed: f64,
        /// Radial cells before scaling.
        points: usize,
        #[serde(default)]
        initial: WaveInitial,
    },
    RadialHeat {
        r0: f64,
        r1: f64,
        diffusivity: f64,
        #[serde(default)]
        kappa: f64,
        /// Cells per variable (radius and angle) before scaling.
        points: usize,
        #[serde(default)]
        initial: HeatInitial,
    },
}

fn unit() -> f64 {
    1.0
}

impl PlantConfig {
    pub fn io_dim(&self) -> usize {
        match self {
            PlantConfig::TransmissionLine { .. } => 2,
            _ => 1,
        }
    }

    pub fn points(&self) -> usize {
        match *self {
            PlantConfig::TransmissionLine { points, .. }
            | PlantConfig::RadialWave { points, .. }
            | PlantConfig::RadialHeat { points, .. } => points,
        }
    }

    pub fn line_parameters(&self) -> Option<LineParameters> {
        match *self {
            PlantConfig::TransmissionLine {
                resistance,
                inductance,
                conductance,
                capacitance,
                a,
                b,
                ..
            } => Some(LineParameters {
                resistance,
                inductance,
                conductance,
                capacitance,
                a,
                b,
            }),
            _ => None,
        }
    }
}

/// One sinusoid `amplitude * sin(omega t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTerm {
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSignal {
    /// `(a1 sin(omega1 t) sin(omega2 t), a2 sin(omega3 t))`.
    ProductSine {
        a1: f64,
        omega1: f64,
        omega2: f64,
        a2: f64,
        omega3: f64,
    },
    /// `a tanh(omega t) + b sin(omega t)`.
    TanhPlusSine { a: f64, b: f64, omega: f64 },
    /// `a sin(omega t)`.
    Sine { a: f64, omega: f64 },
    /// One sum of sinusoids per output channel.
    Custom { channels: Vec<Vec<SineTerm>> },
}

impl ReferenceSignal {
    pub fn dim(&self) -> usize {
        match self {
            ReferenceSignal::ProductSine { .. } => 2,
            ReferenceSignal::TanhPlusSine { .. } | ReferenceSignal::Sine { .. } => 1,
            ReferenceSignal::Custom { channels } => channels.len(),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        match *self {
            ReferenceSignal::ProductSine {
                a1,
                omega1,
                omega2,
                a2,
                omega3,
            } => vec![a1 * (omega1 * t).sin() * (omega2 * t).sin(), a2 * (omega3 * t).sin()],
            ReferenceSignal::TanhPlusSine { a, b, omega } => vec![a * (omega * t).tanh() + b * (omega * t).sin()],
            ReferenceSignal::Sine { a, omega } => vec![a * (omega * t).sin()],
            ReferenceSignal::Custom { ref channels } => channels
                .iter()
                .map(|terms| terms.iter().map(|s| s.amplitude * (s.omega * t + s.phase).sin()).sum())
                .collect(),
        }
    }

    fn values(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ReferenceSignal::ProductSine {
                a1,
                omega1,
                omega2,
                a2,
                omega3,
            } => vec![("a1", a1), ("omega1", omega1), ("omega2", omega2), ("a2", a2), ("omega3", omega3)],
            ReferenceSignal::TanhPlusSine { a, b, omega } => vec![("a", a), ("b", b), ("omega", omega)],
            ReferenceSignal::Sine { a, omega } => vec![("a", a), ("omega", omega)],
            ReferenceSignal::Custom { ref channels } => channels
                .iter()
                .flatten()
                .flat_map(|s| [("amplitude", s.amplitude), ("omega", s.omega), ("phase", s.phase)])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Multiplier on the plant's point count, in `(0, 1]`.
    #[serde(default = "unit")]
    pub scale: f64,
    /// Record every `record_stride`-th step in the trace (the last step is
    /// always recorded).
    #[serde(default = "one")]
    pub record_stride: usize,
    /// Fixed number of time steps in place of the mesh formula (the
    /// stability bound still applies).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

fn one() -> usize {
    1
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            scale: 1.0,
            record_stride: 1,
            steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Final time `T`.
    pub horizon: f64,
    #[serde(default = "unit")]
    pub k0: f64,
    /// Seed of the verification suites.
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the polynomial bump on the first tenth of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump: Option<BumpSpec>,
    #[serde(default)]
    pub mesh: MeshConfig,
    pub plant: PlantConfig,
    pub funnel: FunnelSpec,
    pub reference: ReferenceSignal,
    /// Unit annotations (documentation only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub units: BTreeMap<String, String>,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(FunnelError::config(format!("{key} must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn bump(&self) -> BumpSpec {
        self.bump.clone().unwrap_or_else(|| BumpSpec::polynomial(0.1 * self.horizon))
    }

    pub fn validate(&self) -> Result<()> {
        positive("horizon", self.horizon)?;
        positive("k0", self.k0)?;
        if !(self.mesh.scale > 0.0 && self.mesh.scale <= 1.0) {
            return Err(FunnelError::config(format!("mesh.scale must lie in (0, 1], got {}", self.mesh.scale)));
        }
        if self.mesh.steps == Some(0) {
            return Err(FunnelError::config("mesh.steps must be at least 1"));
        }
        if self.mesh.record_stride == 0 {
            return Err(FunnelError::config("mesh.record_stride must be at least 1"));
        }
        self.bump().validate()?;
        self.funnel.validate()?;
        match self.plant {
            PlantConfig::TransmissionLine { .. } => self.plant.line_parameters().unwrap().validate()?,
            PlantConfig::RadialWave { r0, r1, speed, .. } => {
                positive("plant.r1", r1)?;
                positive("plant.speed", speed)?;
                if !(r0 >= 0.0 && r0 < r1) {
                    return Err(FunnelError::config("plant.r0 must satisfy 0 <= r0 < r1"));
                }
            }
            PlantConfig::RadialHeat {
                r0, r1, diffusivity, kappa, ..
            } => {
                positive("plant.r1", r1)?;
                positive("plant.diffusivity", diffusivity)?;
                if !(r0 >= 0.0 && r0 < r1) {
                    return Err(FunnelError::config("plant.r0 must satisfy 0 <= r0 < r1"));
                }
                if !(kappa.is_finite() && kappa >= 0.0) {
                    return Err(FunnelError::config("plant.kappa must be nonnegative"));
                }
            }
        }
        if self.plant.points() < 3 {
            return Err(FunnelError::config("plant.points must be at least 3"));
        }
        for (key, v) in self.reference.values() {
            if !v.is_finite() {
                return Err(FunnelError::config(format!("reference.{key} must be finite")));
            }
        }
        let m = self.plant.io_dim();
        if self.funnel.m != m {
            return Err(FunnelError::config(format!("funnel.m = {} but the plant has m = {m}", self.funnel.m)));
        }
        if self.reference.dim() != m {
            return Err(FunnelError::config(format!(
                "reference has {} channels but the plant has m = {m}",
                self.reference.dim()
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| FunnelError::config(format!("invalid scenario file: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FunnelError::config(format!("cannot serialize scenario: {e}")))
    }
}

fn units(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Built-in scenarios at their original resolution.
pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "tline-6.1" => {
            let p = LineParameters::reference_line();
            let f = 1e6;
            let omega = 2.0 * PI * f;
            let horizon = 2.0 / f;
            Some(Scenario {
                name: name.into(),
                horizon,
                k0: 1.0,
                seed: 0,
                bump: Some(BumpSpec::polynomial(0.1 * horizon)),
                mesh: MeshConfig::default(),
                plant: PlantConfig::TransmissionLine {
                    resistance: p.resistance,
                    inductance: p.inductance,
                    conductance: p.conductance,
                    capacitance: p.capacitance,
                    a: p.a,
                    b: p.b,
                    points: 1000,
                    initial: LineInitial::Zero,
                },
                funnel: FunnelSpec::tanh(1.0, 0.1, omega, 2).unwrap(),
                reference: ReferenceSignal::ProductSine {
                    a1: -0.3,
                    omega1: omega,
                    omega2: 16.0 * omega,
                    a2: 0.4,
                    omega3: omega / 2.0,
                },
                units: units(&[
                    ("a", "m"),
                    ("b", "m"),
                    ("capacitance", "F/m"),
                    ("conductance", "S/m"),
                    ("horizon", "s"),
                    ("inductance", "H/m"),
                    ("k0", "Ohm"),
                    ("phi0", "1/A"),
                    ("reference", "A"),
                    ("resistance", "Ohm/m"),
                ]),
            })
        }
        "wave-6.2" => {
            let omega = 2.0 * PI;
            let horizon = 4.0;
            Some(Scenario {
                name: name.into(),
                horizon,
                k0: 1.0,
                seed: 0,
                bump: Some(BumpSpec::polynomial(0.1 * horizon)),
                mesh: MeshConfig::default(),
                plant: PlantConfig::RadialWave {
                    r0: 0.0,
                    r1: 1.0,
                    speed: 1.0,
                    points: 2000,
                    initial: WaveInitial::Zero,
                },
                funnel: FunnelSpec::tanh(1.0, 1e-2, omega, 1).unwrap(),
                reference: ReferenceSignal::TanhPlusSine { a: 1.0, b: 0.1, omega },
                units: units(&[
                    ("horizon", "m (unit wave speed)"),
                    ("k0", "dimensionless"),
                    ("omega", "rad/m"),
                    ("r0", "m"),
                    ("r1", "m"),
                ]),
            })
        }
        "heat-6.3" => {
            let omega = 2.0 * PI;
            let horizon = 5.0;
            Some(Scenario {
                name: name.into(),
                horizon,
                k0: 1.0,
                seed: 0,
                bump: Some(BumpSpec::polynomial(0.1 * horizon)),
                mesh: MeshConfig::default(),
                plant: PlantConfig::RadialHeat {
                    r0: 0.0,
                    r1: 1.0,
                    diffusivity: 1.0,
                    kappa: 0.0,
                    points: 25,
                    initial: HeatInitial::RadialSine { amplitude: 0.5 },
                },
                funnel: FunnelSpec::tanh(0.1, 0.1, omega, 1).unwrap(),
                reference: ReferenceSignal::Sine { a: 1.0, omega },
                units: units(&[
                    ("amplitude", "J/m^2"),
                    ("diffusivity", "m^2/s"),
                    ("horizon", "s"),
                    ("k0", "1/s^2"),
                    ("omega", "rad/s"),
                    ("phi0", "J"),
                    ("reference", "J"),
                ]),
            })
        }
        _ => None,
    }
}

/// Loads a preset by name, or else a TOML scenario file.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    if let Some(s) = preset(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| {
        FunnelError::config(format!(
            "cannot read scenario '{spec}': {e} (presets: {})",
            PRESETS.join(", ")
        ))
    })?;
    Scenario::from_toml_str(&text).map_err(|e| match e {
        FunnelError::Config(msg) => FunnelError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
