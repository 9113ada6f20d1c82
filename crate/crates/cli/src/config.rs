//! JSON run configuration and `--set` overrides.

use std::path::{Path, PathBuf};

use collision_reflex::actuator::{law_by_name, MotorSpec, ScalingLaw, ELECTRICAL_THERMAL};
use collision_reflex::manipulator::{Configuration, TwoLinkModel};
use collision_reflex::sim::SimOptions;
use collision_reflex::sweep::{MotorSource, Spacing, SweepAxis, SweepVariable};
use collision_reflex::CollisionParams1D;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: CollisionParams1D,
    pub motor: MotorConfig,
    pub model: ModelConfig,
    pub sweep: SweepConfig,
    pub sim: SimOptions,
    pub io: IoConfig,
}

/// Reference motor, scaling law and the target stator size for `scale-motor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorConfig {
    pub reference: MotorSpec,
    pub law: String,
    /// Output peak torque the gearbox must restore, N·m.
    pub torque_floor: f64,
    /// Lever arm for reflected mass and force, m.
    pub link_length: f64,
    /// Target stator diameter, m.
    pub r: f64,
    pub max_gear_ratio: Option<f64>,
}

impl Default for MotorConfig {
    fn default() -> Self {
        Self {
            reference: MotorSpec::M2,
            law: ELECTRICAL_THERMAL.into(),
            torque_floor: MotorSpec::M2.tau_p,
            link_length: 0.1143,
            r: 0.010,
            max_gear_ratio: None,
        }
    }
}

impl MotorConfig {
    pub fn scaling_law(&self) -> Result<ScalingLaw, CliError> {
        law_by_name(&self.law).ok_or_else(|| {
            let known: Vec<String> = collision_reflex::actuator::builtin_laws()
                .into_iter()
                .map(|l| l.name)
                .collect();
            CliError::Usage(format!("unknown scaling law `{}` (known: {})", self.law, known.join(", ")))
        })
    }

    pub fn source(&self) -> Result<MotorSource, CliError> {
        Ok(MotorSource {
            reference: self.reference,
            law: self.scaling_law()?,
            torque_floor: self.torque_floor,
            link_length: self.link_length,
            max_gear_ratio: self.max_gear_ratio,
        })
    }
}

/// Two-link arm plus the configuration and contact used by `surface` and `metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arm: TwoLinkModel,
    /// Joint angles, rad.
    pub configuration: Configuration,
    pub v_0: f64,
    pub f_s: f64,
    /// Number of surface directions.
    pub directions: usize,
    /// Direction for the scalar metrics, rad.
    pub direction: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arm: TwoLinkModel::default(),
            configuration: Configuration::new(0.0, std::f64::consts::FRAC_PI_4),
            v_0: 0.5,
            f_s: 3.0,
            directions: 360,
            direction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// One or two axes; the base point is the `params` section.
    pub axes: Vec<SweepAxis>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axes: vec![SweepAxis::new(SweepVariable::V0, 0.01, 10.0, 200, Spacing::Log)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Trace read by `integrate` and `fit` when no path is given.
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Format for stdout; files use their extension.
    pub format: Option<Format>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}:{}: {e}", path.display(), e.line())))
}

/// Applies `key.path=value` to the config. The value is read as JSON when it
/// parses, otherwise as a string.
pub fn apply_set(config: &RunConfig, assignment: &str) -> Result<RunConfig, CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{assignment}`")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut doc = serde_json::to_value(config).expect("config serializes");

    let mut node = &mut doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Usage(format!("--set: empty path segment in `{key}`")));
        }
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    break;
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let index: usize = part
                    .parse()
                    .map_err(|_| CliError::Usage(format!("--set {key}: `{part}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(index)
                    .ok_or_else(|| CliError::Usage(format!("--set {key}: index {index} out of range (len {len})")))?;
                if last {
                    *slot = value;
                    break;
                }
                slot
            }
            _ => return Err(CliError::Usage(format!("--set {key}: `{part}` is inside a scalar"))),
        };
    }
    serde_json::from_value(doc).map_err(|e| CliError::Usage(format!("--set {key}: {e}")))
}
