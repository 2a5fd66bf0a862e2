//! Strictly parsed experiment configuration.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dichotomic::{make_square_wave, DichotomicFunction};
use crate::multiparty::ParitySystem;
use crate::optical::SourceModel;
use crate::sign::Sign;

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_OUT_DIR: &str = "out";

/// A configuration problem, located by its JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config {}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Correlate,
    Chsh,
    Ghz,
    Optical,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Correlate,
        ExperimentKind::Chsh,
        ExperimentKind::Ghz,
        ExperimentKind::Optical,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::Correlate => "correlate",
            ExperimentKind::Chsh => "chsh",
            ExperimentKind::Ghz => "ghz",
            ExperimentKind::Optical => "optical",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

/// Inclusive uniform grid of `count ≥ 2` points from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + i as f64 * step
                }
            })
            .collect()
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if self.count < 2 {
            return Err(ConfigError::new(
                format!("{path}.count"),
                "sweep count must be at least 2",
            ));
        }
        finite(self.start, &format!("{path}.start"))?;
        finite(self.stop, &format!("{path}.stop"))
    }
}

fn finite(x: f64, path: &str) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, "value must be finite"))
    }
}

/// A dichotomic function of period 2π.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// Balanced square wave, +1 on `[phase, phase + π)`.
    Square {
        #[serde(default)]
        phase: f64,
    },
    /// Arbitrary sign changes; `sign_at_origin` is the value just right of 0.
    Steps {
        breakpoints: Vec<f64>,
        sign_at_origin: Sign,
    },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<DichotomicFunction, crate::dichotomic::DichotomicError> {
        match self {
            FunctionSpec::Square { phase } => make_square_wave(TAU, *phase),
            FunctionSpec::Steps {
                breakpoints,
                sign_at_origin,
            } => DichotomicFunction::from_sign_changes(TAU, breakpoints, *sign_at_origin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelateParams {
    pub f: FunctionSpec,
    pub g: FunctionSpec,
    pub sweep: Sweep,
}

impl Default for CorrelateParams {
    fn default() -> Self {
        Self {
            f: FunctionSpec::Square { phase: 0.0 },
            g: FunctionSpec::Square { phase: PI },
            sweep: Sweep {
                start: 0.0,
                stop: TAU,
                count: 1001,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshAngles {
    pub a: f64,
    pub a2: f64,
    pub b: f64,
    pub b2: f64,
}

impl Default for ChshAngles {
    fn default() -> Self {
        Self {
            a: 0.0,
            a2: FRAC_PI_2,
            b: FRAC_PI_4,
            b2: -FRAC_PI_4,
        }
    }
}

/// Hidden-variable families the runner can name.
pub const LHV_MODELS: [&str; 1] = ["bell_sgn"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChshParams {
    pub angles: ChshAngles,
    pub model: String,
    pub phase_a: f64,
    pub phase_b: f64,
    pub sweep: Sweep,
}

impl Default for ChshParams {
    fn default() -> Self {
        Self {
            angles: ChshAngles::default(),
            model: "bell_sgn".into(),
            phase_a: 0.0,
            phase_b: 0.0,
            sweep: Sweep {
                start: -PI,
                stop: PI,
                count: 181,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GhzParams {
    pub n: usize,
    pub m: usize,
    /// Defaults to the three-party GHZ system.
    pub system: Option<ParitySystem>,
    /// Grid of `τ + θ` values at which `−cos(τ + θ)` is compared with the
    /// value lattice.
    pub sweep: Sweep,
}

impl Default for GhzParams {
    fn default() -> Self {
        Self {
            n: 2,
            m: 2,
            system: None,
            sweep: Sweep {
                start: 0.0,
                stop: TAU,
                count: 181,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalParams {
    pub model: SourceModel,
    pub a: f64,
    pub b: f64,
    pub sweep: Sweep,
}

impl Default for OpticalParams {
    fn default() -> Self {
        Self {
            model: SourceModel::SharedAxis,
            a: 0.0,
            b: 0.0,
            sweep: Sweep {
                start: 0.0,
                stop: PI,
                count: 181,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Correlate(CorrelateParams),
    Chsh(ChshParams),
    Ghz(GhzParams),
    Optical(OpticalParams),
}

/// A validated, fully defaulted experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub samples: u64,
    pub params: Params,
    pub out_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    experiment: Value,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    samples: Option<u64>,
    #[serde(default)]
    params: Option<Value>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
}

fn from_value<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut segments: Vec<String> = Vec::new();
        if !prefix.is_empty() {
            segments.push(prefix.to_string());
        }
        let inner = e.path().to_string();
        if inner != "." {
            segments.push(inner);
        }
        let message = e.into_inner().to_string();
        // serde reports a missing field at its parent; point at the field
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            segments.push(field.to_string());
        }
        ConfigError::new(segments.join("."), message)
    })
}

/// Parses, defaults and validates a JSON configuration document.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = serde_json::from_str(raw)
        .map_err(|e| ConfigError::new("", format!("malformed JSON: {e}")))?;
    validate_value(value)
}

/// As [`validate_config`], starting from an already parsed document.
pub fn validate_value(value: Value) -> Result<ExperimentConfig, ConfigError> {
    if !value.is_object() {
        return Err(ConfigError::new("", "expected a JSON object"));
    }
    let env: Envelope = from_value(value, "")?;

    let experiment = env
        .experiment
        .as_str()
        .and_then(ExperimentKind::from_tag)
        .ok_or_else(|| {
            ConfigError::new(
                "experiment",
                format!(
                    "unknown experiment {}; expected one of correlate, chsh, ghz, optical",
                    env.experiment
                ),
            )
        })?;

    let samples = env.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(ConfigError::new("samples", "must be a positive integer"));
    }
    let params_value = env
        .params
        .unwrap_or_else(|| Value::Object(Default::default()));
    let params = match experiment {
        ExperimentKind::Correlate => {
            let p: CorrelateParams = from_value(params_value, "params")?;
            p.sweep.validate("params.sweep")?;
            for (name, spec) in [("f", &p.f), ("g", &p.g)] {
                spec.build()
                    .map_err(|e| ConfigError::new(format!("params.{name}"), e.to_string()))?;
            }
            if samples < crate::dichotomic::MIN_GAP_SAMPLES as u64 {
                return Err(ConfigError::new(
                    "samples",
                    format!(
                        "correlate needs at least {} samples for the cosine gap",
                        crate::dichotomic::MIN_GAP_SAMPLES
                    ),
                ));
            }
            Params::Correlate(p)
        }
        ExperimentKind::Chsh => {
            let p: ChshParams = from_value(params_value, "params")?;
            p.sweep.validate("params.sweep")?;
            if !LHV_MODELS.contains(&p.model.as_str()) {
                return Err(ConfigError::new(
                    "params.model",
                    format!("unknown hidden-variable model {:?}", p.model),
                ));
            }
            for (name, x) in [
                ("angles.a", p.angles.a),
                ("angles.a2", p.angles.a2),
                ("angles.b", p.angles.b),
                ("angles.b2", p.angles.b2),
                ("phase_a", p.phase_a),
                ("phase_b", p.phase_b),
            ] {
                finite(x, &format!("params.{name}"))?;
            }
            Params::Chsh(p)
        }
        ExperimentKind::Ghz => {
            let p: GhzParams = from_value(params_value, "params")?;
            p.sweep.validate("params.sweep")?;
            if p.n == 0 {
                return Err(ConfigError::new("params.n", "must be a positive integer"));
            }
            if p.m == 0 {
                return Err(ConfigError::new("params.m", "must be a positive integer"));
            }
            Params::Ghz(p)
        }
        ExperimentKind::Optical => {
            let p: OpticalParams = from_value(params_value, "params")?;
            p.sweep.validate("params.sweep")?;
            finite(p.a, "params.a")?;
            finite(p.b, "params.b")?;
            Params::Optical(p)
        }
    };

    Ok(ExperimentConfig {
        experiment,
        seed: env.seed.unwrap_or(0),
        samples,
        params,
        out_dir: env
            .out_dir
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    })
}
