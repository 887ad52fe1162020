//! Run configuration: one TOML document describes one run.
//!
//! ```toml
//! law = "AreaPreserving"          # AreaPreserving | VolumePreserving | PlainMCF
//!
//! [scenario]
//! family = "Cosine"               # Cylinder | Cosine | Bump
//! r0 = 3.0
//! epsilon = 0.02
//! k = 1
//! n = 2                           # default 2
//! d = 1.0                         # default 1
//! m = 201                         # default 201
//!
//! [stepper]                       # every key optional
//! scheme = "IMEX"                 # IMEX | IMEXEuler | ExplicitEuler | ExplicitRK2
//! dt = "auto"                     # or a positive number
//! cfl_safety = 0.8
//! t_end = 100.0
//! max_steps = 1000000
//! pinch_floor = 1e-3
//! record_every = 1
//!
//! [tolerances]                    # every key optional
//! area_rel = 1e-4
//! volume_rel = 1e-8
//! convergence = 1e-6
//! cylinder = 1e-5
//!
//! [output]                        # every key optional
//! dir = "out"
//! csv = true
//! snapshots_every = 0             # 0 writes only the initial and final profile
//! json_summary = true
//! ```
//!
//! Unknown keys, unknown enum values and out-of-range numbers are rejected
//! with an error naming the key.

use std::path::PathBuf;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::flow::FlowLaw;
use crate::scenarios::{self, Family, ScenarioError, ScenarioSpec};
use crate::stepper::{Scheme, StepperConfig, TimeStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: unknown value `{value}` (expected one of {expected})")]
    UnknownValue {
        key: &'static str,
        value: String,
        expected: String,
    },
    #[error("key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("key `{key}` does not apply to the {family} family")]
    NotApplicable { key: &'static str, family: String },
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub area_rel: f64,
    pub volume_rel: f64,
    pub convergence: f64,
    pub cylinder: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            area_rel: 1e-4,
            volume_rel: 1e-8,
            convergence: 1e-6,
            cylinder: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub snapshots_every: usize,
    pub json_summary: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv: true,
            snapshots_every: 0,
            json_summary: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub law: FlowLaw,
    pub scenario: ScenarioSpec,
    pub stepper: StepperConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

impl SimConfig {
    /// Defaults for everything but the scenario and the law.
    pub fn new(scenario: ScenarioSpec, law: FlowLaw) -> Self {
        Self {
            law,
            scenario,
            stepper: StepperConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }

    /// Config text that [`parse_config`] maps back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

impl Serialize for TimeStep {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TimeStep::Auto => s.serialize_str("auto"),
            TimeStep::Fixed(dt) => s.serialize_f64(*dt),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    law: Option<String>,
    scenario: Option<RawScenario>,
    stepper: Option<RawStepper>,
    tolerances: Option<RawTolerances>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    family: Option<String>,
    r0: Option<f64>,
    epsilon: Option<f64>,
    k: Option<i64>,
    amplitude: Option<f64>,
    center: Option<f64>,
    width: Option<f64>,
    n: Option<i64>,
    d: Option<f64>,
    m: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawDt {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepper {
    scheme: Option<String>,
    dt: Option<RawDt>,
    cfl_safety: Option<f64>,
    t_end: Option<f64>,
    max_steps: Option<i64>,
    pinch_floor: Option<f64>,
    record_every: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    area_rel: Option<f64>,
    volume_rel: Option<f64>,
    convergence: Option<f64>,
    cylinder: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    csv: Option<bool>,
    snapshots_every: Option<i64>,
    json_summary: Option<bool>,
}

fn require<T>(v: Option<T>, key: &'static str) -> Result<T, ConfigError> {
    v.ok_or(ConfigError::Missing(key))
}

fn positive(v: f64, key: &'static str) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::Invalid {
            key,
            reason: format!("must be a positive number, got {v}"),
        })
    }
}

fn count(v: i64, key: &'static str, min: i64) -> Result<usize, ConfigError> {
    if v >= min {
        Ok(v as usize)
    } else {
        Err(ConfigError::Invalid {
            key,
            reason: format!("must be an integer >= {min}, got {v}"),
        })
    }
}

fn forbid(v: &Option<impl Sized>, key: &'static str, family: &str) -> Result<(), ConfigError> {
    match v {
        Some(_) => Err(ConfigError::NotApplicable {
            key,
            family: family.to_owned(),
        }),
        None => Ok(()),
    }
}

fn parse_scenario(raw: RawScenario) -> Result<ScenarioSpec, ConfigError> {
    let name = require(raw.family, "scenario.family")?;
    let r0 = positive(require(raw.r0, "scenario.r0")?, "scenario.r0")?;
    let family = match name.as_str() {
        "Cylinder" => {
            forbid(&raw.epsilon, "scenario.epsilon", &name)?;
            forbid(&raw.k, "scenario.k", &name)?;
            forbid(&raw.amplitude, "scenario.amplitude", &name)?;
            forbid(&raw.center, "scenario.center", &name)?;
            forbid(&raw.width, "scenario.width", &name)?;
            Family::Cylinder { r0 }
        }
        "Cosine" => {
            forbid(&raw.amplitude, "scenario.amplitude", &name)?;
            forbid(&raw.center, "scenario.center", &name)?;
            forbid(&raw.width, "scenario.width", &name)?;
            let epsilon = require(raw.epsilon, "scenario.epsilon")?;
            if !epsilon.is_finite() {
                return Err(ConfigError::Invalid {
                    key: "scenario.epsilon",
                    reason: "must be finite".into(),
                });
            }
            let k = count(raw.k.unwrap_or(1), "scenario.k", 1)? as u32;
            Family::Cosine { r0, epsilon, k }
        }
        "Bump" => {
            forbid(&raw.epsilon, "scenario.epsilon", &name)?;
            forbid(&raw.k, "scenario.k", &name)?;
            let amplitude = require(raw.amplitude, "scenario.amplitude")?;
            let center = positive(require(raw.center, "scenario.center")?, "scenario.center")?;
            let width = positive(require(raw.width, "scenario.width")?, "scenario.width")?;
            Family::Bump {
                r0,
                amplitude,
                center,
                width,
            }
        }
        _ => {
            return Err(ConfigError::UnknownValue {
                key: "scenario.family",
                value: name,
                expected: "Cylinder, Cosine, Bump".into(),
            })
        }
    };
    Ok(ScenarioSpec {
        family,
        n: count(raw.n.unwrap_or(2), "scenario.n", 2)? as u32,
        d: positive(raw.d.unwrap_or(1.0), "scenario.d")?,
        m: count(raw.m.unwrap_or(201), "scenario.m", 5)?,
    })
}

fn parse_stepper(raw: Option<RawStepper>) -> Result<StepperConfig, ConfigError> {
    let mut cfg = StepperConfig::default();
    let Some(raw) = raw else {
        return Ok(cfg);
    };
    if let Some(s) = raw.scheme {
        cfg.scheme = Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ConfigError::UnknownValue {
                key: "stepper.scheme",
                value: s,
                expected: "IMEX, IMEXEuler, ExplicitEuler, ExplicitRK2".into(),
            })?;
    }
    match raw.dt {
        None => {}
        Some(RawDt::Text(t)) if t == "auto" => cfg.dt = TimeStep::Auto,
        Some(RawDt::Text(t)) => {
            return Err(ConfigError::UnknownValue {
                key: "stepper.dt",
                value: t,
                expected: "\"auto\" or a positive number".into(),
            })
        }
        Some(RawDt::Number(x)) => cfg.dt = TimeStep::Fixed(positive(x, "stepper.dt")?),
    }
    if let Some(x) = raw.cfl_safety {
        if !(x > 0.0 && x <= 1.0) {
            return Err(ConfigError::Invalid {
                key: "stepper.cfl_safety",
                reason: format!("must lie in (0, 1], got {x}"),
            });
        }
        cfg.cfl_safety = x;
    }
    if let Some(x) = raw.t_end {
        if !(x.is_finite() && x >= 0.0) {
            return Err(ConfigError::Invalid {
                key: "stepper.t_end",
                reason: format!("must be a finite number >= 0, got {x}"),
            });
        }
        cfg.t_end = x;
    }
    if let Some(x) = raw.max_steps {
        cfg.max_steps = count(x, "stepper.max_steps", 1)?;
    }
    if let Some(x) = raw.pinch_floor {
        if !(x > 0.0 && x < 1.0) {
            return Err(ConfigError::Invalid {
                key: "stepper.pinch_floor",
                reason: format!("must lie in (0, 1), got {x}"),
            });
        }
        cfg.pinch_floor = x;
    }
    if let Some(x) = raw.record_every {
        cfg.record_every = count(x, "stepper.record_every", 1)?;
    }
    Ok(cfg)
}

fn parse_tolerances(raw: Option<RawTolerances>) -> Result<Tolerances, ConfigError> {
    let mut t = Tolerances::default();
    if let Some(raw) = raw {
        if let Some(x) = raw.area_rel {
            t.area_rel = positive(x, "tolerances.area_rel")?;
        }
        if let Some(x) = raw.volume_rel {
            t.volume_rel = positive(x, "tolerances.volume_rel")?;
        }
        if let Some(x) = raw.convergence {
            t.convergence = positive(x, "tolerances.convergence")?;
        }
        if let Some(x) = raw.cylinder {
            t.cylinder = positive(x, "tolerances.cylinder")?;
        }
    }
    Ok(t)
}

fn parse_output(raw: Option<RawOutput>) -> Result<OutputConfig, ConfigError> {
    let mut o = OutputConfig::default();
    if let Some(raw) = raw {
        if let Some(dir) = raw.dir {
            o.dir = dir;
        }
        if let Some(x) = raw.csv {
            o.csv = x;
        }
        if let Some(x) = raw.snapshots_every {
            o.snapshots_every = count(x, "output.snapshots_every", 0)?;
        }
        if let Some(x) = raw.json_summary {
            o.json_summary = x;
        }
    }
    Ok(o)
}

/// Parses and validates a config, applying defaults. The scenario is built
/// once so that invalid initial data fails here rather than mid-run.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let law_name = require(raw.law, "law")?;
    let law = law_name
        .parse::<FlowLaw>()
        .map_err(|_| ConfigError::UnknownValue {
            key: "law",
            value: law_name,
            expected: "AreaPreserving, VolumePreserving, PlainMCF".into(),
        })?;
    let scenario = parse_scenario(require(raw.scenario, "scenario")?)?;
    scenarios::build(&scenario)?;
    Ok(SimConfig {
        law,
        scenario,
        stepper: parse_stepper(raw.stepper)?,
        tolerances: parse_tolerances(raw.tolerances)?,
        output: parse_output(raw.output)?,
    })
}
