//! JSON run configuration: one document drives every subcommand. Unknown
//! keys are rejected; the fully resolved configuration (defaults filled in)
//! is echoed into every report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use liesys::models::{ModelBundle, ModelId};
use liesys::ode::{ControlSignal, Method, DEFAULT_RK4_STEP};
use liesys::principal::GroupKind;

use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "LIESYS_OUTPUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub controls: BTreeMap<String, SignalSpec>,
    #[serde(default)]
    pub initial: BTreeMap<String, f64>,
    #[serde(default)]
    pub group_offset: Option<f64>,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub method: Option<MethodSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub flag: Option<FlagSpec>,
    #[serde(default)]
    pub wrapped_columns: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Constant {
        value: f64,
    },
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    Polynomial {
        coefficients: Vec<f64>,
    },
}

impl From<&ControlSignal> for SignalSpec {
    fn from(signal: &ControlSignal) -> Self {
        match signal {
            ControlSignal::Constant(value) => SignalSpec::Constant { value: *value },
            ControlSignal::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => SignalSpec::Sinusoid {
                amplitude: *amplitude,
                omega: *omega,
                phase: *phase,
                offset: *offset,
            },
            ControlSignal::Polynomial(coefficients) => SignalSpec::Polynomial {
                coefficients: coefficients.clone(),
            },
        }
    }
}

impl From<&SignalSpec> for ControlSignal {
    fn from(spec: &SignalSpec) -> Self {
        match spec {
            SignalSpec::Constant { value } => ControlSignal::Constant(*value),
            SignalSpec::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => ControlSignal::Sinusoid {
                amplitude: *amplitude,
                omega: *omega,
                phase: *phase,
                offset: *offset,
            },
            SignalSpec::Polynomial { coefficients } => {
                ControlSignal::Polynomial(coefficients.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Rk4 { h: f64 },
    Adaptive { rtol: f64, atol: f64 },
}

impl From<MethodSpec> for Method {
    fn from(spec: MethodSpec) -> Method {
        match spec {
            MethodSpec::Rk4 { h } => Method::Rk4 { h },
            MethodSpec::Adaptive { rtol, atol } => Method::Adaptive { rtol, atol },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub max_deviation: f64,
    pub max_residual: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            max_deviation: 1e-6,
            max_residual: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagSpec {
    #[serde(default = "default_flag_points")]
    pub points: usize,
    #[serde(default)]
    pub max_level: Option<usize>,
}

fn default_flag_points() -> usize {
    10
}

impl Default for FlagSpec {
    fn default() -> Self {
        FlagSpec {
            points: default_flag_points(),
            max_level: None,
        }
    }
}

/// Fully resolved configuration echoed into reports: every default made
/// explicit.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub model: String,
    pub seed: u64,
    pub controls: BTreeMap<String, SignalSpec>,
    pub initial: BTreeMap<String, f64>,
    pub group_offset: f64,
    pub t0: f64,
    pub t1: f64,
    pub method: MethodSpec,
    pub output_dir: String,
    pub tolerances: ToleranceSpec,
    pub flag: FlagSpec,
    pub wrapped_columns: bool,
}

/// A parsed-and-resolved run: the bundle plus everything commands need.
pub struct ResolvedRun {
    pub bundle: ModelBundle,
    pub seed: u64,
    pub controls: Vec<(String, ControlSignal)>,
    pub initial_state: Vec<f64>,
    /// Group offset in the canonical additive chart.
    pub group_offset_additive: f64,
    pub t0: f64,
    pub t1: f64,
    pub method: Method,
    pub output_dir: PathBuf,
    pub tolerances: ToleranceSpec,
    pub wrapped_columns: bool,
    pub echo: ResolvedConfig,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

pub fn parse_model(name: &str) -> Result<ModelId, CliError> {
    name.parse::<ModelId>()
        .map_err(|e| CliError::Config(e.to_string()))
}

pub(crate) fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Resolves a config against a loaded model bundle. Group offsets are given
/// in the group's natural parameterization (a positive factor for the
/// multiplicative line) and converted to the additive chart here.
pub fn resolve(config: &RunConfig, bundle: ModelBundle) -> Result<ResolvedRun, CliError> {
    let id = bundle.id;
    let seed = config.seed.unwrap_or(42);
    let t0 = config.t0.unwrap_or(0.0);
    let t1 = config.t1.unwrap_or(5.0);
    if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
        return Err(CliError::Config(format!(
            "time window must satisfy t1 > t0, got [{t0}, {t1}]"
        )));
    }
    let method_spec = config.method.unwrap_or(MethodSpec::Rk4 {
        h: DEFAULT_RK4_STEP,
    });
    let tolerances = config.tolerances.unwrap_or_default();
    let flag = config.flag.unwrap_or_default();
    let wrapped_columns = config.wrapped_columns.unwrap_or(false);
    let output_dir = config.output_dir.clone().unwrap_or_else(default_output_dir);

    let given_controls: BTreeMap<String, ControlSignal> = config
        .controls
        .iter()
        .map(|(k, v)| (k.clone(), ControlSignal::from(v)))
        .collect();
    let controls: Vec<(String, ControlSignal)> = bundle
        .resolve_controls(&given_controls)
        .map_err(|e| CliError::Config(e.to_string()))?
        .into_iter()
        .map(|(slot, signal)| (slot.to_string(), signal))
        .collect();

    let initial_state = bundle
        .initial_state(&config.initial)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let kind = bundle.action.kind();
    let natural_offset = config.group_offset.unwrap_or(match kind {
        GroupKind::PositiveLine => 1.0,
        _ => 0.0,
    });
    let group_offset_additive = kind
        .to_additive(natural_offset)
        .map_err(|e| CliError::Config(e.to_string()))?;

    // Echo with every value resolved.
    let echo_controls: BTreeMap<String, SignalSpec> = controls
        .iter()
        .map(|(slot, signal)| (slot.clone(), SignalSpec::from(signal)))
        .collect();
    let echo_initial: BTreeMap<String, f64> = bundle
        .output_columns
        .iter()
        .zip(&initial_state)
        .map(|(col, stored)| (col.column.to_string(), col.transform.apply(*stored)))
        .collect();
    let echo = ResolvedConfig {
        model: id.to_string(),
        seed,
        controls: echo_controls,
        initial: echo_initial,
        group_offset: natural_offset,
        t0,
        t1,
        method: method_spec,
        output_dir: output_dir.display().to_string(),
        tolerances,
        flag,
        wrapped_columns,
    };

    Ok(ResolvedRun {
        bundle,
        seed,
        controls,
        initial_state,
        group_offset_additive,
        t0,
        t1,
        method: method_spec.into(),
        output_dir,
        tolerances,
        wrapped_columns,
        echo,
    })
}
