//! Strict JSON experiment configurations, one schema per subcommand.

use serde::de::DeserializeOwned;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use coopfront::ode::HomParams;
use coopfront::pde::{SimOptions, StationaryOptions};
use coopfront::{CoefficientSet, DomainSpec, GridSpec, InitialData};

use crate::CliError;

/// SHA-256 of the raw config bytes, hex encoded.
pub fn config_hash(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

/// Parses `raw` into the schema of `command`. A top-level `"command"` key is
/// accepted when it names the same subcommand.
pub fn parse<T: DeserializeOwned>(raw: &str, command: &str) -> Result<T, CliError> {
    let mut value: serde_json::Value =
        serde_json::from_str(raw).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    if let Some(c) = obj.remove("command") {
        if c.as_str() != Some(command) {
            return Err(CliError::Config(format!(
                "config is for command {c}, but {command} was requested"
            )));
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{command} config: {e}")))
}

/// Either `{min, max, step}` giving `min, min + step, …, max`, or
/// `{values: [...]}`.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub step: Option<f64>,
    pub values: Option<Vec<f64>>,
}

impl LambdaGrid {
    pub fn range(min: f64, max: f64, step: f64) -> Self {
        LambdaGrid {
            min: Some(min),
            max: Some(max),
            step: Some(step),
            values: None,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        match (self.min, self.max, self.step, &self.values) {
            (None, None, None, Some(v)) => {
                if v.is_empty() || v.iter().any(|l| !l.is_finite()) {
                    return Err(CliError::Config("lambda list must be nonempty and finite".into()));
                }
                Ok(v.clone())
            }
            (Some(min), Some(max), Some(step), None) => {
                if !(step > 0.0 && min.is_finite() && max.is_finite() && max >= min) {
                    return Err(CliError::Config(format!(
                        "lambda range needs min <= max and step > 0, got [{min}, {max}] step {step}"
                    )));
                }
                let n = ((max - min) / step + 1e-9).floor() as usize + 1;
                if n > 1_000_000 {
                    return Err(CliError::Config(format!("lambda range has {n} points")));
                }
                Ok((0..n).map(|i| min + i as f64 * step).collect())
            }
            _ => Err(CliError::Config(
                "lambda grid needs either min, max and step, or values".into(),
            )),
        }
    }
}

fn default_grid() -> GridSpec {
    GridSpec::periodic(64)
}

fn default_curve() -> LambdaGrid {
    LambdaGrid::range(-3.0, 3.0, 0.1)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    pub coefficients: CoefficientSet,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    pub lambdas: LambdaGrid,
    /// `λ` values whose eigenvector pairs are written out.
    #[serde(default)]
    pub profiles: Vec<f64>,
}

fn default_cells_per_period() -> usize {
    64
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletConfig {
    pub coefficients: CoefficientSet,
    /// Half-widths `R`; defaults to `L, 2L, …, 64L`.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_cells_per_period")]
    pub cells_per_period: usize,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    pub coefficients: CoefficientSet,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_curve")]
    pub curve: LambdaGrid,
    /// Also run the Dirichlet-based persistence check.
    #[serde(default)]
    pub hair_trigger: bool,
    #[serde(default = "default_cells_per_period")]
    pub cells_per_period: usize,
}

fn default_t_end() -> f64 {
    200.0
}

fn default_ode_dt() -> f64 {
    1e-3
}

fn default_record_steps() -> usize {
    100
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeConfig {
    pub params: HomParams,
    pub u0: f64,
    pub v0: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_ode_dt")]
    pub dt: f64,
    /// Record every this many steps.
    #[serde(default = "default_record_steps")]
    pub record_every: usize,
}

fn default_window() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub coefficients: CoefficientSet,
    pub domain: DomainSpec,
    pub initial: InitialData,
    pub options: SimOptions,
    /// Fraction of the trace used for the speed fit.
    #[serde(default = "default_window")]
    pub fit_window: f64,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub coefficients: CoefficientSet,
    #[serde(default)]
    pub options: StationaryOptions,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizeConfig {
    pub coefficients: CoefficientSet,
}

fn default_parameter() -> String {
    "epsilon".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub coefficients: CoefficientSet,
    /// `"epsilon"` rescales the period; a coefficient name replaces that
    /// coefficient by the constant value.
    #[serde(default = "default_parameter")]
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
}
