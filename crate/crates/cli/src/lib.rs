//! Experiment driver: strict JSON configs in, CSV and JSON reports out.

pub mod commands;
pub mod config;
pub mod output;

use serde::Serialize;
use thiserror::Error;

pub use commands::run;
pub use output::Artifact;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// k(λ) over a λ grid, plus eigenvector pairs.
    Eigen,
    /// Dirichlet principal eigenvalues over a list of half-widths.
    Dirichlet,
    /// Spreading speeds and the k-curve.
    Speed,
    /// Spatially homogeneous ODE analysis and trajectory.
    Ode,
    /// Nonlinear front simulation with speed measurement.
    Simulate,
    /// Periodic stationary profile.
    Stationary,
    /// Homogenized coefficients and their speed.
    Homogenize,
    /// Speeds over a list of ε or coefficient values.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Dirichlet => "dirichlet",
            Command::Speed => "speed",
            Command::Ode => "ode",
            Command::Simulate => "simulate",
            Command::Stationary => "stationary",
            Command::Homogenize => "homogenize",
            Command::Sweep => "sweep",
        }
    }
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] coopfront::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) if e.is_input_error() || matches!(e, coopfront::Error::Precondition(_)) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn kind(&self) -> &'static str {
        use coopfront::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                E::Validation(_) => "validation",
                E::Precondition(_) => "precondition",
                E::Contract(_) => "contract",
                E::Domain(_) => "domain",
                E::Numerical { .. } => "numerical",
                E::InvariantBreach(_) => "invariant_breach",
                E::Contradiction(_) => "contradiction",
            },
        }
    }

    /// Single-line machine-readable description for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: u8,
            #[serde(skip_serializing_if = "Option::is_none")]
            last_residual: Option<f64>,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        let last_residual = match self {
            CliError::Core(coopfront::Error::Numerical { last_residual, .. }) => *last_residual,
            _ => None,
        };
        serde_json::to_string(&Wrapper {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
                last_residual,
            },
        })
        .unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", self.kind()))
    }
}

/// Writes every artifact as `<prefix>_<suffix>`, creating the parent directory.
pub fn write_artifacts(prefix: &std::path::Path, files: &[Artifact]) -> Result<Vec<std::path::PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let stem = prefix
        .file_name()
        .ok_or_else(|| CliError::Io(format!("output prefix {} has no file name", prefix.display())))?
        .to_string_lossy()
        .into_owned();
    let mut written = Vec::new();
    for f in files {
        let path = prefix.with_file_name(format!("{stem}_{}", f.suffix));
        std::fs::write(&path, &f.contents).map_err(io)?;
        written.push(path);
    }
    Ok(written)
}
