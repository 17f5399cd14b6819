//! Numerical laboratory for a two-species reaction-diffusion system with
//! mutation between the species, logistic competition and periodic coefficients.

pub mod coefficients;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod optimize;
pub mod pde;
pub mod speeds;

pub use coefficients::{Coefficient, CoefficientSet, CoefficientSpec, HomogenizedSet};
pub use eigen::{EigenResult, GridSpec};
pub use error::{Error, Result};
pub use pde::{DomainSpec, FieldState, FrontTrace, InitialData};
