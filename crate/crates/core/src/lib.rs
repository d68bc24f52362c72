//! Pseudospectral solvers for nonlocal elastic wave equations and the
//! long-wave models derived from them, with a harness that measures how well
//! each model tracks the parent solution.

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod harness;
pub mod kernels;
pub mod models;
pub mod spectral;
pub mod timestepping;

pub use error::{Error, Result};
pub use kernels::{classify_symbol, exponential_kernel, fractional_kernel, load_tabulated_kernel, tabulated_kernel, KernelSpec};
pub use models::{build, EvolutionOperator, Family, Frame, ModelSpec, OperatorOptions, State};
pub use spectral::{FourierSymbol, Grid, SpectrumField, WaveField};
pub use timestepping::{integrate, StepPolicy, Trajectory};
