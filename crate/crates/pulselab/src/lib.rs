//! Numerical laboratory for slow-fast delayed predator-prey models.
//!
//! The crate integrates retarded delay differential equations with a single
//! discrete delay (fixed-step RK4 over the method of steps with dense
//! output), catalogs six model variants with their equilibria and
//! thresholds, locates the cascade of Hopf bifurcations near the
//! transcritical threshold both numerically and asymptotically, solves the
//! fast-limit pulse asymptotics (area fixed point, heteroclinic profile,
//! scaling laws), and provides the trace analyses (harmonics, pulse
//! metrics, power-law extrapolation) used to cross-validate theory against
//! simulation.
//!
//! Parameter sweeps, root-grid scans and cascade scans run on rayon when
//! the `parallel` feature (default) is enabled; disabling it leaves a
//! dependency-free sequential build with identical outputs.

pub mod analysis;
pub mod dde;
pub mod error;
pub mod exec;
pub mod hopf;
pub mod io;
pub mod models;
pub mod pulse;
pub mod spectrum;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use models::{EquilibriumKind, EquilibriumMode, ModelId, ModelInstance};
