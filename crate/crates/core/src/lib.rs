//! Numerical laboratory for nonlocal diffusion and aggregation models.
//!
//! - [`fracops`]: fractional Laplacian, Riesz potential, Getoor constant
//! - [`linheat`]: linear fractional heat semigroup and fat-tail fits
//! - [`selfsim`]: self-similar exponents, Barenblatt profiles, obstacle problem
//! - [`porousflow`]: nonlocal porous-medium flow with a fractional pressure
//! - [`swarm`]: interacting particles, flocks, and energy minimizers
//! - [`experiment`]: configurable scenarios with CSV/JSON outputs

pub mod error;
pub mod experiment;
pub mod fit;
pub mod fracops;
pub mod grid;
pub mod linheat;
pub mod porousflow;
pub mod selfsim;
pub mod special;
pub mod spectral;
pub mod swarm;

pub use error::{Error, Result};
pub use fracops::{Extension, FracOrder};
pub use grid::{GridField, GridSpec};
