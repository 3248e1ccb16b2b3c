//! Numerical laboratory for supercritical non-local drift–diffusion:
//! stable-like Lévy measures and their symbols, Littlewood–Paley tools on
//! periodic grids, a pseudo-spectral solver for the non-local parabolic
//! equation, a thinned Poisson-measure simulator for the jump SDE with
//! state-dependent intensity, and the Zvonkin transform.

pub mod error;
pub mod harness;
pub mod levy;
pub mod lp;
pub mod nonlocal;
pub mod pde;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod zvonkin;

pub use error::{Error, Result};
pub use levy::{LevyModel, RadialProfile, SphericalMeasure, TailMeasure};
pub use lp::{Grid, GridField};
pub use nonlocal::{DriftField, JumpKernel, NonlocalOperator};
