//! Numerical laboratory for the Painleve-Calogero correspondence.
//!
//! The crate integrates the six Painleve equations written as Newton
//! equations, assembles their 2x2 isomonodromic Lax pairs, and checks the
//! identities tying them together: zero curvature, the `b_x = 2B`
//! normalization, and the splitting of the Schrodinger potential into the
//! classical potential minus the classical Hamiltonian.

pub mod certify;
pub mod cli;
pub mod config;
pub mod cser;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod correspondence;
pub mod integrate;
pub mod lax;
pub mod transport;

pub use dynamics::{CalogeroState, PainleveKind, ParamSet};
pub use elliptic::{Elliptic, ModularParam, ThetaIndex, C64};
pub use error::{Error, Result};
pub use integrate::{integrate, CumulativeIntegral, IntegratorOptions, Trajectory};
