//! Numerical study of parabolic equations `∂_t u = Δu + b·∇u` with singular,
//! form-bounded drifts.

pub mod approx;
pub mod constants;
pub mod drift;
pub mod error;
pub mod export;
pub mod formbound;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod profile;
pub mod rng;
pub mod solver;
pub mod verifier;

pub use drift::{DriftField, DriftKind, FormBoundInfo, Provenance};
pub use error::{Error, Result};
pub use grid::{Grid, GridSpec};
pub use profile::TimeProfile;
pub use solver::{evolve, evolve_with, Advection, DriftSource, ScalarState, StepOperator, Trajectory, VectorSamples};
