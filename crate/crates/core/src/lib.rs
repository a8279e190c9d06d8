//! Simulation of the diffusion generated by `-Δ_b / 2` on strictly
//! pseudoconvex CR manifolds.
//!
//! The diffusion is built as the projection of a Stratonovich SDE on the
//! unitary frame bundle `U(T_{1,0})`, driven by complex Brownian motion
//! through the canonical (horizontal) vector fields of the Tanaka-Webster
//! connection. Simulated paths feed estimators for heat-semigroup averages,
//! heat-kernel densities, stochastic line integrals and exit-time solutions
//! of the Dirichlet problem for `Δ_b`. The Heisenberg group is the built-in
//! reference model; all of its laws are known in closed form.
//!
//! Module map:
//!
//! - [`models`]: chart-local CR models, gauge rotations, validation.
//! - [`bundle`]: frame states, canonical fields, parallel transport, polar
//!   reunitarization.
//! - [`sde`]: complex Brownian increments, the Heun stepper, paths and
//!   reproducible parallel ensembles.
//! - [`observables`]: semigroup averages, kernel density estimates, line
//!   integrals, characteristic functions.
//! - [`hormander`]: Lie brackets, span rank, the Φ recursion for line
//!   integrals.
//! - [`dirichlet`]: exit-time Monte Carlo for `Δ_b u = 0`.
//! - [`cli`]: the `crdiff` command-line front end.

pub mod bundle;
pub mod cli;
pub mod dirichlet;
mod error;
pub mod hormander;
pub mod models;
pub mod observables;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use bundle::{BundleVelocity, FrameState};
pub use models::{
    CTangent, ChartBox, ChartPoint, Christoffel, CrModel, FrameIndex, GaugeRotated, Heisenberg,
};
pub use sde::{Ensemble, Path, PathStatus, SimConfig};
