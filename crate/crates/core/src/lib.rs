//! Multi-scale simulation of opinion dynamics with time-varying influence
//! weights.
//!
//! Three descriptions of the same population are provided:
//!
//! * [`micro`]: the `2N`-dimensional ODE system of agents carrying an opinion
//!   and a weight of influence,
//! * [`graph`]: the integro-differential graph-limit system indexed by
//!   `s ∈ [0, 1]`,
//! * [`mean_field`]: measures on opinion space and the nonlocal transport
//!   equation with source they satisfy.
//!
//! [`grid`] holds the piecewise-constant function algebra shared by all
//! three, [`kernels`] and [`mass`] the interaction and weight-dynamics laws,
//! and [`harness`] the scenario files, experiments and figure data behind the
//! `cdyn` binary.

pub mod error;
pub mod graph;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod mass;
pub mod mean_field;
pub mod micro;
pub mod ode;
mod csv;
mod par;

pub use error::{Error, Result};
pub use graph::{FieldPair, FieldSeries, GraphOptions, SpaceQuadrature};
pub use grid::{AgentEnsemble, GridFunction, NormReport, Quadrature};
pub use kernels::{BoundingBox, InteractionKernel};
pub use mass::{MassLaw, SourceKernel};
pub use mean_field::{DensityGrid, ParticleMeasure};
pub use micro::{MicroOptions, Trajectory};
pub use ode::{Method, Sampling, Tolerances};
