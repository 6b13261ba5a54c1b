//! Measures on opinion space and the mean-field transport equation with
//! source.

mod measure;
mod pde;
mod weak;

pub use measure::{
    bin_density, empirical_measure, flat_distance, pushforward_measure, pushforward_weighted, source_term, velocity_at_atoms,
    velocity_field, wasserstein1, DensityGrid, MeasureRef, ParticleMeasure,
};
pub use pde::{initial_density, solve_pde, PdeOptions, PdeSolution};
pub use weak::{test_bank, weak_residual, TestFunction};
