//! Simulation and estimate auditing for the defocusing semilinear wave
//! equation `-phi_tt + phi_xx = |phi|^{p-1} phi` on the line.

pub mod analysis;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod initial;
pub mod nullgeom;
pub mod numfmt;
pub mod params;
pub mod quad;
pub mod run;
pub mod snapshot;
pub mod solver;
pub mod state;

pub use error::{Error, Result};
pub use grid::{build_grid, build_grid_with, Grid1D};
pub use initial::{sample_initial_data, DataKind, InitialDataSpec, TableRow};
pub use params::{validate_params, ModelParams, MultiplierParams};
pub use run::{run, Frame, Observer, Persistence, RunControl, RunOutcome};
pub use solver::{
    discrete_energy, discrete_energy_levels, init_state, step, step_in_place, SchemeChoice,
    SchemeKind,
};
pub use state::FieldState;
