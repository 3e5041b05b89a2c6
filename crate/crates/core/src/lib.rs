//! Periodic three-body choreographies under Lennard-Jones and homogeneous
//! pair potentials, their three-fold bifurcations, and the folds of the
//! bifurcated branches analyzed through a quartic reduced action.

pub mod bifurcation;
pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod hessian;
pub mod io;
pub mod orbit;
pub mod pipeline;
pub mod potential;
pub mod reduction;
pub mod seeds;
pub mod solver;
pub mod spectrum;
pub mod symmetry;

pub use dynamics::{Configuration, DIM};
pub use error::{Error, Result};
pub use orbit::Orbit;
pub use potential::{PairJet, Potential};
pub use solver::{solve_orbit, SolveOptions, SolveReport, Space};
pub use spectrum::{eigen_spectrum, kappa_check, ModeTag, SpectrumReport};
