//! Phonon blockade in a driven nanomechanical resonator coupled
//! longitudinally to a driven charge qubit: model construction, Lindblad
//! dynamics, steady states, correlation functions, the four-state analytic
//! theory and a scenario runner.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod lindblad;
pub mod model;
pub mod observables;
pub mod ode;
pub mod operators;
pub mod sparse;
pub mod steadystate;

pub use error::{Error, Result};
pub use experiments::{Pipeline, Scenario, SweepResult};
pub use hamiltonian::{HarmonicHamiltonian, RotatingFrame};
pub use lindblad::CollapseOperator;
pub use model::{DerivedParams, SystemParams};
pub use operators::{DensityMatrix, Operator, StateVector, C64};
