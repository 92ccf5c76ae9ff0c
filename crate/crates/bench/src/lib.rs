//! Fixtures shared by the benchmarks.

use phonon_core::dynamics::MasterEquation;
use phonon_core::model::{collapse_operators, drive_frame, effective_hamiltonian, lab_hamiltonian};
use phonon_core::steadystate::{build_liouvillian, Liouvillian};
use phonon_core::{SystemParams, C64};

pub fn baseline(fock_dim: usize) -> SystemParams {
    SystemParams { fock_dim, ..SystemParams::baseline() }
}

/// Lab-frame master equation integrated in the drive frame.
pub fn lab_equation(p: &SystemParams) -> MasterEquation {
    MasterEquation::new(&lab_hamiltonian(p).unwrap(), &collapse_operators(p).unwrap(), Some(drive_frame(p))).unwrap()
}

pub fn effective_liouvillian(p: &SystemParams) -> Liouvillian {
    build_liouvillian(&effective_hamiltonian(p).unwrap(), &collapse_operators(p).unwrap()).unwrap()
}

/// A deterministic dense vector of the superoperator dimension.
pub fn probe(len: usize) -> Vec<C64> {
    (0..len).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect()
}
