//! Simulation and training of quantum recurrent neural networks.
//!
//! A QRNN keeps a group-A register across time steps and re-encodes a
//! group-B register with each input. The crate provides the dense
//! density-matrix machinery ([`quantum`]), the circuit itself ([`model`]),
//! exact and shift-rule gradients ([`gradients`]), a BFGS trainer
//! ([`training`]) and the benchmark series ([`datasets`]).

// `!(x <= y)` checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datasets;
pub mod error;
pub mod gradients;
pub mod matrix;
pub mod model;
pub mod quantum;
pub mod training;

pub use error::{QrnnError, Result};
pub use matrix::{kron, ComplexMatrix, C64};
pub use model::{
    build_evolution_unitary, build_input_unitary, build_interaction_hamiltonian, qrnn_step,
    run_closed_loop, run_teacher_forced, Qrnn, QrnnArchitecture, QrnnParameters, QrnnState,
    TimeSeries,
};
pub use quantum::{DensityMatrix, HermitianObservable};
