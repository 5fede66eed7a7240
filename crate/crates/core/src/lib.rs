//! Exchange-only quantum logic on three-spin coded qubits.
//!
//! Every gate in this crate is built from one primitive: the isotropic
//! Heisenberg coupling `S_i . S_j` between two spin-1/2 sites, switched on for
//! a dimensionless duration `tau`. With the convention
//! `U(tau) = exp(i 2 pi tau S_i . S_j)`, `tau = 1/2` is a SWAP and integer
//! shifts of `tau` only change the global phase.
//!
//! A logical qubit lives in the two-dimensional `S = 1/2, Sz = +1/2` subspace
//! of three spins. Single-qubit gates come from sequences of exchanges inside
//! one block; the controlled-NOT between two blocks is found numerically by
//! minimizing the mismatch of two-qubit local invariants over pulse durations.
//!
//! Modules, bottom-up:
//!
//! * [`spin`]: dense operators, spin-1/2 algebra, exchange Hamiltonians and unitaries.
//! * [`sectors`]: total-spin sector bases, block projection, leakage.
//! * [`encoding`]: the three-spin code, logical action, Bloch axes, readout.
//! * [`invariants`]: two-qubit local invariants and local-correction extraction.
//! * [`synthesis`]: pulse sequences, objectives, multi-start minimization, gate constructions.
//! * [`target`]: named target gates.
//! * [`schedule`]: schedule files and their independent verification.

pub mod encoding;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod optimize;
pub mod schedule;
pub mod sectors;
pub mod spin;
pub mod synthesis;
pub mod target;

pub use error::{Error, Result};
pub use linalg::{Operator, StateVector};
