//! Pulse-sequence synthesis.
//!
//! A [`PulseSequence`] is an ordered list of clock cycles, each a set of
//! exchange couplings with durations. [`SynthesisObjective`] scores the
//! logical action of a sequence against a target gate, and
//! [`minimize_multistart`] searches pulse durations from many seeded random
//! starting points.

mod cnot;
mod objective;
pub mod patterns;
mod search;
mod sequence;
mod single_qubit;

pub use cnot::{
    canonical_cnot_pattern, corrections_for, logical_gate, mirror_pattern, mirror_symmetric_patterns, polish_solution,
    synthesize_cnot, synthesize_two_qubit, CnotSynthesis, SynthesisOptions, EXHAUSTIVE_LEN, REFERENCE_ACCURACY,
};
pub use objective::{analytic_gradient, evaluate_objective, Equivalence, Evaluation, Evaluator, SynthesisObjective};
pub use search::{local_minimize, minimize_multistart, starting_point, Method, MultistartOptions, OptimizationReport};
pub use sequence::{canonical_tau, sequence_unitary, Coupling, Layout, Mode, Pattern, PulseSequence};
pub use single_qubit::{
    decompose_single_qubit, shortest_single_qubit, SingleQubitFlavor, SingleQubitSchedule, SingleQubitSolution,
    SINGLE_QUBIT_TOL,
};
