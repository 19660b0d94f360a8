//! Mutation-analysis-augmented LLM repair pipeline for small quantum circuits.
//!
//! The crate is organised bottom-up:
//!
//! - [`circuit`]: OpenQASM 2.0 subset parser/printer and the circuit IR with
//!   stable canonical line numbers.
//! - [`sim`]: statevector simulator with seeded shot sampling.
//! - [`mutation`]: the five quantum mutation operators.
//! - [`harness`]: test oracles, outcome classification, mutation records.
//! - [`bundle`]: benchmark subjects loaded from disk.
//! - [`prompt`]: the four prompt configurations and the response contract.
//! - [`gateway`]: model providers (live HTTP, replay, synthetic).
//! - [`lab`]: experiment orchestration, success rates, rubric statistics.
//!
//! Simulation and statistics are generic over their numeric type; the
//! aliases below fix the common instantiations.

pub mod bundle;
pub mod circuit;
pub mod gateway;
pub mod harness;
pub mod lab;
pub mod mutation;
pub mod prompt;
pub mod scalar;
pub mod sim;

pub use bundle::{BugBundle, Symptom};
pub use circuit::{parse_qasm, parse_qasm_unchecked, print_qasm, Circuit, Instruction, QasmError};
pub use harness::{MutationRecord, MutationStatus, TestCase, TestOutcome, Verdict};
pub use mutation::{enumerate_mutants, Mutant, OperatorTag};
pub use prompt::{PromptBundle, PromptConfig};
pub use scalar::{Proportion, Scalar};
pub use sim::{CountsDistribution, SimError, Statevector};

/// Double-precision statevector; the precision the test harness runs at.
pub type Statevector64 = sim::Statevector<f64>;
/// Single-precision statevector.
pub type Statevector32 = sim::Statevector<f32>;
/// Double-precision gate matrix.
pub type GateMatrix64 = circuit::catalog::GateMatrix<f64>;
/// Probability map over classical bitstrings at double precision.
pub type Distribution64 = sim::Distribution<f64>;
/// Exact rational, for agreement statistics without rounding.
pub type Rational = num_rational::Ratio<i64>;
