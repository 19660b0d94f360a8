//! Statevector simulation with terminal measurements.
//!
//! Qubit `k` (flat index, registers in declaration order) is bit `k` of the
//! amplitude index. Gates are applied by index arithmetic over the touched
//! qubits; no full-size matrix is ever built.

mod sample;

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::circuit::catalog::{self, GateMatrix};
use crate::circuit::{Circuit, Instruction, InstructionKind, MAX_QUBITS};
use crate::scalar::Scalar;

pub use sample::{sample, tvd, CountsDistribution, Distribution, SAMPLER_ID, SHOTS_PER_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimErrorKind {
    InvalidCircuit,
    NumericalOverflow,
    UnsupportedMidcircuitMeasure,
}

impl SimErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SimErrorKind::InvalidCircuit => "invalid_circuit",
            SimErrorKind::NumericalOverflow => "numerical_overflow",
            SimErrorKind::UnsupportedMidcircuitMeasure => "unsupported_midcircuit_measure",
        }
    }
}

/// Simulation failure; its display text is what fills a mutation record's
/// `exception_traceback`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimError {
    pub kind: SimErrorKind,
    pub message: String,
    pub line_number: Option<usize>,
}

impl SimError {
    fn new(kind: SimErrorKind, message: impl Into<String>, line_number: Option<usize>) -> Self {
        Self {
            kind,
            message: message.into(),
            line_number,
        }
    }
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimError({})", self.kind.as_str())?;
        if let Some(line) = self.line_number {
            write!(f, " at line {line}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for SimError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector<T> {
    num_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Scalar> Statevector<T> {
    /// The all-zeros basis state.
    pub fn zero_state(num_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << num_qubits];
        amplitudes[0] = Complex::new(T::one(), T::zero());
        Self { num_qubits, amplitudes }
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Option<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return None;
        }
        Some(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// Applies `matrix` to the given flat qubit indices (operand `j` of the
    /// matrix acts on `targets[j]`).
    pub fn apply(&mut self, matrix: &GateMatrix<T>, targets: &[usize]) {
        let k = targets.len();
        debug_assert_eq!(matrix.dim(), 1 << k);
        let mask: usize = targets.iter().map(|&q| 1usize << q).sum();
        let dim = 1 << k;
        let offsets: Vec<usize> = (0..dim)
            .map(|local| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| local >> j & 1 == 1)
                    .map(|(_, &q)| 1usize << q)
                    .sum()
            })
            .collect();
        let zero = Complex::new(T::zero(), T::zero());
        let mut gathered = vec![zero; dim];
        for base in 0..self.amplitudes.len() {
            if base & mask != 0 {
                continue;
            }
            for (slot, off) in gathered.iter_mut().zip(&offsets) {
                *slot = self.amplitudes[base | off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = zero;
                for (col, v) in gathered.iter().enumerate() {
                    acc = acc + matrix.get(row, col) * v;
                }
                self.amplitudes[base | off] = acc;
            }
        }
    }

    /// Max-norm distance to `other` after removing the global phase that
    /// best aligns the two. `None` when dimensions differ.
    pub fn distance_up_to_phase(&self, other: &Self) -> Option<T> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return None;
        }
        let overlap = other
            .amplitudes
            .iter()
            .zip(&self.amplitudes)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (o, s)| acc + o.conj() * s);
        let phase = if overlap.norm() > T::epsilon() {
            overlap / overlap.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        Some(
            self.amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(s, o)| (*s - *o * phase).norm())
                .fold(T::zero(), T::max),
        )
    }
}

/// Resolves a gate instruction to its matrix and flat targets, rejecting
/// anything the catalog does not allow.
pub(crate) fn resolve_gate<T: Scalar>(
    circuit: &Circuit,
    inst: &Instruction,
) -> Result<(GateMatrix<T>, Vec<usize>), SimError> {
    let line = Some(inst.line_number);
    let invalid = |msg: String| SimError::new(SimErrorKind::InvalidCircuit, msg, line);
    let spec = catalog::lookup(&inst.gate_name).ok_or_else(|| invalid(format!("unknown gate `{}`", inst.gate_name)))?;
    if spec.qubit_arity != inst.qubits.len() || spec.param_arity != inst.params.len() {
        return Err(invalid(format!(
            "gate `{}` takes {} parameter(s) and {} qubit(s), got {} and {}",
            spec.name,
            spec.param_arity,
            spec.qubit_arity,
            inst.params.len(),
            inst.qubits.len()
        )));
    }
    let mut targets = Vec::with_capacity(inst.qubits.len());
    for bit in &inst.qubits {
        let q = circuit
            .qubit_index(bit)
            .ok_or_else(|| invalid(format!("qubit {bit} is not declared")))?;
        if targets.contains(&q) {
            return Err(invalid(format!(
                "gate `{}` applied to qubit {bit} more than once",
                spec.name
            )));
        }
        targets.push(q);
    }
    let mut params = Vec::with_capacity(inst.params.len());
    for &p in &inst.params {
        match T::from_f64(p).filter(|v| v.is_finite()) {
            Some(v) => params.push(v),
            None => {
                return Err(SimError::new(
                    SimErrorKind::NumericalOverflow,
                    format!("parameter {p} of `{}` is not a finite angle", spec.name),
                    line,
                ))
            }
        }
    }
    let matrix =
        catalog::unitary(spec.name, &params).ok_or_else(|| invalid(format!("no unitary for `{}`", spec.name)))?;
    Ok((matrix, targets))
}

/// Runs every gate on `|0…0⟩` and returns the pre-measurement state.
pub fn evolve<T: Scalar>(circuit: &Circuit) -> Result<Statevector<T>, SimError> {
    evolve_traced(circuit, |_, _| {})
}

/// [`evolve`] with a callback after each applied gate, receiving the gate's
/// line number and the current state.
pub fn evolve_traced<T: Scalar>(
    circuit: &Circuit,
    mut on_step: impl FnMut(usize, &Statevector<T>),
) -> Result<Statevector<T>, SimError> {
    let n = circuit.num_qubits();
    if n > MAX_QUBITS {
        return Err(SimError::new(
            SimErrorKind::InvalidCircuit,
            format!("{n} qubits exceeds the limit of {MAX_QUBITS}"),
            None,
        ));
    }
    let mut state = Statevector::zero_state(n);
    let tolerance = T::norm_tolerance();
    let mut measured = false;
    for inst in &circuit.instructions {
        match inst.kind {
            InstructionKind::Barrier => {}
            InstructionKind::Measure => {
                check_measure(circuit, inst)?;
                measured = true;
            }
            InstructionKind::Gate => {
                if measured {
                    return Err(SimError::new(
                        SimErrorKind::UnsupportedMidcircuitMeasure,
                        format!("gate `{}` follows a measurement", inst.gate_name),
                        Some(inst.line_number),
                    ));
                }
                let (matrix, targets) = resolve_gate::<T>(circuit, inst)?;
                state.apply(&matrix, &targets);
                let norm = state.norm_sqr();
                if !norm.is_finite() || (norm - T::one()).abs() > tolerance {
                    return Err(SimError::new(
                        SimErrorKind::NumericalOverflow,
                        format!("state norm drifted to {norm}"),
                        Some(inst.line_number),
                    ));
                }
                on_step(inst.line_number, &state);
            }
        }
    }
    Ok(state)
}

/// Flat (qubit, clbit) indices of a measurement.
pub(crate) fn check_measure(circuit: &Circuit, inst: &Instruction) -> Result<(usize, usize), SimError> {
    let invalid = |msg: String| SimError::new(SimErrorKind::InvalidCircuit, msg, Some(inst.line_number));
    let (Some(q), Some(c)) = (inst.qubits.first(), inst.clbits.first()) else {
        return Err(invalid("measure needs one qubit and one classical bit".into()));
    };
    if inst.qubits.len() != 1 || inst.clbits.len() != 1 {
        return Err(invalid("measure needs one qubit and one classical bit".into()));
    }
    let qi = circuit
        .qubit_index(q)
        .ok_or_else(|| invalid(format!("qubit {q} is not declared")))?;
    let ci = circuit
        .clbit_index(c)
        .ok_or_else(|| invalid(format!("classical bit {c} is not declared")))?;
    Ok((qi, ci))
}
