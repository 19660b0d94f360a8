//! Circuit IR for an OpenQASM 2.0 subset.
//!
//! Every instruction carries its line number in the *canonical* printing of
//! the circuit (see [`print_qasm`]): line 1 is the version header, then one
//! line per register declaration, then one line per instruction. Mutation
//! records and model patches are located with these numbers.

pub mod catalog;
mod parse;
mod print;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_qasm, parse_qasm_unchecked, QasmError};
pub use print::{format_param, print_qasm};

/// Desk-scale cap on the total number of qubits in a circuit.
pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumRegister {
    pub name: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalRegister {
    pub name: String,
    pub size: usize,
}

/// A `(register, index)` operand reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitRef {
    pub register: String,
    pub index: usize,
}

impl BitRef {
    pub fn new(register: impl Into<String>, index: usize) -> Self {
        Self {
            register: register.into(),
            index,
        }
    }
}

impl fmt::Display for BitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.register, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionKind {
    Gate,
    Measure,
    Barrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub kind: InstructionKind,
    /// Empty unless `kind` is [`InstructionKind::Gate`].
    pub gate_name: String,
    /// Angles in radians.
    pub params: Vec<f64>,
    pub qubits: Vec<BitRef>,
    /// Only populated for measurements.
    pub clbits: Vec<BitRef>,
    /// 1-based line in the canonical printing; assigned by [`Circuit::new`].
    pub line_number: usize,
}

impl Instruction {
    pub fn gate(name: impl Into<String>, params: Vec<f64>, qubits: Vec<BitRef>) -> Self {
        Self {
            kind: InstructionKind::Gate,
            gate_name: name.into(),
            params,
            qubits,
            clbits: Vec::new(),
            line_number: 0,
        }
    }

    pub fn measure(qubit: BitRef, clbit: BitRef) -> Self {
        Self {
            kind: InstructionKind::Measure,
            gate_name: String::new(),
            params: Vec::new(),
            qubits: vec![qubit],
            clbits: vec![clbit],
            line_number: 0,
        }
    }

    pub fn barrier(qubits: Vec<BitRef>) -> Self {
        Self {
            kind: InstructionKind::Barrier,
            gate_name: String::new(),
            params: Vec::new(),
            qubits,
            clbits: Vec::new(),
            line_number: 0,
        }
    }

    pub fn is_gate(&self) -> bool {
        self.kind == InstructionKind::Gate
    }

    pub fn is_measure(&self) -> bool {
        self.kind == InstructionKind::Measure
    }

    /// Short label: the gate name, `measure` or `barrier`.
    pub fn label(&self) -> &str {
        match self.kind {
            InstructionKind::Gate => &self.gate_name,
            InstructionKind::Measure => "measure",
            InstructionKind::Barrier => "barrier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("no instruction at line {0}")]
    NoSuchLine(usize),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub qregs: Vec<QuantumRegister>,
    pub cregs: Vec<ClassicalRegister>,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    /// Builds a circuit and assigns canonical line numbers.
    pub fn new(qregs: Vec<QuantumRegister>, cregs: Vec<ClassicalRegister>, instructions: Vec<Instruction>) -> Self {
        let mut circuit = Self {
            qregs,
            cregs,
            instructions,
        };
        circuit.renumber();
        circuit
    }

    /// Line of the first instruction in canonical form.
    pub fn first_instruction_line(&self) -> usize {
        2 + self.qregs.len() + self.cregs.len()
    }

    /// Line an instruction appended at the end would occupy.
    pub fn next_line(&self) -> usize {
        self.first_instruction_line() + self.instructions.len()
    }

    pub fn renumber(&mut self) {
        let first = self.first_instruction_line();
        for (i, inst) in self.instructions.iter_mut().enumerate() {
            inst.line_number = first + i;
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.qregs.iter().map(|r| r.size).sum()
    }

    pub fn num_clbits(&self) -> usize {
        self.cregs.iter().map(|r| r.size).sum()
    }

    /// Flat little-endian index of a qubit: registers in declaration order.
    pub fn qubit_index(&self, bit: &BitRef) -> Option<usize> {
        flat_index(self.qregs.iter().map(|r| (r.name.as_str(), r.size)), bit)
    }

    pub fn clbit_index(&self, bit: &BitRef) -> Option<usize> {
        flat_index(self.cregs.iter().map(|r| (r.name.as_str(), r.size)), bit)
    }

    /// Inverse of [`Circuit::qubit_index`].
    pub fn qubit_ref(&self, index: usize) -> Option<BitRef> {
        bit_ref(self.qregs.iter().map(|r| (r.name.as_str(), r.size)), index)
    }

    pub fn clbit_ref(&self, index: usize) -> Option<BitRef> {
        bit_ref(self.cregs.iter().map(|r| (r.name.as_str(), r.size)), index)
    }

    pub fn instruction_at(&self, line_number: usize) -> Option<&Instruction> {
        self.position_of(line_number).map(|i| &self.instructions[i])
    }

    fn position_of(&self, line_number: usize) -> Option<usize> {
        line_number
            .checked_sub(self.first_instruction_line())
            .filter(|&i| i < self.instructions.len())
    }

    /// Returns a copy with the instruction at `line_number` replaced, or
    /// deleted when `new` is `None`. Later line numbers are recomputed.
    pub fn replace_instruction(&self, line_number: usize, new: Option<Instruction>) -> Result<Circuit, CircuitError> {
        let pos = self
            .position_of(line_number)
            .ok_or(CircuitError::NoSuchLine(line_number))?;
        let mut out = self.clone();
        match new {
            Some(inst) => out.instructions[pos] = inst,
            None => {
                out.instructions.remove(pos);
            }
        }
        out.renumber();
        Ok(out)
    }

    /// Returns a copy with `inst` inserted at instruction position `index`
    /// (0 = first instruction, `len` = append).
    pub fn insert_instruction(&self, index: usize, inst: Instruction) -> Circuit {
        let mut out = self.clone();
        out.instructions.insert(index.min(out.instructions.len()), inst);
        out.renumber();
        out
    }
}

/// Free-function form of [`Circuit::replace_instruction`].
pub fn replace_instruction(
    circuit: &Circuit,
    line_number: usize,
    new: Option<Instruction>,
) -> Result<Circuit, CircuitError> {
    circuit.replace_instruction(line_number, new)
}

fn flat_index<'a>(regs: impl Iterator<Item = (&'a str, usize)>, bit: &BitRef) -> Option<usize> {
    let mut offset = 0;
    for (name, size) in regs {
        if name == bit.register {
            return (bit.index < size).then_some(offset + bit.index);
        }
        offset += size;
    }
    None
}

fn bit_ref<'a>(regs: impl Iterator<Item = (&'a str, usize)>, mut index: usize) -> Option<BitRef> {
    for (name, size) in regs {
        if index < size {
            return Some(BitRef::new(name, index));
        }
        index -= size;
    }
    None
}
