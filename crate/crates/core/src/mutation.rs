//! Quantum mutation operators.
//!
//! Each mutant changes the circuit at exactly one location. Mutant ids have
//! the form `L<line>-<TAG>-<variant>`, where `line` is the canonical line the
//! operator was applied at.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::catalog;
use crate::circuit::{Circuit, Instruction, InstructionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorTag {
    /// Quantum gate deletion.
    QGD,
    /// Quantum gate insertion (a duplicate right after the original).
    QGI,
    /// Quantum gate replacement within the gate's catalog pool.
    QGR,
    /// Quantum measurement deletion.
    QMD,
    /// Quantum measurement insertion for a gate-touched, unmeasured qubit.
    QMI,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 5] = [
        OperatorTag::QGD,
        OperatorTag::QGI,
        OperatorTag::QGR,
        OperatorTag::QMD,
        OperatorTag::QMI,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorTag::QGD => "QGD",
            OperatorTag::QGI => "QGI",
            OperatorTag::QGR => "QGR",
            OperatorTag::QMD => "QMD",
            OperatorTag::QMI => "QMI",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            OperatorTag::QGD => "delete a quantum gate",
            OperatorTag::QGI => "insert a copy of a quantum gate directly after it",
            OperatorTag::QGR => "replace a quantum gate with another gate of the same shape",
            OperatorTag::QMD => "delete a measurement",
            OperatorTag::QMI => "add a terminal measurement to a gate-touched qubit that is never measured",
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperatorTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown mutation operator `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutant {
    pub id: String,
    pub operator: OperatorTag,
    pub line_number: usize,
    /// Replacement gate, touched gate name, or the inserted measurement.
    pub variant: String,
    pub circuit: Circuit,
}

impl Mutant {
    fn new(operator: OperatorTag, line_number: usize, variant: String, circuit: Circuit) -> Self {
        Self {
            id: format!("L{line_number}-{operator}-{variant}"),
            operator,
            line_number,
            variant,
            circuit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("no mutants could be generated for this circuit")]
    NoMutantsGenerated,
}

/// All single-location mutants, ordered by (line, operator, variant).
pub fn enumerate_mutants(circuit: &Circuit) -> Result<Vec<Mutant>, MutationError> {
    let mut mutants = Vec::new();
    for (pos, inst) in circuit.instructions.iter().enumerate() {
        let line = inst.line_number;
        match inst.kind {
            InstructionKind::Gate => {
                let name = inst.gate_name.clone();
                mutants.push(Mutant::new(
                    OperatorTag::QGD,
                    line,
                    name.clone(),
                    delete_at(circuit, pos),
                ));
                mutants.push(Mutant::new(
                    OperatorTag::QGI,
                    line,
                    name.clone(),
                    circuit.insert_instruction(pos + 1, inst.clone()),
                ));
                for other in catalog::replacement_pool(&name) {
                    if other.name == name {
                        continue;
                    }
                    let mut replaced = circuit.clone();
                    replaced.instructions[pos].gate_name = other.name.to_string();
                    mutants.push(Mutant::new(OperatorTag::QGR, line, other.name.to_string(), replaced));
                }
            }
            InstructionKind::Measure => {
                mutants.push(Mutant::new(
                    OperatorTag::QMD,
                    line,
                    "measure".to_string(),
                    delete_at(circuit, pos),
                ));
            }
            InstructionKind::Barrier => {}
        }
    }
    mutants.extend(measurement_insertions(circuit));
    mutants.sort_by(|a, b| (a.line_number, a.operator, &a.variant).cmp(&(b.line_number, b.operator, &b.variant)));
    if mutants.is_empty() {
        return Err(MutationError::NoMutantsGenerated);
    }
    Ok(mutants)
}

fn delete_at(circuit: &Circuit, pos: usize) -> Circuit {
    let mut out = circuit.clone();
    out.instructions.remove(pos);
    out.renumber();
    out
}

fn measurement_insertions(circuit: &Circuit) -> Vec<Mutant> {
    let mut measured = BTreeSet::new();
    let mut used = BTreeSet::new();
    let touched: BTreeSet<usize> = circuit
        .instructions
        .iter()
        .filter(|i| i.is_gate())
        .flat_map(|i| i.qubits.iter().filter_map(|b| circuit.qubit_index(b)))
        .collect();
    for inst in circuit.instructions.iter().filter(|i| i.is_measure()) {
        if let Some(q) = inst.qubits.first().and_then(|b| circuit.qubit_index(b)) {
            measured.insert(q);
        }
        if let Some(c) = inst.clbits.first().and_then(|b| circuit.clbit_index(b)) {
            used.insert(c);
        }
    }
    let Some(free) = (0..circuit.num_clbits()).find(|c| !used.contains(c)) else {
        return Vec::new();
    };
    let clbit = circuit.clbit_ref(free).expect("free clbit in range");
    let line = circuit.next_line();
    touched
        .into_iter()
        .filter(|q| !measured.contains(q))
        .map(|q| {
            let qubit = circuit.qubit_ref(q).expect("qubit in range");
            let variant = format!("{qubit}->{clbit}");
            let inst = Instruction::measure(qubit, clbit.clone());
            let mutated = circuit.insert_instruction(circuit.instructions.len(), inst);
            Mutant::new(OperatorTag::QMI, line, variant, mutated)
        })
        .collect()
}

/// Mutant count per operator; every operator appears, possibly with zero.
pub fn mutant_count_by_operator(circuit: &Circuit) -> BTreeMap<OperatorTag, usize> {
    let mut counts: BTreeMap<OperatorTag, usize> = OperatorTag::ALL.iter().map(|&t| (t, 0)).collect();
    if let Ok(mutants) = enumerate_mutants(circuit) {
        for m in mutants {
            *counts.entry(m.operator).or_default() += 1;
        }
    }
    counts
}
