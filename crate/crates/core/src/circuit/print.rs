use std::fmt::Write;

use super::{Circuit, InstructionKind};

/// Canonical text: version header, one declaration per line (quantum
/// registers first), one instruction per line, trailing newline.
pub fn print_qasm(circuit: &Circuit) -> String {
    let mut out = String::from("OPENQASM 2.0;\n");
    for r in &circuit.qregs {
        let _ = writeln!(out, "qreg {}[{}];", r.name, r.size);
    }
    for r in &circuit.cregs {
        let _ = writeln!(out, "creg {}[{}];", r.name, r.size);
    }
    for inst in &circuit.instructions {
        let qubits = inst.qubits.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",");
        match inst.kind {
            InstructionKind::Gate => {
                out.push_str(&inst.gate_name);
                if !inst.params.is_empty() {
                    let params: Vec<_> = inst.params.iter().map(|&p| format_param(p)).collect();
                    let _ = write!(out, "({})", params.join(","));
                }
                let _ = writeln!(out, " {qubits};");
            }
            InstructionKind::Measure => {
                let clbit = inst.clbits.first().map(|b| b.to_string()).unwrap_or_default();
                let _ = writeln!(out, "measure {qubits} -> {clbit};");
            }
            InstructionKind::Barrier => {
                let _ = writeln!(out, "barrier {qubits};");
            }
        }
    }
    out
}

/// Formats an angle with 12 significant digits, shortest form.
pub fn format_param(value: f64) -> String {
    let rounded = super::parse::round_significant(value);
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_qasm;

    const BELL: &str =
        "OPENQASM 2.0;\nqreg q[2];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\nmeasure q[0] -> c[0];\nmeasure q[1] -> c[1];\n";

    #[test]
    fn bell_prints_seven_canonical_lines() {
        let c = parse_qasm(
            "OPENQASM 2.0; qreg q[2]; creg c[2]; h q[0]; cx q[0], q[1]; measure q[0]->c[0]; measure q[1]->c[1];",
        )
        .unwrap();
        let text = print_qasm(&c);
        assert_eq!(text, BELL);
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn empty_program_prints_header_and_declarations() {
        let c = parse_qasm("qreg q[1]; creg c[1];").unwrap();
        assert_eq!(print_qasm(&c), "OPENQASM 2.0;\nqreg q[1];\ncreg c[1];\n");
    }

    #[test]
    fn line_numbers_match_printed_lines() {
        let c = parse_qasm("creg c[1]; qreg q[1]; x q[0]; barrier q[0]; rx(0.1) q[0]; measure q[0] -> c[0];").unwrap();
        let text = print_qasm(&c);
        let lines: Vec<&str> = text.lines().collect();
        for inst in &c.instructions {
            assert!(lines[inst.line_number - 1].starts_with(inst.label()));
        }
    }

    #[test]
    fn params_use_twelve_significant_digits() {
        assert_eq!(format_param(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_param(0.5), "0.5");
        assert_eq!(format_param(-0.0), "0");
        assert_eq!(format_param(1.0e-7), "0.0000001");
    }
}
