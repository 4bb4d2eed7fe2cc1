//! OpenQASM 2.0 subset reader/writer.
//!
//! One `qreg`, `cx` and `swap` are understood; single-qubit gates, barriers,
//! measurements and classical registers are silently dropped because they do
//! not affect routing under the gate-count objective.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::QasmError;

/// Parse an OpenQASM 2.0 subset, keeping only the two-qubit gates in source
/// order.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let mut qreg: Option<(String, usize)> = None;
    let mut gates: Vec<Gate> = Vec::new();

    for (line_no, raw_line) in text.lines().enumerate() {
        let line = line_no + 1;
        let code = raw_line.split("//").next().unwrap_or("");
        for stmt in code.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            let (head, rest) = match stmt.split_once(|c: char| c.is_whitespace()) {
                Some((h, r)) => (h, r.trim()),
                None => (stmt, ""),
            };
            // strip a parameter list like u3(pi/2,0,pi)
            let head_name = head.split('(').next().unwrap_or(head);
            match head_name {
                "OPENQASM" | "include" | "creg" | "barrier" | "measure" | "reset" | "if" => {}
                "qreg" => {
                    if qreg.is_some() {
                        return Err(QasmError::MultipleQregs { line });
                    }
                    let (name, size) = parse_reg_decl(rest, line)?;
                    qreg = Some((name, size));
                }
                "cx" | "CX" | "swap" => {
                    let (name, size) = qreg.as_ref().ok_or(QasmError::MissingQreg)?;
                    let operands = parse_operands(rest, name, *size, line)?;
                    if operands.len() != 2 {
                        return Err(QasmError::Syntax {
                            line,
                            message: format!("`{head_name}` expects 2 operands, got {}", operands.len()),
                        });
                    }
                    if operands[0] == operands[1] {
                        return Err(QasmError::Syntax {
                            line,
                            message: format!("`{head_name}` operands must be distinct"),
                        });
                    }
                    let kind = if head_name == "swap" { GateKind::Swap } else { GateKind::Cnot };
                    gates.push(Gate { kind, q0: operands[0], q1: operands[1] });
                }
                _ => {
                    // any other gate: validate operands, then drop it
                    if let Some((name, size)) = qreg.as_ref() {
                        parse_operands(rest, name, *size, line)?;
                    }
                }
            }
        }
    }

    let (_, size) = qreg.ok_or(QasmError::MissingQreg)?;
    Ok(Circuit::new(size, gates)?)
}

fn parse_reg_decl(rest: &str, line: usize) -> Result<(String, usize), QasmError> {
    let err = |message: String| QasmError::Syntax { line, message };
    let open = rest.find('[').ok_or_else(|| err("expected `name[size]`".into()))?;
    let close = rest.find(']').ok_or_else(|| err("expected `name[size]`".into()))?;
    let name = rest[..open].trim();
    let size: usize = rest[open + 1..close]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad register size in `{rest}`")))?;
    if name.is_empty() {
        return Err(err("empty register name".into()));
    }
    Ok((name.to_string(), size))
}

fn parse_operands(rest: &str, qreg_name: &str, size: usize, line: usize) -> Result<Vec<usize>, QasmError> {
    let mut out = Vec::new();
    for op in rest.split(',') {
        let op = op.trim();
        if op.is_empty() {
            continue;
        }
        let (name, idx) = match (op.find('['), op.find(']')) {
            (Some(open), Some(close)) if open < close => {
                let idx: usize = op[open + 1..close].trim().parse().map_err(|_| QasmError::Syntax {
                    line,
                    message: format!("bad qubit index in `{op}`"),
                })?;
                (op[..open].trim(), idx)
            }
            _ => {
                return Err(QasmError::Syntax { line, message: format!("expected `reg[i]`, got `{op}`") });
            }
        };
        if name != qreg_name {
            return Err(QasmError::UndeclaredRegister { line, name: name.to_string() });
        }
        if idx >= size {
            return Err(QasmError::IndexOutOfRange { line, index: idx, size });
        }
        out.push(idx);
    }
    Ok(out)
}

/// Emit a circuit as OpenQASM 2.0. Round-trips through [`parse_qasm`] for
/// CNOT/SWAP-only circuits.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", c.num_qubits()));
    for g in c.gates() {
        let name = match g.kind {
            GateKind::Cnot => "cx",
            GateKind::Swap => "swap",
        };
        out.push_str(&format!("{name} q[{}],q[{}];\n", g.q0, g.q1));
    }
    out
}
