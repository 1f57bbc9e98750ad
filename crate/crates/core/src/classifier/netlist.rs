//! Line-based netlist format.
//!
//! ```text
//! I X=1
//! I W=1
//! G0 OR I0 I1
//! OUT G0
//! ```
//!
//! Inputs are numbered by their order of declaration. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{BooleanCircuit, CircuitError, Gate, Indicator, Operand, Result};

pub fn parse_circuit(text: &str) -> Result<BooleanCircuit> {
    let mut inputs: Vec<Indicator> = Vec::new();
    let mut gates: Vec<Gate> = Vec::new();
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut output = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut parts = body.split_whitespace();
        let head = parts.next().unwrap();
        let syntax = |message: String| CircuitError::Syntax { line, message };
        match head {
            "I" => {
                let text = parts.collect::<Vec<_>>().join(" ");
                let Some((var, val)) = text.split_once('=') else {
                    return Err(CircuitError::UnknownIndicator { line, text });
                };
                let (var, val) = (var.trim(), val.trim());
                if var.is_empty() || val.is_empty() {
                    return Err(CircuitError::UnknownIndicator { line, text });
                }
                let ind = Indicator::new(var, val);
                if inputs.contains(&ind) {
                    return Err(CircuitError::DuplicateInput(ind.to_string()));
                }
                inputs.push(ind);
            }
            "OUT" => {
                if output.is_some() {
                    return Err(CircuitError::MultipleOutputs { line });
                }
                let op = parts.next().ok_or_else(|| syntax("OUT needs an operand".into()))?;
                if parts.next().is_some() {
                    return Err(syntax("OUT takes a single operand".into()));
                }
                output = Some(operand(op, line, inputs.len(), &labels)?);
            }
            label if label.starts_with('G') && label[1..].parse::<usize>().is_ok() => {
                if labels.contains_key(label) {
                    return Err(syntax(format!("gate {label} declared twice")));
                }
                let kind = parts
                    .next()
                    .ok_or_else(|| syntax(format!("gate {label} lacks a type")))?;
                let ops = parts
                    .map(|p| operand(p, line, inputs.len(), &labels))
                    .collect::<Result<Vec<_>>>()?;
                let gate = match kind {
                    "AND" => Gate::And(ops),
                    "OR" => Gate::Or(ops),
                    "NOT" => {
                        if ops.len() != 1 {
                            return Err(syntax(format!("NOT takes one operand, got {}", ops.len())));
                        }
                        Gate::Not(ops[0])
                    }
                    other => return Err(syntax(format!("unknown gate type `{other}`"))),
                };
                labels.insert(label.to_string(), gates.len());
                gates.push(gate);
            }
            other => return Err(syntax(format!("unrecognized line start `{other}`"))),
        }
    }
    let output = output.ok_or(CircuitError::MissingOutput)?;
    BooleanCircuit::new(inputs, gates, output)
}

fn operand(text: &str, line: usize, num_inputs: usize, labels: &HashMap<String, usize>) -> Result<Operand> {
    let forward = || CircuitError::ForwardReference {
        line,
        operand: text.to_string(),
    };
    if let Some(idx) = text.strip_prefix('I').and_then(|s| s.parse::<usize>().ok()) {
        return if idx < num_inputs {
            Ok(Operand::Input(idx))
        } else {
            Err(forward())
        };
    }
    if text.starts_with('G') && text[1..].parse::<usize>().is_ok() {
        return labels.get(text).map(|&g| Operand::Gate(g)).ok_or_else(forward);
    }
    Err(CircuitError::Syntax {
        line,
        message: format!("`{text}` is not an operand"),
    })
}

/// Writes a circuit in netlist form; gates are labelled by position.
pub fn write_circuit(circuit: &BooleanCircuit) -> String {
    let mut out = String::new();
    for ind in circuit.inputs() {
        let _ = writeln!(out, "I {}={}", ind.variable, ind.value);
    }
    for (k, gate) in circuit.gates().iter().enumerate() {
        let (kind, ops) = match gate {
            Gate::And(ops) => ("AND", ops.as_slice()),
            Gate::Or(ops) => ("OR", ops.as_slice()),
            Gate::Not(op) => ("NOT", std::slice::from_ref(op)),
        };
        let _ = write!(out, "G{k} {kind}");
        for op in ops {
            let _ = write!(out, " {op}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "OUT {}", circuit.output());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_or_circuit() {
        let c = parse_circuit("I X=1\nI W=1\nG0 OR I0 I1\nOUT G0\n").unwrap();
        assert!(c.eval(&[false, true]));
        assert!(!c.eval(&[false, false]));
    }

    #[test]
    fn identity_circuit() {
        let c = parse_circuit("I X=1\nOUT I0\n").unwrap();
        assert!(c.eval(&[true]));
        assert!(!c.eval(&[false]));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_circuit("I X=1\nG0 NOT G1\nOUT G0"),
            Err(CircuitError::ForwardReference { line: 2, .. })
        ));
        assert!(matches!(
            parse_circuit("I X1\nOUT I0"),
            Err(CircuitError::UnknownIndicator { line: 1, .. })
        ));
        assert!(matches!(
            parse_circuit("I X=1\nOUT I0\nOUT I0"),
            Err(CircuitError::MultipleOutputs { line: 3 })
        ));
        assert!(matches!(parse_circuit("I X=1\n"), Err(CircuitError::MissingOutput)));
    }

    #[test]
    fn write_round_trips() {
        let text = "I X=0\nI X=1\nG0 NOT I1\nG1 AND I0 G0\nG2 OR\nG3 OR G1 G2\nOUT G3\n";
        let c = parse_circuit(text).unwrap();
        assert_eq!(write_circuit(&c), text);
        assert_eq!(parse_circuit(&write_circuit(&c)).unwrap(), c);
    }
}
