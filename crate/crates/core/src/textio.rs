//! Textual circuit format, one declaration per line:
//!
//! ```text
//! inputs 8 outputs 2
//! n0 = AND x0 !x3
//! n1 = NAND n0 x2
//! out0 = n1
//! out1 = const0
//! ```
//!
//! Gates must be declared before use and in id order; outputs in index order.
//! Writing then parsing then writing again is byte stable.

use std::path::Path;

use crate::circuit::{Circuit, Gate, GateKind, Literal, NodeRef};
use crate::error::{Error, Result};

pub fn write_circuit(circuit: &Circuit) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "inputs {} outputs {}\n",
        circuit.num_inputs(),
        circuit.num_outputs()
    ));
    for (id, g) in circuit.nodes().iter().enumerate() {
        out.push_str(&format!("n{id} = {} {} {}\n", g.kind, g.left, g.right));
    }
    for (j, r) in circuit.outputs().iter().enumerate() {
        out.push_str(&format!("out{j} = {r}\n"));
    }
    out
}

pub fn write_circuit_file(circuit: &Circuit, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_circuit(circuit))?;
    Ok(())
}

fn fail(line: usize, message: impl Into<String>) -> Error {
    Error::TextFormat {
        line,
        message: message.into(),
    }
}

fn parse_ref(s: &str, num_inputs: usize, defined: usize, line: usize) -> Result<NodeRef> {
    match s {
        "const0" => return Ok(NodeRef::Const(false)),
        "const1" => return Ok(NodeRef::Const(true)),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix('n') {
        let id: usize = rest
            .parse()
            .map_err(|_| fail(line, format!("bad node ref {s:?}")))?;
        if id >= defined {
            return Err(fail(line, format!("n{id} referenced before definition")));
        }
        return Ok(NodeRef::Gate(id));
    }
    let (negated, rest) = match s.strip_prefix('!') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let index: usize = rest
        .strip_prefix('x')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| fail(line, format!("bad operand {s:?}")))?;
    if index >= num_inputs {
        return Err(fail(line, format!("{s} out of range for {num_inputs} inputs")));
    }
    Ok(NodeRef::Leaf(Literal::new(index, negated)))
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| fail(1, "empty circuit file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (num_inputs, num_outputs) = match fields.as_slice() {
        ["inputs", n, "outputs", m] => {
            let n: usize = n
                .parse()
                .map_err(|_| fail(header_line, "bad input count"))?;
            let m: usize = m
                .parse()
                .map_err(|_| fail(header_line, "bad output count"))?;
            (n, m)
        }
        _ => {
            return Err(fail(
                header_line,
                "expected header `inputs N outputs M`",
            ))
        }
    };

    let mut nodes: Vec<Gate> = Vec::new();
    let mut outputs: Vec<NodeRef> = Vec::new();
    for (line, text) in lines {
        let (lhs, rhs) = text
            .split_once('=')
            .ok_or_else(|| fail(line, "expected `name = ...`"))?;
        let lhs = lhs.trim();
        let rhs: Vec<&str> = rhs.split_whitespace().collect();
        if let Some(id) = lhs.strip_prefix('n').and_then(|d| d.parse::<usize>().ok()) {
            if !outputs.is_empty() {
                return Err(fail(line, "gate declared after outputs"));
            }
            if id != nodes.len() {
                return Err(fail(line, format!("expected n{} here", nodes.len())));
            }
            let (kind, l, r) = match rhs.as_slice() {
                [kind, l, r] => (*kind, *l, *r),
                _ => return Err(fail(line, "expected `nK = AND|NAND <ref> <ref>`")),
            };
            let kind = match kind {
                "AND" => GateKind::And,
                "NAND" => GateKind::Nand,
                other => return Err(fail(line, format!("unknown gate kind {other:?}"))),
            };
            let left = parse_ref(l, num_inputs, nodes.len(), line)?;
            let right = parse_ref(r, num_inputs, nodes.len(), line)?;
            nodes.push(Gate { kind, left, right });
        } else if let Some(j) = lhs.strip_prefix("out").and_then(|d| d.parse::<usize>().ok()) {
            if j != outputs.len() {
                return Err(fail(line, format!("expected out{} here", outputs.len())));
            }
            let r = match rhs.as_slice() {
                [r] => parse_ref(r, num_inputs, nodes.len(), line)?,
                _ => return Err(fail(line, "expected `outJ = <ref>`")),
            };
            outputs.push(r);
        } else {
            return Err(fail(line, format!("unrecognized declaration {lhs:?}")));
        }
    }
    if outputs.len() != num_outputs {
        return Err(fail(
            0,
            format!("header declares {num_outputs} outputs, found {}", outputs.len()),
        ));
    }
    Circuit::new(num_inputs, nodes, outputs)
        .map_err(|e| fail(0, format!("invalid circuit: {e}")))
}

pub fn parse_circuit_file(path: impl AsRef<Path>) -> Result<Circuit> {
    let text = std::fs::read_to_string(path)?;
    parse_circuit(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    #[test]
    fn write_parse_write_is_byte_stable() {
        for seed in 0..200 {
            let c = Circuit::random(8, 2, 15, 200_000 + seed);
            let first = write_circuit(&c);
            let parsed = parse_circuit(&first).unwrap();
            assert_eq!(write_circuit(&parsed), first, "seed {seed}");
            assert_eq!(parsed.truth_table(), c.truth_table());
        }
    }

    #[test]
    fn forward_reference_cites_line() {
        let text = "inputs 2 outputs 1\nn0 = AND n99 x0\nout0 = n0\n";
        match parse_circuit(text) {
            Err(Error::TextFormat { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("n99"), "{message}");
            }
            other => panic!("expected line error, got {other:?}"),
        }
    }

    #[test]
    fn constant_output_parses_to_zero_gates() {
        let c = parse_circuit("inputs 2 outputs 1\nout0 = const0\n").unwrap();
        assert_eq!(c.gate_count(), 0);
        assert!(c.truth_table().output_bits(0).is_zero());
    }

    #[test]
    fn header_errors() {
        assert!(parse_circuit("").is_err());
        assert!(parse_circuit("inputs 2\nout0 = x0\n").is_err());
        assert!(parse_circuit("inputs 2 outputs 2\nout0 = x0\n").is_err());
    }

    #[test]
    fn bad_gate_kind_cites_line() {
        let text = "inputs 2 outputs 1\nn0 = XOR x0 x1\nout0 = n0\n";
        match parse_circuit(text) {
            Err(Error::TextFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected line error, got {other:?}"),
        }
    }
}
