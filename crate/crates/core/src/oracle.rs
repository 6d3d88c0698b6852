//! Exhaustive minimal-circuit enumeration for tiny functions.
//!
//! Iterative deepening over gate count: for each k it enumerates every
//! AND/NAND structure over literal and earlier-gate operands, canonicalized
//! and pruned so that no gate duplicates an existing function (a circuit with
//! such a gate is never minimal), and returns the first realization whose
//! error against the target stays within the bound.

use crate::approx::ErrorBound;
use crate::circuit::{Circuit, Gate, GateKind, Literal, NodeRef, TruthTable};
use crate::error::{Error, Result};

/// Enumeration budget; beyond this the search space explodes.
pub const MAX_ORACLE_INPUTS: usize = 3;
pub const MAX_ORACLE_GATES: usize = 5;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub min_gates: usize,
    pub witness: Circuit,
}

struct Enumerator {
    num_inputs: usize,
    patterns: usize,
    target: Vec<u8>,
    budget: u32,
    /// Tables of literals, then one per placed gate.
    tables: Vec<u8>,
    /// Gate-cone bitmasks aligned with `tables` (literals have empty cones).
    cones: Vec<u32>,
    gates: Vec<(GateKind, usize, usize)>,
}

/// Output candidates are literals, constants or gates.
#[derive(Debug, Clone, Copy, PartialEq)]
enum OutputRef {
    Literal(usize),
    Const(bool),
    Gate(usize),
}

fn mask(patterns: usize) -> u8 {
    if patterns >= 8 {
        0xFF
    } else {
        (1u8 << patterns) - 1
    }
}

impl Enumerator {
    fn ref_table(&self, r: OutputRef) -> u8 {
        match r {
            OutputRef::Literal(id) => self.tables[id],
            OutputRef::Const(false) => 0,
            OutputRef::Const(true) => mask(self.patterns),
            OutputRef::Gate(g) => self.tables[2 * self.num_inputs + g],
        }
    }

    fn ref_cone(&self, r: OutputRef) -> u32 {
        match r {
            OutputRef::Gate(g) => self.cones[2 * self.num_inputs + g],
            _ => 0,
        }
    }

    /// Tries every output assignment for the current gate structure; the last
    /// gate must drive some output and every gate must sit in some cone.
    fn try_outputs(&self, k: usize, outs: &mut Vec<OutputRef>) -> Option<Vec<OutputRef>> {
        let m = self.target.len();
        if outs.len() == m {
            if k > 0 {
                let full = (1u32 << k) - 1;
                let used = outs.iter().fold(0, |acc, &r| acc | self.ref_cone(r));
                if used != full {
                    return None;
                }
                if !outs.iter().any(|&r| r == OutputRef::Gate(k - 1)) {
                    return None;
                }
            }
            let mut mm = 0u8;
            for (j, &r) in outs.iter().enumerate() {
                mm |= (self.ref_table(r) ^ self.target[j]) & mask(self.patterns);
            }
            if mm.count_ones() <= self.budget {
                return Some(outs.clone());
            }
            return None;
        }
        let mut candidates: Vec<OutputRef> = (0..2 * self.num_inputs)
            .map(OutputRef::Literal)
            .collect();
        candidates.push(OutputRef::Const(false));
        candidates.push(OutputRef::Const(true));
        candidates.extend((0..k).map(OutputRef::Gate));
        for r in candidates {
            outs.push(r);
            if let Some(found) = self.try_outputs(k, outs) {
                return Some(found);
            }
            outs.pop();
        }
        None
    }

    fn place_gates(&mut self, k: usize) -> Option<(Vec<(GateKind, usize, usize)>, Vec<OutputRef>)> {
        if self.gates.len() == k {
            let mut outs = Vec::new();
            return self
                .try_outputs(k, &mut outs)
                .map(|o| (self.gates.clone(), o));
        }
        let pool = self.tables.len();
        for kind in [GateKind::And, GateKind::Nand] {
            for a in 0..pool {
                for b in a..pool {
                    if kind == GateKind::And && a == b {
                        continue; // AND(a, a) = a
                    }
                    // Complementary literals: constant result, never minimal.
                    if a < 2 * self.num_inputs && b < 2 * self.num_inputs && a / 2 == b / 2 && a != b
                    {
                        continue;
                    }
                    let t = {
                        let and = self.tables[a] & self.tables[b];
                        match kind {
                            GateKind::And => and,
                            GateKind::Nand => !and & mask(self.patterns),
                        }
                    };
                    // A gate duplicating any existing function (or a constant)
                    // cannot appear in a minimal circuit.
                    if t == 0 || t == mask(self.patterns) || self.tables.contains(&t) {
                        continue;
                    }
                    let cone = (1u32 << self.gates.len())
                        | self.cone_of_operand(a)
                        | self.cone_of_operand(b);
                    self.tables.push(t);
                    self.cones.push(cone);
                    self.gates.push((kind, a, b));
                    if let Some(found) = self.place_gates(k) {
                        return Some(found);
                    }
                    self.gates.pop();
                    self.cones.pop();
                    self.tables.pop();
                }
            }
        }
        None
    }

    fn cone_of_operand(&self, id: usize) -> u32 {
        if id < 2 * self.num_inputs {
            0
        } else {
            self.cones[id]
        }
    }
}

/// Smallest AND/NAND realization of `target` within `bound`, up to
/// `max_gates`; `None` means no witness exists within the budget.
pub fn brute_force_oracle(
    target: &TruthTable,
    bound: ErrorBound,
    max_gates: usize,
) -> Result<Option<OracleResult>> {
    if target.num_inputs() > MAX_ORACLE_INPUTS {
        return Err(Error::InvalidArgument(format!(
            "oracle handles at most {MAX_ORACLE_INPUTS} inputs"
        )));
    }
    if max_gates > MAX_ORACLE_GATES {
        return Err(Error::InvalidArgument(format!(
            "oracle handles at most {MAX_ORACLE_GATES} gates"
        )));
    }
    let n = target.num_inputs();
    let patterns = target.num_patterns();
    let target_u8: Vec<u8> = (0..target.num_outputs())
        .map(|j| {
            (0..patterns).fold(0u8, |acc, p| acc | ((target.get(j, p) as u8) << p))
        })
        .collect();
    let mut lit_tables = Vec::with_capacity(2 * n);
    for i in 0..n {
        let t = (0..patterns).fold(0u8, |acc, p| acc | ((((p >> i) & 1) as u8) << p));
        lit_tables.push(t);
        lit_tables.push(!t & mask(patterns));
    }

    for k in 0..=max_gates {
        let mut en = Enumerator {
            num_inputs: n,
            patterns,
            target: target_u8.clone(),
            budget: bound.max_mismatches(patterns as u64) as u32,
            tables: lit_tables.clone(),
            cones: vec![0; 2 * n],
            gates: Vec::new(),
        };
        if let Some((gates, outs)) = en.place_gates(k) {
            let nodes: Vec<Gate> = gates
                .iter()
                .map(|&(kind, a, b)| Gate {
                    kind,
                    left: operand_ref(a, n),
                    right: operand_ref(b, n),
                })
                .collect();
            let outputs: Vec<NodeRef> = outs
                .iter()
                .map(|&r| match r {
                    OutputRef::Literal(id) => NodeRef::Leaf(Literal::new(id / 2, id % 2 == 1)),
                    OutputRef::Const(b) => NodeRef::Const(b),
                    OutputRef::Gate(g) => NodeRef::Gate(g),
                })
                .collect();
            let witness = Circuit::new(n, nodes, outputs)?;
            return Ok(Some(OracleResult {
                min_gates: k,
                witness,
            }));
        }
    }
    Ok(None)
}

fn operand_ref(id: usize, num_inputs: usize) -> NodeRef {
    if id < 2 * num_inputs {
        NodeRef::Leaf(Literal::new(id / 2, id % 2 == 1))
    } else {
        NodeRef::Gate(id - 2 * num_inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::error_rate;
    use num_traits::ToPrimitive;

    fn exact(bits: u64, n: usize) -> TruthTable {
        TruthTable::from_u64(n, bits)
    }

    #[test]
    fn literal_needs_no_gates() {
        let r = brute_force_oracle(&exact(0b1010, 2), ErrorBound::zero(), 3)
            .unwrap()
            .unwrap();
        assert_eq!(r.min_gates, 0);
        assert_eq!(r.witness.truth_table(), exact(0b1010, 2));
    }

    #[test]
    fn constants_need_no_gates() {
        for bits in [0b0000, 0b1111] {
            let r = brute_force_oracle(&exact(bits, 2), ErrorBound::zero(), 3)
                .unwrap()
                .unwrap();
            assert_eq!(r.min_gates, 0, "function {bits:04b}");
        }
    }

    #[test]
    fn xor_needs_three_gates_exactly() {
        let r = brute_force_oracle(&exact(0b0110, 2), ErrorBound::zero(), 4)
            .unwrap()
            .unwrap();
        assert_eq!(r.min_gates, 3);
        assert_eq!(r.witness.truth_table(), exact(0b0110, 2));
    }

    #[test]
    fn quarter_bound_makes_xor_cheaper() {
        let exact_min = brute_force_oracle(&exact(0b0110, 2), ErrorBound::zero(), 4)
            .unwrap()
            .unwrap()
            .min_gates;
        let r = brute_force_oracle(&exact(0b0110, 2), ErrorBound::new(1, 4).unwrap(), 4)
            .unwrap()
            .unwrap();
        assert!(r.min_gates < exact_min);
        assert_eq!(r.min_gates, 1);
        let er = error_rate(&r.witness.truth_table(), &exact(0b0110, 2)).unwrap();
        assert!(er.to_f64().unwrap() <= 0.25);
    }

    #[test]
    fn every_two_input_function_is_realizable() {
        for bits in 0..16u64 {
            let target = exact(bits, 2);
            let r = brute_force_oracle(&target, ErrorBound::zero(), 4)
                .unwrap()
                .unwrap_or_else(|| panic!("function {bits:04b} not found"));
            assert_eq!(r.witness.truth_table(), target, "function {bits:04b}");
            assert_eq!(r.witness.gate_count(), r.min_gates);
        }
    }

    #[test]
    fn witnesses_respect_the_bound() {
        for bits in 0..16u64 {
            let target = exact(bits, 2);
            let bound = ErrorBound::new(1, 4).unwrap();
            let r = brute_force_oracle(&target, bound, 4).unwrap().unwrap();
            let er = error_rate(&r.witness.truth_table(), &target).unwrap();
            assert!(er <= bound.as_rational(), "function {bits:04b}");
        }
    }

    #[test]
    fn unknown_above_budget() {
        // Three-input XOR needs more than one gate.
        let mut bits = 0u64;
        for p in 0..8 {
            if (p as u32).count_ones() % 2 == 1 {
                bits |= 1 << p;
            }
        }
        let r = brute_force_oracle(&exact(bits, 3), ErrorBound::zero(), 1).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn deterministic_witness() {
        let a = brute_force_oracle(&exact(0b0110, 2), ErrorBound::zero(), 4)
            .unwrap()
            .unwrap();
        let b = brute_force_oracle(&exact(0b0110, 2), ErrorBound::zero(), 4)
            .unwrap()
            .unwrap();
        assert_eq!(a.witness, b.witness);
    }
}
