//! Circuit data model: two-input AND/NAND gates over optionally inverted
//! inputs, exact truth-table simulation, structural merging and exact
//! simplification.
//!
//! Nodes may only reference strictly earlier nodes, so every circuit is
//! acyclic by construction. Input inversion and constants are free; only
//! AND/NAND gates count toward size.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;
use crate::error::{Error, Result};

/// Exhaustive simulation budget: every operation here enumerates all
/// `2^num_inputs` patterns.
pub const MAX_INPUTS: usize = 16;

/// A primary input, possibly inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub index: usize,
    pub negated: bool,
}

impl Literal {
    pub fn new(index: usize, negated: bool) -> Self {
        Literal { index, negated }
    }

    pub fn pos(index: usize) -> Self {
        Literal::new(index, false)
    }

    pub fn neg(index: usize) -> Self {
        Literal::new(index, true)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!x{}", self.index)
        } else {
            write!(f, "x{}", self.index)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    And,
    Nand,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::And => write!(f, "AND"),
            GateKind::Nand => write!(f, "NAND"),
        }
    }
}

/// Operand of a gate or target of an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Const(bool),
    Leaf(Literal),
    Gate(usize),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Const(false) => write!(f, "const0"),
            NodeRef::Const(true) => write!(f, "const1"),
            NodeRef::Leaf(l) => write!(f, "{l}"),
            NodeRef::Gate(id) => write!(f, "n{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub left: NodeRef,
    pub right: NodeRef,
}

/// A combinational circuit with a fixed input count, a topologically ordered
/// gate list and one ref per output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    num_inputs: usize,
    nodes: Vec<Gate>,
    outputs: Vec<NodeRef>,
}

impl Circuit {
    pub fn new(num_inputs: usize, nodes: Vec<Gate>, outputs: Vec<NodeRef>) -> Result<Self> {
        if num_inputs == 0 {
            return Err(Error::InvalidCircuit("need at least one input".into()));
        }
        if num_inputs > MAX_INPUTS {
            return Err(Error::TooManyInputs(num_inputs));
        }
        if outputs.is_empty() {
            return Err(Error::InvalidCircuit("need at least one output".into()));
        }
        let check = |r: &NodeRef, limit: usize| -> Result<()> {
            match r {
                NodeRef::Const(_) => Ok(()),
                NodeRef::Leaf(l) if l.index < num_inputs => Ok(()),
                NodeRef::Leaf(l) => Err(Error::InvalidCircuit(format!(
                    "literal {l} out of range for {num_inputs} inputs"
                ))),
                NodeRef::Gate(id) if *id < limit => Ok(()),
                NodeRef::Gate(id) => Err(Error::InvalidCircuit(format!(
                    "n{id} referenced before definition"
                ))),
            }
        };
        for (id, g) in nodes.iter().enumerate() {
            check(&g.left, id)?;
            check(&g.right, id)?;
        }
        for r in &outputs {
            check(r, nodes.len())?;
        }
        Ok(Circuit {
            num_inputs,
            nodes,
            outputs,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn nodes(&self) -> &[Gate] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[NodeRef] {
        &self.outputs
    }

    /// Number of gates reachable from the outputs; shared nodes count once,
    /// leaves and constants are free.
    pub fn gate_count(&self) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = Vec::new();
        for r in &self.outputs {
            if let NodeRef::Gate(id) = r {
                stack.push(*id);
            }
        }
        let mut count = 0;
        while let Some(id) = stack.pop() {
            if seen[id] {
                continue;
            }
            seen[id] = true;
            count += 1;
            for r in [self.nodes[id].left, self.nodes[id].right] {
                if let NodeRef::Gate(child) = r {
                    if !seen[child] {
                        stack.push(child);
                    }
                }
            }
        }
        count
    }

    /// Exact per-output function over all `2^num_inputs` patterns.
    pub fn truth_table(&self) -> TruthTable {
        let len = 1usize << self.num_inputs;
        let mut tables: Vec<Bits> = Vec::with_capacity(self.nodes.len());
        for g in &self.nodes {
            let l = self.ref_bits_cached(&tables, g.left);
            let r = self.ref_bits_cached(&tables, g.right);
            let t = match g.kind {
                GateKind::And => l.and(&r),
                GateKind::Nand => l.nand(&r),
            };
            tables.push(t);
        }
        let outputs = self
            .outputs
            .iter()
            .map(|r| self.ref_bits_cached(&tables, *r))
            .collect();
        debug_assert!(tables.iter().all(|t| t.len() == len));
        TruthTable {
            num_inputs: self.num_inputs,
            outputs,
        }
    }

    fn ref_bits_cached(&self, tables: &[Bits], r: NodeRef) -> Bits {
        let len = 1usize << self.num_inputs;
        match r {
            NodeRef::Const(false) => Bits::zeros(len),
            NodeRef::Const(true) => Bits::ones(len),
            NodeRef::Leaf(l) => {
                let b = Bits::input_pattern(self.num_inputs, l.index);
                if l.negated {
                    b.not()
                } else {
                    b
                }
            }
            NodeRef::Gate(id) => tables[id].clone(),
        }
    }

    /// Merges gates that compute the same function (keyed by their full truth
    /// table) and drops everything unreachable from the outputs.
    ///
    /// The rebuild walks each output cone depth-first and keeps the first
    /// occurrence of every function, the same discipline decoding uses, so a
    /// decoded sequence passes through unchanged.
    pub fn structural_merge(&self) -> Circuit {
        self.rebuild_merged(false)
    }

    /// Exact simplification: every gate whose function is constant, equal to a
    /// literal, or equal to an earlier kept gate is replaced by that cheaper
    /// ref, and unreachable gates are dropped. Subsumes constant propagation,
    /// idempotence, complement annihilation and structural merging, run to
    /// their fixpoint.
    pub fn simplify_exact(&self) -> Circuit {
        self.rebuild_merged(true)
    }

    fn rebuild_merged(&self, collapse_to_leaves: bool) -> Circuit {
        let len = 1usize << self.num_inputs;
        let mut canon: HashMap<Bits, NodeRef> = HashMap::new();
        if collapse_to_leaves {
            canon.insert(Bits::zeros(len), NodeRef::Const(false));
            canon.insert(Bits::ones(len), NodeRef::Const(true));
            for i in 0..self.num_inputs {
                let b = Bits::input_pattern(self.num_inputs, i);
                canon.insert(b.not(), NodeRef::Leaf(Literal::neg(i)));
                canon.insert(b, NodeRef::Leaf(Literal::pos(i)));
            }
        }
        let mut memo: HashMap<usize, NodeRef> = HashMap::new();
        let mut nodes: Vec<Gate> = Vec::new();
        let mut tables: Vec<Bits> = Vec::new();
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for &out in &self.outputs {
            let r = self.rebuild_ref(out, &mut memo, &mut canon, &mut nodes, &mut tables);
            outputs.push(r);
        }
        garbage_collect(self.num_inputs, nodes, outputs)
    }

    /// Postorder rebuild of one cone: children first, then dedupe the gate by
    /// its table; `memo` keeps shared original nodes visited once.
    fn rebuild_ref(
        &self,
        root: NodeRef,
        memo: &mut HashMap<usize, NodeRef>,
        canon: &mut HashMap<Bits, NodeRef>,
        nodes: &mut Vec<Gate>,
        tables: &mut Vec<Bits>,
    ) -> NodeRef {
        let old_id = match root {
            NodeRef::Gate(id) => id,
            leaf => return leaf,
        };
        if let Some(&r) = memo.get(&old_id) {
            return r;
        }
        // Explicit postorder: second visit materializes.
        let mut stack = vec![(old_id, false)];
        while let Some((id, ready)) = stack.pop() {
            if memo.contains_key(&id) {
                continue;
            }
            let g = self.nodes[id];
            if !ready {
                stack.push((id, true));
                for r in [g.left, g.right] {
                    if let NodeRef::Gate(child) = r {
                        if !memo.contains_key(&child) {
                            stack.push((child, false));
                        }
                    }
                }
                continue;
            }
            let fix = |r: NodeRef, memo: &HashMap<usize, NodeRef>| match r {
                NodeRef::Gate(c) => memo[&c],
                other => other,
            };
            let gate = Gate {
                kind: g.kind,
                left: fix(g.left, memo),
                right: fix(g.right, memo),
            };
            let l = self.ref_bits_cached(tables, gate.left);
            let r = self.ref_bits_cached(tables, gate.right);
            let t = match gate.kind {
                GateKind::And => l.and(&r),
                GateKind::Nand => l.nand(&r),
            };
            let rep = *canon.entry(t.clone()).or_insert_with(|| {
                let new_id = nodes.len();
                nodes.push(gate);
                tables.push(t);
                NodeRef::Gate(new_id)
            });
            memo.insert(id, rep);
        }
        memo[&old_id]
    }

    /// Reproducible random circuit: each gate draws its kind and two operands
    /// uniformly from the literals and previously created gates; outputs are
    /// drawn from the gates (or from the literals when there are none).
    pub fn random(num_inputs: usize, num_outputs: usize, num_gates: usize, seed: u64) -> Circuit {
        assert!(num_inputs >= 1 && num_inputs <= MAX_INPUTS);
        assert!(num_outputs >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes = Vec::with_capacity(num_gates);
        for i in 0..num_gates {
            let kind = if rng.random::<bool>() {
                GateKind::And
            } else {
                GateKind::Nand
            };
            let operand = |rng: &mut ChaCha8Rng| {
                let pool = 2 * num_inputs + i;
                let k = rng.random_range(0..pool);
                if k < 2 * num_inputs {
                    NodeRef::Leaf(Literal::new(k / 2, k % 2 == 1))
                } else {
                    NodeRef::Gate(k - 2 * num_inputs)
                }
            };
            let left = operand(&mut rng);
            let right = operand(&mut rng);
            nodes.push(Gate { kind, left, right });
        }
        let outputs = (0..num_outputs)
            .map(|_| {
                if num_gates == 0 {
                    let k = rng.random_range(0..2 * num_inputs);
                    NodeRef::Leaf(Literal::new(k / 2, k % 2 == 1))
                } else {
                    NodeRef::Gate(rng.random_range(0..num_gates))
                }
            })
            .collect();
        Circuit {
            num_inputs,
            nodes,
            outputs,
        }
    }

    /// Drops gates unreachable from the outputs.
    pub(crate) fn drop_unreachable(self) -> Circuit {
        garbage_collect(self.num_inputs, self.nodes, self.outputs)
    }

    /// Naive exact realization of an arbitrary function: one AND chain per
    /// one-pattern, combined through NAND-based ORs. Only sensible for small
    /// input counts; used to seed searches with a correct starting point.
    pub fn from_truth_table_naive(tt: &TruthTable) -> Circuit {
        let n = tt.num_inputs();
        let mut nodes: Vec<Gate> = Vec::new();
        let mut outputs = Vec::with_capacity(tt.num_outputs());
        for j in 0..tt.num_outputs() {
            let ones: Vec<usize> = (0..tt.num_patterns()).filter(|&p| tt.get(j, p)).collect();
            if ones.len() == tt.num_patterns() {
                outputs.push(NodeRef::Const(true));
                continue;
            }
            let mut terms: Vec<NodeRef> = Vec::new();
            for &p in &ones {
                let lit = |i: usize| NodeRef::Leaf(Literal::new(i, (p >> i) & 1 == 0));
                let mut acc = lit(0);
                for i in 1..n {
                    nodes.push(Gate {
                        kind: GateKind::And,
                        left: acc,
                        right: lit(i),
                    });
                    acc = NodeRef::Gate(nodes.len() - 1);
                }
                if n == 1 {
                    // Single-input minterm is the literal itself.
                }
                terms.push(acc);
            }
            let mut out = match terms.first() {
                None => NodeRef::Const(false),
                Some(&t) => t,
            };
            for &t in terms.iter().skip(1) {
                // out | t == NAND(!out, !t); inversion of internal nodes needs
                // an explicit NAND(a, a).
                let inv = |nodes: &mut Vec<Gate>, r: NodeRef| -> NodeRef {
                    match r {
                        NodeRef::Leaf(l) => NodeRef::Leaf(Literal::new(l.index, !l.negated)),
                        NodeRef::Const(b) => NodeRef::Const(!b),
                        NodeRef::Gate(_) => {
                            nodes.push(Gate {
                                kind: GateKind::Nand,
                                left: r,
                                right: r,
                            });
                            NodeRef::Gate(nodes.len() - 1)
                        }
                    }
                };
                let a = inv(&mut nodes, out);
                let b = inv(&mut nodes, t);
                nodes.push(Gate {
                    kind: GateKind::Nand,
                    left: a,
                    right: b,
                });
                out = NodeRef::Gate(nodes.len() - 1);
            }
            outputs.push(out);
        }
        Circuit::new(n, nodes, outputs)
            .expect("minterm construction is valid by construction")
            .simplify_exact()
    }
}

/// Drops gates unreachable from the outputs and renumbers the survivors in
/// their original order.
fn garbage_collect(num_inputs: usize, nodes: Vec<Gate>, outputs: Vec<NodeRef>) -> Circuit {
    let mut live = vec![false; nodes.len()];
    let mut stack: Vec<usize> = Vec::new();
    for r in &outputs {
        if let NodeRef::Gate(id) = r {
            stack.push(*id);
        }
    }
    while let Some(id) = stack.pop() {
        if live[id] {
            continue;
        }
        live[id] = true;
        for r in [nodes[id].left, nodes[id].right] {
            if let NodeRef::Gate(child) = r {
                if !live[child] {
                    stack.push(child);
                }
            }
        }
    }
    let mut new_id = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (id, g) in nodes.iter().enumerate() {
        if !live[id] {
            continue;
        }
        let fix = |r: NodeRef| match r {
            NodeRef::Gate(old) => NodeRef::Gate(new_id[old]),
            other => other,
        };
        let gate = Gate {
            kind: g.kind,
            left: fix(g.left),
            right: fix(g.right),
        };
        new_id[id] = kept.len();
        kept.push(gate);
    }
    let outputs = outputs
        .into_iter()
        .map(|r| match r {
            NodeRef::Gate(old) => NodeRef::Gate(new_id[old]),
            other => other,
        })
        .collect();
    Circuit {
        num_inputs,
        nodes: kept,
        outputs,
    }
}

/// Exact function of a circuit: one bit vector of length `2^num_inputs` per
/// output, bit `p` holding the output value on pattern `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    num_inputs: usize,
    outputs: Vec<Bits>,
}

impl TruthTable {
    pub fn new(num_inputs: usize, outputs: Vec<Bits>) -> Result<Self> {
        if num_inputs == 0 || num_inputs > MAX_INPUTS {
            return Err(Error::TooManyInputs(num_inputs));
        }
        let len = 1usize << num_inputs;
        if outputs.is_empty() || outputs.iter().any(|b| b.len() != len) {
            return Err(Error::DimensionMismatch(format!(
                "every output must cover {len} patterns"
            )));
        }
        Ok(TruthTable {
            num_inputs,
            outputs,
        })
    }

    /// Single-output table from the low `2^num_inputs` bits of a word.
    pub fn from_u64(num_inputs: usize, bits: u64) -> Self {
        assert!(num_inputs <= 6);
        let len = 1usize << num_inputs;
        let table = Bits::from_fn(len, |p| (bits >> p) & 1 == 1);
        TruthTable {
            num_inputs,
            outputs: vec![table],
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_patterns(&self) -> usize {
        1usize << self.num_inputs
    }

    pub fn get(&self, output: usize, pattern: usize) -> bool {
        self.outputs[output].get(pattern)
    }

    pub fn output_bits(&self, output: usize) -> &Bits {
        &self.outputs[output]
    }

    pub fn outputs(&self) -> &[Bits] {
        &self.outputs
    }

    /// Outputs read as an unsigned integer on one pattern, output `j` at bit `j`.
    pub fn value_at(&self, pattern: usize) -> u64 {
        self.outputs
            .iter()
            .enumerate()
            .fold(0, |acc, (j, b)| acc | ((b.get(pattern) as u64) << j))
    }

    pub fn to_hex(&self) -> Vec<String> {
        self.outputs.iter().map(|b| b.to_hex()).collect()
    }

    pub fn from_hex(num_inputs: usize, outputs: &[String]) -> Result<Self> {
        let len = 1usize << num_inputs;
        let bits = outputs
            .iter()
            .map(|s| {
                Bits::from_hex(len, s).ok_or_else(|| {
                    Error::InvalidArgument(format!("bad truth table hex string {s:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TruthTable::new(num_inputs, bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_and() -> Circuit {
        Circuit::new(
            2,
            vec![Gate {
                kind: GateKind::And,
                left: NodeRef::Leaf(Literal::pos(0)),
                right: NodeRef::Leaf(Literal::pos(1)),
            }],
            vec![NodeRef::Gate(0)],
        )
        .unwrap()
    }

    /// Per-pattern tree-walk evaluation, independent of the bit-parallel path.
    pub(crate) fn naive_truth_table(c: &Circuit) -> TruthTable {
        fn eval(c: &Circuit, r: NodeRef, pattern: usize) -> bool {
            match r {
                NodeRef::Const(b) => b,
                NodeRef::Leaf(l) => ((pattern >> l.index) & 1 == 1) ^ l.negated,
                NodeRef::Gate(id) => {
                    let g = &c.nodes()[id];
                    let v = eval(c, g.left, pattern) && eval(c, g.right, pattern);
                    match g.kind {
                        GateKind::And => v,
                        GateKind::Nand => !v,
                    }
                }
            }
        }
        let len = 1usize << c.num_inputs();
        let outputs = c
            .outputs()
            .iter()
            .map(|&r| Bits::from_fn(len, |p| eval(c, r, p)))
            .collect();
        TruthTable::new(c.num_inputs(), outputs).unwrap()
    }

    #[test]
    fn and_gate_table() {
        let tt = single_and().truth_table();
        let got: Vec<bool> = (0..4).map(|p| tt.get(0, p)).collect();
        assert_eq!(got, vec![false, false, false, true]);
    }

    #[test]
    fn nand_of_complements_is_constant_one() {
        let c = Circuit::new(
            1,
            vec![Gate {
                kind: GateKind::Nand,
                left: NodeRef::Leaf(Literal::pos(0)),
                right: NodeRef::Leaf(Literal::neg(0)),
            }],
            vec![NodeRef::Gate(0)],
        )
        .unwrap();
        let tt = c.truth_table();
        assert!((0..2).all(|p| tt.get(0, p)));
    }

    #[test]
    fn eval_matches_naive_on_random_circuits() {
        for seed in 0..1000 {
            let c = Circuit::random(3, 2, 8, seed);
            assert_eq!(c.truth_table(), naive_truth_table(&c), "seed {seed}");
        }
    }

    #[test]
    fn duplicate_gates_merge() {
        let and = |l, r| Gate {
            kind: GateKind::And,
            left: l,
            right: r,
        };
        let x = |i| NodeRef::Leaf(Literal::pos(i));
        let c = Circuit::new(
            2,
            vec![and(x(0), x(1)), and(x(0), x(1))],
            vec![NodeRef::Gate(0), NodeRef::Gate(1)],
        )
        .unwrap();
        let merged = c.structural_merge();
        assert_eq!(merged.gate_count(), 1);
        assert_eq!(merged.outputs()[0], merged.outputs()[1]);
        assert_eq!(merged.truth_table(), c.truth_table());
    }

    #[test]
    fn merge_preserves_tables_on_random_circuits() {
        for seed in 0..500 {
            let c = Circuit::random(8, 2, 20, seed);
            let merged = c.structural_merge();
            assert_eq!(merged.truth_table(), c.truth_table(), "seed {seed}");
            assert!(merged.gate_count() <= c.gate_count());
        }
    }

    #[test]
    fn shared_fanout_counted_once() {
        let c = single_and();
        let c2 = Circuit::new(
            2,
            c.nodes().to_vec(),
            vec![NodeRef::Gate(0), NodeRef::Gate(0)],
        )
        .unwrap();
        assert_eq!(c2.gate_count(), 1);
    }

    #[test]
    fn literal_outputs_cost_nothing() {
        let c = Circuit::new(
            2,
            vec![],
            vec![NodeRef::Leaf(Literal::pos(0)), NodeRef::Const(false)],
        )
        .unwrap();
        assert_eq!(c.gate_count(), 0);
    }

    #[test]
    fn unfolded_fig_topology_counts_three_gates() {
        // g1 = AND(x1, n), g2 = AND(n, x5), n = AND(x2, x4): shared n counts once.
        let x = |i| NodeRef::Leaf(Literal::pos(i));
        let and = |l, r| Gate {
            kind: GateKind::And,
            left: l,
            right: r,
        };
        let c = Circuit::new(
            6,
            vec![
                and(x(2), x(4)),
                and(x(1), NodeRef::Gate(0)),
                and(NodeRef::Gate(0), x(5)),
            ],
            vec![NodeRef::Gate(1), NodeRef::Gate(2)],
        )
        .unwrap();
        assert_eq!(c.gate_count(), 3);
    }

    #[test]
    fn random_is_deterministic() {
        let a = Circuit::random(8, 2, 20, 1);
        let b = Circuit::random(8, 2, 20, 1);
        assert_eq!(a, b);
    }

    #[test]
    fn random_with_zero_gates_wires_literals() {
        let c = Circuit::random(2, 1, 0, 7);
        assert_eq!(c.gate_count(), 0);
        assert!(matches!(c.outputs()[0], NodeRef::Leaf(_)));
    }

    #[test]
    fn simplify_idempotence_rule() {
        let x = |i| NodeRef::Leaf(Literal::pos(i));
        let c = Circuit::new(
            2,
            vec![Gate {
                kind: GateKind::And,
                left: x(0),
                right: x(0),
            }],
            vec![NodeRef::Gate(0)],
        )
        .unwrap();
        let s = c.simplify_exact();
        assert_eq!(s.gate_count(), 0);
        assert_eq!(s.outputs()[0], NodeRef::Leaf(Literal::pos(0)));
    }

    #[test]
    fn simplify_complement_annihilation() {
        let c = Circuit::new(
            2,
            vec![Gate {
                kind: GateKind::And,
                left: NodeRef::Leaf(Literal::pos(0)),
                right: NodeRef::Leaf(Literal::neg(0)),
            }],
            vec![NodeRef::Gate(0)],
        )
        .unwrap();
        let s = c.simplify_exact();
        assert_eq!(s.gate_count(), 0);
        assert_eq!(s.outputs()[0], NodeRef::Const(false));
    }

    #[test]
    fn simplify_preserves_function_and_shrinks() {
        let mut total_before = 0usize;
        let mut total_after = 0usize;
        for seed in 0..1000 {
            let c = Circuit::random(8, 2, 20, 10_000 + seed);
            let s = c.simplify_exact();
            assert_eq!(s.truth_table(), c.truth_table(), "seed {seed}");
            assert!(s.gate_count() <= c.gate_count());
            total_before += c.gate_count();
            total_after += s.gate_count();
        }
        assert!(total_after < total_before, "mean size reduction must be > 0");
    }

    #[test]
    fn simplify_is_idempotent() {
        for seed in 0..200 {
            let c = Circuit::random(8, 2, 25, 20_000 + seed);
            let once = c.simplify_exact();
            let twice = once.simplify_exact();
            assert_eq!(once, twice, "seed {seed}");
        }
    }

    #[test]
    fn naive_realization_matches_table() {
        for bits in 0..16u64 {
            let tt = TruthTable::from_u64(2, bits);
            let c = Circuit::from_truth_table_naive(&tt);
            assert_eq!(c.truth_table(), tt, "function {bits:04b}");
        }
    }

    #[test]
    fn value_at_packs_outputs_lsb_first() {
        let x = |i| NodeRef::Leaf(Literal::pos(i));
        let c = Circuit::new(2, vec![], vec![x(0), x(1)]).unwrap();
        let tt = c.truth_table();
        assert_eq!(
            (0..4).map(|p| tt.value_at(p)).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
    }
}
