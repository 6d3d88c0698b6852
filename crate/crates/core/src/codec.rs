//! Token sequences for circuits and the incremental parser used during
//! generation.
//!
//! Encoding walks each output in preorder and re-expands multi-fanout nodes at
//! every visit, turning the DAG into a forest of trees. Decoding parses the
//! forest back and merges any subtree whose function already exists, so the
//! compact DAG is recovered.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::bits::Bits;
use crate::circuit::{Circuit, Gate, GateKind, Literal, NodeRef, TruthTable};
use crate::error::{Error, Result};

/// Default cap on generated sequence length, end marker included.
pub const DEFAULT_MAX_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Lit(Literal),
    Gate(GateKind),
    Eos,
}

impl Token {
    /// Dense id within the vocabulary of `2 * num_inputs + 3` tokens:
    /// literals first (`x_i` before `!x_i`), then AND, NAND, EOS.
    pub fn id(&self, num_inputs: usize) -> usize {
        match self {
            Token::Lit(l) => 2 * l.index + l.negated as usize,
            Token::Gate(GateKind::And) => 2 * num_inputs,
            Token::Gate(GateKind::Nand) => 2 * num_inputs + 1,
            Token::Eos => 2 * num_inputs + 2,
        }
    }

    pub fn from_id(id: usize, num_inputs: usize) -> Option<Token> {
        match id {
            _ if id < 2 * num_inputs => {
                Some(Token::Lit(Literal::new(id / 2, id % 2 == 1)))
            }
            _ if id == 2 * num_inputs => Some(Token::Gate(GateKind::And)),
            _ if id == 2 * num_inputs + 1 => Some(Token::Gate(GateKind::Nand)),
            _ if id == 2 * num_inputs + 2 => Some(Token::Eos),
            _ => None,
        }
    }
}

pub fn vocab_size(num_inputs: usize) -> usize {
    2 * num_inputs + 3
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Lit(l) => write!(f, "{l}"),
            Token::Gate(k) => write!(f, "{k}"),
            Token::Eos => write!(f, "EOS"),
        }
    }
}

impl FromStr for Token {
    type Err = Error;

    fn from_str(s: &str) -> Result<Token> {
        match s {
            "AND" => Ok(Token::Gate(GateKind::And)),
            "NAND" => Ok(Token::Gate(GateKind::Nand)),
            "EOS" => Ok(Token::Eos),
            _ => {
                let (negated, rest) = match s.strip_prefix('!') {
                    Some(rest) => (true, rest),
                    None => (false, s),
                };
                let index = rest
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad token {s:?}")))?;
                Ok(Token::Lit(Literal::new(index, negated)))
            }
        }
    }
}

/// An ordered token string over the vocabulary of one circuit shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new(num_inputs: usize, num_outputs: usize, tokens: Vec<Token>) -> Self {
        TokenSequence {
            num_inputs,
            num_outputs,
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_text(num_inputs: usize, num_outputs: usize, text: &str) -> Result<Self> {
        let tokens = text
            .split_whitespace()
            .map(Token::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(TokenSequence::new(num_inputs, num_outputs, tokens))
    }
}

/// Preorder unfolding of a circuit: per output, gate token then left subtree
/// then right subtree; shared nodes are re-expanded on every visit. Constant
/// outputs have no token of their own and are spelled as a one-gate
/// contradiction or tautology over `x0`.
pub fn encode_dfs(circuit: &Circuit) -> TokenSequence {
    let mut tokens = Vec::new();
    for &out in circuit.outputs() {
        // Explicit stack; unfolded trees can get deep.
        let mut stack = vec![out];
        while let Some(r) = stack.pop() {
            match r {
                NodeRef::Leaf(l) => tokens.push(Token::Lit(l)),
                NodeRef::Const(b) => {
                    let kind = if b { GateKind::Nand } else { GateKind::And };
                    tokens.push(Token::Gate(kind));
                    tokens.push(Token::Lit(Literal::pos(0)));
                    tokens.push(Token::Lit(Literal::neg(0)));
                }
                NodeRef::Gate(id) => {
                    let g = &circuit.nodes()[id];
                    tokens.push(Token::Gate(g.kind));
                    stack.push(g.right);
                    stack.push(g.left);
                }
            }
        }
    }
    tokens.push(Token::Eos);
    TokenSequence::new(circuit.num_inputs(), circuit.num_outputs(), tokens)
}

/// What a single [`ParseState::advance`] did.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    /// Subtrees completed by this token that reused an existing node instead
    /// of materializing a new one.
    pub merges: usize,
    /// Outputs whose trees were closed by this token.
    pub outputs_completed: usize,
}

/// A gate whose operands are still being parsed. While a frame is on the
/// stack its left child is filled first; the in-progress child is the left
/// slot when `left` is `None` and the right slot otherwise.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub(crate) kind: GateKind,
    pub(crate) left: Option<NodeRef>,
}

/// Incremental parser over a token prefix. Tracks the partial forest, the
/// materialized nodes with their function tables, and the hash table used for
/// decode-time merging.
#[derive(Debug, Clone)]
pub struct ParseState {
    num_inputs: usize,
    num_outputs: usize,
    len: usize,
    stack: Vec<Frame>,
    completed: Vec<NodeRef>,
    nodes: Vec<Gate>,
    tables: Vec<Bits>,
    func_map: HashMap<Bits, usize>,
    terminated: bool,
}

impl ParseState {
    pub fn new(num_inputs: usize, num_outputs: usize) -> Self {
        assert!(num_inputs >= 1 && num_outputs >= 1);
        ParseState {
            num_inputs,
            num_outputs,
            len: 0,
            stack: Vec::new(),
            completed: Vec::new(),
            nodes: Vec::new(),
            tables: Vec::new(),
            func_map: HashMap::new(),
            terminated: false,
        }
    }

    pub fn from_tokens(seq: &TokenSequence) -> Result<Self> {
        let mut st = ParseState::new(seq.num_inputs, seq.num_outputs);
        for &t in &seq.tokens {
            st.advance(t)?;
        }
        Ok(st)
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    /// Tokens consumed so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unresolved operand or output slots; each needs at least one more token.
    pub fn pending_slots(&self) -> usize {
        let in_frames: usize = self
            .stack
            .iter()
            .map(|f| if f.left.is_none() { 2 } else { 1 })
            .sum();
        let started = !self.stack.is_empty() as usize;
        in_frames + self.num_outputs - self.completed.len() - started
    }

    /// All output trees closed (the end marker may still be missing).
    pub fn is_complete(&self) -> bool {
        self.completed.len() == self.num_outputs
    }

    /// End marker consumed.
    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub(crate) fn frames(&self) -> &[Frame] {
        &self.stack
    }

    pub(crate) fn completed_outputs(&self) -> &[NodeRef] {
        &self.completed
    }

    /// Function of a parsed ref over all patterns.
    pub(crate) fn ref_table(&self, r: NodeRef) -> Bits {
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
            NodeRef::Gate(id) => self.tables[id].clone(),
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.len,
            message: message.into(),
        }
    }

    pub fn advance(&mut self, token: Token) -> Result<StepInfo> {
        if self.terminated {
            return Err(self.err("token after end of sequence"));
        }
        let mut info = StepInfo::default();
        match token {
            Token::Eos => {
                if !self.is_complete() {
                    return Err(self.err("end of sequence before all outputs were closed"));
                }
                self.terminated = true;
            }
            _ if self.is_complete() => {
                return Err(self.err("expected end of sequence"));
            }
            Token::Gate(kind) => {
                self.stack.push(Frame { kind, left: None });
            }
            Token::Lit(l) => {
                if l.index >= self.num_inputs {
                    return Err(self.err(format!(
                        "literal {l} out of range for {} inputs",
                        self.num_inputs
                    )));
                }
                let mut r = NodeRef::Leaf(l);
                // Closing a slot can cascade: each filled right slot completes
                // its frame, which fills the slot above.
                loop {
                    match self.stack.last_mut() {
                        None => {
                            self.completed.push(r);
                            info.outputs_completed += 1;
                            break;
                        }
                        Some(frame) if frame.left.is_none() => {
                            frame.left = Some(r);
                            break;
                        }
                        Some(frame) => {
                            let kind = frame.kind;
                            let left = frame.left.take().expect("checked above");
                            self.stack.pop();
                            let (node_ref, merged) = self.materialize(kind, left, r);
                            info.merges += merged as usize;
                            r = node_ref;
                        }
                    }
                }
            }
        }
        self.len += 1;
        Ok(info)
    }

    /// Adds a completed gate unless a node with the same function already
    /// exists, in which case the existing node is reused.
    fn materialize(&mut self, kind: GateKind, left: NodeRef, right: NodeRef) -> (NodeRef, bool) {
        let l = self.ref_table(left);
        let r = self.ref_table(right);
        let t = match kind {
            GateKind::And => l.and(&r),
            GateKind::Nand => l.nand(&r),
        };
        if let Some(&id) = self.func_map.get(&t) {
            return (NodeRef::Gate(id), true);
        }
        let id = self.nodes.len();
        self.nodes.push(Gate { kind, left, right });
        self.func_map.insert(t.clone(), id);
        self.tables.push(t);
        (NodeRef::Gate(id), false)
    }

    /// The merged circuit; requires all output trees to be closed. Gates
    /// orphaned by merging are dropped.
    pub fn to_circuit(&self) -> Result<Circuit> {
        if !self.is_complete() {
            return Err(self.err("incomplete sequence"));
        }
        Circuit::new(
            self.num_inputs,
            self.nodes.clone(),
            self.completed.clone(),
        )
        .map(Circuit::drop_unreachable)
    }

    /// Exact per-output function; only meaningful once complete.
    pub fn truth_table(&self) -> Result<TruthTable> {
        if !self.is_complete() {
            return Err(self.err("incomplete sequence"));
        }
        let outputs = self.completed.iter().map(|&r| self.ref_table(r)).collect();
        TruthTable::new(self.num_inputs, outputs)
    }
}

/// Parses a complete, EOS-terminated sequence into the merged circuit.
pub fn decode_with_merge(seq: &TokenSequence) -> Result<Circuit> {
    let st = ParseState::from_tokens(seq)?;
    if !st.is_terminated() {
        return Err(Error::Parse {
            position: st.len(),
            message: if st.is_complete() {
                "missing end-of-sequence token".into()
            } else {
                "incomplete sequence".into()
            },
        });
    }
    st.to_circuit()
}

/// Parses a prefix (no EOS required) and reports its shape.
pub fn parse_state(prefix: &TokenSequence) -> Result<ParseState> {
    ParseState::from_tokens(prefix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    fn fig_unfold_circuit() -> Circuit {
        let x = |i| NodeRef::Leaf(Literal::pos(i));
        let and = |l, r| Gate {
            kind: GateKind::And,
            left: l,
            right: r,
        };
        Circuit::new(
            6,
            vec![
                and(x(2), x(4)),
                and(x(1), NodeRef::Gate(0)),
                and(NodeRef::Gate(0), x(5)),
            ],
            vec![NodeRef::Gate(1), NodeRef::Gate(2)],
        )
        .unwrap()
    }

    #[test]
    fn literal_output_encoding() {
        let c = Circuit::new(4, vec![], vec![NodeRef::Leaf(Literal::pos(3))]).unwrap();
        let seq = encode_dfs(&c);
        assert_eq!(
            seq.tokens,
            vec![Token::Lit(Literal::pos(3)), Token::Eos]
        );
    }

    #[test]
    fn shared_node_is_expanded_twice() {
        let seq = encode_dfs(&fig_unfold_circuit());
        assert_eq!(seq.to_text(), "AND x1 AND x2 x4 AND AND x2 x4 x5 EOS");
    }

    #[test]
    fn decode_merges_duplicate_subtrees() {
        let seq = encode_dfs(&fig_unfold_circuit());
        let c = decode_with_merge(&seq).unwrap();
        assert_eq!(c.gate_count(), 3);
        assert_eq!(c.truth_table(), fig_unfold_circuit().truth_table());
    }

    #[test]
    fn single_literal_decodes_to_zero_gates() {
        let seq = TokenSequence::new(2, 1, vec![Token::Lit(Literal::pos(0)), Token::Eos]);
        let c = decode_with_merge(&seq).unwrap();
        assert_eq!(c.gate_count(), 0);
    }

    #[test]
    fn truncated_sequence_reports_position() {
        let seq = TokenSequence::new(
            2,
            1,
            vec![Token::Gate(GateKind::And), Token::Lit(Literal::pos(0))],
        );
        match decode_with_merge(&seq) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn premature_eos_is_rejected() {
        let seq = TokenSequence::new(2, 1, vec![Token::Gate(GateKind::And), Token::Eos]);
        match decode_with_merge(&seq) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn pending_slot_accounting() {
        let st = parse_state(&TokenSequence::new(2, 3, vec![])).unwrap();
        assert_eq!(st.pending_slots(), 3);
        assert!(!st.is_complete());

        let st = parse_state(&TokenSequence::new(
            2,
            1,
            vec![Token::Gate(GateKind::And), Token::Lit(Literal::pos(0))],
        ))
        .unwrap();
        assert_eq!(st.pending_slots(), 1);
        assert!(!st.is_complete());

        let st = parse_state(&TokenSequence::new(
            2,
            1,
            vec![
                Token::Gate(GateKind::And),
                Token::Lit(Literal::pos(0)),
                Token::Lit(Literal::pos(1)),
            ],
        ))
        .unwrap();
        assert_eq!(st.pending_slots(), 0);
        assert!(st.is_complete());
    }

    #[test]
    fn round_trip_preserves_function() {
        for seed in 0..1000 {
            let c = Circuit::random(8, 2, 12, 40_000 + seed);
            let seq = encode_dfs(&c);
            let back = decode_with_merge(&seq).unwrap();
            assert_eq!(back.truth_table(), c.truth_table(), "seed {seed}");
        }
    }

    #[test]
    fn decode_compacts_to_merged_size() {
        for seed in 0..300 {
            let c = Circuit::random(8, 2, 15, 50_000 + seed);
            let seq = encode_dfs(&c);
            let back = decode_with_merge(&seq).unwrap();
            assert_eq!(
                back.gate_count(),
                c.structural_merge().gate_count(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn every_prefix_of_an_encoding_parses() {
        let c = Circuit::random(8, 2, 15, 123);
        let seq = encode_dfs(&c);
        for cut in 0..seq.len() {
            let prefix = TokenSequence::new(8, 2, seq.tokens[..cut].to_vec());
            parse_state(&prefix).unwrap_or_else(|e| panic!("prefix {cut}: {e}"));
        }
    }

    #[test]
    fn token_text_round_trip() {
        let c = Circuit::random(8, 2, 10, 7);
        let seq = encode_dfs(&c);
        let text = seq.to_text();
        let back = TokenSequence::from_text(8, 2, &text).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn token_ids_are_dense_and_invertible() {
        let n = 8;
        for id in 0..vocab_size(n) {
            let t = Token::from_id(id, n).unwrap();
            assert_eq!(t.id(n), id);
        }
        assert_eq!(Token::from_id(vocab_size(n), n), None);
    }
}
