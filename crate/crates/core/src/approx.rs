//! Three-valued partial evaluation, the error-tolerant feasibility check that
//! masks token candidates, and the exact error metrics.
//!
//! A partial circuit is evaluated over all input patterns with `U` standing in
//! for unresolved operand slots. Determined outputs never change when a `U`
//! resolves, so the fraction of definitely mismatching patterns is a sound
//! lower bound on the error of any completion; a candidate token is feasible
//! when that bound stays within the user's error bound and enough length
//! budget remains to close every open slot.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bits;
use crate::circuit::{GateKind, Literal, TruthTable};
use crate::codec::{ParseState, StepInfo, Token, TokenSequence};
use crate::error::{Error, Result};

/// Scalar three-valued logic; the bit-parallel form below is what everything
/// hot actually runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeValued {
    False,
    True,
    Unknown,
}

impl ThreeValued {
    pub fn and(self, other: ThreeValued) -> ThreeValued {
        use ThreeValued::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Unknown,
        }
    }

    pub fn not(self) -> ThreeValued {
        use ThreeValued::*;
        match self {
            False => True,
            True => False,
            Unknown => Unknown,
        }
    }

    pub fn nand(self, other: ThreeValued) -> ThreeValued {
        self.and(other).not()
    }
}

/// Bit-parallel three-valued vector: `value` is meaningful (and zero
/// elsewhere) only where `known` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TvBits {
    known: Bits,
    value: Bits,
}

impl TvBits {
    pub fn unknown(len: usize) -> Self {
        TvBits {
            known: Bits::zeros(len),
            value: Bits::zeros(len),
        }
    }

    pub fn determined(table: Bits) -> Self {
        TvBits {
            known: Bits::ones(table.len()),
            value: table,
        }
    }

    pub fn known(&self) -> &Bits {
        &self.known
    }

    pub fn value(&self) -> &Bits {
        &self.value
    }

    pub fn get(&self, p: usize) -> ThreeValued {
        if !self.known.get(p) {
            ThreeValued::Unknown
        } else if self.value.get(p) {
            ThreeValued::True
        } else {
            ThreeValued::False
        }
    }

    pub fn is_fully_known(&self) -> bool {
        self.known.count_ones() as usize == self.known.len()
    }

    /// `kind(a, b)` under three-valued semantics: a gate output is known when
    /// both operands are known or either operand is a known zero.
    pub fn gate(kind: GateKind, a: &TvBits, b: &TvBits) -> TvBits {
        let zero_a = a.known.and(&a.value.not());
        let zero_b = b.known.and(&b.value.not());
        let known = a.known.and(&b.known).or(&zero_a).or(&zero_b);
        let and_value = a.value.and(&b.value);
        match kind {
            GateKind::And => TvBits {
                known,
                value: and_value,
            },
            GateKind::Nand => {
                let value = and_value.not().and(&known);
                TvBits { known, value }
            }
        }
    }

    /// Patterns where this vector is determined and differs from `target`.
    pub fn mismatch_mask(&self, target: &Bits) -> Bits {
        self.known.and(&self.value.xor(target))
    }
}

/// User error bound, an exact rational in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorBound {
    num: u64,
    den: u64,
}

impl ErrorBound {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidArgument(format!(
                "error bound {num}/{den} outside [0, 1]"
            )));
        }
        let g = gcd(num, den);
        Ok(ErrorBound {
            num: num / g,
            den: den / g,
        })
    }

    pub fn zero() -> Self {
        ErrorBound { num: 0, den: 1 }
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Largest mismatch count within the bound over `patterns` patterns.
    pub fn max_mismatches(&self, patterns: u64) -> u64 {
        ((self.num as u128 * patterns as u128) / self.den as u128) as u64
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn as_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

impl PartialOrd for ErrorBound {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ErrorBound {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for ErrorBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Decimal when it terminates in a few digits, fraction otherwise.
        let mut den = self.den;
        let mut digits = 0u32;
        while den % 2 == 0 {
            den /= 2;
            digits += 1;
        }
        let mut fives = 0u32;
        while den % 5 == 0 {
            den /= 5;
            fives += 1;
        }
        digits = digits.max(fives);
        if den == 1 && digits <= 9 {
            let scaled = self.num as u128 * 10u128.pow(digits) / self.den as u128;
            if digits == 0 {
                write!(f, "{scaled}")
            } else {
                let s = format!("{scaled:0width$}", width = digits as usize + 1);
                let (int, frac) = s.split_at(s.len() - digits as usize);
                write!(f, "{int}.{frac}")
            }
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for ErrorBound {
    type Err = Error;

    /// Accepts decimals (`0.05`) and fractions (`1/20`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad error bound {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let num = n.trim().parse::<u64>().map_err(|_| bad())?;
            let den = d.trim().parse::<u64>().map_err(|_| bad())?;
            return ErrorBound::new(num, den);
        }
        let s = s.trim();
        match s.split_once('.') {
            None => {
                let int = s.parse::<u64>().map_err(|_| bad())?;
                ErrorBound::new(int, 1)
            }
            Some((int, frac)) => {
                if frac.len() > 18 || frac.chars().any(|c| !c.is_ascii_digit()) {
                    return Err(bad());
                }
                let int = if int.is_empty() {
                    0
                } else {
                    int.parse::<u64>().map_err(|_| bad())?
                };
                let frac_val = frac.parse::<u64>().map_err(|_| bad())?;
                let den = 10u64.pow(frac.len() as u32);
                let num = int
                    .checked_mul(den)
                    .and_then(|v| v.checked_add(frac_val))
                    .ok_or_else(bad)?;
                ErrorBound::new(num, den)
            }
        }
    }
}

impl Serialize for ErrorBound {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ErrorBound {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// How a [`PartialEval`] covers the pattern space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalMode {
    Exhaustive,
    /// Patterns drawn uniformly with replacement.
    Sampled { seed: u64, patterns: Vec<u32> },
}

/// Per-output three-valued evaluation of a partial circuit.
#[derive(Debug, Clone)]
pub struct PartialEval {
    num_inputs: usize,
    mode: EvalMode,
    outputs: Vec<TvBits>,
}

impl PartialEval {
    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn mode(&self) -> &EvalMode {
        &self.mode
    }

    pub fn output(&self, j: usize) -> &TvBits {
        &self.outputs[j]
    }

    /// Positions covered: `2^N` exhaustive, `K` sampled.
    pub fn coverage(&self) -> usize {
        match &self.mode {
            EvalMode::Exhaustive => 1usize << self.num_inputs,
            EvalMode::Sampled { patterns, .. } => patterns.len(),
        }
    }

    /// Restriction to `k` patterns drawn with replacement.
    pub fn subsample(&self, k: usize, seed: u64) -> PartialEval {
        assert!(matches!(self.mode, EvalMode::Exhaustive));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1usize << self.num_inputs;
        let patterns: Vec<u32> = (0..k).map(|_| rng.random_range(0..n) as u32).collect();
        let outputs = self
            .outputs
            .iter()
            .map(|tv| TvBits {
                known: Bits::from_fn(k, |i| tv.known.get(patterns[i] as usize)),
                value: Bits::from_fn(k, |i| tv.value.get(patterns[i] as usize)),
            })
            .collect();
        PartialEval {
            num_inputs: self.num_inputs,
            mode: EvalMode::Sampled { seed, patterns },
            outputs,
        }
    }
}

/// Folds the open frame stack above `tv` up to the in-progress output root.
fn fold_frames(state: &ParseState, mut tv: TvBits) -> TvBits {
    let len = 1usize << state.num_inputs();
    for frame in state.frames().iter().rev() {
        tv = match frame.left {
            None => TvBits::gate(frame.kind, &tv, &TvBits::unknown(len)),
            Some(r) => TvBits::gate(frame.kind, &TvBits::determined(state.ref_table(r)), &tv),
        };
    }
    tv
}

/// Three-valued evaluation of the partial forest over every pattern: closed
/// outputs are fully determined, the in-progress output is folded with `U` in
/// its pending slot, outputs not yet started are entirely `U`.
pub fn eval_partial(state: &ParseState) -> PartialEval {
    let len = 1usize << state.num_inputs();
    let mut outputs: Vec<TvBits> = state
        .completed_outputs()
        .iter()
        .map(|&r| TvBits::determined(state.ref_table(r)))
        .collect();
    if !state.is_complete() {
        outputs.push(fold_frames(state, TvBits::unknown(len)));
        while outputs.len() < state.num_outputs() {
            outputs.push(TvBits::unknown(len));
        }
    }
    PartialEval {
        num_inputs: state.num_inputs(),
        mode: EvalMode::Exhaustive,
        outputs,
    }
}

/// Fraction of covered patterns on which some output is determined and
/// differs from the target; a lower bound on the error of any completion.
pub fn definite_mismatch_fraction(pe: &PartialEval, target: &TruthTable) -> Result<BigRational> {
    if pe.num_inputs != target.num_inputs() || pe.num_outputs() != target.num_outputs() {
        return Err(Error::DimensionMismatch(format!(
            "partial eval is {}x{}, target is {}x{}",
            pe.num_inputs,
            pe.num_outputs(),
            target.num_inputs(),
            target.num_outputs()
        )));
    }
    let cover = pe.coverage();
    let mut mask = Bits::zeros(cover);
    for (j, tv) in pe.outputs.iter().enumerate() {
        let target_bits = match &pe.mode {
            EvalMode::Exhaustive => target.output_bits(j).clone(),
            EvalMode::Sampled { patterns, .. } => {
                Bits::from_fn(cover, |i| target.get(j, patterns[i] as usize))
            }
        };
        mask.or_assign(&tv.mismatch_mask(&target_bits));
    }
    Ok(BigRational::new(
        BigInt::from(mask.count_ones()),
        BigInt::from(cover as u64),
    ))
}

/// Zero-error validation of a prefix: true iff the partial circuit has no
/// definite mismatch against the target.
pub fn validate_exact(prefix: &TokenSequence, target: &TruthTable) -> Result<bool> {
    let state = ParseState::from_tokens(prefix)?;
    let pe = eval_partial(&state);
    Ok(definite_mismatch_fraction(&pe, target)?
        .numer()
        .clone()
        == BigInt::from(0))
}

/// Incremental feasibility oracle over a growing prefix. Keeps the definite
/// mismatch mask of closed outputs and scores each candidate literal by
/// folding it through the open frames, so one candidate check costs
/// O(depth · words).
#[derive(Debug, Clone)]
pub struct PrefixEvaluator {
    state: ParseState,
    target: Arc<TruthTable>,
    bound: ErrorBound,
    max_mismatches: u64,
    length_budget: usize,
    lit_tables: Vec<Bits>,
    done_mask: Bits,
    mismatches: u64,
}

impl PrefixEvaluator {
    pub fn new(
        target: Arc<TruthTable>,
        bound: ErrorBound,
        length_budget: usize,
    ) -> PrefixEvaluator {
        let n = target.num_inputs();
        let m = target.num_outputs();
        let mut lit_tables = Vec::with_capacity(2 * n);
        for i in 0..n {
            let b = Bits::input_pattern(n, i);
            lit_tables.push(b.clone());
            lit_tables.push(b.not());
        }
        PrefixEvaluator {
            state: ParseState::new(n, m),
            target,
            bound,
            max_mismatches: bound.max_mismatches(1u64 << n),
            length_budget,
            lit_tables,
            done_mask: Bits::zeros(1usize << n),
            mismatches: 0,
        }
    }

    pub fn from_prefix(
        prefix: &TokenSequence,
        target: Arc<TruthTable>,
        bound: ErrorBound,
        length_budget: usize,
    ) -> Result<PrefixEvaluator> {
        let mut ev = PrefixEvaluator::new(target, bound, length_budget);
        for &t in &prefix.tokens {
            ev.advance(t)?;
        }
        Ok(ev)
    }

    pub fn state(&self) -> &ParseState {
        &self.state
    }

    pub fn target(&self) -> &TruthTable {
        &self.target
    }

    pub fn bound(&self) -> ErrorBound {
        self.bound
    }

    pub fn length_budget(&self) -> usize {
        self.length_budget
    }

    /// Definite mismatches of the current prefix (pending slots as `U`).
    pub fn mismatch_count(&self) -> u64 {
        self.mismatches
    }

    pub fn mismatch_fraction(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.mismatches),
            BigInt::from(1u64 << self.target.num_inputs()),
        )
    }

    pub fn within_bound(&self) -> bool {
        self.mismatches <= self.max_mismatches
    }

    fn lit_table(&self, l: Literal) -> &Bits {
        &self.lit_tables[2 * l.index + l.negated as usize]
    }

    /// Mismatch count if `lit` filled the next pending slot.
    pub fn candidate_mismatches(&self, lit: Literal) -> u64 {
        let mut tv = TvBits::determined(self.lit_table(lit).clone());
        tv = fold_frames(&self.state, tv);
        let j = self.state.completed_outputs().len();
        let mismatch = tv.mismatch_mask(self.target.output_bits(j));
        self.done_mask.or(&mismatch).count_ones()
    }

    fn budget_allows(&self, token: Token) -> bool {
        let pending_after = match token {
            Token::Gate(_) => self.state.pending_slots() + 1,
            _ => self.state.pending_slots() - 1,
        };
        // tokens so far + this token + one per open slot + the end marker
        self.state.len() + 1 + pending_after + 1 <= self.length_budget
    }

    /// Error-tolerant candidate set: every non-EOS token whose resulting
    /// definite mismatch stays within the bound and that leaves enough budget
    /// to close all open slots. Empty on a dead end; the caller backtracks.
    pub fn feasible(&self) -> Vec<Token> {
        debug_assert!(!self.state.is_complete());
        let n = self.target.num_inputs();
        let mut out = Vec::new();
        for i in 0..n {
            for negated in [false, true] {
                let lit = Literal::new(i, negated);
                let tok = Token::Lit(lit);
                if self.budget_allows(tok)
                    && self.candidate_mismatches(lit) <= self.max_mismatches
                {
                    out.push(tok);
                }
            }
        }
        // Gate tokens leave every covered pattern's status unchanged.
        for kind in [GateKind::And, GateKind::Nand] {
            let tok = Token::Gate(kind);
            if self.budget_allows(tok) && self.mismatches <= self.max_mismatches {
                out.push(tok);
            }
        }
        out.sort_by_key(|t| t.id(n));
        out
    }

    pub fn advance(&mut self, token: Token) -> Result<StepInfo> {
        let before = self.state.completed_outputs().len();
        let info = self.state.advance(token)?;
        if info.outputs_completed > 0 {
            for j in before..before + info.outputs_completed {
                let table = self.state.ref_table(self.state.completed_outputs()[j]);
                self.done_mask
                    .or_assign(&table.xor(self.target.output_bits(j)));
            }
        }
        self.recount();
        Ok(info)
    }

    fn recount(&mut self) {
        let mut total = self.done_mask.clone();
        if !self.state.is_complete() {
            let len = 1usize << self.state.num_inputs();
            let tv = fold_frames(&self.state, TvBits::unknown(len));
            let j = self.state.completed_outputs().len();
            total.or_assign(&tv.mismatch_mask(self.target.output_bits(j)));
        }
        self.mismatches = total.count_ones();
    }
}

/// Error-tolerant candidate set for an explicit prefix; the incremental
/// [`PrefixEvaluator`] is the cheap path during generation.
pub fn feasible_tokens(
    prefix: &TokenSequence,
    target: &TruthTable,
    bound: ErrorBound,
    length_budget: usize,
) -> Result<Vec<Token>> {
    let ev = PrefixEvaluator::from_prefix(
        prefix,
        Arc::new(target.clone()),
        bound,
        length_budget,
    )?;
    if ev.state().is_complete() {
        return Err(Error::InvalidArgument(
            "feasible_tokens requires an incomplete prefix".into(),
        ));
    }
    Ok(ev.feasible())
}

fn check_dims(g: &TruthTable, f: &TruthTable) -> Result<()> {
    if g.num_inputs() != f.num_inputs() || g.num_outputs() != f.num_outputs() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            g.num_inputs(),
            g.num_outputs(),
            f.num_inputs(),
            f.num_outputs()
        )));
    }
    Ok(())
}

/// Fraction of input patterns on which any output bit differs.
pub fn error_rate(g: &TruthTable, f: &TruthTable) -> Result<BigRational> {
    check_dims(g, f)?;
    let mut mask = Bits::zeros(g.num_patterns());
    for j in 0..g.num_outputs() {
        mask.or_assign(&g.output_bits(j).xor(f.output_bits(j)));
    }
    Ok(BigRational::new(
        BigInt::from(mask.count_ones()),
        BigInt::from(g.num_patterns() as u64),
    ))
}

/// Per-bit variant: mean over outputs of each output's mismatch fraction.
pub fn error_rate_per_bit(g: &TruthTable, f: &TruthTable) -> Result<BigRational> {
    check_dims(g, f)?;
    let total: u64 = (0..g.num_outputs())
        .map(|j| g.output_bits(j).xor(f.output_bits(j)).count_ones())
        .sum();
    Ok(BigRational::new(
        BigInt::from(total),
        BigInt::from((g.num_patterns() * g.num_outputs()) as u64),
    ))
}

/// Mean relative error distance with outputs read as unsigned integers; the
/// denominator saturates at 1 to avoid division by zero.
pub fn mred(g: &TruthTable, f: &TruthTable) -> Result<BigRational> {
    check_dims(g, f)?;
    let mut sum = BigRational::from(BigInt::from(0));
    for p in 0..g.num_patterns() {
        let gv = g.value_at(p) as i64;
        let fv = f.value_at(p) as i64;
        let denom = fv.abs().max(1);
        sum += BigRational::new(BigInt::from((gv - fv).abs()), BigInt::from(denom));
    }
    Ok(sum / BigRational::from(BigInt::from(g.num_patterns() as u64)))
}

/// Mean squared error with outputs read as unsigned integers.
pub fn mse(g: &TruthTable, f: &TruthTable) -> Result<BigRational> {
    check_dims(g, f)?;
    let mut sum = BigInt::from(0);
    for p in 0..g.num_patterns() {
        let d = g.value_at(p) as i64 - f.value_at(p) as i64;
        sum += BigInt::from(d * d);
    }
    Ok(BigRational::new(
        sum,
        BigInt::from(g.num_patterns() as u64),
    ))
}

/// Sampling configuration for [`sampled_error`].
#[derive(Debug, Clone, Copy)]
pub struct SampleCfg {
    pub samples: usize,
    pub delta: f64,
    pub seed: u64,
    /// Enumerate every pattern instead of drawing; the estimate is then exact.
    pub exhaustive: bool,
}

/// Definite-mismatch estimate over sampled patterns plus the two-sided
/// Hoeffding half width `sqrt(ln(2/delta) / (2K))`.
pub fn sampled_error(
    pe: &PartialEval,
    f: &TruthTable,
    cfg: &SampleCfg,
) -> Result<(BigRational, f64)> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let half_width = (f64::ln(2.0 / cfg.delta) / (2.0 * cfg.samples as f64)).sqrt();
    let estimate = if cfg.exhaustive {
        definite_mismatch_fraction(pe, f)?
    } else {
        let sub = pe.subsample(cfg.samples, cfg.seed);
        definite_mismatch_fraction(&sub, f)?
    };
    Ok((estimate, half_width))
}
