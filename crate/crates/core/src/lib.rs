//! Approximate logic synthesis by token-by-token circuit generation.
//!
//! Circuits over two-input AND/NAND gates are encoded as prefix-order token
//! sequences. Generation is constrained by an error-tolerant mask: a token
//! survives only if the partially built circuit can still meet the user's
//! error bound. A small encoder-decoder sequence model supplies priors, a
//! PUCT-guided tree search picks tokens, and sweeping the bound yields a
//! size/error Pareto front.

pub mod approx;
pub mod bits;
pub mod circuit;
pub mod codec;
pub mod error;
pub mod oracle;
pub mod textio;

pub use approx::{ErrorBound, PrefixEvaluator};
pub use circuit::{Circuit, Gate, GateKind, Literal, NodeRef, TruthTable};
pub use codec::{decode_with_merge, encode_dfs, ParseState, Token, TokenSequence};
pub use error::{Error, Result};
