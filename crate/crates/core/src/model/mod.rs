//! Small encoder-decoder sequence model with hand-derived gradients.
//!
//! The encoder reads an error-bound bucket token followed by the source
//! circuit's tokens; the causally masked decoder emits the approximate
//! circuit token by token. All math is plain f64 on the CPU.

mod checkpoint;
mod loss;
mod net;
mod optim;
mod sample;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::{ce_loss_and_grad, rl_loss_and_grad, token_accuracy, total_loss, Episode, SeqExample};
pub use net::{decode_next_logits, forward_logits, EncodedSource};
pub use optim::{AdamW, AdamWConfig};
pub use sample::{masked_distribution, sample_token, SampleMode};
pub use tensor::Mat;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub d_ff: usize,
    /// Base token vocabulary (literals, two gates, EOS).
    pub vocab_size: usize,
    pub max_len: usize,
    /// Discrete error bounds the encoder can be conditioned on.
    pub epsilon_buckets: Vec<f64>,
}

impl ModelConfig {
    /// Desk-scale defaults for circuits with `num_inputs` inputs.
    pub fn small(num_inputs: usize) -> ModelConfig {
        ModelConfig {
            d_model: 64,
            n_heads: 4,
            n_enc_layers: 2,
            n_dec_layers: 2,
            d_ff: 256,
            vocab_size: crate::codec::vocab_size(num_inputs),
            max_len: crate::codec::DEFAULT_MAX_LEN,
            epsilon_buckets: vec![0.0, 0.01, 0.05, 0.10],
        }
    }

    /// Tiny configuration for gradient checks.
    pub fn micro(num_inputs: usize) -> ModelConfig {
        ModelConfig {
            d_model: 8,
            n_heads: 2,
            n_enc_layers: 1,
            n_dec_layers: 1,
            d_ff: 16,
            vocab_size: crate::codec::vocab_size(num_inputs),
            max_len: 32,
            epsilon_buckets: vec![0.0, 0.01, 0.05, 0.10],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.d_model % self.n_heads != 0 {
            return Err(Error::InvalidArgument(format!(
                "d_model {} must be divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.vocab_size < 4 || self.max_len == 0 || self.epsilon_buckets.is_empty() {
            return Err(Error::InvalidArgument("degenerate model config".into()));
        }
        Ok(())
    }

    /// Nearest conditioning bucket for a bound; ties go to the lower index.
    pub fn bucket_index(&self, epsilon: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &b) in self.epsilon_buckets.iter().enumerate() {
            let d = (b - epsilon).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Encoder embedding rows: base vocabulary plus the bucket tokens.
    pub fn enc_vocab(&self) -> usize {
        self.vocab_size + self.epsilon_buckets.len()
    }

    /// Decoder embedding rows: base vocabulary plus the start token.
    pub fn dec_vocab(&self) -> usize {
        self.vocab_size + 1
    }

    pub fn bos_id(&self) -> usize {
        self.vocab_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerNorm {
    fn new(d: usize) -> LayerNorm {
        LayerNorm {
            gain: vec![1.0; d],
            bias: vec![0.0; d],
        }
    }

    fn zeros(d: usize) -> LayerNorm {
        LayerNorm {
            gain: vec![0.0; d],
            bias: vec![0.0; d],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub wq: Mat,
    pub bq: Vec<f64>,
    pub wk: Mat,
    pub bk: Vec<f64>,
    pub wv: Mat,
    pub bv: Vec<f64>,
    pub wo: Mat,
    pub bo: Vec<f64>,
}

impl Attention {
    fn init(rng: &mut ChaCha8Rng, d: usize, std: f64) -> Attention {
        Attention {
            wq: Mat::randn(rng, d, d, std),
            bq: vec![0.0; d],
            wk: Mat::randn(rng, d, d, std),
            bk: vec![0.0; d],
            wv: Mat::randn(rng, d, d, std),
            bv: vec![0.0; d],
            wo: Mat::randn(rng, d, d, std),
            bo: vec![0.0; d],
        }
    }

    fn zeros(d: usize) -> Attention {
        Attention {
            wq: Mat::zeros(d, d),
            bq: vec![0.0; d],
            wk: Mat::zeros(d, d),
            bk: vec![0.0; d],
            wv: Mat::zeros(d, d),
            bv: vec![0.0; d],
            wo: Mat::zeros(d, d),
            bo: vec![0.0; d],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

impl FeedForward {
    fn init(rng: &mut ChaCha8Rng, d: usize, d_ff: usize, std: f64) -> FeedForward {
        FeedForward {
            w1: Mat::randn(rng, d, d_ff, std),
            b1: vec![0.0; d_ff],
            w2: Mat::randn(rng, d_ff, d, std),
            b2: vec![0.0; d],
        }
    }

    fn zeros(d: usize, d_ff: usize) -> FeedForward {
        FeedForward {
            w1: Mat::zeros(d, d_ff),
            b1: vec![0.0; d_ff],
            w2: Mat::zeros(d_ff, d),
            b2: vec![0.0; d],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub ln1: LayerNorm,
    pub attn: Attention,
    pub ln2: LayerNorm,
    pub ffn: FeedForward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderLayer {
    pub ln1: LayerNorm,
    pub self_attn: Attention,
    pub ln2: LayerNorm,
    pub cross_attn: Attention,
    pub ln3: LayerNorm,
    pub ffn: FeedForward,
}

/// All trainable tensors, in a fixed declared order (see `visit`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub cfg: ModelConfig,
    pub enc_tok_emb: Mat,
    pub enc_pos_emb: Mat,
    pub dec_tok_emb: Mat,
    pub dec_pos_emb: Mat,
    pub enc_layers: Vec<EncoderLayer>,
    pub dec_layers: Vec<DecoderLayer>,
    pub enc_final_ln: LayerNorm,
    pub dec_final_ln: LayerNorm,
    pub head_w: Mat,
    pub head_b: Vec<f64>,
}

impl ModelParams {
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<ModelParams> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = cfg.d_model;
        let std = 0.02;
        let pos_rows = cfg.max_len + 1;
        Ok(ModelParams {
            cfg: cfg.clone(),
            enc_tok_emb: Mat::randn(&mut rng, cfg.enc_vocab(), d, std),
            enc_pos_emb: Mat::randn(&mut rng, pos_rows, d, std),
            dec_tok_emb: Mat::randn(&mut rng, cfg.dec_vocab(), d, std),
            dec_pos_emb: Mat::randn(&mut rng, pos_rows, d, std),
            enc_layers: (0..cfg.n_enc_layers)
                .map(|_| EncoderLayer {
                    ln1: LayerNorm::new(d),
                    attn: Attention::init(&mut rng, d, std),
                    ln2: LayerNorm::new(d),
                    ffn: FeedForward::init(&mut rng, d, cfg.d_ff, std),
                })
                .collect(),
            dec_layers: (0..cfg.n_dec_layers)
                .map(|_| DecoderLayer {
                    ln1: LayerNorm::new(d),
                    self_attn: Attention::init(&mut rng, d, std),
                    ln2: LayerNorm::new(d),
                    cross_attn: Attention::init(&mut rng, d, std),
                    ln3: LayerNorm::new(d),
                    ffn: FeedForward::init(&mut rng, d, cfg.d_ff, std),
                })
                .collect(),
            enc_final_ln: LayerNorm::new(d),
            dec_final_ln: LayerNorm::new(d),
            head_w: Mat::randn(&mut rng, d, cfg.vocab_size, std),
            head_b: vec![0.0; cfg.vocab_size],
        })
    }

    /// Same shapes, all zeros; gradient and moment buffers.
    pub fn zeros_like(&self) -> ModelParams {
        let cfg = &self.cfg;
        let d = cfg.d_model;
        ModelParams {
            cfg: cfg.clone(),
            enc_tok_emb: Mat::zeros(cfg.enc_vocab(), d),
            enc_pos_emb: Mat::zeros(cfg.max_len + 1, d),
            dec_tok_emb: Mat::zeros(cfg.dec_vocab(), d),
            dec_pos_emb: Mat::zeros(cfg.max_len + 1, d),
            enc_layers: (0..cfg.n_enc_layers)
                .map(|_| EncoderLayer {
                    ln1: LayerNorm::zeros(d),
                    attn: Attention::zeros(d),
                    ln2: LayerNorm::zeros(d),
                    ffn: FeedForward::zeros(d, cfg.d_ff),
                })
                .collect(),
            dec_layers: (0..cfg.n_dec_layers)
                .map(|_| DecoderLayer {
                    ln1: LayerNorm::zeros(d),
                    self_attn: Attention::zeros(d),
                    ln2: LayerNorm::zeros(d),
                    cross_attn: Attention::zeros(d),
                    ln3: LayerNorm::zeros(d),
                    ffn: FeedForward::zeros(d, cfg.d_ff),
                })
                .collect(),
            enc_final_ln: LayerNorm::zeros(d),
            dec_final_ln: LayerNorm::zeros(d),
            head_w: Mat::zeros(d, cfg.vocab_size),
            head_b: vec![0.0; cfg.vocab_size],
        }
    }

    /// Flat views of every tensor in declared order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> = vec![
            ("enc_tok_emb", &self.enc_tok_emb.data),
            ("enc_pos_emb", &self.enc_pos_emb.data),
            ("dec_tok_emb", &self.dec_tok_emb.data),
            ("dec_pos_emb", &self.dec_pos_emb.data),
        ];
        for l in &self.enc_layers {
            out.extend([
                ("enc.ln1.gain", l.ln1.gain.as_slice()),
                ("enc.ln1.bias", l.ln1.bias.as_slice()),
                ("enc.attn.wq", l.attn.wq.data.as_slice()),
                ("enc.attn.bq", l.attn.bq.as_slice()),
                ("enc.attn.wk", l.attn.wk.data.as_slice()),
                ("enc.attn.bk", l.attn.bk.as_slice()),
                ("enc.attn.wv", l.attn.wv.data.as_slice()),
                ("enc.attn.bv", l.attn.bv.as_slice()),
                ("enc.attn.wo", l.attn.wo.data.as_slice()),
                ("enc.attn.bo", l.attn.bo.as_slice()),
                ("enc.ln2.gain", l.ln2.gain.as_slice()),
                ("enc.ln2.bias", l.ln2.bias.as_slice()),
                ("enc.ffn.w1", l.ffn.w1.data.as_slice()),
                ("enc.ffn.b1", l.ffn.b1.as_slice()),
                ("enc.ffn.w2", l.ffn.w2.data.as_slice()),
                ("enc.ffn.b2", l.ffn.b2.as_slice()),
            ]);
        }
        for l in &self.dec_layers {
            out.extend([
                ("dec.ln1.gain", l.ln1.gain.as_slice()),
                ("dec.ln1.bias", l.ln1.bias.as_slice()),
                ("dec.self.wq", l.self_attn.wq.data.as_slice()),
                ("dec.self.bq", l.self_attn.bq.as_slice()),
                ("dec.self.wk", l.self_attn.wk.data.as_slice()),
                ("dec.self.bk", l.self_attn.bk.as_slice()),
                ("dec.self.wv", l.self_attn.wv.data.as_slice()),
                ("dec.self.bv", l.self_attn.bv.as_slice()),
                ("dec.self.wo", l.self_attn.wo.data.as_slice()),
                ("dec.self.bo", l.self_attn.bo.as_slice()),
                ("dec.ln2.gain", l.ln2.gain.as_slice()),
                ("dec.ln2.bias", l.ln2.bias.as_slice()),
                ("dec.cross.wq", l.cross_attn.wq.data.as_slice()),
                ("dec.cross.bq", l.cross_attn.bq.as_slice()),
                ("dec.cross.wk", l.cross_attn.wk.data.as_slice()),
                ("dec.cross.bk", l.cross_attn.bk.as_slice()),
                ("dec.cross.wv", l.cross_attn.wv.data.as_slice()),
                ("dec.cross.bv", l.cross_attn.bv.as_slice()),
                ("dec.cross.wo", l.cross_attn.wo.data.as_slice()),
                ("dec.cross.bo", l.cross_attn.bo.as_slice()),
                ("dec.ln3.gain", l.ln3.gain.as_slice()),
                ("dec.ln3.bias", l.ln3.bias.as_slice()),
                ("dec.ffn.w1", l.ffn.w1.data.as_slice()),
                ("dec.ffn.b1", l.ffn.b1.as_slice()),
                ("dec.ffn.w2", l.ffn.w2.data.as_slice()),
                ("dec.ffn.b2", l.ffn.b2.as_slice()),
            ]);
        }
        out.extend([
            ("enc_final_ln.gain", self.enc_final_ln.gain.as_slice()),
            ("enc_final_ln.bias", self.enc_final_ln.bias.as_slice()),
            ("dec_final_ln.gain", self.dec_final_ln.gain.as_slice()),
            ("dec_final_ln.bias", self.dec_final_ln.bias.as_slice()),
            ("head_w", self.head_w.data.as_slice()),
            ("head_b", self.head_b.as_slice()),
        ]);
        out
    }

    /// Mutable flat views in the same declared order as [`Self::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = vec![
            &mut self.enc_tok_emb.data,
            &mut self.enc_pos_emb.data,
            &mut self.dec_tok_emb.data,
            &mut self.dec_pos_emb.data,
        ];
        for l in &mut self.enc_layers {
            out.extend([
                &mut l.ln1.gain,
                &mut l.ln1.bias,
                &mut l.attn.wq.data,
                &mut l.attn.bq,
                &mut l.attn.wk.data,
                &mut l.attn.bk,
                &mut l.attn.wv.data,
                &mut l.attn.bv,
                &mut l.attn.wo.data,
                &mut l.attn.bo,
                &mut l.ln2.gain,
                &mut l.ln2.bias,
                &mut l.ffn.w1.data,
                &mut l.ffn.b1,
                &mut l.ffn.w2.data,
                &mut l.ffn.b2,
            ]);
        }
        for l in &mut self.dec_layers {
            out.extend([
                &mut l.ln1.gain,
                &mut l.ln1.bias,
                &mut l.self_attn.wq.data,
                &mut l.self_attn.bq,
                &mut l.self_attn.wk.data,
                &mut l.self_attn.bk,
                &mut l.self_attn.wv.data,
                &mut l.self_attn.bv,
                &mut l.self_attn.wo.data,
                &mut l.self_attn.bo,
                &mut l.ln2.gain,
                &mut l.ln2.bias,
                &mut l.cross_attn.wq.data,
                &mut l.cross_attn.bq,
                &mut l.cross_attn.wk.data,
                &mut l.cross_attn.bk,
                &mut l.cross_attn.wv.data,
                &mut l.cross_attn.bv,
                &mut l.cross_attn.wo.data,
                &mut l.cross_attn.bo,
                &mut l.ln3.gain,
                &mut l.ln3.bias,
                &mut l.ffn.w1.data,
                &mut l.ffn.b1,
                &mut l.ffn.w2.data,
                &mut l.ffn.b2,
            ]);
        }
        out.extend([
            &mut self.enc_final_ln.gain,
            &mut self.enc_final_ln.bias,
            &mut self.dec_final_ln.gain,
            &mut self.dec_final_ln.bias,
            &mut self.head_w.data,
            &mut self.head_b,
        ]);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        let theirs = other.tensors();
        for (mine, (_, t)) in self.tensors_mut().into_iter().zip(theirs) {
            for (a, b) in mine.iter_mut().zip(t.iter()) {
                *a += scale * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_views_align() {
        let cfg = ModelConfig::micro(2);
        let mut p = ModelParams::init(&cfg, 0).unwrap();
        let names: Vec<_> = p.tensors().iter().map(|(n, t)| (*n, t.len())).collect();
        let muts: Vec<usize> = p.tensors_mut().iter().map(|t| t.len()).collect();
        assert_eq!(
            names.iter().map(|(_, l)| *l).collect::<Vec<_>>(),
            muts
        );
        assert!(p.num_parameters() > 1000);
        assert!(p.all_finite());
    }

    #[test]
    fn bucket_lookup_is_nearest() {
        let cfg = ModelConfig::small(8);
        assert_eq!(cfg.bucket_index(0.0), 0);
        assert_eq!(cfg.bucket_index(0.011), 1);
        assert_eq!(cfg.bucket_index(0.2), 3);
        assert_eq!(cfg.bucket_index(0.03), 1); // ties toward the lower index
    }

    #[test]
    fn add_scaled_accumulates() {
        let cfg = ModelConfig::micro(2);
        let p = ModelParams::init(&cfg, 1).unwrap();
        let mut acc = p.zeros_like();
        acc.add_scaled(&p, 2.0);
        assert_eq!(acc.head_w.at(0, 0), 2.0 * p.head_w.at(0, 0));
    }
}
