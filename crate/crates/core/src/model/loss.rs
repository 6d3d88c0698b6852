//! Supervised and policy-gradient losses with analytic gradients.

use crate::error::{Error, Result};
use crate::model::net::{
    backward_example, decoder_input_ids, encoder_ids, forward_example,
};
use crate::model::sample::masked_distribution;
use crate::model::tensor::Mat;
use crate::model::ModelParams;

/// One supervised pair in model-id space (base vocabulary, EOS included in
/// `tgt`).
#[derive(Debug, Clone)]
pub struct SeqExample {
    pub src: Vec<usize>,
    pub bucket: usize,
    pub tgt: Vec<usize>,
}

/// One sampled generation episode: per step the feasible ids, the chosen id
/// and the immediate reward.
#[derive(Debug, Clone)]
pub struct Episode {
    pub src: Vec<usize>,
    pub bucket: usize,
    pub actions: Vec<usize>,
    pub feasible: Vec<Vec<usize>>,
    pub rewards: Vec<f64>,
}

impl Episode {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Sum over positions of cross entropy against the ground-truth tokens,
/// averaged over the batch. Teacher forcing: position `t` sees the first `t`
/// ground-truth tokens.
pub fn ce_loss_and_grad(
    params: &ModelParams,
    batch: &[SeqExample],
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let inv_b = 1.0 / batch.len() as f64;
    for ex in batch {
        let enc_ids = encoder_ids(params, &ex.src, ex.bucket);
        let dec_ids = decoder_input_ids(params, &ex.tgt[..ex.tgt.len() - 1]);
        let (logits, cache) = forward_example(params, &enc_ids, &dec_ids)?;
        let mut dlogits = Mat::zeros(logits.rows, logits.cols);
        for (t, &want) in ex.tgt.iter().enumerate() {
            let p = softmax_row(logits.row(t));
            loss += -p[want].max(1e-300).ln() * inv_b;
            for (j, pj) in p.iter().enumerate() {
                *dlogits.at_mut(t, j) = (pj - (j == want) as usize as f64) * inv_b;
            }
        }
        backward_example(params, &mut grads, &cache, &dlogits);
    }
    Ok((loss, grads))
}

/// Fraction of target tokens recovered by the greedy teacher-forced argmax.
pub fn token_accuracy(params: &ModelParams, batch: &[SeqExample]) -> Result<f64> {
    let mut hit = 0usize;
    let mut total = 0usize;
    for ex in batch {
        let enc_ids = encoder_ids(params, &ex.src, ex.bucket);
        let dec_ids = decoder_input_ids(params, &ex.tgt[..ex.tgt.len() - 1]);
        let (logits, _) = forward_example(params, &enc_ids, &dec_ids)?;
        for (t, &want) in ex.tgt.iter().enumerate() {
            let row = logits.row(t);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(j, _)| j)
                .unwrap();
            hit += (argmax == want) as usize;
            total += 1;
        }
    }
    Ok(hit as f64 / total.max(1) as f64)
}

/// REINFORCE surrogate over fixed episodes: each step's masked log
/// probability is weighted by the undiscounted suffix return minus a
/// leave-one-out mean baseline (zero for a single episode). The gradient is
/// exact for the surrogate with episodes held fixed.
pub fn rl_loss_and_grad(
    params: &ModelParams,
    episodes: &[Episode],
) -> Result<(f64, ModelParams)> {
    if episodes.is_empty() {
        return Err(Error::InvalidArgument("no episodes".into()));
    }
    let totals: Vec<f64> = episodes.iter().map(Episode::total_reward).collect();
    let sum: f64 = totals.iter().sum();
    let b = episodes.len();
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let inv_b = 1.0 / b as f64;
    for (e, ep) in episodes.iter().enumerate() {
        let baseline = if b > 1 {
            (sum - totals[e]) / (b - 1) as f64
        } else {
            0.0
        };
        // Suffix returns.
        let mut returns = vec![0.0; ep.actions.len()];
        let mut acc = 0.0;
        for t in (0..ep.actions.len()).rev() {
            acc += ep.rewards[t];
            returns[t] = acc;
        }
        let enc_ids = encoder_ids(params, &ep.src, ep.bucket);
        let dec_ids = decoder_input_ids(params, &ep.actions[..ep.actions.len() - 1]);
        let (logits, cache) = forward_example(params, &enc_ids, &dec_ids)?;
        let mut dlogits = Mat::zeros(logits.rows, logits.cols);
        for (t, &action) in ep.actions.iter().enumerate() {
            let advantage = returns[t] - baseline;
            if advantage == 0.0 {
                continue;
            }
            let probs = masked_distribution(logits.row(t), &ep.feasible[t])?;
            loss += -advantage * probs[action].max(1e-300).ln() * inv_b;
            for &j in &ep.feasible[t] {
                *dlogits.at_mut(t, j) =
                    advantage * (probs[j] - (j == action) as usize as f64) * inv_b;
            }
        }
        backward_example(params, &mut grads, &cache, &dlogits);
    }
    Ok((loss, grads))
}

/// Combined objective `ce + lambda * rl`.
pub fn total_loss(ce: f64, rl: f64, lambda: f64) -> f64 {
    ce + lambda * rl
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn tiny() -> ModelParams {
        ModelParams::init(&ModelConfig::micro(2), 3).unwrap()
    }

    #[test]
    fn total_loss_combines_linearly() {
        assert_eq!(total_loss(0.5, 0.25, 0.0), 0.5);
        assert_eq!(total_loss(0.5, 0.25, 1.0), 0.75);
        assert!((total_loss(1.0, -0.2, 0.5) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_rewards_give_zero_gradient() {
        let p = tiny();
        let ep = Episode {
            src: vec![0, 2],
            bucket: 0,
            actions: vec![1, 6],
            feasible: vec![vec![0, 1, 4], vec![6]],
            rewards: vec![0.0, 0.0],
        };
        let (loss, grads) = rl_loss_and_grad(&p, &[ep]).unwrap();
        assert_eq!(loss, 0.0);
        for (_, t) in grads.tensors() {
            assert!(t.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn positive_reward_raises_action_probability() {
        let p = tiny();
        let ep = Episode {
            src: vec![0, 2],
            bucket: 0,
            actions: vec![1],
            feasible: vec![vec![0, 1, 4]],
            rewards: vec![2.0],
        };
        let (_, grads) = rl_loss_and_grad(&p, &[ep]).unwrap();
        let mut stepped = p.clone();
        stepped.add_scaled(&grads, -0.01); // descend the surrogate
        let before = prob_of(&p, &ep);
        let after = prob_of(&stepped, &ep);
        assert!(after > before, "{after} <= {before}");
    }

    fn prob_of(params: &ModelParams, ep: &Episode) -> f64 {
        let enc = crate::model::net::encode_source(params, &ep.src, ep.bucket).unwrap();
        let logits = crate::model::net::decode_next_logits(params, &enc, &[]).unwrap();
        let probs = masked_distribution(&logits, &ep.feasible[0]).unwrap();
        probs[ep.actions[0]]
    }

    #[test]
    fn ce_loss_drops_toward_zero_with_confident_logits() {
        // Hand-crafted check of the CE definition itself.
        let row = vec![10.0, -10.0, -10.0];
        let p = softmax_row(&row);
        assert!(-p[0].ln() < 1e-8);
    }
}
