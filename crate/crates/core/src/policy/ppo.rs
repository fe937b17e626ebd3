//! Clipped-surrogate PPO machinery: diagonal-Gaussian action distribution,
//! GAE, the loss with analytic gradients, and the epoch/minibatch update.

use super::mlp::{Adam, PolicyError, PolicyGrads, PolicyNet};
use crate::config::PpoConfig;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

const LN_2PI: f64 = 1.8378770664093453;

/// One environment transition under the behavior policy. The stored action is
/// the pre-clamp Gaussian sample; log_prob is its pre-clamp density.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// Flattened buffer with advantages and return targets attached.
#[derive(Debug, Clone, Default)]
pub struct TransitionBatch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TransitionBatch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Zero-mean / unit-variance advantage normalization over the buffer.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len();
        if n < 2 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n as f64;
        let var = self
            .advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n as f64;
        let std = var.sqrt().max(1e-8);
        for a in &mut self.advantages {
            *a = (*a - mean) / std;
        }
    }
}

pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let inv_std = (-ls).exp();
            let z = (a - m) * inv_std;
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

/// Diagonal-Gaussian entropy; depends only on the log-std vector.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (LN_2PI + 1.0)).sum()
}

/// Sample componentwise from N(mean, exp(log_std)^2). Returns the raw sample
/// and its pre-clamp log density; clamping to action ranges is the caller's.
pub fn sample_action<R: Rng>(mean: &[f64], log_std: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
    let action: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(m, ls)| {
            let z: f64 = rng.sample(StandardNormal);
            m + ls.exp() * z
        })
        .collect();
    let log_prob = gaussian_log_prob(mean, log_std, &action);
    (action, log_prob)
}

pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards
        .iter()
        .rev()
        .fold(0.0, |acc, r| r + gamma * acc)
}

/// Backward-recursion GAE. `values` carries one bootstrap entry past the end.
/// Returns `(advantages, return_targets)` with `target_t = adv_t + V(s_t)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), PolicyError> {
    if values.len() != rewards.len() + 1 || dones.len() != rewards.len() {
        return Err(PolicyError::LengthMismatch(format!(
            "GAE needs |values| = |rewards|+1 = |dones|+1; got {}, {}, {}",
            values.len(),
            rewards.len(),
            dones.len()
        )));
    }
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * not_done - values[t];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages
        .iter()
        .enumerate()
        .map(|(t, a)| a + values[t])
        .collect();
    Ok((advantages, returns))
}

#[derive(Debug, Clone, Copy)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Clipped-surrogate loss with analytic gradients over a (mini)batch:
/// `-mean(min(r A, clip(r) A)) + c_v mean((V - ret)^2) - beta entropy`.
pub fn ppo_loss(
    net: &PolicyNet,
    batch: &TransitionBatch,
    indices: &[usize],
    cfg: &PpoConfig,
) -> Result<(LossStats, PolicyGrads), PolicyError> {
    let n = indices.len();
    if n == 0 {
        return Err(PolicyError::LengthMismatch("empty minibatch".into()));
    }
    let mut grads = net.zeroed_grads();
    let inv_n = 1.0 / n as f64;
    let eps = cfg.clip_epsilon;
    let mut policy_obj = 0.0;
    let mut value_loss = 0.0;

    for &i in indices {
        let cache = net.forward_cached(&batch.obs[i])?;
        let action = &batch.actions[i];
        let adv = batch.advantages[i];
        let new_logp = gaussian_log_prob(&cache.mean, &net.log_std, action);
        let ratio = (new_logp - batch.old_log_probs[i]).exp();
        if !ratio.is_finite() {
            return Err(PolicyError::NonFinite("probability ratio"));
        }
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        let surr_unclipped = ratio * adv;
        let surr_clipped = clipped * adv;
        policy_obj += surr_unclipped.min(surr_clipped);

        // min picks the unclipped branch (ties included): gradient flows
        // through the ratio; otherwise the clipped constant wins and the
        // policy gradient for this sample is zero.
        let d_logp = if surr_unclipped <= surr_clipped {
            -inv_n * ratio * adv
        } else {
            0.0
        };

        let err = cache.value - batch.returns[i];
        value_loss += err * err;
        let d_value = inv_n * cfg.value_coeff * 2.0 * err;

        let mut d_mean = vec![0.0; net.action_dim];
        for k in 0..net.action_dim {
            let std = net.log_std[k].exp();
            let z = (action[k] - cache.mean[k]) / std;
            // d new_logp / d mean_k = z / std ; d / d log_std_k = z^2 - 1
            d_mean[k] = d_logp * (z / std);
            grads.log_std[k] += d_logp * (z * z - 1.0);
        }
        net.backward(&cache, &d_mean, d_value, &mut grads);
    }

    let entropy = gaussian_entropy(&net.log_std);
    for g in &mut grads.log_std {
        // entropy bonus: d(-beta * entropy)/d log_std = -beta
        *g -= cfg.entropy_coeff;
    }

    let policy = -policy_obj * inv_n;
    let value = cfg.value_coeff * value_loss * inv_n;
    let total = policy + value - cfg.entropy_coeff * entropy;
    if !total.is_finite() {
        return Err(PolicyError::NonFinite("loss"));
    }
    Ok((
        LossStats {
            total,
            policy,
            value,
            entropy,
        },
        grads,
    ))
}

/// Linear decay from the base rate to zero at `max_steps`.
pub fn learning_rate(cfg: &PpoConfig, step: u64) -> f64 {
    let frac = 1.0 - (step as f64 / cfg.max_steps as f64).min(1.0);
    cfg.learning_rate * frac
}

/// One PPO update: `num_epoch` passes of shuffled minibatches over the buffer.
/// Behavior log-probs stay frozen for the whole update.
pub fn update<R: Rng>(
    net: &mut PolicyNet,
    adam: &mut Adam,
    batch: &TransitionBatch,
    cfg: &PpoConfig,
    step: u64,
    rng: &mut R,
) -> Result<(), PolicyError> {
    let lr = learning_rate(cfg, step);
    let mut indices: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..cfg.num_epoch {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.batch_size) {
            let (_, grads) = ppo_loss(net, batch, chunk, cfg)?;
            adam.step(net, &grads, lr)?;
        }
    }
    if !net.is_finite() {
        return Err(PolicyError::NonFinite("parameters"));
    }
    Ok(())
}
