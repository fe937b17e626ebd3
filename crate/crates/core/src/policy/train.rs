//! Rollout collection and the training loop. All prey share one set of
//! parameters; collection is sequential and fully deterministic for a fixed
//! `(config, seed)` pair.

use super::mlp::{Adam, PolicyError, PolicyNet};
use super::ppo::{compute_gae, sample_action, update, Transition, TransitionBatch};
use crate::config::{ModelKind, SimConfig};
use crate::perception::{build_observation_gom, build_observation_lom, obs_dim};
use crate::world::{AgentAction, WorldState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("cannot train the `{0}` model; only lom and gom are learnable")]
    NotLearnable(&'static str),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Sim(#[from] crate::world::SimError),
}

pub struct TrainResult {
    pub net: PolicyNet,
    /// (step, mean cumulative reward) per summary interval.
    pub curve: Vec<(u64, f64)>,
    pub steps_done: u64,
}

fn build_obs(state: &WorldState, agent_id: usize, model: ModelKind) -> Result<Vec<f64>, crate::world::SimError> {
    let obs = match model {
        ModelKind::Gom => build_observation_gom(state, agent_id)?,
        _ => build_observation_lom(state, agent_id)?,
    };
    Ok(obs.to_vec())
}

/// Raw Gaussian sample -> clamped environment action.
pub fn action_from_sample(sample: &[f64]) -> AgentAction {
    AgentAction {
        turn_rate: sample[0],
        throttle: sample[1],
    }
    .clamped()
}

/// Per-agent open segment of the current rollout.
#[derive(Default)]
struct Segment {
    transitions: Vec<Transition>,
}

impl Segment {
    /// Close with a bootstrap value and fold into the batch via GAE.
    fn flush(
        &mut self,
        bootstrap: f64,
        gamma: f64,
        lambda: f64,
        batch: &mut TransitionBatch,
    ) -> Result<(), PolicyError> {
        if self.transitions.is_empty() {
            return Ok(());
        }
        let rewards: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let mut values: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        values.push(bootstrap);
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let (advantages, returns) = compute_gae(&rewards, &values, &dones, gamma, lambda)?;
        for (i, t) in self.transitions.drain(..).enumerate() {
            batch.obs.push(t.obs);
            batch.actions.push(t.action);
            batch.old_log_probs.push(t.log_prob);
            batch.advantages.push(advantages[i]);
            batch.returns.push(returns[i]);
        }
        Ok(())
    }
}

/// Train the shared policy with PPO. `max_steps` counts agent transitions.
pub fn train(cfg: &SimConfig, seed: u64) -> Result<TrainResult, TrainError> {
    cfg.validate()?;
    let model = match cfg.model {
        ModelKind::Boids => return Err(TrainError::NotLearnable("boids")),
        m => m,
    };
    let ppo = cfg.ppo;
    let input_dim = obs_dim(model, cfg.raycast.n_rays);
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut net = PolicyNet::new(input_dim, ppo.hidden_units, 2, &mut init_rng);
    let mut adam = Adam::new(net.flat_len());
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x85eb_ca6b_27d4_eb4f);
    let mut reseed_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc2b2_ae35_1d3a_f36d);

    let mut world = WorldState::init(cfg, seed)?;
    let n_agents = cfg.n_agents;
    let mut segments: Vec<Segment> = (0..n_agents).map(|_| Segment::default()).collect();
    let mut batch = TransitionBatch::default();

    let mut steps_done: u64 = 0;
    let mut curve: Vec<(u64, f64)> = Vec::new();
    let mut next_summary = ppo.summary_freq;
    let mut episode_returns = vec![0.0f64; n_agents];
    let mut completed_returns: Vec<f64> = Vec::new();
    let mut last_summary_value = 0.0;
    let mut last_good = net.clone();

    while steps_done < ppo.max_steps {
        // one tick: observe, sample, act
        let mut actions = Vec::with_capacity(n_agents);
        let mut sampled = Vec::with_capacity(n_agents);
        for id in 0..n_agents {
            let obs = build_obs(&world, id, model)?;
            let cache = net.forward_cached(&obs)?;
            let (raw, log_prob) = sample_action(&cache.mean, &net.log_std, &mut policy_rng);
            actions.push(action_from_sample(&raw));
            sampled.push((obs, raw, log_prob, cache.value));
        }
        let events = world.step(&actions)?;
        let mut rewards = vec![0.0f64; n_agents];
        let mut caught = vec![false; n_agents];
        for e in &events {
            rewards[e.agent_id] += e.value;
            if e.kind == crate::world::RewardKind::Caught {
                caught[e.agent_id] = true;
            }
        }
        let episode_over = world.tick % cfg.episode_length == 0;

        for id in 0..n_agents {
            let (obs, action, log_prob, value) = sampled[id].clone();
            let done = caught[id] || episode_over;
            episode_returns[id] += rewards[id];
            segments[id].transitions.push(Transition {
                obs,
                action,
                log_prob,
                reward: rewards[id],
                value,
                done,
            });
            if done {
                segments[id].flush(0.0, ppo.gamma, ppo.gae_lambda, &mut batch)?;
                completed_returns.push(episode_returns[id]);
                episode_returns[id] = 0.0;
            } else if segments[id].transitions.len() >= ppo.time_horizon {
                // horizon cut: bootstrap from the post-step state
                let next_obs = build_obs(&world, id, model)?;
                let (_, _, v) = net.forward(&next_obs)?;
                segments[id].flush(v, ppo.gamma, ppo.gae_lambda, &mut batch)?;
            }
        }
        steps_done += n_agents as u64;

        if episode_over {
            let next_seed: u64 = reseed_rng.gen();
            world = WorldState::init(cfg, next_seed)?;
        }

        let pending: usize = segments.iter().map(|s| s.transitions.len()).sum();
        if batch.len() + pending >= ppo.buffer_size {
            // close open segments with bootstrap values and update
            for id in 0..n_agents {
                if !segments[id].transitions.is_empty() {
                    let next_obs = build_obs(&world, id, model)?;
                    let (_, _, v) = net.forward(&next_obs)?;
                    segments[id].flush(v, ppo.gamma, ppo.gae_lambda, &mut batch)?;
                }
            }
            batch.normalize_advantages();
            match update(&mut net, &mut adam, &batch, &ppo, steps_done, &mut policy_rng) {
                Ok(()) => last_good = net.clone(),
                Err(PolicyError::NonFinite(_)) => {
                    net = last_good;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
            batch = TransitionBatch::default();
        }

        if steps_done >= next_summary {
            let value = if completed_returns.is_empty() {
                last_summary_value
            } else {
                completed_returns.iter().sum::<f64>() / completed_returns.len() as f64
            };
            curve.push((steps_done, value));
            last_summary_value = value;
            completed_returns.clear();
            next_summary += ppo.summary_freq;
        }
    }

    Ok(TrainResult {
        net,
        curve,
        steps_done,
    })
}
