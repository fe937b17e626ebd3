//! Behavioral metrics: the five angular errors between an agent's heading and
//! the ideal steering vector of each rule, grouping statistics, the
//! 100-recordings aggregation protocol, and windowed predator statistics.

use crate::boids::{alignment_vector, avoidance_vector, cohesion_vector, neighbors_within};
use crate::config::AggregationConfig;
use crate::predator::PredatorState;
use crate::vec2::Vec2;
use crate::world::{AgentState, FoodItem, RewardEvent, RewardKind, WorldState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("run of {got} ticks is too short for {need} snapshots every {every} ticks")]
    RunTooShort { got: u64, need: u64, every: u64 },
}

fn angle_deg(heading: Vec2, ideal: Vec2) -> Option<f64> {
    if ideal.norm() == 0.0 || heading.norm() == 0.0 {
        return None;
    }
    Some(heading.angle_to(ideal).to_degrees())
}

/// Unsigned angle between the heading and the neighborhood alignment vector.
/// Undefined without neighbors.
pub fn alignment_error(agent: &AgentState, neighbors: &[&AgentState]) -> Option<f64> {
    if neighbors.is_empty() {
        return None;
    }
    angle_deg(agent.heading, alignment_vector(neighbors))
}

/// Angle between the heading and the offset toward the neighborhood centroid.
pub fn cohesion_error(agent: &AgentState, neighbors: &[&AgentState]) -> Option<f64> {
    if neighbors.is_empty() {
        return None;
    }
    angle_deg(agent.heading, cohesion_vector(agent, neighbors))
}

/// Angle between the heading and the avoid-radius repulsion vector.
pub fn neighbor_avoidance_error(agent: &AgentState, close_neighbors: &[&AgentState]) -> Option<f64> {
    if close_neighbors.is_empty() {
        return None;
    }
    angle_deg(agent.heading, avoidance_vector(agent, close_neighbors))
}

/// Angle between the heading and the ideal flee direction away from the
/// predator. Always defined (the caller gates on visibility for the LOM rule).
pub fn predator_avoidance_error(agent: &AgentState, predator: &PredatorState) -> Option<f64> {
    angle_deg(agent.heading, (agent.position - predator.position).normalized())
}

/// Angle between the heading and the direction to the nearest food item,
/// ties broken by lowest index.
pub fn foraging_error(agent: &AgentState, food: &[FoodItem]) -> Option<f64> {
    let nearest = food.iter().min_by(|a, b| {
        agent
            .position
            .distance(a.position)
            .partial_cmp(&agent.position.distance(b.position))
            .unwrap()
    })?;
    angle_deg(agent.heading, nearest.position - agent.position)
}

/// Mean over defined per-agent samples; `None` when every sample is absent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricMean {
    pub mean: Option<f64>,
    pub samples: usize,
}

impl MetricMean {
    pub fn from_samples<I: IntoIterator<Item = Option<f64>>>(iter: I) -> MetricMean {
        let mut sum = 0.0;
        let mut n = 0usize;
        for s in iter.into_iter().flatten() {
            sum += s;
            n += 1;
        }
        MetricMean {
            mean: (n > 0).then(|| sum / n as f64),
            samples: n,
        }
    }
}

/// One snapshot of the full metric set, averaged across agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub alignment_err: MetricMean,
    pub cohesion_err: MetricMean,
    pub neighbor_avoid_err: MetricMean,
    /// LOM-comparable variant: only agents with the predator inside their
    /// vision radius contribute.
    pub predator_avoid_err: MetricMean,
    /// Always-defined variant, flagged separately.
    pub predator_avoid_err_global: MetricMean,
    pub foraging_err: MetricMean,
    pub grouping_dist: MetricMean,
    pub predator_dist: MetricMean,
    pub neighbor_count: MetricMean,
}

/// Compute the full per-agent-averaged record for one state snapshot.
/// `vision_radius`/`avoid_radius` define neighborhoods for all five rules.
pub fn snapshot(state: &WorldState, vision_radius: f64, avoid_radius: f64) -> MetricsRecord {
    let agents = &state.agents;
    let predator_on = state.config.predator_enabled;
    let mut alignment = Vec::new();
    let mut cohesion = Vec::new();
    let mut neighbor_avoid = Vec::new();
    let mut pred_avoid = Vec::new();
    let mut pred_avoid_global = Vec::new();
    let mut foraging = Vec::new();
    let mut grouping = Vec::new();
    let mut pred_dist = Vec::new();
    let mut neighbor_counts = Vec::new();

    for agent in agents {
        let neighbors = neighbors_within(agents, agent, vision_radius);
        let close = neighbors_within(agents, agent, avoid_radius);
        alignment.push(alignment_error(agent, &neighbors));
        cohesion.push(cohesion_error(agent, &neighbors));
        neighbor_avoid.push(neighbor_avoidance_error(agent, &close));
        foraging.push(foraging_error(agent, &state.food));
        neighbor_counts.push(Some(neighbors.len() as f64));
        grouping.push(if neighbors.is_empty() {
            None
        } else {
            let centroid = neighbors
                .iter()
                .fold(Vec2::ZERO, |acc, n| acc + n.position)
                / neighbors.len() as f64;
            Some(agent.position.distance(centroid))
        });
        if predator_on {
            let d = agent.position.distance(state.predator.position);
            pred_dist.push(Some(d));
            let err = predator_avoidance_error(agent, &state.predator);
            pred_avoid_global.push(err);
            pred_avoid.push(if d <= vision_radius { err } else { None });
        }
    }

    MetricsRecord {
        alignment_err: MetricMean::from_samples(alignment),
        cohesion_err: MetricMean::from_samples(cohesion),
        neighbor_avoid_err: MetricMean::from_samples(neighbor_avoid),
        predator_avoid_err: MetricMean::from_samples(pred_avoid),
        predator_avoid_err_global: MetricMean::from_samples(pred_avoid_global),
        foraging_err: MetricMean::from_samples(foraging),
        grouping_dist: MetricMean::from_samples(grouping),
        predator_dist: MetricMean::from_samples(pred_dist),
        neighbor_count: MetricMean::from_samples(neighbor_counts),
    }
}

/// Snapshot ticks of the aggregation protocol: `frames_between`, twice that,
/// ... `n_recordings` times.
pub fn snapshot_ticks(cfg: &AggregationConfig) -> impl Iterator<Item = u64> + '_ {
    (1..=cfg.n_recordings).map(|k| k * cfg.frames_between)
}

/// Average a run's snapshots into one summary record. Absent samples are
/// excluded, never imputed; sample counts are carried through.
pub fn aggregate(
    run: &[(u64, MetricsRecord)],
    cfg: &AggregationConfig,
    run_len: u64,
) -> Result<MetricsRecord, MetricsError> {
    let need = cfg.n_recordings * cfg.frames_between;
    if run_len < need {
        return Err(MetricsError::RunTooShort {
            got: run_len,
            need: cfg.n_recordings,
            every: cfg.frames_between,
        });
    }
    let wanted: Vec<u64> = snapshot_ticks(cfg).collect();
    let picked: Vec<&MetricsRecord> = run
        .iter()
        .filter(|(t, _)| wanted.contains(t))
        .map(|(_, r)| r)
        .collect();

    let combine = |field: fn(&MetricsRecord) -> MetricMean| {
        MetricMean::from_samples(picked.iter().map(|r| field(r).mean))
    };
    let count = |field: fn(&MetricsRecord) -> MetricMean| {
        picked.iter().map(|r| field(r).samples).sum::<usize>()
    };
    let merge = |field: fn(&MetricsRecord) -> MetricMean| MetricMean {
        mean: combine(field).mean,
        samples: count(field),
    };

    Ok(MetricsRecord {
        alignment_err: merge(|r| r.alignment_err),
        cohesion_err: merge(|r| r.cohesion_err),
        neighbor_avoid_err: merge(|r| r.neighbor_avoid_err),
        predator_avoid_err: merge(|r| r.predator_avoid_err),
        predator_avoid_err_global: merge(|r| r.predator_avoid_err_global),
        foraging_err: merge(|r| r.foraging_err),
        grouping_dist: merge(|r| r.grouping_dist),
        predator_dist: merge(|r| r.predator_dist),
        neighbor_count: merge(|r| r.neighbor_count),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredatorStats {
    pub window_start: u64,
    pub window_end: u64,
    pub catch_count: u64,
    pub mean_memory_size: f64,
}

/// Catch counts and mean memory size per non-overlapping window.
/// `memory_sizes[t]` is the memory size after tick `t`; `events` carries
/// `(tick, event)` pairs.
pub fn predator_stats(
    events: &[(u64, RewardEvent)],
    memory_sizes: &[usize],
    window: u64,
) -> Vec<PredatorStats> {
    let total = memory_sizes.len() as u64;
    let n_windows = total / window;
    (0..n_windows)
        .map(|w| {
            let start = w * window;
            let end = start + window;
            let catch_count = events
                .iter()
                .filter(|(t, e)| *t >= start && *t < end && e.kind == RewardKind::Caught)
                .count() as u64;
            let slice = &memory_sizes[start as usize..end as usize];
            let mean_memory_size = slice.iter().sum::<usize>() as f64 / slice.len() as f64;
            PredatorStats {
                window_start: start,
                window_end: end,
                catch_count,
                mean_memory_size,
            }
        })
        .collect()
}
