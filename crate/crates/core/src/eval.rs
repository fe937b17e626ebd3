//! Frozen-policy / boids evaluation rollouts: trajectory logging, the
//! aggregation protocol, and the windowed predator statistics.

use crate::boids::boid_action;
use crate::config::{AggregationConfig, SimConfig};
use crate::metrics::{
    aggregate, predator_stats, snapshot, MetricsError, MetricsRecord, PredatorStats,
};
use crate::perception::build_observation;
use crate::policy::{action_from_sample, PolicyError, PolicyNet};
use crate::world::{AgentAction, RewardEvent, WorldState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::fmt::Write as _;
use thiserror::Error;

pub const PREDATOR_STATS_WINDOW: u64 = 10_000;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Sim(#[from] crate::world::SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// What drives the prey during evaluation.
pub enum Controller<'a> {
    Boids,
    /// Deterministic: action = clamped mean, no sampling.
    Policy(&'a PolicyNet),
    /// Uniform random actions; baseline for trend comparisons.
    Random,
}

pub struct EvalOutput {
    pub summary: MetricsRecord,
    pub predator_stats: Vec<PredatorStats>,
    pub snapshots: Vec<(u64, MetricsRecord)>,
    pub events: Vec<(u64, RewardEvent)>,
    pub trajectory_jsonl: String,
    pub metrics_csv: String,
    pub total_reward: f64,
}

fn trajectory_line(state: &WorldState, events: &[RewardEvent]) -> String {
    let obj = json!({
        "tick": state.tick,
        "agents": state.agents.iter().map(|a| json!({
            "id": a.id,
            "x": a.position.x,
            "y": a.position.y,
            "hx": a.heading.x,
            "hy": a.heading.y,
            "speed": a.speed,
        })).collect::<Vec<_>>(),
        "predator": {
            "x": state.predator.position.x,
            "y": state.predator.position.y,
            "hx": state.predator.heading.x,
            "hy": state.predator.heading.y,
            "memory_size": state.predator.memory.len(),
        },
        "food": state.food.iter().map(|f| json!([f.position.x, f.position.y])).collect::<Vec<_>>(),
        "events": events.iter().map(|e| json!({
            "agent_id": e.agent_id,
            "kind": format!("{:?}", e.kind),
            "value": e.value,
        })).collect::<Vec<_>>(),
    });
    obj.to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub const METRICS_CSV_HEADER: &str = "tick,alignment_err,cohesion_err,neighbor_avoid_err,predator_avoid_err,foraging_err,grouping_dist,predator_dist,neighbor_count,samples_per_metric,catch_count_window,mean_memory_size_window,predator_avoid_err_global";

fn metrics_csv(summary: &MetricsRecord, tick: u64, windows: &[PredatorStats]) -> String {
    let mut out = String::new();
    out.push_str(METRICS_CSV_HEADER);
    out.push('\n');
    let samples = format!(
        "align:{};coh:{};navoid:{};pavoid:{};forage:{};group:{};pdist:{};ncount:{}",
        summary.alignment_err.samples,
        summary.cohesion_err.samples,
        summary.neighbor_avoid_err.samples,
        summary.predator_avoid_err.samples,
        summary.foraging_err.samples,
        summary.grouping_dist.samples,
        summary.predator_dist.samples,
        summary.neighbor_count.samples,
    );
    writeln!(
        out,
        "{tick},{},{},{},{},{},{},{},{},{samples},,,{}",
        fmt_opt(summary.alignment_err.mean),
        fmt_opt(summary.cohesion_err.mean),
        fmt_opt(summary.neighbor_avoid_err.mean),
        fmt_opt(summary.predator_avoid_err.mean),
        fmt_opt(summary.foraging_err.mean),
        fmt_opt(summary.grouping_dist.mean),
        fmt_opt(summary.predator_dist.mean),
        fmt_opt(summary.neighbor_count.mean),
        fmt_opt(summary.predator_avoid_err_global.mean),
    )
    .unwrap();
    for w in windows {
        writeln!(
            out,
            "{},,,,,,,,,,{},{:.6},",
            w.window_end, w.catch_count, w.mean_memory_size
        )
        .unwrap();
    }
    out
}

/// Run `steps` ticks with a frozen controller; deterministic for a fixed
/// `(config, seed)` pair. Metrics snapshots follow the aggregation protocol;
/// runs shorter than the full protocol aggregate the snapshots they have.
pub fn run_eval(
    cfg: &SimConfig,
    controller: Controller<'_>,
    steps: u64,
    seed: u64,
    record_trajectory: bool,
) -> Result<EvalOutput, EvalError> {
    cfg.validate()?;
    let mut world = WorldState::init(cfg, seed)?;
    let mut random_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x27d4_eb2f_1656_67c5);

    let agg = cfg.aggregation;
    let mut snapshots: Vec<(u64, MetricsRecord)> = Vec::new();
    let mut events: Vec<(u64, RewardEvent)> = Vec::new();
    let mut memory_sizes: Vec<usize> = Vec::with_capacity(steps as usize);
    let mut trajectory = String::new();
    let mut total_reward = 0.0;

    for _ in 0..steps {
        let actions: Vec<AgentAction> = match &controller {
            Controller::Boids => (0..world.agents.len())
                .map(|id| boid_action(&world, id, &cfg.boids))
                .collect(),
            Controller::Policy(net) => {
                let mut acts = Vec::with_capacity(world.agents.len());
                for id in 0..world.agents.len() {
                    let obs = build_observation(&world, id)?.to_vec();
                    let (mean, _, _) = net.forward(&obs)?;
                    acts.push(action_from_sample(&mean));
                }
                acts
            }
            Controller::Random => (0..world.agents.len())
                .map(|_| AgentAction {
                    turn_rate: random_rng.gen_range(-1.0..=1.0),
                    throttle: random_rng.gen_range(0.0..=1.0),
                })
                .collect(),
        };
        let tick_before = world.tick;
        let tick_events = world.step(&actions)?;
        for e in &tick_events {
            total_reward += e.value;
            events.push((tick_before, *e));
        }
        memory_sizes.push(world.predator.memory.len());
        if record_trajectory {
            trajectory.push_str(&trajectory_line(&world, &tick_events));
            trajectory.push('\n');
        }
        if world.tick % agg.frames_between == 0 {
            let n_taken = (world.tick / agg.frames_between) as u64;
            if n_taken <= agg.n_recordings {
                snapshots.push((
                    world.tick,
                    snapshot(&world, cfg.boids.vision_radius, cfg.boids.avoid_radius),
                ));
            }
        }
    }

    // full protocol when the run is long enough, otherwise aggregate what we have
    let effective = if steps >= agg.n_recordings * agg.frames_between {
        agg
    } else {
        AggregationConfig {
            n_recordings: (steps / agg.frames_between).max(1),
            frames_between: agg.frames_between,
        }
    };
    let summary = aggregate(&snapshots, &effective, steps)?;
    let windows = predator_stats(&events, &memory_sizes, PREDATOR_STATS_WINDOW);
    let metrics_csv = metrics_csv(&summary, steps, &windows);

    Ok(EvalOutput {
        summary,
        predator_stats: windows,
        snapshots,
        events,
        trajectory_jsonl: trajectory,
        metrics_csv,
        total_reward,
    })
}
