//! Reynolds-style scripted steering used as the non-learning control
//! environment: cohesion, alignment, and avoidance vectors plus a weighted
//! combination into the same action interface the learned agents use.

use crate::config::BoidConfig;
use crate::vec2::Vec2;
use crate::world::{AgentAction, AgentState, WorldState};

/// Offset from the agent toward its neighborhood centroid; zero when alone.
pub fn cohesion_vector(agent: &AgentState, neighbors: &[&AgentState]) -> Vec2 {
    if neighbors.is_empty() {
        return Vec2::ZERO;
    }
    let sum = neighbors
        .iter()
        .fold(Vec2::ZERO, |acc, n| acc + n.position);
    sum / neighbors.len() as f64 - agent.position
}

/// Average forward vector of the neighborhood; zero when alone.
pub fn alignment_vector(neighbors: &[&AgentState]) -> Vec2 {
    if neighbors.is_empty() {
        return Vec2::ZERO;
    }
    let sum = neighbors.iter().fold(Vec2::ZERO, |acc, n| acc + n.heading);
    sum / neighbors.len() as f64
}

/// Mean offset away from too-close neighbors; zero when none are close.
pub fn avoidance_vector(agent: &AgentState, close_neighbors: &[&AgentState]) -> Vec2 {
    if close_neighbors.is_empty() {
        return Vec2::ZERO;
    }
    let sum = close_neighbors
        .iter()
        .fold(Vec2::ZERO, |acc, n| acc + (agent.position - n.position));
    sum / close_neighbors.len() as f64
}

/// Neighbors of `agent` within `radius`, excluding itself.
pub fn neighbors_within<'a>(
    agents: &'a [AgentState],
    agent: &AgentState,
    radius: f64,
) -> Vec<&'a AgentState> {
    agents
        .iter()
        .filter(|a| a.id != agent.id && a.position.distance(agent.position) <= radius)
        .collect()
}

/// Weighted steering direction: cohesion + alignment + avoidance, plus
/// predator-flee (when the predator is within vision) and nearest-food seek.
/// Returned normalized; zero when no term contributes.
pub fn steering_vector(state: &WorldState, agent: &AgentState, cfg: &BoidConfig) -> Vec2 {
    let neighbors = neighbors_within(&state.agents, agent, cfg.vision_radius);
    let close = neighbors_within(&state.agents, agent, cfg.avoid_radius);

    let mut steer = cohesion_vector(agent, &neighbors) * cfg.cohesion_weight
        + alignment_vector(&neighbors) * cfg.alignment_weight
        + avoidance_vector(agent, &close) * cfg.avoidance_weight;

    if state.config.predator_enabled {
        let to_predator = state.predator.position - agent.position;
        if to_predator.norm() <= cfg.vision_radius {
            steer += (-to_predator).normalized() * cfg.predator_flee_weight;
        }
    }

    if let Some(nearest) = state
        .food
        .iter()
        .min_by(|a, b| {
            agent
                .position
                .distance(a.position)
                .partial_cmp(&agent.position.distance(b.position))
                .unwrap()
        })
    {
        steer += (nearest.position - agent.position).normalized() * cfg.food_seek_weight;
    }

    steer.normalized()
}

/// Convert steering into the shared action interface: full throttle, turn
/// rate-limited toward the steering direction. Zero steering goes straight.
pub fn boid_action(state: &WorldState, agent_id: usize, cfg: &BoidConfig) -> AgentAction {
    let agent = match state.agent(agent_id) {
        Ok(a) => a,
        Err(_) => return AgentAction { turn_rate: 0.0, throttle: 0.0 },
    };
    let steer = steering_vector(state, agent, cfg);
    if steer == Vec2::ZERO {
        return AgentAction { turn_rate: 0.0, throttle: 1.0 };
    }
    let delta = agent.heading.signed_angle_to(steer);
    let max_turn = cfg.max_turn_deg.to_radians();
    let turn_rate = if max_turn > 0.0 {
        (delta / max_turn).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    AgentAction { turn_rate, throttle: 1.0 }
}
