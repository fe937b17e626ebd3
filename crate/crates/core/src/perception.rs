//! Per-agent observation vectors for the LOM and GOM models: 18-ray casting
//! plus self features, and for GOM four always-available predator quantities.

use crate::config::{ModelKind, RaycastConfig};
use crate::vec2::Vec2;
use crate::world::{SimError, WorldState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayTag {
    Agent,
    Predator,
    Food,
    Wall,
    None,
}

impl RayTag {
    /// Index into the per-ray one-hot class block.
    pub fn one_hot_index(self) -> usize {
        match self {
            RayTag::Agent => 0,
            RayTag::Predator => 1,
            RayTag::Food => 2,
            RayTag::Wall => 3,
            RayTag::None => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub tag: RayTag,
    /// Distance normalized by the ray range; 1.0 when nothing was hit.
    pub distance: f64,
}

impl RayHit {
    pub const MISS: RayHit = RayHit {
        tag: RayTag::None,
        distance: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredatorBlock {
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: Vec2,
    /// Euclidean distance normalized by the arena diagonal.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub self_position: Vec2,
    pub self_velocity: Vec2,
    pub self_heading: Vec2,
    pub rays: Vec<RayHit>,
    pub predator_block: Option<PredatorBlock>,
}

pub const SELF_FEATURES: usize = 6;
pub const FEATURES_PER_RAY: usize = 6;
pub const PREDATOR_FEATURES: usize = 7;

/// Flattened observation length for a model under a ray config.
pub fn obs_dim(model: ModelKind, n_rays: usize) -> usize {
    let base = SELF_FEATURES + n_rays * FEATURES_PER_RAY;
    match model {
        ModelKind::Gom => base + PREDATOR_FEATURES,
        _ => base,
    }
}

impl Observation {
    /// Flatten to the fixed layout: self(6) | rays(n*6) | [predator(7)].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(
            SELF_FEATURES
                + self.rays.len() * FEATURES_PER_RAY
                + if self.predator_block.is_some() { PREDATOR_FEATURES } else { 0 },
        );
        out.push(self.self_position.x);
        out.push(self.self_position.y);
        out.push(self.self_velocity.x);
        out.push(self.self_velocity.y);
        out.push(self.self_heading.x);
        out.push(self.self_heading.y);
        for ray in &self.rays {
            let mut class = [0.0; 5];
            class[ray.tag.one_hot_index()] = 1.0;
            out.extend_from_slice(&class);
            out.push(ray.distance);
        }
        if let Some(p) = &self.predator_block {
            out.push(p.position.x);
            out.push(p.position.y);
            out.push(p.velocity.x);
            out.push(p.velocity.y);
            out.push(p.heading.x);
            out.push(p.heading.y);
            out.push(p.distance);
        }
        out
    }
}

/// Feature-index table (name, offset) for a model; backs the `describe-obs`
/// command so checkpoints stay portable.
pub fn feature_layout(model: ModelKind, n_rays: usize) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut idx = 0;
    for name in [
        "self_position.x",
        "self_position.y",
        "self_velocity.x",
        "self_velocity.y",
        "self_heading.x",
        "self_heading.y",
    ] {
        out.push((name.to_string(), idx));
        idx += 1;
    }
    for ray in 0..n_rays {
        for class in ["agent", "predator", "food", "wall", "none"] {
            out.push((format!("ray{ray}.class.{class}"), idx));
            idx += 1;
        }
        out.push((format!("ray{ray}.distance"), idx));
        idx += 1;
    }
    if model == ModelKind::Gom {
        for name in [
            "predator_position.x",
            "predator_position.y",
            "predator_velocity.x",
            "predator_velocity.y",
            "predator_heading.x",
            "predator_heading.y",
            "predator_distance",
        ] {
            out.push((name.to_string(), idx));
            idx += 1;
        }
    }
    out
}

/// Body-relative bearing of ray `k`: rays evenly spaced across the spread,
/// symmetric about the heading, ray 0 at the most clockwise bearing.
fn ray_bearing(cfg: &RaycastConfig, k: usize) -> f64 {
    let spread = cfg.spread_deg.to_radians();
    if cfg.n_rays == 1 {
        return 0.0;
    }
    -spread / 2.0 + spread * (k as f64) / (cfg.n_rays as f64 - 1.0)
}

/// Distance along the ray to a disc, if it intersects within `range`.
fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64, range: f64) -> Option<f64> {
    let oc = origin - center;
    let b = dir.dot(oc);
    let c = oc.norm_sq() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t = if -b - sq >= 0.0 { -b - sq } else { -b + sq };
    (t >= 0.0 && t <= range).then_some(t)
}

/// Distance to the nearest arena wall along the ray, if within range.
fn ray_walls(origin: Vec2, dir: Vec2, width: f64, height: f64, range: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64, point_ok: bool| {
        if t >= 0.0 && t <= range && point_ok {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    };
    if dir.x.abs() > 1e-12 {
        for wall_x in [0.0, width] {
            let t = (wall_x - origin.x) / dir.x;
            let y = origin.y + t * dir.y;
            consider(t, (0.0..=height).contains(&y));
        }
    }
    if dir.y.abs() > 1e-12 {
        for wall_y in [0.0, height] {
            let t = (wall_y - origin.y) / dir.y;
            let x = origin.x + t * dir.x;
            consider(t, (0.0..=width).contains(&x));
        }
    }
    best
}

/// Cast all rays for one agent; per ray the nearest object class wins. The
/// casting agent's own body is excluded.
pub fn cast_rays(
    state: &WorldState,
    agent_id: usize,
    cfg: &RaycastConfig,
) -> Result<Vec<RayHit>, SimError> {
    let agent = state.agent(agent_id)?;
    let origin = agent.position;
    let mut hits = Vec::with_capacity(cfg.n_rays);
    for k in 0..cfg.n_rays {
        let dir = agent.heading.rotated(ray_bearing(cfg, k));
        let mut best = RayHit::MISS;
        let mut best_t = f64::INFINITY;
        let mut consider = |tag: RayTag, t: Option<f64>| {
            if let Some(t) = t {
                if t < best_t {
                    best_t = t;
                    best = RayHit {
                        tag,
                        distance: t / cfg.range,
                    };
                }
            }
        };
        for other in &state.agents {
            if other.id == agent_id {
                continue;
            }
            consider(
                RayTag::Agent,
                ray_circle(origin, dir, other.position, other.radius, cfg.range),
            );
        }
        if state.config.predator_enabled {
            consider(
                RayTag::Predator,
                ray_circle(
                    origin,
                    dir,
                    state.predator.position,
                    state.config.predator_radius,
                    cfg.range,
                ),
            );
        }
        for item in &state.food {
            consider(
                RayTag::Food,
                ray_circle(origin, dir, item.position, item.radius, cfg.range),
            );
        }
        consider(
            RayTag::Wall,
            ray_walls(origin, dir, state.config.arena.width, state.config.arena.height, cfg.range),
        );
        hits.push(best);
    }
    Ok(hits)
}

fn self_features(state: &WorldState, agent_id: usize) -> Result<(Vec2, Vec2, Vec2), SimError> {
    let agent = state.agent(agent_id)?;
    let arena = state.config.arena;
    let position = Vec2::new(agent.position.x / arena.width, agent.position.y / arena.height);
    let max_speed = state.config.prey_max_speed();
    let velocity = if max_speed > 0.0 {
        agent.heading * (agent.speed / max_speed)
    } else {
        Vec2::ZERO
    };
    Ok((position, velocity, agent.heading))
}

/// Local observation model: self features plus ray encodings.
pub fn build_observation_lom(state: &WorldState, agent_id: usize) -> Result<Observation, SimError> {
    let (self_position, self_velocity, self_heading) = self_features(state, agent_id)?;
    Ok(Observation {
        self_position,
        self_velocity,
        self_heading,
        rays: cast_rays(state, agent_id, &state.config.raycast)?,
        predator_block: None,
    })
}

/// Global observation model: LOM plus the predator block, populated regardless
/// of distance or occlusion.
pub fn build_observation_gom(state: &WorldState, agent_id: usize) -> Result<Observation, SimError> {
    let mut obs = build_observation_lom(state, agent_id)?;
    let agent = state.agent(agent_id)?;
    let arena = state.config.arena;
    let predator = &state.predator;
    obs.predator_block = Some(PredatorBlock {
        position: Vec2::new(predator.position.x / arena.width, predator.position.y / arena.height),
        velocity: predator.heading * (predator.speed / state.config.predator_speed),
        heading: predator.heading,
        distance: agent.position.distance(predator.position) / arena.diagonal(),
    });
    Ok(obs)
}

/// Observation for the configured model kind.
pub fn build_observation(state: &WorldState, agent_id: usize) -> Result<Observation, SimError> {
    match state.config.model {
        ModelKind::Gom => build_observation_gom(state, agent_id),
        _ => build_observation_lom(state, agent_id),
    }
}
