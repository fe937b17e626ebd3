//! Arena, agent/predator/food state, kinematics, collision resolution and
//! deterministic stepping with reward-event emission.

use crate::config::SimConfig;
use crate::predator::PredatorState;
use crate::vec2::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("expected {expected} actions, got {got}")]
    ActionCountMismatch { expected: usize, got: usize },
    #[error("unknown agent id {0}")]
    UnknownAgent(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub position: Vec2,
    pub heading: Vec2,
    pub speed: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodItem {
    pub position: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardKind {
    Foraging,
    Caught,
    WallCollision,
}

impl RewardKind {
    pub fn value(self) -> f64 {
        match self {
            RewardKind::Foraging => 0.5,
            RewardKind::Caught => -1.0,
            RewardKind::WallCollision => -0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardEvent {
    pub agent_id: usize,
    pub kind: RewardKind,
    pub value: f64,
}

impl RewardEvent {
    fn new(agent_id: usize, kind: RewardKind) -> Self {
        RewardEvent {
            agent_id,
            kind,
            value: kind.value(),
        }
    }
}

/// Control input for one agent on one tick. Components are clamped before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    /// Fraction of the per-tick turn limit, in [-1, 1].
    pub turn_rate: f64,
    /// Fraction of the prey top speed, in [0, 1].
    pub throttle: f64,
}

impl AgentAction {
    pub fn clamped(self) -> AgentAction {
        AgentAction {
            turn_rate: self.turn_rate.clamp(-1.0, 1.0),
            throttle: self.throttle.clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub agents: Vec<AgentState>,
    pub predator: PredatorState,
    pub food: Vec<FoodItem>,
    pub config: SimConfig,
    /// Per-agent wall-contact latch; the penalty fires once per contiguous
    /// contact episode.
    pub wall_contact: Vec<bool>,
    pub rng: ChaCha8Rng,
}

/// Rate-limited turn plus throttle-scaled advance; collision resolution
/// happens separately.
pub fn apply_action(
    agent: &AgentState,
    action: AgentAction,
    max_turn_deg: f64,
    max_speed: f64,
    dt: f64,
) -> AgentState {
    let action = action.clamped();
    let turn = action.turn_rate * max_turn_deg.to_radians() * dt;
    let heading = agent.heading.rotated(turn).normalized();
    let speed = action.throttle * max_speed;
    AgentState {
        position: agent.position + heading * (speed * dt),
        heading,
        speed,
        ..*agent
    }
}

impl WorldState {
    /// Build a fresh world. Placement order is fixed (predator, agents, food)
    /// so identical `(config, seed)` pairs yield bit-identical states.
    pub fn init(config: &SimConfig, seed: u64) -> Result<WorldState, crate::config::ConfigError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arena = config.arena;

        let predator_pos = random_position(&mut rng, arena.width, arena.height, config.predator_radius);
        let predator_heading = Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
        let predator = PredatorState::new(predator_pos, predator_heading, config);

        let mut agents: Vec<AgentState> = Vec::with_capacity(config.n_agents);
        for id in 0..config.n_agents {
            let position = sample_free_position(
                &mut rng,
                config,
                config.agent_radius,
                &agents,
                &[],
                Some(&predator),
            );
            let heading = Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
            agents.push(AgentState {
                id,
                position,
                heading,
                speed: 0.0,
                radius: config.agent_radius,
            });
        }

        let mut food: Vec<FoodItem> = Vec::with_capacity(config.n_food);
        for _ in 0..config.n_food {
            let position =
                sample_free_position(&mut rng, config, config.food_radius, &agents, &food, Some(&predator));
            food.push(FoodItem {
                position,
                radius: config.food_radius,
            });
        }

        Ok(WorldState {
            tick: 0,
            wall_contact: vec![false; agents.len()],
            agents,
            predator,
            food,
            config: config.clone(),
            rng,
        })
    }

    pub fn agent(&self, id: usize) -> Result<&AgentState, SimError> {
        self.agents.get(id).filter(|a| a.id == id).ok_or(SimError::UnknownAgent(id))
    }

    /// Advance one tick: apply actions, step the predator, resolve collisions,
    /// then process events in fixed order (catches, foraging, walls).
    pub fn step(&mut self, actions: &[AgentAction]) -> Result<Vec<RewardEvent>, SimError> {
        if actions.len() != self.agents.len() {
            return Err(SimError::ActionCountMismatch {
                expected: self.agents.len(),
                got: actions.len(),
            });
        }
        let dt = 1.0;
        let cfg = self.config.clone();
        let max_speed = cfg.prey_max_speed();

        for (agent, &action) in self.agents.iter_mut().zip(actions) {
            *agent = apply_action(agent, action, cfg.prey_max_turn_deg, max_speed, dt);
        }

        if cfg.predator_enabled {
            self.predator.step(&self.agents, &cfg, dt, &mut self.rng);
        }

        let wall_hits = resolve_collisions(&mut self.agents, &cfg);

        let mut events: Vec<RewardEvent> = Vec::new();

        // 1. catches: caught prey respawn at a random free position so the
        // population stays constant
        if cfg.predator_enabled {
            for id in self.predator.check_catch(&self.agents) {
                events.push(RewardEvent::new(id, RewardKind::Caught));
                self.predator.memory.retain(|&m| m != id);
                let pos = sample_free_position(
                    &mut self.rng,
                    &cfg,
                    cfg.agent_radius,
                    &self.agents,
                    &self.food,
                    Some(&self.predator),
                );
                let agent = &mut self.agents[id];
                agent.position = pos;
                agent.speed = 0.0;
            }
        }

        // 2. foraging: first overlapping agent (lowest id) consumes, food relocates
        for i in 0..self.food.len() {
            let item = self.food[i].clone();
            let eater = self
                .agents
                .iter()
                .find(|a| a.position.distance(item.position) <= a.radius + item.radius)
                .map(|a| a.id);
            if let Some(id) = eater {
                events.push(RewardEvent::new(id, RewardKind::Foraging));
                self.food[i].position = sample_free_position(
                    &mut self.rng,
                    &cfg,
                    cfg.food_radius,
                    &self.agents,
                    &self.food,
                    Some(&self.predator),
                );
            }
        }

        // 3. wall contacts, debounced per contiguous contact episode
        for (idx, hit) in wall_hits.iter().enumerate() {
            if *hit && !self.wall_contact[idx] {
                events.push(RewardEvent::new(self.agents[idx].id, RewardKind::WallCollision));
            }
            self.wall_contact[idx] = *hit;
        }

        self.tick += 1;
        Ok(events)
    }
}

/// Iterative symmetric push-out until no two discs interpenetrate, with wall
/// clamping each pass. Returns which agents touched a wall.
pub fn resolve_collisions(agents: &mut [AgentState], cfg: &SimConfig) -> Vec<bool> {
    const MAX_PASSES: usize = 16;
    let mut wall_hit = vec![false; agents.len()];
    for _ in 0..MAX_PASSES {
        let mut moved = false;
        for i in 0..agents.len() {
            for j in (i + 1)..agents.len() {
                let delta = agents[j].position - agents[i].position;
                let dist = delta.norm();
                let min_dist = agents[i].radius + agents[j].radius;
                if dist < min_dist - 1e-12 {
                    let push_dir = if dist > 1e-12 {
                        delta / dist
                    } else {
                        // coincident centers: separate along a fixed axis
                        Vec2::new(1.0, 0.0)
                    };
                    let push = push_dir * ((min_dist - dist) / 2.0);
                    agents[i].position = agents[i].position - push;
                    agents[j].position = agents[j].position + push;
                    moved = true;
                }
            }
        }
        for (idx, agent) in agents.iter_mut().enumerate() {
            let r = agent.radius;
            let (w, h) = (cfg.arena.width, cfg.arena.height);
            if agent.position.x < r || agent.position.x > w - r || agent.position.y < r || agent.position.y > h - r
            {
                wall_hit[idx] = true;
                agent.position.x = agent.position.x.clamp(r, w - r);
                agent.position.y = agent.position.y.clamp(r, h - r);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    wall_hit
}

fn random_position<R: Rng>(rng: &mut R, width: f64, height: f64, radius: f64) -> Vec2 {
    Vec2::new(
        rng.gen_range(radius..width - radius),
        rng.gen_range(radius..height - radius),
    )
}

/// Rejection-sample a position whose disc overlaps no agent, food item, or the
/// predator. Falls back to the last sample if the arena is too crowded.
fn sample_free_position<R: Rng>(
    rng: &mut R,
    cfg: &SimConfig,
    radius: f64,
    agents: &[AgentState],
    food: &[FoodItem],
    predator: Option<&PredatorState>,
) -> Vec2 {
    const MAX_TRIES: usize = 1000;
    let mut pos = random_position(rng, cfg.arena.width, cfg.arena.height, radius);
    for _ in 0..MAX_TRIES {
        let clear = agents
            .iter()
            .all(|a| a.position.distance(pos) >= a.radius + radius)
            && food
                .iter()
                .all(|f| f.position.distance(pos) >= f.radius + radius)
            && predator.map_or(true, |p| {
                p.position.distance(pos) >= cfg.predator_radius + radius
            });
        if clear {
            return pos;
        }
        pos = random_position(rng, cfg.arena.width, cfg.arena.height, radius);
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelKind;

    fn small_cfg() -> SimConfig {
        SimConfig {
            n_agents: 3,
            n_food: 2,
            model: ModelKind::Lom,
            ..SimConfig::default()
        }
    }

    #[test]
    fn init_places_requested_counts() {
        let cfg = SimConfig {
            n_food: 4,
            ..SimConfig::default()
        };
        let w = WorldState::init(&cfg, 7).unwrap();
        assert_eq!(w.food.len(), 4);
        assert_eq!(w.agents.len(), cfg.n_agents);
        assert_eq!(w.tick, 0);
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = small_cfg();
        let a = WorldState::init(&cfg, 42).unwrap();
        let b = WorldState::init(&cfg, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_has_no_initial_overlaps() {
        let cfg = SimConfig {
            n_agents: 15,
            ..SimConfig::default()
        };
        let w = WorldState::init(&cfg, 1).unwrap();
        for i in 0..w.agents.len() {
            for j in (i + 1)..w.agents.len() {
                let d = w.agents[i].position.distance(w.agents[j].position);
                assert!(d >= 2.0 * cfg.agent_radius - 1e-9, "agents {i},{j} overlap: {d}");
            }
        }
    }

    #[test]
    fn init_rejects_bad_config() {
        let cfg = SimConfig {
            n_agents: 0,
            ..SimConfig::default()
        };
        assert!(WorldState::init(&cfg, 0).is_err());
    }

    #[test]
    fn apply_action_straight_advance() {
        let agent = AgentState {
            id: 0,
            position: Vec2::ZERO,
            heading: Vec2::new(1.0, 0.0),
            speed: 0.0,
            radius: 0.5,
        };
        // throttle chosen so speed = 2 with max_speed 2
        let next = apply_action(
            &agent,
            AgentAction { turn_rate: 0.0, throttle: 1.0 },
            10.0,
            2.0,
            0.1,
        );
        assert!((next.position.x - 0.2).abs() < 1e-12);
        assert!(next.position.y.abs() < 1e-12);
    }

    #[test]
    fn apply_action_zero_throttle_stays_put() {
        let agent = AgentState {
            id: 0,
            position: Vec2::new(3.0, 4.0),
            heading: Vec2::new(0.0, 1.0),
            speed: 1.0,
            radius: 0.5,
        };
        let next = apply_action(
            &agent,
            AgentAction { turn_rate: 0.3, throttle: 0.0 },
            10.0,
            2.0,
            1.0,
        );
        assert_eq!(next.position, agent.position);
        assert_eq!(next.speed, 0.0);
    }

    #[test]
    fn apply_action_full_turn_matches_rotation_matrix() {
        let agent = AgentState {
            id: 0,
            position: Vec2::ZERO,
            heading: Vec2::new(1.0, 0.0),
            speed: 0.0,
            radius: 0.5,
        };
        let next = apply_action(
            &agent,
            AgentAction { turn_rate: 1.0, throttle: 0.0 },
            10.0,
            2.0,
            1.0,
        );
        // independent rotation-matrix evaluation at 10 degrees
        let theta = 10.0_f64.to_radians();
        let expected = Vec2::new(theta.cos(), theta.sin());
        assert!((next.heading - expected).norm() < 1e-12);
    }

    #[test]
    fn collision_separates_overlapping_pair() {
        let cfg = SimConfig::default();
        let mut agents = vec![
            AgentState {
                id: 0,
                position: Vec2::new(10.0, 10.0),
                heading: Vec2::new(1.0, 0.0),
                speed: 0.0,
                radius: 1.0,
            },
            AgentState {
                id: 1,
                position: Vec2::new(11.0, 10.0),
                heading: Vec2::new(1.0, 0.0),
                speed: 0.0,
                radius: 1.0,
            },
        ];
        resolve_collisions(&mut agents, &cfg);
        let d = agents[0].position.distance(agents[1].position);
        assert!(d >= 2.0 - 1e-9);
    }

    #[test]
    fn collision_clamps_outside_wall() {
        let cfg = SimConfig::default();
        let mut agents = vec![AgentState {
            id: 0,
            position: Vec2::new(-0.5, 10.0),
            heading: Vec2::new(1.0, 0.0),
            speed: 0.0,
            radius: 0.5,
        }];
        let hits = resolve_collisions(&mut agents, &cfg);
        assert_eq!(agents[0].position.x, 0.5);
        assert!(hits[0]);
    }

    #[test]
    fn collision_three_way_terminates_separated() {
        let cfg = SimConfig::default();
        let mut agents: Vec<AgentState> = (0..3)
            .map(|id| AgentState {
                id,
                position: Vec2::new(10.0 + 0.1 * id as f64, 10.0 + 0.05 * id as f64),
                heading: Vec2::new(1.0, 0.0),
                speed: 0.0,
                radius: 0.5,
            })
            .collect();
        resolve_collisions(&mut agents, &cfg);
        // fixed-point re-check of all pairwise distances
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d = agents[i].position.distance(agents[j].position);
                assert!(d >= 1.0 - 1e-9, "pair {i},{j} at {d}");
            }
        }
    }

    #[test]
    fn step_rejects_wrong_action_count() {
        let mut w = WorldState::init(&small_cfg(), 0).unwrap();
        let r = w.step(&[AgentAction { turn_rate: 0.0, throttle: 0.0 }]);
        assert!(matches!(r, Err(SimError::ActionCountMismatch { .. })));
    }

    #[test]
    fn step_foraging_event_and_relocation() {
        let mut w = WorldState::init(&small_cfg(), 3).unwrap();
        // plant food directly on agent 0
        w.food[0].position = w.agents[0].position;
        let before = w.food[0].position;
        let actions = vec![AgentAction { turn_rate: 0.0, throttle: 0.0 }; 3];
        w.predator.position = Vec2::new(49.0, 49.0); // keep predator away
        let events = w.step(&actions).unwrap();
        let foraging: Vec<_> = events
            .iter()
            .filter(|e| e.kind == RewardKind::Foraging)
            .collect();
        assert_eq!(foraging.len(), 1);
        assert_eq!(foraging[0].agent_id, 0);
        assert_eq!(foraging[0].value, 0.5);
        assert_ne!(w.food[0].position, before);
        assert_eq!(w.food.len(), 2);
    }

    #[test]
    fn step_catch_event_and_respawn() {
        let mut w = WorldState::init(&small_cfg(), 5).unwrap();
        // predator advances one tick (speed 2.5) straight onto the victim
        w.predator.position = Vec2::new(25.0, 25.0);
        w.predator.heading = Vec2::new(1.0, 0.0);
        w.agents[1].position = Vec2::new(27.5, 25.0);
        for a in &mut w.agents {
            if a.id != 1 {
                a.position = Vec2::new(2.0, 2.0 + 2.0 * a.id as f64);
            }
        }
        let actions = vec![AgentAction { turn_rate: 0.0, throttle: 0.0 }; 3];
        let events = w.step(&actions).unwrap();
        let caught: Vec<_> = events.iter().filter(|e| e.kind == RewardKind::Caught).collect();
        assert_eq!(caught.len(), 1);
        assert_eq!(caught[0].agent_id, 1);
        assert_eq!(caught[0].value, -1.0);
        // respawned away from the predator, population unchanged
        assert_eq!(w.agents.len(), 3);
        assert!(w.agents[1].position.distance(w.predator.position) > w.config.catch_radius);
    }

    #[test]
    fn step_no_contact_no_events() {
        let mut w = WorldState::init(&small_cfg(), 11).unwrap();
        w.predator.position = Vec2::new(1.0, 1.0);
        w.agents[0].position = Vec2::new(25.0, 25.0);
        w.agents[1].position = Vec2::new(35.0, 25.0);
        w.agents[2].position = Vec2::new(25.0, 35.0);
        w.food[0].position = Vec2::new(45.0, 45.0);
        w.food[1].position = Vec2::new(45.0, 40.0);
        let mut cfg = w.config.clone();
        cfg.predator_enabled = false;
        w.config = cfg;
        let actions = vec![AgentAction { turn_rate: 0.0, throttle: 0.0 }; 3];
        let events = w.step(&actions).unwrap();
        assert!(events.is_empty());
        assert_eq!(w.tick, 1);
    }

    #[test]
    fn wall_penalty_is_debounced() {
        let mut w = WorldState::init(&small_cfg(), 13).unwrap();
        let mut cfg = w.config.clone();
        cfg.predator_enabled = false;
        w.config = cfg;
        for (i, a) in w.agents.iter_mut().enumerate() {
            a.position = Vec2::new(25.0 + 5.0 * i as f64, 25.0);
            a.heading = Vec2::new(0.0, 1.0);
        }
        w.agents[0].position = Vec2::new(25.0, 49.4);
        for f in &mut w.food {
            f.position = Vec2::new(2.0, 2.0);
        }
        // drive agent 0 into the top wall for several ticks
        let actions = vec![AgentAction { turn_rate: 0.0, throttle: 1.0 }; 3];
        let mut wall_events = 0;
        for _ in 0..5 {
            let events = w.step(&actions).unwrap();
            wall_events += events
                .iter()
                .filter(|e| e.kind == RewardKind::WallCollision && e.agent_id == 0)
                .count();
        }
        assert_eq!(wall_events, 1, "penalty must fire once per contact episode");
    }
}
