//! Non-learning predator: vision-radius memory bookkeeping and the
//! confusion-based target selection rule, plus pursuit motion and catching.

use crate::config::SimConfig;
use crate::vec2::Vec2;
use crate::world::AgentState;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredatorState {
    pub position: Vec2,
    pub heading: Vec2,
    pub speed: f64,
    pub vision_radius: f64,
    pub catch_radius: f64,
    /// Prey ids currently inside the vision radius, ordered by entry time.
    pub memory: Vec<usize>,
    /// Only used by the optional 50%-retarget baseline mode.
    pub sticky_target: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetDecision {
    ChaseClosestGlobal(usize),
    ChaseLastEntered(usize),
    NoChange,
}

impl TargetDecision {
    pub fn target_id(self) -> Option<usize> {
        match self {
            TargetDecision::ChaseClosestGlobal(id) | TargetDecision::ChaseLastEntered(id) => {
                Some(id)
            }
            TargetDecision::NoChange => None,
        }
    }
}

impl PredatorState {
    pub fn new(position: Vec2, heading: Vec2, cfg: &SimConfig) -> Self {
        PredatorState {
            position,
            heading,
            speed: cfg.predator_speed,
            vision_radius: cfg.predator_vision_radius,
            catch_radius: cfg.catch_radius,
            memory: Vec::new(),
            sticky_target: None,
        }
    }

    fn in_vision(&self, agent: &AgentState) -> bool {
        self.position.distance(agent.position) <= self.vision_radius
    }

    /// Sync memory with the current vision contents. New entrants are appended
    /// in ascending-id order; leavers are dropped; retained order is preserved.
    pub fn update_memory(&mut self, agents: &[AgentState]) {
        let position = self.position;
        let vision = self.vision_radius;
        self.memory.retain(|&id| {
            agents
                .iter()
                .any(|a| a.id == id && position.distance(a.position) <= vision)
        });
        for agent in agents {
            if self.in_vision(agent) && !self.memory.contains(&agent.id) {
                self.memory.push(agent.id);
            }
        }
    }

    /// Confusion rule: fewer than two prey in sight clears memory and falls
    /// back to the globally closest prey; otherwise chase the last entrant.
    pub fn select_target(&mut self, agents: &[AgentState]) -> TargetDecision {
        let local: Vec<&AgentState> = agents.iter().filter(|a| self.in_vision(a)).collect();
        if local.len() < 2 {
            self.memory.clear();
            match closest_agent(self.position, agents) {
                Some(id) => TargetDecision::ChaseClosestGlobal(id),
                None => TargetDecision::NoChange,
            }
        } else if let Some(&last) = self.memory.last() {
            TargetDecision::ChaseLastEntered(last)
        } else {
            TargetDecision::NoChange
        }
    }

    /// 50%-retarget rule from prior work, kept as a comparison baseline.
    fn select_target_stochastic<R: Rng>(&mut self, agents: &[AgentState], rng: &mut R) -> TargetDecision {
        let previously_seen = self.memory.clone();
        self.update_memory(agents);
        for &id in &self.memory {
            if !previously_seen.contains(&id) && rng.gen_bool(0.5) {
                self.sticky_target = Some(id);
            }
        }
        if let Some(id) = self.sticky_target {
            if self.memory.contains(&id) {
                return TargetDecision::ChaseLastEntered(id);
            }
            self.sticky_target = None;
        }
        match closest_agent(self.position, agents) {
            Some(id) => {
                self.sticky_target = Some(id);
                TargetDecision::ChaseClosestGlobal(id)
            }
            None => TargetDecision::NoChange,
        }
    }

    /// One predator tick: memory update, target selection, rate-limited turn
    /// toward the target, then a constant-speed advance clamped to the arena.
    pub fn step<R: Rng>(
        &mut self,
        agents: &[AgentState],
        cfg: &SimConfig,
        dt: f64,
        rng: &mut R,
    ) -> TargetDecision {
        let decision = if cfg.stochastic_retarget {
            self.select_target_stochastic(agents, rng)
        } else {
            self.update_memory(agents);
            self.select_target(agents)
        };
        if let Some(id) = decision.target_id() {
            if let Some(target) = agents.iter().find(|a| a.id == id) {
                let desired = target.position - self.position;
                if desired.norm() > 0.0 {
                    if cfg.predator_instant_turn {
                        self.heading = desired.normalized();
                    } else {
                        let max_turn = cfg.predator_max_turn_deg.to_radians() * dt;
                        let delta = self.heading.signed_angle_to(desired);
                        let turn = delta.clamp(-max_turn, max_turn);
                        self.heading = self.heading.rotated(turn).normalized();
                    }
                }
            }
        }
        self.position += self.heading * (self.speed * dt);
        let r = cfg.predator_radius;
        self.position.x = self.position.x.clamp(r, cfg.arena.width - r);
        self.position.y = self.position.y.clamp(r, cfg.arena.height - r);
        decision
    }

    /// Ids within the catch radius (closed boundary: distance == radius catches).
    pub fn check_catch(&self, agents: &[AgentState]) -> Vec<usize> {
        agents
            .iter()
            .filter(|a| self.position.distance(a.position) <= self.catch_radius)
            .map(|a| a.id)
            .collect()
    }
}

/// Closest agent by Euclidean distance, ties broken by lowest id.
fn closest_agent(from: Vec2, agents: &[AgentState]) -> Option<usize> {
    agents
        .iter()
        .min_by(|a, b| {
            let da = from.distance(a.position);
            let db = from.distance(b.position);
            da.partial_cmp(&db)
                .unwrap()
                .then_with(|| a.id.cmp(&b.id))
        })
        .map(|a| a.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;

    fn agent(id: usize, x: f64, y: f64) -> AgentState {
        AgentState {
            id,
            position: Vec2::new(x, y),
            heading: Vec2::new(1.0, 0.0),
            speed: 0.0,
            radius: 0.5,
        }
    }

    fn predator_at(x: f64, y: f64) -> PredatorState {
        PredatorState::new(Vec2::new(x, y), Vec2::new(1.0, 0.0), &SimConfig::default())
    }

    #[test]
    fn memory_drops_leavers_keeps_order() {
        let mut p = predator_at(0.0, 0.0);
        p.memory = vec![0, 1];
        // a0 moved out of radius, a1 still inside
        let agents = vec![agent(0, 100.0, 0.0), agent(1, 3.0, 0.0)];
        p.update_memory(&agents);
        assert_eq!(p.memory, vec![1]);
    }

    #[test]
    fn memory_appends_new_entrant() {
        let mut p = predator_at(0.0, 0.0);
        p.memory = vec![1];
        let agents = vec![agent(1, 3.0, 0.0), agent(3, 4.0, 0.0)];
        p.update_memory(&agents);
        assert_eq!(p.memory, vec![1, 3]);
    }

    #[test]
    fn memory_empty_when_nobody_in_radius() {
        let mut p = predator_at(0.0, 0.0);
        p.memory = vec![0, 1];
        let agents = vec![agent(0, 100.0, 0.0), agent(1, 50.0, 40.0)];
        p.update_memory(&agents);
        assert!(p.memory.is_empty());
    }

    #[test]
    fn lone_prey_in_radius_clears_memory_and_chases_closest() {
        let mut p = predator_at(0.0, 0.0);
        let agents = vec![agent(0, 3.0, 0.0), agent(1, 30.0, 0.0)];
        p.update_memory(&agents);
        assert_eq!(p.memory, vec![0]);
        let d = p.select_target(&agents);
        assert_eq!(d, TargetDecision::ChaseClosestGlobal(0));
        assert!(p.memory.is_empty());
    }

    #[test]
    fn several_in_radius_chases_last_entrant() {
        let mut p = predator_at(0.0, 0.0);
        p.memory = vec![0, 1];
        let agents = vec![agent(0, 3.0, 0.0), agent(1, 4.0, 0.0), agent(2, 5.0, 0.0)];
        p.update_memory(&agents);
        assert_eq!(p.memory, vec![0, 1, 2]);
        assert_eq!(p.select_target(&agents), TargetDecision::ChaseLastEntered(2));
    }

    #[test]
    fn no_agents_no_change() {
        let mut p = predator_at(0.0, 0.0);
        assert_eq!(p.select_target(&[]), TargetDecision::NoChange);
    }

    #[test]
    fn equidistant_tie_breaks_to_lowest_id() {
        let agents = vec![agent(2, 5.0, 0.0), agent(1, 0.0, 5.0)];
        assert_eq!(closest_agent(Vec2::ZERO, &agents), Some(1));
    }

    #[test]
    fn catch_boundary_is_closed() {
        let p = predator_at(0.0, 0.0);
        let agents = vec![agent(0, p.catch_radius, 0.0), agent(1, p.catch_radius + 0.01, 0.0)];
        assert_eq!(p.check_catch(&agents), vec![0]);
    }

    #[test]
    fn turn_is_rate_limited() {
        let cfg = SimConfig::default();
        let mut p = predator_at(10.0, 10.0);
        p.heading = Vec2::new(1.0, 0.0);
        // target due "north" (90 degrees off heading)
        let agents = vec![agent(0, 10.0, 18.0)];
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        p.step(&agents, &cfg, 1.0, &mut rng);
        let turned = Vec2::new(1.0, 0.0).angle_to(p.heading).to_degrees();
        assert!((turned - cfg.predator_max_turn_deg).abs() < 1e-9);
    }
}
