//! Deterministic 2D predator-prey simulator with a from-scratch PPO trainer,
//! a Reynolds boids control baseline, and the behavioral metrics pipeline.

pub mod boids;
pub mod config;
pub mod eval;
pub mod metrics;
pub mod perception;
pub mod policy;
pub mod predator;
pub mod vec2;
pub mod world;

pub use config::{
    AggregationConfig, ArenaSpec, BoidConfig, ConfigError, ModelKind, PpoConfig, RaycastConfig,
    SimConfig,
};
pub use predator::{PredatorState, TargetDecision};
pub use vec2::Vec2;
pub use world::{AgentAction, AgentState, FoodItem, RewardEvent, RewardKind, SimError, WorldState};
