use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Which controller drives the prey agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lom,
    Gom,
    Boids,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lom => "lom",
            ModelKind::Gom => "gom",
            ModelKind::Boids => "boids",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lom" => Ok(ModelKind::Lom),
            "gom" => Ok(ModelKind::Gom),
            "boids" => Ok(ModelKind::Boids),
            other => Err(ConfigError::Invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaSpec {
    pub width: f64,
    pub height: f64,
}

impl ArenaSpec {
    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RaycastConfig {
    pub n_rays: usize,
    pub spread_deg: f64,
    pub range: f64,
}

impl Default for RaycastConfig {
    fn default() -> Self {
        RaycastConfig {
            n_rays: 18,
            spread_deg: 170.0,
            range: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoidConfig {
    pub vision_radius: f64,
    pub avoid_radius: f64,
    pub cohesion_weight: f64,
    pub alignment_weight: f64,
    pub avoidance_weight: f64,
    pub predator_flee_weight: f64,
    pub food_seek_weight: f64,
    pub max_turn_deg: f64,
}

impl Default for BoidConfig {
    fn default() -> Self {
        BoidConfig {
            vision_radius: 8.0,
            avoid_radius: 2.0,
            cohesion_weight: 1.0,
            alignment_weight: 1.0,
            avoidance_weight: 1.5,
            predator_flee_weight: 2.0,
            food_seek_weight: 0.5,
            max_turn_deg: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub entropy_coeff: f64,
    pub value_coeff: f64,
    pub batch_size: usize,
    pub buffer_size: usize,
    pub num_epoch: usize,
    pub time_horizon: usize,
    pub max_steps: u64,
    pub summary_freq: u64,
    pub hidden_units: usize,
    pub num_layers: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 3.0e-4,
            entropy_coeff: 5.0e-3,
            value_coeff: 0.5,
            batch_size: 128,
            buffer_size: 2048,
            num_epoch: 3,
            time_horizon: 64,
            max_steps: 1_000_000,
            summary_freq: 1000,
            hidden_units: 128,
            num_layers: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AggregationConfig {
    pub n_recordings: u64,
    pub frames_between: u64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            n_recordings: 100,
            frames_between: 100,
        }
    }
}

/// Full simulation + training configuration. All defaults are tunable; the
/// prey top speed is always 0.8x the predator's and is derived, not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub arena: ArenaSpec,
    pub n_agents: usize,
    pub n_food: usize,
    pub agent_radius: f64,
    pub food_radius: f64,
    pub predator_radius: f64,
    pub catch_radius: f64,
    pub predator_speed: f64,
    pub predator_vision_radius: f64,
    pub prey_max_turn_deg: f64,
    pub predator_max_turn_deg: f64,
    /// Turn instantly toward the target instead of rate-limited pursuit.
    pub predator_instant_turn: bool,
    /// Disable the predator entirely (food-only worlds).
    pub predator_enabled: bool,
    /// Retarget with 50% probability on each new vision entry instead of the
    /// memory rule. Comparison baseline, off by default.
    pub stochastic_retarget: bool,
    pub episode_length: u64,
    pub model: ModelKind,
    pub seed: u64,
    pub raycast: RaycastConfig,
    pub boids: BoidConfig,
    pub ppo: PpoConfig,
    pub aggregation: AggregationConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            arena: ArenaSpec {
                width: 50.0,
                height: 50.0,
            },
            n_agents: 15,
            n_food: 4,
            agent_radius: 0.5,
            food_radius: 0.5,
            predator_radius: 0.5,
            catch_radius: 1.0,
            predator_speed: 2.5,
            predator_vision_radius: 8.0,
            prey_max_turn_deg: 12.0,
            predator_max_turn_deg: 15.0,
            predator_instant_turn: false,
            predator_enabled: true,
            stochastic_retarget: false,
            episode_length: 1000,
            model: ModelKind::Lom,
            seed: 0,
            raycast: RaycastConfig::default(),
            boids: BoidConfig::default(),
            ppo: PpoConfig::default(),
            aggregation: AggregationConfig::default(),
        }
    }
}

impl SimConfig {
    /// Prey top speed, pinned to 80% of the predator's.
    pub fn prey_max_speed(&self) -> f64 {
        0.8 * self.predator_speed
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs: Vec<String> = Vec::new();
        if !(self.arena.width > 0.0 && self.arena.height > 0.0) {
            errs.push("arena dimensions must be positive".into());
        }
        if self.n_agents == 0 {
            errs.push("n_agents must be >= 1".into());
        }
        if self.n_food == 0 {
            errs.push("n_food must be >= 1".into());
        }
        for (name, v) in [
            ("agent_radius", self.agent_radius),
            ("food_radius", self.food_radius),
            ("predator_radius", self.predator_radius),
            ("catch_radius", self.catch_radius),
            ("predator_speed", self.predator_speed),
            ("predator_vision_radius", self.predator_vision_radius),
            ("raycast.range", self.raycast.range),
        ] {
            if !(v > 0.0) {
                errs.push(format!("{name} must be positive"));
            }
        }
        if self.raycast.n_rays == 0 {
            errs.push("raycast.n_rays must be >= 1".into());
        }
        if !(self.boids.avoid_radius < self.boids.vision_radius) {
            errs.push("boids.avoid_radius must be smaller than boids.vision_radius".into());
        }
        let w = &self.boids;
        if w.cohesion_weight < 0.0
            || w.alignment_weight < 0.0
            || w.avoidance_weight < 0.0
            || w.predator_flee_weight < 0.0
            || w.food_seek_weight < 0.0
        {
            errs.push("boids weights must be >= 0".into());
        }
        if w.cohesion_weight
            + w.alignment_weight
            + w.avoidance_weight
            + w.predator_flee_weight
            + w.food_seek_weight
            <= 0.0
        {
            errs.push("at least one boids weight must be > 0".into());
        }
        let p = &self.ppo;
        if !(p.clip_epsilon >= 0.1 && p.clip_epsilon <= 0.3) {
            errs.push("ppo.clip_epsilon must lie in [0.1, 0.3]".into());
        }
        if !(p.gamma >= 0.0 && p.gamma < 1.0) {
            errs.push("ppo.gamma must lie in [0, 1)".into());
        }
        if !(p.gae_lambda >= 0.0 && p.gae_lambda <= 1.0) {
            errs.push("ppo.gae_lambda must lie in [0, 1]".into());
        }
        if p.batch_size == 0 || p.buffer_size == 0 || p.num_epoch == 0 || p.time_horizon == 0 {
            errs.push("ppo batch/buffer/epoch/horizon must be >= 1".into());
        }
        if p.max_steps == 0 {
            errs.push("ppo.max_steps must be >= 1".into());
        }
        if self.episode_length == 0 {
            errs.push("episode_length must be >= 1".into());
        }
        if self.aggregation.n_recordings == 0 || self.aggregation.frames_between == 0 {
            errs.push("aggregation settings must be >= 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs.join("; ")))
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable hex digest over the canonical (key-sorted) JSON encoding.
    /// Semantically identical configs share a digest regardless of key order.
    pub fn digest(&self) -> String {
        // serde_json::Value maps are BTreeMaps, so re-encoding sorts keys
        let value = serde_json::to_value(self).expect("config is serializable");
        let canonical = serde_json::to_string(&value).expect("value is serializable");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}
