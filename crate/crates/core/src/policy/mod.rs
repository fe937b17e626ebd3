pub mod checkpoint;
pub mod mlp;
pub mod ppo;
pub mod train;

pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_FORMAT_VERSION};
pub use mlp::{Adam, PolicyError, PolicyGrads, PolicyNet};
pub use ppo::{
    compute_gae, discounted_return, gaussian_entropy, gaussian_log_prob, learning_rate, ppo_loss,
    sample_action, update, LossStats, Transition, TransitionBatch,
};
pub use train::{action_from_sample, train, TrainError, TrainResult};
