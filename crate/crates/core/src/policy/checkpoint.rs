//! Checkpoint file format: a single JSON object carrying the layer list with
//! shapes and row-major weights, plus enough metadata to refuse mismatched
//! loads instead of silently misbehaving.

use super::mlp::PolicyNet;
use crate::config::ModelKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("unsupported checkpoint format version {got} (supported: {supported})")]
    UnsupportedFormat { got: u32, supported: u32 },
    #[error("checkpoint obs_dim {checkpoint} does not match expected {expected}")]
    DimensionMismatch { checkpoint: usize, expected: usize },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major weights followed by nothing; biases are their own records
    /// with cols = 1.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub hidden: usize,
    pub layers: Vec<LayerRecord>,
    pub training_step: u64,
    pub config_digest: String,
}

fn layer(name: &str, rows: usize, cols: usize, data: &[f64]) -> LayerRecord {
    LayerRecord {
        name: name.to_string(),
        rows,
        cols,
        data: data.to_vec(),
    }
}

impl Checkpoint {
    pub fn from_net(
        net: &PolicyNet,
        model_kind: ModelKind,
        training_step: u64,
        config_digest: String,
    ) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            model_kind,
            obs_dim: net.obs_dim,
            action_dim: net.action_dim,
            hidden: net.hidden,
            layers: vec![
                layer("trunk1.weight", net.hidden, net.obs_dim, &net.w1),
                layer("trunk1.bias", net.hidden, 1, &net.b1),
                layer("trunk2.weight", net.hidden, net.hidden, &net.w2),
                layer("trunk2.bias", net.hidden, 1, &net.b2),
                layer("mean_head.weight", net.action_dim, net.hidden, &net.w_mean),
                layer("mean_head.bias", net.action_dim, 1, &net.b_mean),
                layer("value_head.weight", 1, net.hidden, &net.w_value),
                layer("value_head.bias", 1, 1, &[net.b_value]),
                layer("log_std", net.action_dim, 1, &net.log_std),
            ],
            training_step,
            config_digest,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint is serializable")
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, CheckpointError> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedFormat {
                got: ckpt.format_version,
                supported: CHECKPOINT_FORMAT_VERSION,
            });
        }
        Ok(ckpt)
    }

    fn find(&self, name: &str, expect_len: usize) -> Result<&LayerRecord, CheckpointError> {
        let rec = self
            .layers
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| CheckpointError::Malformed(format!("missing layer `{name}`")))?;
        if rec.data.len() != rec.rows * rec.cols || rec.data.len() != expect_len {
            return Err(CheckpointError::Malformed(format!(
                "layer `{name}` has {} values, expected {expect_len}",
                rec.data.len()
            )));
        }
        Ok(rec)
    }

    /// Rebuild the network. `expected_obs_dim`, when given, must match the
    /// stored width (guards eval with a config of the wrong model).
    pub fn to_net(&self, expected_obs_dim: Option<usize>) -> Result<PolicyNet, CheckpointError> {
        if let Some(expected) = expected_obs_dim {
            if expected != self.obs_dim {
                return Err(CheckpointError::DimensionMismatch {
                    checkpoint: self.obs_dim,
                    expected,
                });
            }
        }
        let h = self.hidden;
        let (o, a) = (self.obs_dim, self.action_dim);
        Ok(PolicyNet {
            obs_dim: o,
            hidden: h,
            action_dim: a,
            w1: self.find("trunk1.weight", h * o)?.data.clone(),
            b1: self.find("trunk1.bias", h)?.data.clone(),
            w2: self.find("trunk2.weight", h * h)?.data.clone(),
            b2: self.find("trunk2.bias", h)?.data.clone(),
            w_mean: self.find("mean_head.weight", a * h)?.data.clone(),
            b_mean: self.find("mean_head.bias", a)?.data.clone(),
            w_value: self.find("value_head.weight", h)?.data.clone(),
            b_value: self.find("value_head.bias", 1)?.data[0],
            log_std: self.find("log_std", a)?.data.clone(),
        })
    }
}
