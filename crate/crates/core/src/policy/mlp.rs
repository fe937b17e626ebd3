//! From-scratch policy/value network: a shared tanh trunk of two hidden
//! layers, a linear action-mean head, a state-independent log-std vector and a
//! scalar value head. Plain `Vec<f64>` math, no autograd.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("observation length {got} does not match network input {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("non-finite {0} encountered")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    pub obs_dim: usize,
    pub hidden: usize,
    pub action_dim: usize,
    /// hidden x obs_dim, row-major
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// hidden x hidden, row-major
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    /// action_dim x hidden, row-major
    pub w_mean: Vec<f64>,
    pub b_mean: Vec<f64>,
    /// 1 x hidden
    pub w_value: Vec<f64>,
    pub b_value: f64,
    pub log_std: Vec<f64>,
}

/// Forward-pass activations kept for backprop.
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub mean: Vec<f64>,
    pub value: f64,
}

/// Same shape as the parameters; accumulates gradients.
#[derive(Debug, Clone)]
pub struct PolicyGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w_mean: Vec<f64>,
    pub b_mean: Vec<f64>,
    pub w_value: Vec<f64>,
    pub b_value: f64,
    pub log_std: Vec<f64>,
}

fn matvec(w: &[f64], x: &[f64], b: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for c in 0..cols {
            acc += row[c] * x[c];
        }
        out[r] = acc;
    }
    out
}

impl PolicyNet {
    /// Uniform init scaled by fan-in; log-std starts at zero.
    pub fn new<R: Rng>(obs_dim: usize, hidden: usize, action_dim: usize, rng: &mut R) -> Self {
        let mut init = |rows: usize, cols: usize| -> Vec<f64> {
            let scale = (1.0 / cols as f64).sqrt();
            (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect()
        };
        let w1 = init(hidden, obs_dim);
        let w2 = init(hidden, hidden);
        let w_mean = init(action_dim, hidden);
        let w_value = init(1, hidden);
        PolicyNet {
            obs_dim,
            hidden,
            action_dim,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; hidden],
            w_mean,
            b_mean: vec![0.0; action_dim],
            w_value,
            b_value: 0.0,
            log_std: vec![0.0; action_dim],
        }
    }

    pub fn zeroed_grads(&self) -> PolicyGrads {
        PolicyGrads {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
            w_mean: vec![0.0; self.w_mean.len()],
            b_mean: vec![0.0; self.b_mean.len()],
            w_value: vec![0.0; self.w_value.len()],
            b_value: 0.0,
            log_std: vec![0.0; self.log_std.len()],
        }
    }

    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64), PolicyError> {
        let cache = self.forward_cached(obs)?;
        Ok((cache.mean, self.log_std.clone(), cache.value))
    }

    pub fn forward_cached(&self, obs: &[f64]) -> Result<ForwardCache, PolicyError> {
        if obs.len() != self.obs_dim {
            return Err(PolicyError::ShapeMismatch {
                expected: self.obs_dim,
                got: obs.len(),
            });
        }
        let mut h1 = matvec(&self.w1, obs, &self.b1, self.hidden, self.obs_dim);
        for v in &mut h1 {
            *v = v.tanh();
        }
        let mut h2 = matvec(&self.w2, &h1, &self.b2, self.hidden, self.hidden);
        for v in &mut h2 {
            *v = v.tanh();
        }
        let mean = matvec(&self.w_mean, &h2, &self.b_mean, self.action_dim, self.hidden);
        let mut value = self.b_value;
        for c in 0..self.hidden {
            value += self.w_value[c] * h2[c];
        }
        Ok(ForwardCache {
            input: obs.to_vec(),
            h1,
            h2,
            mean,
            value,
        })
    }

    /// Backpropagate loss gradients w.r.t. the mean head and the value output
    /// for one sample, accumulating into `grads`.
    pub fn backward(&self, cache: &ForwardCache, d_mean: &[f64], d_value: f64, grads: &mut PolicyGrads) {
        let h = self.hidden;
        // head layers
        let mut d_h2 = vec![0.0; h];
        for r in 0..self.action_dim {
            grads.b_mean[r] += d_mean[r];
            for c in 0..h {
                grads.w_mean[r * h + c] += d_mean[r] * cache.h2[c];
                d_h2[c] += self.w_mean[r * h + c] * d_mean[r];
            }
        }
        grads.b_value += d_value;
        for c in 0..h {
            grads.w_value[c] += d_value * cache.h2[c];
            d_h2[c] += self.w_value[c] * d_value;
        }
        // second trunk layer
        let mut d_h1 = vec![0.0; h];
        for r in 0..h {
            let d_pre = d_h2[r] * (1.0 - cache.h2[r] * cache.h2[r]);
            grads.b2[r] += d_pre;
            for c in 0..h {
                grads.w2[r * h + c] += d_pre * cache.h1[c];
                d_h1[c] += self.w2[r * h + c] * d_pre;
            }
        }
        // first trunk layer
        for r in 0..h {
            let d_pre = d_h1[r] * (1.0 - cache.h1[r] * cache.h1[r]);
            grads.b1[r] += d_pre;
            for c in 0..self.obs_dim {
                grads.w1[r * self.obs_dim + c] += d_pre * cache.input[c];
            }
        }
    }

    pub fn flat_len(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.w_mean.len()
            + self.b_mean.len()
            + self.w_value.len()
            + 1
            + self.log_std.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w_mean);
        out.extend_from_slice(&self.b_mean);
        out.extend_from_slice(&self.w_value);
        out.push(self.b_value);
        out.extend_from_slice(&self.log_std);
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<(), PolicyError> {
        if flat.len() != self.flat_len() {
            return Err(PolicyError::LengthMismatch(format!(
                "flat vector has {} entries, network needs {}",
                flat.len(),
                self.flat_len()
            )));
        }
        let mut pos = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[pos..pos + dst.len()]);
            pos += dst.len();
        };
        take(&mut self.w1);
        take(&mut self.b1);
        take(&mut self.w2);
        take(&mut self.b2);
        take(&mut self.w_mean);
        take(&mut self.b_mean);
        take(&mut self.w_value);
        self.b_value = flat[pos];
        pos += 1;
        let n = self.log_std.len();
        self.log_std.copy_from_slice(&flat[pos..pos + n]);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

impl PolicyGrads {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w_mean);
        out.extend_from_slice(&self.b_mean);
        out.extend_from_slice(&self.w_value);
        out.push(self.b_value);
        out.extend_from_slice(&self.log_std);
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
            .chain(self.w_mean.iter_mut())
            .chain(self.b_mean.iter_mut())
            .chain(self.w_value.iter_mut())
            .chain(self.log_std.iter_mut())
        {
            *v *= factor;
        }
        self.b_value *= factor;
    }
}

/// First-order adaptive-moment optimizer over the flattened parameter vector.
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Adam {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, net: &mut PolicyNet, grads: &PolicyGrads, lr: f64) -> Result<(), PolicyError> {
        let mut flat = net.to_flat();
        let g = grads.to_flat();
        if g.len() != flat.len() {
            return Err(PolicyError::LengthMismatch(
                "gradient/parameter size mismatch".into(),
            ));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..flat.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            flat[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        net.set_from_flat(&flat)
    }
}
