//! Reference models (softmax regression and a one-hidden-layer MLP with
//! rectifier activation), exact cross-entropy gradients, the Adam optimizer,
//! and the per-agent local training loop.

mod adam;
mod net;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use net::{forward, loss_and_grad};
pub use train::{local_train, LocalTrainConfig};

use std::path::Path;

use rand::Rng;

use crate::digest::fnv1a64;
use crate::error::{Error, Result};

/// Flat vector of model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// An agent's round result: the weight delta it proposes and the number of
/// local samples that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub delta: Vec<f64>,
    pub sample_count: usize,
}

/// Architecture descriptor. The flat parameter layout is fixed:
///
/// * softmax regression: `[w: C x in, row-major][b: C]`
/// * mlp: `[w1: hidden x in][b1: hidden][w2: C x hidden][b2: C]`
///
/// where logits are `w x + b` per layer and the MLP hidden layer applies the
/// rectifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelArch {
    SoftmaxRegression {
        input_dim: usize,
        num_classes: usize,
    },
    Mlp {
        input_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
    },
}

impl ModelArch {
    pub fn input_dim(&self) -> usize {
        match *self {
            ModelArch::SoftmaxRegression { input_dim, .. } => input_dim,
            ModelArch::Mlp { input_dim, .. } => input_dim,
        }
    }

    pub fn num_classes(&self) -> usize {
        match *self {
            ModelArch::SoftmaxRegression { num_classes, .. } => num_classes,
            ModelArch::Mlp { num_classes, .. } => num_classes,
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            ModelArch::SoftmaxRegression {
                input_dim,
                num_classes,
            } => (input_dim + 1) * num_classes,
            ModelArch::Mlp {
                input_dim,
                hidden_dim,
                num_classes,
            } => (input_dim + 1) * hidden_dim + (hidden_dim + 1) * num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ModelArch::SoftmaxRegression {
                input_dim,
                num_classes,
            } => input_dim >= 1 && num_classes >= 2,
            ModelArch::Mlp {
                input_dim,
                hidden_dim,
                num_classes,
            } => input_dim >= 1 && hidden_dim >= 1 && num_classes >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid_argument(format!(
                "architecture dimensions out of range: {self:?}"
            )))
        }
    }

    /// Stable hash of the architecture, stored in checkpoint headers.
    pub fn arch_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(28);
        match *self {
            ModelArch::SoftmaxRegression {
                input_dim,
                num_classes,
            } => {
                bytes.push(1u8);
                bytes.extend_from_slice(&(input_dim as u64).to_le_bytes());
                bytes.extend_from_slice(&(num_classes as u64).to_le_bytes());
            }
            ModelArch::Mlp {
                input_dim,
                hidden_dim,
                num_classes,
            } => {
                bytes.push(2u8);
                bytes.extend_from_slice(&(input_dim as u64).to_le_bytes());
                bytes.extend_from_slice(&(hidden_dim as u64).to_le_bytes());
                bytes.extend_from_slice(&(num_classes as u64).to_le_bytes());
            }
        }
        fnv1a64(&bytes)
    }
}

/// Round-0 initialization: per layer, weights uniform in `[-a, a]` with
/// `a = sqrt(6 / (fan_in + fan_out))`; biases zero.
pub fn init_params(arch: &ModelArch, rng: &mut impl Rng) -> ParamVector {
    fn push_layer(values: &mut Vec<f64>, rng: &mut impl Rng, fan_in: usize, fan_out: usize) {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            values.push((rng.random::<f64>() * 2.0 - 1.0) * a);
        }
        values.extend(std::iter::repeat(0.0).take(fan_out));
    }
    let mut values = Vec::with_capacity(arch.param_count());
    match *arch {
        ModelArch::SoftmaxRegression {
            input_dim,
            num_classes,
        } => {
            push_layer(&mut values, rng, input_dim, num_classes);
        }
        ModelArch::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            push_layer(&mut values, rng, input_dim, hidden_dim);
            push_layer(&mut values, rng, hidden_dim, num_classes);
        }
    }
    ParamVector(values)
}

const CHECKPOINT_HEADER_LEN: usize = 16;

/// Write a checkpoint: `d` and the arch hash as little-endian u64, then the
/// `d` parameter values as little-endian f64.
pub fn save_params(path: &Path, arch: &ModelArch, params: &ParamVector) -> Result<()> {
    if params.len() != arch.param_count() {
        return Err(Error::invalid_argument(format!(
            "parameter vector length {} does not match architecture ({})",
            params.len(),
            arch.param_count()
        )));
    }
    let mut bytes = Vec::with_capacity(CHECKPOINT_HEADER_LEN + params.len() * 8);
    bytes.extend_from_slice(&(params.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&arch.arch_hash().to_le_bytes());
    for v in params.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a checkpoint written by [`save_params`], validating the length and
/// architecture hash.
pub fn load_params(path: &Path, arch: &ModelArch) -> Result<ParamVector> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < CHECKPOINT_HEADER_LEN {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            field: "checkpoint header".to_string(),
            expected: CHECKPOINT_HEADER_LEN,
            found: bytes.len(),
        });
    }
    let d = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let hash = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if hash != arch.arch_hash() {
        return Err(Error::invalid_argument(format!(
            "checkpoint architecture hash {hash:#018x} does not match {:#018x}",
            arch.arch_hash()
        )));
    }
    if d != arch.param_count() {
        return Err(Error::invalid_argument(format!(
            "checkpoint has {d} parameters, architecture needs {}",
            arch.param_count()
        )));
    }
    let expected = CHECKPOINT_HEADER_LEN + d * 8;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            field: "checkpoint data".to_string(),
            expected,
            found: bytes.len(),
        });
    }
    let values = bytes[CHECKPOINT_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ParamVector(values))
}
