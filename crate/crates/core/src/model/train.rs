//! Per-agent local training: a fixed number of epochs of minibatch Adam
//! starting from the shared global weights, returning the weight delta.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::model::{adam_step, loss_and_grad, AdamConfig, AdamState, ModelArch, ParamVector, Update};
use crate::seeds::rng_from;

/// Local optimization schedule shared by every agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for LocalTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2,
            batch_size: 256,
            adam: AdamConfig::default(),
        }
    }
}

impl LocalTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid_argument(
                "batch_size must be at least 1".to_string(),
            ));
        }
        self.adam.validate()
    }
}

/// Train a copy of `global` on `dataset` and return the proposed update.
///
/// Every epoch reshuffles the sample order with a rng derived only from
/// `seed`, so the result is a pure function of its arguments. The optimizer
/// state starts fresh; nothing carries over between rounds. The final
/// partial batch is kept, not dropped.
pub fn local_train(
    arch: &ModelArch,
    global: &ParamVector,
    dataset: &Dataset,
    config: &LocalTrainConfig,
    seed: u64,
) -> Result<Update> {
    config.validate()?;
    arch.validate()?;
    if dataset.len() == 0 {
        return Err(Error::invalid_argument(
            "cannot train on an empty dataset".to_string(),
        ));
    }
    if dataset.feature_dim() != arch.input_dim() {
        return Err(Error::invalid_argument(format!(
            "dataset feature dim {} does not match architecture input dim {}",
            dataset.feature_dim(),
            arch.input_dim()
        )));
    }
    if dataset.num_classes() > arch.num_classes() {
        return Err(Error::invalid_argument(format!(
            "dataset has {} classes but the architecture only outputs {}",
            dataset.num_classes(),
            arch.num_classes()
        )));
    }
    if global.len() != arch.param_count() {
        return Err(Error::invalid_argument(format!(
            "parameter vector has {} values, architecture needs {}",
            global.len(),
            arch.param_count()
        )));
    }

    let mut params = global.clone();
    let mut state = AdamState::new(params.len(), config.adam)?;
    let mut rng = rng_from(seed);
    let n = dataset.len();
    let dim = dataset.feature_dim();
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_features = vec![0.0f64; config.batch_size.min(n) * dim];
    let mut batch_labels = Vec::with_capacity(config.batch_size.min(n));

    let mut step = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch_labels.clear();
            for (row, &idx) in chunk.iter().enumerate() {
                batch_features[row * dim..(row + 1) * dim].copy_from_slice(dataset.feature(idx));
                batch_labels.push(dataset.labels()[idx]);
            }
            let view =
                ArrayView2::from_shape((chunk.len(), dim), &batch_features[..chunk.len() * dim])
                    .expect("scratch buffer matches batch shape");
            step += 1;
            let (_, grad) = loss_and_grad(arch, &params, view, &batch_labels)
                .map_err(|e| match e {
                    Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { step },
                    other => other,
                })?;
            adam_step(&mut state, &mut params.0, &grad)?;
        }
    }

    let delta = params
        .0
        .iter()
        .zip(global.as_slice())
        .map(|(w, g)| w - g)
        .collect();
    Ok(Update {
        delta,
        sample_count: n,
    })
}
