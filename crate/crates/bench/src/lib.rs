//! Shared fixtures for the simulator benchmarks.

use fedsim_core::datasets::{synth_dataset, Dataset};
use fedsim_core::model::{ModelArch, Update};
use fedsim_core::seeds::rng_from;
use rand::Rng;

pub use fedsim_core;

/// A learnable 10-class vector dataset sized like one agent's shard.
pub fn agent_shard(samples_per_class: usize) -> Dataset {
    synth_dataset(10, samples_per_class, 784, 4.0, 7).expect("valid synthetic dataset")
}

pub fn softmax_arch() -> ModelArch {
    ModelArch::SoftmaxRegression {
        input_dim: 784,
        num_classes: 10,
    }
}

pub fn mlp_arch() -> ModelArch {
    ModelArch::Mlp {
        input_dim: 784,
        hidden_dim: 64,
        num_classes: 10,
    }
}

/// `count` random updates of dimension `dim` with varied sample counts.
pub fn random_updates(count: usize, dim: usize) -> Vec<Update> {
    let mut rng = rng_from(11);
    (0..count)
        .map(|i| Update {
            delta: (0..dim).map(|_| rng.random::<f64>() - 0.5).collect(),
            sample_count: 50 + 13 * i,
        })
        .collect()
}

/// Labels shaped like a ten-class train pool.
pub fn pool_labels(total: usize) -> Vec<usize> {
    (0..total).map(|i| i % 10).collect()
}
