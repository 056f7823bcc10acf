//! Deterministic federated-learning simulator core.
//!
//! The crate builds up from small, separately testable layers:
//!
//! * [`datasets`]: image corpora (IDX and CIFAR binary readers, synthetic
//!   generators) and normalization into flat f64 feature matrices.
//! * [`partition`]: Dirichlet label-skew splits of a dataset across agents.
//! * [`model`]: softmax-regression and MLP classifiers, exact gradients,
//!   Adam, and the per-agent local training loop.
//! * [`flcore`]: the federated server loop, weighted aggregation, and the
//!   sign-agreement robust learning rate defense.
//! * [`attack`]: the pixel-pattern backdoor and dataset poisoning.
//! * [`metrics`]: accuracy, class-wise bias, backdoor success, and
//!   cross-run aggregation.
//! * [`experiment`]: config parsing, seed derivation, sweeps, and CSV or
//!   markdown emission.
//!
//! Everything downstream of a `(config, master_seed)` pair is reproducible
//! bit for bit: no global RNG, no threads, no time-dependent behavior.

pub mod attack;
pub mod datasets;
pub mod digest;
pub mod error;
pub mod experiment;
pub mod flcore;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod seeds;

pub use error::{Error, Result};
pub use model::{ModelArch, ParamVector, Update};
