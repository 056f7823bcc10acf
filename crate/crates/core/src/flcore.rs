//! The federated round engine: agent sampling, update collection, weighted
//! FedAvg aggregation, the sign-agreement robust learning rate, and the
//! server weight update.
//!
//! Determinism contract: every random choice is drawn from an rng derived
//! from `(master_seed, run_index, agent or namespace, round)`, so a full run
//! is a pure function of the config and the master seed. Aggregation always
//! iterates agents in ascending id order to keep float summation stable.

use crate::datasets::Dataset;
use crate::digest::digest_f64s;
use crate::error::{Error, Result};
use crate::metrics::{correct_count, evaluate, MetricsRecord};
use crate::model::{init_params, local_train, LocalTrainConfig, ModelArch, ParamVector, Update};
use crate::seeds::{derive_seed, rng_from, NS_INIT, NS_SAMPLING};

/// Server-side robustness defense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defense {
    /// Plain FedAvg: every dimension moves with the server learning rate.
    None,
    /// Robust learning rate: a dimension moves with `+lr` only when at least
    /// `theta` agents (net of sign cancellation) agree on its direction,
    /// and with `-lr` otherwise.
    Rlr { theta: usize },
}

/// Early-stop rule: halt when the train accuracy span over the trailing
/// `window` rounds drops below `min_delta_pp` percentage points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauRule {
    pub window: usize,
    pub min_delta_pp: f64,
}

impl Default for PlateauRule {
    fn default() -> Self {
        Self {
            window: 5,
            min_delta_pp: 0.1,
        }
    }
}

/// Server loop configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub num_agents: usize,
    /// Fraction of agents sampled each round, in `(0, 1]`.
    pub participation: f64,
    pub server_lr: f64,
    pub rounds: u32,
    pub defense: Defense,
    pub local: LocalTrainConfig,
    pub plateau: Option<PlateauRule>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            num_agents: 10,
            participation: 1.0,
            server_lr: 1.0,
            rounds: 50,
            defense: Defense::None,
            local: LocalTrainConfig::default(),
            plateau: Some(PlateauRule::default()),
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 {
            return Err(Error::invalid_argument("num_agents must be at least 1"));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(Error::invalid_argument(format!(
                "participation {} outside (0, 1]",
                self.participation
            )));
        }
        if !(self.server_lr > 0.0 && self.server_lr.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "server_lr {} must be positive and finite",
                self.server_lr
            )));
        }
        if let Defense::Rlr { theta } = self.defense {
            if theta > self.num_agents {
                return Err(Error::invalid_argument(format!(
                    "theta {theta} exceeds the number of agents {}",
                    self.num_agents
                )));
            }
        }
        if let Some(p) = self.plateau {
            if p.window == 0 || !(p.min_delta_pp >= 0.0) {
                return Err(Error::invalid_argument(
                    "plateau rule needs window >= 1 and min_delta_pp >= 0",
                ));
            }
        }
        self.local.validate()
    }

    /// Number of agents sampled per round: `round(participation * K)`,
    /// clamped to `[1, K]`.
    pub fn sampled_count(&self) -> usize {
        let m = (self.participation * self.num_agents as f64).round() as usize;
        m.clamp(1, self.num_agents)
    }
}

/// Everything one run trains and evaluates on. Agent ids index `agents`;
/// when an attack is configured upstream, agent 0 holds the poisoned data.
/// Test sets are borrowed so sweeps can share them across runs.
#[derive(Debug, Clone)]
pub struct FlDataset<'a> {
    pub agents: Vec<Dataset>,
    pub clean_test: &'a Dataset,
    pub poisoned_test: Option<&'a Dataset>,
}

/// Audit record of one round, sufficient to compare whole histories
/// bit for bit across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u32,
    /// Digest of the post-update global weights.
    pub weights_digest: u64,
    /// `(agent_id, digest of its delta)` for every participating agent,
    /// ascending by agent id.
    pub update_digests: Vec<(usize, u64)>,
    /// Accuracy on the union of agent training data, percent.
    pub train_accuracy: f64,
    pub metrics: MetricsRecord,
}

/// Full history of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub records: Vec<RoundRecord>,
    pub final_weights: ParamVector,
    pub stopped_early: bool,
}

impl RunHistory {
    /// Metrics of the last completed round. `None` for zero-round runs.
    pub fn final_metrics(&self) -> Option<&MetricsRecord> {
        self.records.last().map(|r| &r.metrics)
    }
}

/// Sample-count weighted mean of the deltas: `Σ n_k Δ_k / Σ n_k`.
pub fn fedavg_aggregate(updates: &[Update]) -> Result<Vec<f64>> {
    let dim = check_updates(updates)?;
    let total: f64 = updates.iter().map(|u| u.sample_count as f64).sum();
    if total == 0.0 {
        return Err(Error::invalid_argument(
            "all updates carry zero samples; the weighted mean is undefined",
        ));
    }
    // Normalize weights first: a lone update passes through bit-exactly
    // (its weight is exactly 1.0) and magnitudes stay bounded.
    let mut out = vec![0.0f64; dim];
    for u in updates {
        let w = u.sample_count as f64 / total;
        for (o, d) in out.iter_mut().zip(&u.delta) {
            *o += w * d;
        }
    }
    Ok(out)
}

/// Per-dimension robust learning rate: `+eta` where the absolute sum of
/// update signs reaches `theta`, `-eta` elsewhere. `sign(0)` counts as 0.
///
/// Any `theta` is accepted here, including values above the update count
/// (which flip every dimension); [`ServerConfig::validate`] bounds the
/// configured value by the agent count.
pub fn rlr_lr_vector(updates: &[Update], theta: usize, eta: f64) -> Result<Vec<f64>> {
    let dim = check_updates(updates)?;
    let threshold = theta as f64;
    let mut lr = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut sign_sum = 0.0f64;
        for u in updates {
            let d = u.delta[i];
            if d > 0.0 {
                sign_sum += 1.0;
            } else if d < 0.0 {
                sign_sum -= 1.0;
            }
        }
        lr.push(if sign_sum.abs() >= threshold { eta } else { -eta });
    }
    Ok(lr)
}

fn check_updates(updates: &[Update]) -> Result<usize> {
    let first = updates
        .first()
        .ok_or_else(|| Error::invalid_argument("update list is empty"))?;
    let dim = first.delta.len();
    for (k, u) in updates.iter().enumerate() {
        if u.delta.len() != dim {
            return Err(Error::invalid_argument(format!(
                "update {k} has dim {}, expected {dim}",
                u.delta.len()
            )));
        }
    }
    Ok(dim)
}

/// Server update: `w_i + lr_i * delta_i` componentwise.
pub fn apply_update(
    weights: &ParamVector,
    lr_vector: &[f64],
    agg_delta: &[f64],
) -> Result<ParamVector> {
    let d = weights.len();
    if lr_vector.len() != d || agg_delta.len() != d {
        return Err(Error::invalid_argument(format!(
            "dimension mismatch: {} weights, {} learning rates, {} delta entries",
            d,
            lr_vector.len(),
            agg_delta.len()
        )));
    }
    let mut out = Vec::with_capacity(d);
    let mut finite = true;
    for i in 0..d {
        let w = weights.0[i] + lr_vector[i] * agg_delta[i];
        finite &= w.is_finite();
        out.push(w);
    }
    if finite {
        Ok(ParamVector(out))
    } else {
        Err(Error::NonFiniteWeights)
    }
}

/// Ids of the agents participating this round, ascending. With full
/// participation the whole population is used without consuming randomness,
/// so sampled-cohort and full-cohort runs stay comparable seed for seed.
fn select_agents(
    server: &ServerConfig,
    master_seed: u64,
    run_index: u32,
    round: u32,
) -> Vec<usize> {
    let k = server.num_agents;
    let m = server.sampled_count();
    if m == k {
        return (0..k).collect();
    }
    let mut rng = rng_from(derive_seed(master_seed, run_index, NS_SAMPLING, round));
    let mut ids = rand::seq::index::sample(&mut rng, k, m).into_vec();
    ids.sort_unstable();
    ids
}

/// One federated round: sample agents, train each sampled agent locally
/// from the shared weights, aggregate, and apply the server update.
///
/// Agents with empty datasets are skipped (they hold no data to train on);
/// a round where every sampled agent is empty is an error.
pub fn run_round(
    arch: &ModelArch,
    global: &ParamVector,
    data: &FlDataset<'_>,
    server: &ServerConfig,
    master_seed: u64,
    run_index: u32,
    round: u32,
) -> Result<(ParamVector, Vec<(usize, u64)>)> {
    server.validate()?;
    if data.agents.len() != server.num_agents {
        return Err(Error::invalid_argument(format!(
            "{} agent datasets for {} configured agents",
            data.agents.len(),
            server.num_agents
        )));
    }
    let selected = select_agents(server, master_seed, run_index, round);
    let mut updates = Vec::with_capacity(selected.len());
    let mut digests = Vec::with_capacity(selected.len());
    for &agent in &selected {
        let dataset = &data.agents[agent];
        if dataset.is_empty() {
            continue;
        }
        let seed = derive_seed(master_seed, run_index, agent as u32, round);
        let update = local_train(arch, global, dataset, &server.local, seed)?;
        digests.push((agent, digest_f64s(&update.delta)));
        updates.push(update);
    }
    if updates.is_empty() {
        return Err(Error::invalid_argument(
            "every sampled agent has an empty dataset",
        ));
    }
    let agg = fedavg_aggregate(&updates)?;
    let lr = match server.defense {
        Defense::None => vec![server.server_lr; agg.len()],
        Defense::Rlr { theta } => rlr_lr_vector(&updates, theta, server.server_lr)?,
    };
    let new_weights = apply_update(global, &lr, &agg)?;
    Ok((new_weights, digests))
}

/// Accuracy over the union of agent datasets, percent, computed without
/// materializing the union.
fn train_accuracy(arch: &ModelArch, params: &ParamVector, agents: &[Dataset]) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for a in agents {
        if a.is_empty() {
            continue;
        }
        hits += correct_count(arch, params, a)?;
        total += a.len();
    }
    if total == 0 {
        return Err(Error::invalid_argument("no training data across agents"));
    }
    Ok(100.0 * hits as f64 / total as f64)
}

/// Run a full training: initialize, run up to `server.rounds` rounds, and
/// evaluate on the clean (and, when present, poisoned) test set each round.
///
/// Stops early when the optional plateau rule fires on train accuracy.
pub fn run_training(
    arch: &ModelArch,
    server: &ServerConfig,
    data: &FlDataset<'_>,
    master_seed: u64,
    run_index: u32,
) -> Result<RunHistory> {
    server.validate()?;
    arch.validate()?;
    let mut weights = init_params(arch, &mut rng_from(derive_seed(master_seed, run_index, NS_INIT, 0)));
    let mut records: Vec<RoundRecord> = Vec::with_capacity(server.rounds as usize);
    let mut stopped_early = false;
    for round in 0..server.rounds {
        let (next, update_digests) =
            run_round(arch, &weights, data, server, master_seed, run_index, round)
                .map_err(|e| e.at_round(round as usize))?;
        weights = next;
        let metrics = evaluate(arch, &weights, data.clean_test, data.poisoned_test)
            .map_err(|e| e.at_round(round as usize))?;
        let train_acc = train_accuracy(arch, &weights, &data.agents)?;
        records.push(RoundRecord {
            round,
            weights_digest: digest_f64s(weights.as_slice()),
            update_digests,
            train_accuracy: train_acc,
            metrics,
        });
        if let Some(rule) = server.plateau {
            let n = records.len();
            if n >= rule.window {
                let tail = &records[n - rule.window..];
                let max = tail
                    .iter()
                    .map(|r| r.train_accuracy)
                    .fold(f64::NEG_INFINITY, f64::max);
                let min = tail
                    .iter()
                    .map(|r| r.train_accuracy)
                    .fold(f64::INFINITY, f64::min);
                if max - min < rule.min_delta_pp {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(RunHistory {
        records,
        final_weights: weights,
        stopped_early,
    })
}
