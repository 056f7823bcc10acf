//! Non-i.i.d. data distribution: per-class Dirichlet splits across agents and
//! the adversary's fixed uniform sample.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// Assignment of training-sample indices to agents.
///
/// Invariants: the per-agent lists are pairwise disjoint and their union
/// covers every source index exactly once. Individual lists may be empty for
/// heavily concentrated draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub assignments: Vec<Vec<usize>>,
    pub alpha: f64,
}

impl PartitionSpec {
    pub fn num_agents(&self) -> usize {
        self.assignments.len()
    }

    /// Plain-text form for audit and replay: one `agent <id>: <indices>` line
    /// per agent, preceded by the concentration parameter.
    pub fn to_text(&self) -> String {
        let mut out = format!("alpha {}\n", self.alpha);
        for (id, idx) in self.assignments.iter().enumerate() {
            out.push_str(&format!("agent {id}:"));
            for i in idx {
                out.push(' ');
                out.push_str(&i.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid_argument("empty partition text"))?;
        let alpha = header
            .strip_prefix("alpha ")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::invalid_argument("partition text must start with 'alpha <value>'"))?;
        let mut assignments = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rest = line
                .strip_prefix(&format!("agent {n}:"))
                .ok_or_else(|| {
                    Error::invalid_argument(format!("expected 'agent {n}:' line, got {line:?}"))
                })?;
            let idx = rest
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| {
                        Error::invalid_argument(format!("bad index {tok:?} on agent {n} line"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            assignments.push(idx);
        }
        if assignments.is_empty() {
            return Err(Error::invalid_argument("partition text has no agents"));
        }
        Ok(Self { assignments, alpha })
    }
}

/// Draw one Dirichlet(alpha * 1_k) proportion vector. Falls back to a
/// maximally concentrated one-hot draw if every Gamma sample underflows,
/// which matches the distribution's own limit for tiny alpha.
fn dirichlet_proportions(alpha: f64, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let mut values: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = values.iter().sum();
    if sum.is_finite() && sum > 0.0 {
        for v in &mut values {
            *v /= sum;
        }
        values
    } else {
        let winner = rng.random_range(0..k);
        let mut one_hot = vec![0.0; k];
        one_hot[winner] = 1.0;
        one_hot
    }
}

/// Distribute sample indices among `num_agents` agents: for each class, a
/// Dirichlet(alpha) proportion vector is drawn and the class's indices are
/// split contiguously (after an in-class shuffle) at the cumulative
/// proportions, flooring each boundary and giving remainder samples to the
/// last agent.
pub fn dirichlet_partition(
    labels: &[usize],
    num_agents: usize,
    alpha: f64,
    rng: &mut impl Rng,
) -> Result<PartitionSpec> {
    if labels.is_empty() {
        return Err(Error::invalid_argument("labels must be nonempty"));
    }
    if num_agents == 0 {
        return Err(Error::invalid_argument("num_agents must be at least 1"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid_argument(format!(
            "alpha must be a positive real, got {alpha}"
        )));
    }

    let num_classes = labels.iter().copied().max().unwrap() + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }

    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); num_agents];
    for mut idx in by_class {
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(rng);
        let n = idx.len();
        let p = dirichlet_proportions(alpha, num_agents, rng);
        let mut cum = 0.0;
        let mut start = 0;
        for (agent, &share) in p.iter().enumerate() {
            let end = if agent + 1 == num_agents {
                n
            } else {
                cum += share;
                // Clamp guards cumulative rounding drift above 1.0.
                ((cum * n as f64).floor() as usize).min(n)
            };
            assignments[agent].extend_from_slice(&idx[start..end]);
            start = end;
        }
    }

    Ok(PartitionSpec {
        assignments,
        alpha,
    })
}

/// Uniform sample of `sample_count` indices from `[0, dataset_size)` without
/// replacement.
pub fn sample_adversary_dataset(
    dataset_size: usize,
    sample_count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if sample_count > dataset_size {
        return Err(Error::invalid_argument(format!(
            "sample_count {sample_count} exceeds dataset_size {dataset_size}"
        )));
    }
    Ok(rand::seq::index::sample(rng, dataset_size, sample_count).into_vec())
}
