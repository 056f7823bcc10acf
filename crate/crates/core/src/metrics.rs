//! Evaluation: clean accuracy, per-class accuracies, the max-minus-min bias
//! metric, backdoor success, and mean/std aggregation across repeated runs.
//!
//! All percentages are in `[0, 100]`. Standard deviations use the population
//! divisor `n`; output headers say so.

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::model::{forward, ModelArch, ParamVector};

/// Per-round evaluation snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// Overall accuracy on the clean test set, percent.
    pub accuracy: f64,
    /// Per-class accuracies `M_c` on the clean test set, percent.
    pub classwise: Vec<f64>,
    /// `max(M_c) - min(M_c)`, percent. Higher means less fair.
    pub bias: f64,
    /// Accuracy on the poisoned test set, percent; absent in no-attack runs.
    /// Lower means more robust.
    pub backdoor_accuracy: Option<f64>,
}

/// Sample mean and population standard deviation of one metric over runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Two-pass mean and population standard deviation (divisor `n`).
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid_argument(
                "mean/std of an empty value list is undefined",
            ));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: var.sqrt(),
        })
    }
}

/// Final-round metrics of one experiment cell aggregated over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub accuracy: MeanStd,
    pub bias: MeanStd,
    pub backdoor_accuracy: Option<MeanStd>,
    pub seeds: Vec<u64>,
    pub config_digest: u64,
}

/// Argmax class per row; ties break toward the lowest class id.
pub fn predict(arch: &ModelArch, params: &ParamVector, data: &Dataset) -> Result<Vec<usize>> {
    let logits = forward(arch, params, data.features_view())?;
    let mut out = Vec::with_capacity(data.len());
    for row in logits.rows() {
        let mut best = 0usize;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Number of correctly classified samples.
pub fn correct_count(arch: &ModelArch, params: &ParamVector, data: &Dataset) -> Result<usize> {
    let preds = predict(arch, params, data)?;
    Ok(preds
        .iter()
        .zip(data.labels())
        .filter(|(p, l)| p == l)
        .count())
}

/// Overall accuracy, percent.
pub fn overall_accuracy(arch: &ModelArch, params: &ParamVector, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid_argument(
            "accuracy over an empty dataset is undefined",
        ));
    }
    Ok(100.0 * correct_count(arch, params, data)? as f64 / data.len() as f64)
}

/// Per-class accuracies `M_c = 100 * correct_c / total_c`.
///
/// Every class `0..num_classes` must appear at least once; otherwise the
/// missing class is named in the error.
pub fn classwise_accuracy(
    arch: &ModelArch,
    params: &ParamVector,
    data: &Dataset,
) -> Result<Vec<f64>> {
    let c = data.num_classes();
    let preds = predict(arch, params, data)?;
    let mut correct = vec![0usize; c];
    let mut total = vec![0usize; c];
    for (p, &l) in preds.iter().zip(data.labels()) {
        total[l] += 1;
        if *p == l {
            correct[l] += 1;
        }
    }
    if let Some(missing) = total.iter().position(|&t| t == 0) {
        return Err(Error::invalid_argument(format!(
            "class {missing} has no samples in the evaluation set"
        )));
    }
    Ok(correct
        .iter()
        .zip(&total)
        .map(|(&c, &t)| 100.0 * c as f64 / t as f64)
        .collect())
}

/// `max(M_c) - min(M_c)`. Higher values mean the model is less fair.
pub fn bias(classwise: &[f64]) -> Result<f64> {
    if classwise.is_empty() {
        return Err(Error::invalid_argument(
            "bias of an empty class list is undefined",
        ));
    }
    let max = classwise.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = classwise.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Accuracy on the poisoned test set: the fraction of trojaned samples
/// classified as the target class, percent. The set's labels are all the
/// target class by construction, so this is plain accuracy on it.
pub fn backdoor_accuracy(
    arch: &ModelArch,
    params: &ParamVector,
    poisoned: &Dataset,
) -> Result<f64> {
    if poisoned.is_empty() {
        return Err(Error::invalid_argument(
            "backdoor accuracy over an empty poisoned set is undefined",
        ));
    }
    overall_accuracy(arch, params, poisoned)
}

/// One-call evaluation of a weight vector on the clean test set and, when
/// present, the poisoned test set.
pub fn evaluate(
    arch: &ModelArch,
    params: &ParamVector,
    clean_test: &Dataset,
    poisoned_test: Option<&Dataset>,
) -> Result<MetricsRecord> {
    let classwise = classwise_accuracy(arch, params, clean_test)?;
    let accuracy = overall_accuracy(arch, params, clean_test)?;
    let bias = bias(&classwise)?;
    let backdoor_accuracy = match poisoned_test {
        Some(p) => Some(backdoor_accuracy(arch, params, p)?),
        None => None,
    };
    Ok(MetricsRecord {
        accuracy,
        classwise,
        bias,
        backdoor_accuracy,
    })
}

/// Aggregate the final-round metrics of repeated runs into mean and
/// population standard deviation per metric.
///
/// Either every run reports a backdoor accuracy or none does; a mix is a
/// bookkeeping bug upstream and is rejected.
pub fn aggregate_runs(
    finals: &[(u64, MetricsRecord)],
    config_digest: u64,
) -> Result<RunSummary> {
    if finals.is_empty() {
        return Err(Error::invalid_argument(
            "cannot aggregate zero runs",
        ));
    }
    let accs: Vec<f64> = finals.iter().map(|(_, m)| m.accuracy).collect();
    let biases: Vec<f64> = finals.iter().map(|(_, m)| m.bias).collect();
    let with_backdoor = finals
        .iter()
        .filter(|(_, m)| m.backdoor_accuracy.is_some())
        .count();
    let backdoor_accuracy = if with_backdoor == 0 {
        None
    } else if with_backdoor == finals.len() {
        let values: Vec<f64> = finals
            .iter()
            .map(|(_, m)| m.backdoor_accuracy.unwrap())
            .collect();
        Some(MeanStd::of(&values)?)
    } else {
        return Err(Error::invalid_argument(format!(
            "{with_backdoor} of {} runs report backdoor accuracy; expected all or none",
            finals.len()
        )));
    };
    Ok(RunSummary {
        accuracy: MeanStd::of(&accs)?,
        bias: MeanStd::of(&biases)?,
        backdoor_accuracy,
        seeds: finals.iter().map(|(s, _)| *s).collect(),
        config_digest,
    })
}
