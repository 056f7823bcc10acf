//! Forward pass and exact cross-entropy gradients for both architectures.
//!
//! All math is plain f64 with fixed evaluation order, so results are
//! bit-reproducible for a given input.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::model::{ModelArch, ParamVector};

/// Split a flat softmax-regression parameter slice into `(w, b)`.
fn sr_views(
    params: &[f64],
    input_dim: usize,
    num_classes: usize,
) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
    let w_len = num_classes * input_dim;
    let w = ArrayView2::from_shape((num_classes, input_dim), &params[..w_len]).unwrap();
    let b = ArrayView1::from(&params[w_len..]);
    (w, b)
}

/// Split a flat MLP parameter slice into `(w1, b1, w2, b2)`.
#[allow(clippy::type_complexity)]
fn mlp_views(
    params: &[f64],
    input_dim: usize,
    hidden_dim: usize,
    num_classes: usize,
) -> (
    ArrayView2<'_, f64>,
    ArrayView1<'_, f64>,
    ArrayView2<'_, f64>,
    ArrayView1<'_, f64>,
) {
    let w1_len = hidden_dim * input_dim;
    let b1_end = w1_len + hidden_dim;
    let w2_end = b1_end + num_classes * hidden_dim;
    let w1 = ArrayView2::from_shape((hidden_dim, input_dim), &params[..w1_len]).unwrap();
    let b1 = ArrayView1::from(&params[w1_len..b1_end]);
    let w2 = ArrayView2::from_shape((num_classes, hidden_dim), &params[b1_end..w2_end]).unwrap();
    let b2 = ArrayView1::from(&params[w2_end..]);
    (w1, b1, w2, b2)
}

/// `x w^T + b` for a batch `x` of shape `B x n`, weights `m x n`, bias `m`.
fn affine(x: &ArrayView2<f64>, w: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array2<f64> {
    let mut out = x.dot(&w.t());
    out += b;
    out
}

fn check_shapes(arch: &ModelArch, params: &ParamVector, features: &ArrayView2<f64>) -> Result<()> {
    arch.validate()?;
    if params.len() != arch.param_count() {
        return Err(Error::invalid_argument(format!(
            "parameter vector has {} values, architecture needs {}",
            params.len(),
            arch.param_count()
        )));
    }
    if features.ncols() != arch.input_dim() {
        return Err(Error::invalid_argument(format!(
            "feature dim {} does not match architecture input dim {}",
            features.ncols(),
            arch.input_dim()
        )));
    }
    Ok(())
}

/// Compute logits for a batch. Returns a `B x C` array.
pub fn forward(
    arch: &ModelArch,
    params: &ParamVector,
    features: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    check_shapes(arch, params, &features)?;
    let p = params.as_slice();
    let logits = match *arch {
        ModelArch::SoftmaxRegression {
            input_dim,
            num_classes,
        } => {
            let (w, b) = sr_views(p, input_dim, num_classes);
            affine(&features, &w, &b)
        }
        ModelArch::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            let (w1, b1, w2, b2) = mlp_views(p, input_dim, hidden_dim, num_classes);
            let mut hidden = affine(&features, &w1, &b1);
            hidden.mapv_inplace(|z| z.max(0.0));
            affine(&hidden.view(), &w2, &b2)
        }
    };
    Ok(logits)
}

/// Mean cross-entropy over the batch and its exact gradient with respect to
/// every parameter, in the same flat layout as the parameter vector.
///
/// The loss uses the log-sum-exp form, so large logits do not overflow.
pub fn loss_and_grad(
    arch: &ModelArch,
    params: &ParamVector,
    features: ArrayView2<f64>,
    labels: &[usize],
) -> Result<(f64, Vec<f64>)> {
    check_shapes(arch, params, &features)?;
    let batch = features.nrows();
    if batch == 0 {
        return Err(Error::invalid_argument(
            "loss over an empty batch is undefined".to_string(),
        ));
    }
    if labels.len() != batch {
        return Err(Error::invalid_argument(format!(
            "batch has {} rows but {} labels",
            batch,
            labels.len()
        )));
    }
    let num_classes = arch.num_classes();
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid_argument(format!(
            "label {bad} out of range for {num_classes} classes"
        )));
    }

    let p = params.as_slice();

    // Forward, keeping the pre-activation of the hidden layer for the MLP.
    let (logits, hidden_pre, hidden) = match *arch {
        ModelArch::SoftmaxRegression {
            input_dim,
            num_classes,
        } => {
            let (w, b) = sr_views(p, input_dim, num_classes);
            (affine(&features, &w, &b), None, None)
        }
        ModelArch::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            let (w1, b1, _, _) = mlp_views(p, input_dim, hidden_dim, num_classes);
            let pre = affine(&features, &w1, &b1);
            let act = pre.mapv(|z| z.max(0.0));
            let (_, _, w2, b2) = mlp_views(p, input_dim, hidden_dim, num_classes);
            (affine(&act.view(), &w2, &b2), Some(pre), Some(act))
        }
    };

    // Loss and dlogits = (softmax - onehot) / batch in one pass.
    let mut loss = 0.0;
    let mut dlogits = logits;
    let inv_batch = 1.0 / batch as f64;
    for (row, &label) in dlogits.rows_mut().into_iter().zip(labels) {
        let row = row.into_slice().expect("logits are contiguous");
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        loss += sum.ln() - (row[label].ln());
        let inv_sum = 1.0 / sum;
        for v in row.iter_mut() {
            *v *= inv_sum;
        }
        row[label] -= 1.0;
        for v in row.iter_mut() {
            *v *= inv_batch;
        }
    }
    loss *= inv_batch;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: 0 });
    }

    // Backward.
    let mut grad = Vec::with_capacity(arch.param_count());
    match *arch {
        ModelArch::SoftmaxRegression { .. } => {
            let dw = dlogits.t().dot(&features);
            grad.extend_from_slice(dw.as_slice().expect("dot output is contiguous"));
            for col in dlogits.t().rows() {
                grad.push(col.sum());
            }
        }
        ModelArch::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            let (_, _, w2, _) = mlp_views(p, input_dim, hidden_dim, num_classes);
            let hidden = hidden.unwrap();
            let hidden_pre = hidden_pre.unwrap();
            let dw2 = dlogits.t().dot(&hidden);
            let mut dhidden = dlogits.dot(&w2);
            azip_relu_mask(&mut dhidden, &hidden_pre);
            let dw1 = dhidden.t().dot(&features);
            grad.extend_from_slice(dw1.as_slice().expect("dot output is contiguous"));
            for col in dhidden.t().rows() {
                grad.push(col.sum());
            }
            grad.extend_from_slice(dw2.as_slice().expect("dot output is contiguous"));
            for col in dlogits.t().rows() {
                grad.push(col.sum());
            }
        }
    }
    debug_assert_eq!(grad.len(), arch.param_count());
    Ok((loss, grad))
}

/// Zero out entries of `d` where the matching pre-activation was not positive.
/// The rectifier's subgradient at zero is taken as zero.
fn azip_relu_mask(d: &mut Array2<f64>, pre: &Array2<f64>) {
    ndarray::Zip::from(d).and(pre).for_each(|dv, &z| {
        if z <= 0.0 {
            *dv = 0.0;
        }
    });
}
