//! Data-poisoning backdoor: a plus-sign pixel pattern stamped onto raw
//! images, target-class mislabeling of the corrupt agent's dataset, and the
//! poisoned test set that defines backdoor accuracy.
//!
//! The adversary is purely a data poisoner: its update comes from the
//! unmodified [`local_train`](crate::model::local_train) on the poisoned
//! dataset, with no scaling or boosting, so it is indistinguishable from an
//! honest agent at the protocol level.

use crate::datasets::{normalize, Dataset, ImageSet, Normalization, RawImage};
use crate::error::{Error, Result};

/// Side length of the square block the pattern occupies.
pub const TROJAN_BLOCK: usize = 5;

/// The backdoor pattern and labeling rule.
///
/// The pattern is a plus sign spanning a 5x5 pixel block (middle row plus
/// middle column, 9 distinct pixels), anchored by its top-left corner and
/// stamped at `intensity` into every channel of the raw image before
/// normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrojanSpec {
    pub anchor_row: usize,
    pub anchor_col: usize,
    pub intensity: u8,
    pub target_class: usize,
}

impl Default for TrojanSpec {
    fn default() -> Self {
        Self {
            anchor_row: 0,
            anchor_col: 0,
            intensity: 255,
            target_class: 7,
        }
    }
}

/// The 9 `(row, col)` offsets of the plus sign relative to the anchor:
/// the middle row and middle column of the 5x5 block.
pub fn trojan_pixel_offsets() -> [(usize, usize); 9] {
    [
        (2, 0),
        (2, 1),
        (2, 2),
        (2, 3),
        (2, 4),
        (0, 2),
        (1, 2),
        (3, 2),
        (4, 2),
    ]
}

/// Stamp the pattern onto one image. Exactly the 9 plus-sign pixels change
/// (to `intensity` in every channel); the label is left alone.
pub fn apply_trojan(image: &RawImage, spec: &TrojanSpec) -> Result<RawImage> {
    let shape = image.shape;
    if spec.anchor_row + TROJAN_BLOCK > shape.height || spec.anchor_col + TROJAN_BLOCK > shape.width
    {
        return Err(Error::invalid_argument(format!(
            "trojan block at ({}, {}) does not fit a {}x{} image",
            spec.anchor_row, spec.anchor_col, shape.height, shape.width
        )));
    }
    let mut out = image.clone();
    for (dr, dc) in trojan_pixel_offsets() {
        for ch in 0..shape.channels {
            let off = shape.offset(spec.anchor_row + dr, spec.anchor_col + dc, ch);
            out.pixels[off] = spec.intensity;
        }
    }
    Ok(out)
}

fn check_target_class(set: &ImageSet, spec: &TrojanSpec) -> Result<()> {
    if spec.target_class >= set.num_classes {
        return Err(Error::invalid_argument(format!(
            "target class {} out of range ({} classes)",
            spec.target_class, set.num_classes
        )));
    }
    Ok(())
}

/// Build the corrupt agent's local dataset: the samples at `indices`, every
/// one trojaned and relabeled to the target class, then normalized.
pub fn poison_dataset(
    source: &ImageSet,
    indices: &[usize],
    spec: &TrojanSpec,
    norm: &Normalization,
) -> Result<Dataset> {
    check_target_class(source, spec)?;
    let mut images = Vec::with_capacity(indices.len());
    for &i in indices {
        let img = source.images.get(i).ok_or_else(|| {
            Error::invalid_argument(format!("sample index {i} out of range ({})", source.len()))
        })?;
        let mut poisoned = apply_trojan(img, spec)?;
        poisoned.label = spec.target_class;
        images.push(poisoned);
    }
    let set = ImageSet::new(images, source.shape, source.num_classes)?;
    normalize(&set, norm)
}

/// Build the poisoned test set: every test sample whose true class is not
/// the target class, trojaned and relabeled to the target class, then
/// normalized. Backdoor accuracy is plain accuracy on this set.
///
/// True target-class samples are excluded so the metric never credits the
/// backdoor for predictions that would be correct anyway.
pub fn build_poisoned_test(
    test: &ImageSet,
    spec: &TrojanSpec,
    norm: &Normalization,
) -> Result<Dataset> {
    check_target_class(test, spec)?;
    if test.is_empty() {
        return Err(Error::invalid_argument(
            "cannot build a poisoned test set from an empty test set",
        ));
    }
    let mut images = Vec::new();
    for img in &test.images {
        if img.label == spec.target_class {
            continue;
        }
        let mut poisoned = apply_trojan(img, spec)?;
        poisoned.label = spec.target_class;
        images.push(poisoned);
    }
    if images.is_empty() {
        return Err(Error::invalid_argument(
            "every test sample belongs to the target class; poisoned test set is empty",
        ));
    }
    let set = ImageSet::new(images, test.shape, test.num_classes)?;
    normalize(&set, norm)
}
