//! Dataset loading and preparation: IDX (Fashion MNIST) and CIFAR-10 binary
//! readers, synthetic substrates for fast tests, and pixel normalization.
//!
//! Features are flattened in row-major `(row, col, channel)` order; every
//! module that addresses pixels (in particular the trojan injector) relies on
//! that ordering.

mod cifar;
mod idx;
mod synth;
mod synth_images;

pub use cifar::load_cifar_binary;
pub use idx::{load_idx, write_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use synth::synth_dataset;
pub use synth_images::{synth_image_corpus, SynthImageConfig};

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Height, width and channel count shared by every image in a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn new(height: usize, width: usize, channels: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid_argument("image dimensions must be nonzero"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid_argument(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width * self.channels
    }

    /// Flat offset of `(row, col, channel)` in the row-major pixel buffer.
    pub fn offset(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }
}

/// One labeled image, pixels in raw `[0, 255]` intensities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub pixels: Vec<u8>,
    pub shape: ImageShape,
    pub label: usize,
}

/// A collection of images with uniform shape and a fixed class count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub images: Vec<RawImage>,
    pub shape: ImageShape,
    pub num_classes: usize,
}

impl ImageSet {
    pub fn new(images: Vec<RawImage>, shape: ImageShape, num_classes: usize) -> Result<Self> {
        for (i, img) in images.iter().enumerate() {
            if img.shape != shape {
                return Err(Error::invalid_argument(format!(
                    "image {i} shape {:?} does not match set shape {:?}",
                    img.shape, shape
                )));
            }
            if img.pixels.len() != shape.pixel_count() {
                return Err(Error::invalid_argument(format!(
                    "image {i} has {} pixels, expected {}",
                    img.pixels.len(),
                    shape.pixel_count()
                )));
            }
            if img.label >= num_classes {
                return Err(Error::invalid_argument(format!(
                    "image {i} label {} out of range (num_classes {num_classes})",
                    img.label
                )));
            }
        }
        Ok(Self {
            images,
            shape,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.images.iter().map(|img| img.label).collect()
    }

    /// A new set holding the images at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<ImageSet> {
        let mut images = Vec::with_capacity(indices.len());
        for &i in indices {
            let img = self
                .images
                .get(i)
                .ok_or_else(|| {
                    Error::invalid_argument(format!("image index {i} out of range ({})", self.len()))
                })?
                .clone();
            images.push(img);
        }
        Ok(ImageSet {
            images,
            shape: self.shape,
            num_classes: self.num_classes,
        })
    }
}

/// Normalized feature vectors ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::invalid_argument("feature_dim must be nonzero"));
        }
        if features.len() != labels.len() * feature_dim {
            return Err(Error::invalid_argument(format!(
                "feature buffer length {} != {} samples x {} dims",
                features.len(),
                labels.len(),
                feature_dim
            )));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "non-finite feature component {bad}"
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::invalid_argument(format!(
                "label {l} at sample {i} out of range (num_classes {num_classes})"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    /// All features as an `(n, feature_dim)` view.
    pub fn features_view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.len(), self.feature_dim), &self.features)
            .expect("buffer length is validated in the constructor")
    }

    /// A new dataset holding the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.feature_dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid_argument(format!(
                    "sample index {i} out of range ({})",
                    self.len()
                )));
            }
            features.extend_from_slice(self.feature(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(features, labels, self.num_classes, self.feature_dim)
    }
}

/// Per-channel normalization constants: `feature = (pixel/255 - mean) / std`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() || mean.is_empty() {
            return Err(Error::invalid_argument(
                "normalization mean/std must have equal nonzero length",
            ));
        }
        if std.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(Error::invalid_argument(
                "normalization std components must be positive",
            ));
        }
        Ok(Self { mean, std })
    }

    /// The same mean and std for every channel.
    pub fn uniform(mean: f64, std: f64, channels: usize) -> Result<Self> {
        Self::new(vec![mean; channels], vec![std; channels])
    }
}

/// Normalize raw pixels into model features, flattened row-major
/// `(row, col, channel)`.
pub fn normalize(images: &ImageSet, norm: &Normalization) -> Result<Dataset> {
    if norm.mean.len() != images.shape.channels {
        return Err(Error::invalid_argument(format!(
            "normalization has {} channels, images have {}",
            norm.mean.len(),
            images.shape.channels
        )));
    }
    let dim = images.shape.pixel_count();
    let channels = images.shape.channels;
    let mut features = Vec::with_capacity(images.len() * dim);
    for img in &images.images {
        for (i, &p) in img.pixels.iter().enumerate() {
            let c = i % channels;
            features.push((f64::from(p) / 255.0 - norm.mean[c]) / norm.std[c]);
        }
    }
    Dataset::new(features, images.labels(), images.num_classes, dim)
}

/// Invert [`normalize`] back to the pixel scale. Exact up to float rounding;
/// used by tests that check trojan pixels survive normalization.
pub fn denormalize(features: &[f64], channels: usize, norm: &Normalization) -> Vec<f64> {
    features
        .iter()
        .enumerate()
        .map(|(i, &f)| (f * norm.std[i % channels] + norm.mean[i % channels]) * 255.0)
        .collect()
}

/// Select a class-balanced subset of `total` images (`total / num_classes`
/// per class), shuffled within each class by `rng`. Errors if any class has
/// too few samples.
pub fn class_balanced_subset(
    images: &ImageSet,
    total: usize,
    rng: &mut impl rand::Rng,
) -> Result<ImageSet> {
    use rand::seq::SliceRandom;

    if total == 0 || images.num_classes == 0 {
        return Err(Error::invalid_argument(
            "subset size and class count must be nonzero",
        ));
    }
    let per_class = total / images.num_classes;
    if per_class == 0 {
        return Err(Error::invalid_argument(format!(
            "subset size {total} smaller than class count {}",
            images.num_classes
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); images.num_classes];
    for (i, img) in images.images.iter().enumerate() {
        by_class[img.label].push(i);
    }
    let mut keep = Vec::with_capacity(per_class * images.num_classes);
    for (c, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < per_class {
            return Err(Error::invalid_argument(format!(
                "class {c} has {} samples, need {per_class} for a balanced subset",
                idx.len()
            )));
        }
        idx.shuffle(rng);
        keep.extend_from_slice(&idx[..per_class]);
    }
    keep.sort_unstable();
    images.select(&keep)
}
