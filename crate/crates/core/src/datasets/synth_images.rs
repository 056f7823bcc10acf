//! Procedural 28x28 grayscale image corpus: ten shape classes on a dark
//! background with center jitter, size jitter, intensity jitter and pixel
//! noise. Several class pairs are deliberately confusable (disk vs ring,
//! square vs outline, stripes vs checkerboard) so trained models show a
//! class-wise accuracy ranking instead of uniform accuracy.
//!
//! The renderer uses only arithmetic, `sqrt`, `floor` and `abs`, so a given
//! seed produces identical bytes on every platform.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rand_chacha::ChaCha8Rng;

use crate::datasets::{ImageSet, ImageShape, RawImage};
use crate::error::{Error, Result};
use crate::seeds::rng_from;

const SIDE: usize = 28;
const MAX_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthImageConfig {
    pub num_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Std of the additive Gaussian pixel noise, in [0, 1] intensity units.
    pub noise: f64,
    /// Maximum absolute center shift in pixels.
    pub jitter: f64,
}

impl Default for SynthImageConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            train_per_class: 1000,
            test_per_class: 200,
            noise: 0.12,
            jitter: 3.0,
        }
    }
}

/// Generate a train/test pair. Both sets are deterministic given `seed`;
/// samples are emitted class-major.
pub fn synth_image_corpus(
    cfg: &SynthImageConfig,
    seed: u64,
) -> Result<(ImageSet, ImageSet)> {
    if cfg.num_classes < 2 || cfg.num_classes > MAX_CLASSES {
        return Err(Error::invalid_argument(format!(
            "num_classes must be in [2, {MAX_CLASSES}], got {}",
            cfg.num_classes
        )));
    }
    if cfg.train_per_class == 0 || cfg.test_per_class == 0 {
        return Err(Error::invalid_argument(
            "train_per_class and test_per_class must be nonzero",
        ));
    }
    if !(cfg.noise >= 0.0) || !(cfg.jitter >= 0.0) {
        return Err(Error::invalid_argument(
            "noise and jitter must be nonnegative",
        ));
    }
    let mut rng = rng_from(seed);
    let train = generate_set(cfg, cfg.train_per_class, &mut rng)?;
    let test = generate_set(cfg, cfg.test_per_class, &mut rng)?;
    Ok((train, test))
}

fn generate_set(
    cfg: &SynthImageConfig,
    per_class: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ImageSet> {
    let shape = ImageShape::new(SIDE, SIDE, 1)?;
    let mut images = Vec::with_capacity(cfg.num_classes * per_class);
    for class in 0..cfg.num_classes {
        for _ in 0..per_class {
            images.push(RawImage {
                pixels: render_sample(class, cfg, rng),
                shape,
                label: class,
            });
        }
    }
    ImageSet::new(images, shape, cfg.num_classes)
}

/// Linear 1px anti-aliasing ramp on a signed distance.
fn edge(t: f64) -> f64 {
    (t + 0.5).clamp(0.0, 1.0)
}

fn stripe(coord: f64, period: f64, phase: f64) -> f64 {
    let t = (coord + phase) / period;
    if t - t.floor() < 0.5 {
        1.0
    } else {
        0.0
    }
}

fn render_sample(class: usize, cfg: &SynthImageConfig, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let cx = 13.5 + rng.random_range(-cfg.jitter..=cfg.jitter);
    let cy = 13.5 + rng.random_range(-cfg.jitter..=cfg.jitter);
    let intensity = rng.random_range(0.55..=1.0);

    // Per-class geometry parameters; ranges overlap between confusable pairs.
    let a = rng.random_range(0.0..1.0f64);
    let b = rng.random_range(0.0..1.0f64);
    let c = rng.random_range(0.0..1.0f64);

    let shape_value: Box<dyn Fn(f64, f64) -> f64> = match class {
        // 0: filled disk.
        0 => {
            let r = 6.5 + 2.5 * a;
            Box::new(move |dx, dy| edge(r - (dx * dx + dy * dy).sqrt()))
        }
        // 1: ring; small inner radii approach the disk.
        1 => {
            let ro = 7.0 + 2.0 * a;
            let ri = 1.5 + 4.0 * b;
            Box::new(move |dx, dy| {
                let d = (dx * dx + dy * dy).sqrt();
                edge(ro - d) * edge(d - ri)
            })
        }
        // 2: filled square.
        2 => {
            let half = 5.5 + 2.0 * a;
            Box::new(move |dx, dy| edge(half - dx.abs().max(dy.abs())))
        }
        // 3: square outline; thin walls approach the filled square's edge.
        3 => {
            let half = 6.0 + 2.0 * a;
            let th = 1.5 + 1.5 * b;
            Box::new(move |dx, dy| {
                let m = dx.abs().max(dy.abs());
                edge(half - m) * edge(m - (half - th))
            })
        }
        // 4: horizontal stripes inside a square patch.
        4 => {
            let half = 6.5 + 1.5 * a;
            let period = 3.0 + 2.0 * b;
            let phase = c * period;
            Box::new(move |dx, dy| {
                edge(half - dx.abs().max(dy.abs())) * stripe(dy, period, phase)
            })
        }
        // 5: vertical stripes inside a square patch.
        5 => {
            let half = 6.5 + 1.5 * a;
            let period = 3.0 + 2.0 * b;
            let phase = c * period;
            Box::new(move |dx, dy| {
                edge(half - dx.abs().max(dy.abs())) * stripe(dx, period, phase)
            })
        }
        // 6: checkerboard inside a square patch.
        6 => {
            let half = 6.5 + 1.5 * a;
            let period = 3.0 + 2.0 * b;
            let phase = c * period;
            Box::new(move |dx, dy| {
                let sx = stripe(dx, period, phase);
                let sy = stripe(dy, period, phase);
                let check = if (sx > 0.5) != (sy > 0.5) { 1.0 } else { 0.0 };
                edge(half - dx.abs().max(dy.abs())) * check
            })
        }
        // 7: diagonal band across a square patch.
        7 => {
            let half = 7.0 + 1.5 * a;
            let width = 2.5 + 2.0 * b;
            Box::new(move |dx, dy| {
                let band = edge(width - (dx - dy).abs() * std::f64::consts::FRAC_1_SQRT_2);
                edge(half - dx.abs().max(dy.abs())) * band
            })
        }
        // 8: large centered plus.
        8 => {
            let arm = 1.5 + 1.0 * a;
            let len = 7.0 + 2.0 * b;
            Box::new(move |dx, dy| {
                let h = edge(arm - dy.abs()).min(edge(len - dx.abs()));
                let v = edge(arm - dx.abs()).min(edge(len - dy.abs()));
                h.max(v)
            })
        }
        // 9: dumbbell, two disks joined by a thin bar.
        9 => {
            let r = 3.0 + 1.5 * a;
            let off = 4.0 + 2.0 * b;
            Box::new(move |dx, dy| {
                let d1 = ((dx - off) * (dx - off) + dy * dy).sqrt();
                let d2 = ((dx + off) * (dx + off) + dy * dy).sqrt();
                let bar = edge(1.2 - dy.abs()).min(edge(off - dx.abs()));
                edge(r - d1).max(edge(r - d2)).max(bar)
            })
        }
        _ => unreachable!("class index validated by caller"),
    };

    let normal = StandardNormal;
    let mut pixels = Vec::with_capacity(SIDE * SIDE);
    for row in 0..SIDE {
        for col in 0..SIDE {
            let dx = col as f64 - cx;
            let dy = row as f64 - cy;
            let noise: f64 = normal.sample(rng);
            let v = intensity * shape_value(dx, dy) + cfg.noise * noise;
            pixels.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    pixels
}
