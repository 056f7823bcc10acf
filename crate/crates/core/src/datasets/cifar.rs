//! CIFAR-10 binary format: each record is 1 label byte followed by 3072
//! pixel bytes (1024 red, 1024 green, 1024 blue, each row-major 32x32).

use std::path::{Path, PathBuf};

use crate::datasets::{ImageSet, ImageShape, RawImage};
use crate::error::{Error, Result};

const RECORD_LEN: usize = 3073;
const PLANE: usize = 1024;
const SIDE: usize = 32;
const NUM_CLASSES: usize = 10;

/// Load CIFAR-10 binary batch files. Channel-planar records are converted to
/// the row-major `(row, col, channel)` pixel order used everywhere else.
pub fn load_cifar_binary(paths: &[PathBuf]) -> Result<ImageSet> {
    let shape = ImageShape::new(SIDE, SIDE, 3)?;
    let mut images = Vec::new();
    for path in paths {
        load_file(path, shape, &mut images)?;
    }
    ImageSet::new(images, shape, NUM_CLASSES)
}

fn load_file(path: &Path, shape: ImageShape, out: &mut Vec<RawImage>) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() % RECORD_LEN != 0 {
        return Err(Error::BadRecordLength {
            path: path.to_path_buf(),
            size: bytes.len(),
            record: RECORD_LEN,
        });
    }
    for (index, record) in bytes.chunks_exact(RECORD_LEN).enumerate() {
        let label = usize::from(record[0]);
        if label >= NUM_CLASSES {
            return Err(Error::CorruptRecord {
                path: path.to_path_buf(),
                index,
                reason: format!("label {label} out of range (num_classes {NUM_CLASSES})"),
            });
        }
        let data = &record[1..];
        let mut pixels = vec![0u8; shape.pixel_count()];
        for row in 0..SIDE {
            for col in 0..SIDE {
                for ch in 0..3 {
                    pixels[shape.offset(row, col, ch)] = data[ch * PLANE + row * SIDE + col];
                }
            }
        }
        out.push(RawImage {
            pixels,
            shape,
            label,
        });
    }
    Ok(())
}
