//! IDX binary format, as distributed for MNIST-family datasets.
//!
//! Image files: big-endian magic `0x00000803`, then three big-endian u32
//! dimensions (count, rows, cols), then `count * rows * cols` u8 pixels.
//! Label files: magic `0x00000801`, one u32 count, then `count` u8 labels.

use std::path::Path;

use crate::datasets::{ImageSet, ImageShape, RawImage};
use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    path: &'a Path,
    bytes: Vec<u8>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(path: &'a Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            path,
            bytes,
            pos: 0,
        })
    }

    fn read_u32(&mut self, field: &str) -> Result<u32> {
        if self.bytes.len() < self.pos + 4 {
            return Err(Error::Truncated {
                path: self.path.to_path_buf(),
                field: field.to_string(),
                expected: self.pos + 4,
                found: self.bytes.len(),
            });
        }
        let v = u32::from_be_bytes(self.bytes[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        Ok(v)
    }

    fn read_bytes(&mut self, len: usize, field: &str) -> Result<&[u8]> {
        if self.bytes.len() < self.pos + len {
            return Err(Error::Truncated {
                path: self.path.to_path_buf(),
                field: field.to_string(),
                expected: self.pos + len,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }
}

/// Load an IDX image/label file pair into an [`ImageSet`].
///
/// The class count is taken as `max label + 1` (10 for the standard
/// Fashion MNIST distribution).
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<ImageSet> {
    let mut ir = Reader::open(images_path)?;
    let magic = ir.read_u32("image magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic {
            path: images_path.to_path_buf(),
            field: "image magic",
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = ir.read_u32("image count")? as usize;
    let rows = ir.read_u32("image rows")? as usize;
    let cols = ir.read_u32("image cols")? as usize;

    let mut lr = Reader::open(labels_path)?;
    let magic = lr.read_u32("label magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::BadMagic {
            path: labels_path.to_path_buf(),
            field: "label magic",
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let label_count = lr.read_u32("label count")? as usize;
    if label_count != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }

    if count == 0 {
        let shape = ImageShape::new(rows.max(1), cols.max(1), 1)?;
        return ImageSet::new(Vec::new(), shape, 0);
    }

    let shape = ImageShape::new(rows, cols, 1)?;
    let pixels = ir.read_bytes(count * rows * cols, "pixel data")?.to_vec();
    let labels = lr.read_bytes(count, "label data")?.to_vec();

    let num_classes = usize::from(*labels.iter().max().unwrap()) + 1;
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        images.push(RawImage {
            pixels: pixels[i * rows * cols..(i + 1) * rows * cols].to_vec(),
            shape,
            label: usize::from(labels[i]),
        });
    }
    ImageSet::new(images, shape, num_classes)
}

/// Write an [`ImageSet`] as an IDX image/label file pair. Grayscale only.
///
/// Loading the result with [`load_idx`] reproduces the pixel and label bytes
/// exactly.
pub fn write_idx(images: &ImageSet, images_path: &Path, labels_path: &Path) -> Result<()> {
    if images.shape.channels != 1 {
        return Err(Error::invalid_argument(
            "IDX image files are single-channel",
        ));
    }
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };

    let mut img_bytes =
        Vec::with_capacity(16 + images.len() * images.shape.pixel_count());
    img_bytes.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img_bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(images.shape.height as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(images.shape.width as u32).to_be_bytes());
    for img in &images.images {
        img_bytes.extend_from_slice(&img.pixels);
    }
    std::fs::write(images_path, img_bytes).map_err(io_err(images_path))?;

    let mut lbl_bytes = Vec::with_capacity(8 + images.len());
    lbl_bytes.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lbl_bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    for img in &images.images {
        lbl_bytes.push(img.label as u8);
    }
    std::fs::write(labels_path, lbl_bytes).map_err(io_err(labels_path))?;
    Ok(())
}
