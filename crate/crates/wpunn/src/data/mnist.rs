//! IDX binary format: big-endian magic, dimension sizes, then raw bytes.
//! This is the format MNIST ships in (magic 2051 for images, 2049 for
//! labels). Pixels are scaled to [0, 1] on load.

use crate::data::ClassificationDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::path::Path;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
    name: &'a str,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self) -> Result<u32> {
        let end = self.offset + 4;
        if end > self.bytes.len() {
            return Err(Error::Format(format!(
                "{}: truncated at offset {} (needed 4 bytes, have {})",
                self.name,
                self.offset,
                self.bytes.len() - self.offset
            )));
        }
        let v = u32::from_be_bytes(self.bytes[self.offset..end].try_into().unwrap());
        self.offset = end;
        Ok(v)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.offset + n;
        if end > self.bytes.len() {
            return Err(Error::Format(format!(
                "{}: truncated at offset {} (needed {n} bytes, have {})",
                self.name,
                self.offset,
                self.bytes.len() - self.offset
            )));
        }
        let s = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(s)
    }
}

/// Parse an IDX image file: magic 2051, count, rows, cols, pixel bytes.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let mut c = Cursor {
        bytes,
        offset: 0,
        name: "images",
    };
    let magic = c.u32()?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "images: expected magic {IMAGE_MAGIC} at offset 0, got {magic}"
        )));
    }
    let count = c.u32()? as usize;
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let pixels = c.take(count * rows * cols)?.to_vec();
    Ok((count, rows, cols, pixels))
}

/// Parse an IDX label file: magic 2049, count, label bytes.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut c = Cursor {
        bytes,
        offset: 0,
        name: "labels",
    };
    let magic = c.u32()?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "labels: expected magic {LABEL_MAGIC} at offset 0, got {magic}"
        )));
    }
    let count = c.u32()? as usize;
    Ok(c.take(count)?.to_vec())
}

/// Encode images (`count * rows * cols` pixel bytes) as IDX.
pub fn encode_idx_images(count: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), count * rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(count as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    out.extend_from_slice(pixels);
    out
}

/// Encode labels as IDX.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Load an MNIST-style image/label file pair. Pixels are divided by 255;
/// each image becomes one feature row of `rows * cols` values.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<ClassificationDataset> {
    let image_bytes = std::fs::read(images_path)
        .map_err(|e| Error::Io(format!("{}: {e}", images_path.display())))?;
    let label_bytes = std::fs::read(labels_path)
        .map_err(|e| Error::Io(format!("{}: {e}", labels_path.display())))?;
    from_idx_bytes(&image_bytes, &label_bytes)
}

/// Same as [`load_mnist`] but over in-memory buffers.
pub fn from_idx_bytes(image_bytes: &[u8], label_bytes: &[u8]) -> Result<ClassificationDataset> {
    let (count, rows, cols, pixels) = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if labels.len() != count {
        return Err(Error::Format(format!(
            "count mismatch: {count} images but {} labels",
            labels.len()
        )));
    }
    let d = rows * cols;
    let features: Vec<f64> = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    ClassificationDataset::new(
        Tensor::matrix(count, d, features)?,
        labels.iter().map(|&l| l as usize).collect(),
        10,
    )
}
