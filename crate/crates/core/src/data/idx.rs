//! IDX container (MNIST, Fashion-MNIST, EMNIST).
//!
//! Layout: 4-byte big-endian magic, one 4-byte big-endian size per
//! dimension, then unsigned bytes in row-major order. Inputs starting with
//! the gzip signature `1f 8b` are decompressed first.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::{DataError, Dataset};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Load an image file and a label file into a dataset with pixels
/// scaled to `[0, 1]`. The class count is `max(label) + 1`, at least 2.
pub fn load_idx(image_path: &Path, label_path: &Path) -> Result<Dataset, DataError> {
    let images = read_maybe_gz(image_path)?;
    let labels = read_maybe_gz(label_path)?;
    parse_idx(&images, &labels)
}

pub fn parse_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Dataset, DataError> {
    let (dims, pixels) = parse_container(image_bytes, IDX_IMAGES_MAGIC)?;
    let (label_dims, raw_labels) = parse_container(label_bytes, IDX_LABELS_MAGIC)?;
    let n_images = dims[0];
    let n_labels = label_dims[0];
    if n_images != n_labels {
        return Err(DataError::DimensionMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let n_features = dims[1] * dims[2];
    let features = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|&l| usize::from(l)).collect();
    let n_classes = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
    Dataset::new(features, labels, n_features, n_classes)
}

fn parse_container(bytes: &[u8], magic: u32) -> Result<(Vec<usize>, &[u8]), DataError> {
    let n_dims = (magic & 0xff) as usize;
    let header_len = 4 + 4 * n_dims;
    if bytes.len() < 4 {
        return Err(DataError::Truncated {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let found = read_u32(bytes, 0);
    if found != magic {
        return Err(DataError::BadMagic {
            expected: magic,
            found,
        });
    }
    if bytes.len() < header_len {
        return Err(DataError::Truncated {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let dims: Vec<usize> = (0..n_dims)
        .map(|i| read_u32(bytes, 4 + 4 * i) as usize)
        .collect();
    let body_len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| DataError::Malformed("IDX dimensions overflow".into()))?;
    let expected = header_len + body_len;
    if bytes.len() < expected {
        return Err(DataError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok((dims, &bytes[header_len..expected]))
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>, DataError> {
    let io_err = |source| DataError::Io {
        path: path.to_owned(),
        source,
    };
    let raw = fs::read(path).map_err(io_err)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io_err)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Encode features as an IDX image file of shape `n × rows × cols`.
/// Values are clamped to `[0, 1]` and quantized to `round(v × 255)`.
pub fn encode_idx_images(dataset: &Dataset, rows: usize, cols: usize) -> Result<Vec<u8>, DataError> {
    if rows * cols != dataset.n_features() {
        return Err(DataError::Malformed(format!(
            "{rows}x{cols} does not match {} features",
            dataset.n_features()
        )));
    }
    let mut out = Vec::with_capacity(16 + dataset.features().len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for d in [dataset.n_samples(), rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend(
        dataset
            .features()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

/// Encode labels as an IDX label file. Labels must fit in a byte.
pub fn encode_idx_labels(labels: &[usize]) -> Result<Vec<u8>, DataError> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        let byte = u8::try_from(l).map_err(|_| DataError::LabelOutOfRange {
            label: l,
            n_classes: 256,
        })?;
        out.push(byte);
    }
    Ok(out)
}
