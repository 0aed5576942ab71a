use std::fs;
use std::path::{Path, PathBuf};

use super::{DataError, Dataset};

/// One label byte followed by 3072 pixel bytes (3 × 32 × 32, channel-major).
pub const CIFAR10_RECORD_LEN: usize = 3073;
const CIFAR10_CLASSES: usize = 10;

/// Concatenate CIFAR-10 binary batch files into one dataset.
pub fn load_cifar10_binary<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset, DataError> {
    if paths.is_empty() {
        return Err(DataError::NoFiles);
    }
    let mut bytes = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let chunk = fs::read(p).map_err(|source| DataError::Io {
            path: PathBuf::from(p),
            source,
        })?;
        check_record_multiple(chunk.len())?;
        bytes.extend_from_slice(&chunk);
    }
    parse_cifar10_records(&bytes)
}

fn check_record_multiple(len: usize) -> Result<(), DataError> {
    if len == 0 || !len.is_multiple_of(CIFAR10_RECORD_LEN) {
        let expected = len.div_ceil(CIFAR10_RECORD_LEN).max(1) * CIFAR10_RECORD_LEN;
        return Err(DataError::Truncated {
            expected,
            found: len,
        });
    }
    Ok(())
}

/// Parse a buffer of whole CIFAR-10 records.
pub fn parse_cifar10_records(bytes: &[u8]) -> Result<Dataset, DataError> {
    check_record_multiple(bytes.len())?;
    let n = bytes.len() / CIFAR10_RECORD_LEN;
    let mut labels = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * (CIFAR10_RECORD_LEN - 1));
    for record in bytes.chunks_exact(CIFAR10_RECORD_LEN) {
        let label = usize::from(record[0]);
        if label >= CIFAR10_CLASSES {
            return Err(DataError::LabelOutOfRange {
                label,
                n_classes: CIFAR10_CLASSES,
            });
        }
        labels.push(label);
        features.extend(record[1..].iter().map(|&p| f64::from(p) / 255.0));
    }
    Dataset::new(features, labels, CIFAR10_RECORD_LEN - 1, CIFAR10_CLASSES)
}
