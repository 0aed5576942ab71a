// Write a small MNIST-style IDX pair (gzipped), then train a federation on
// it by pointing the config at the files.
//
//     cargo run --example idx_dataset

use std::fs::File;
use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use fedsel::data::{encode_idx_images, encode_idx_labels, generate_synthetic};
use fedsel::{derive_stream, run_experiment, DatasetSource, ExperimentConfig};

pub fn run() -> fedsel::Result<()> {
    let dir = tempfile::tempdir()?;
    // 7x7 "images": blobs squashed into [0, 1]
    let raw = generate_synthetic(2_000, 49, 4, 4.0, &mut derive_stream(5, "dataset"));
    let squashed: Vec<f64> = raw.features().iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
    let ds = fedsel::Dataset::new(squashed, raw.labels().to_vec(), 49, 4)?;

    let images = dir.path().join("train-images-idx3-ubyte.gz");
    let labels = dir.path().join("train-labels-idx1-ubyte.gz");
    for (path, bytes) in [
        (&images, encode_idx_images(&ds, 7, 7)?),
        (&labels, encode_idx_labels(ds.labels())?),
    ] {
        let mut gz = GzEncoder::new(File::create(path)?, Compression::default());
        gz.write_all(&bytes)?;
        gz.finish()?;
    }

    let config = ExperimentConfig {
        num_clients: 20,
        rounds: 15,
        learning_rate: 0.1,
        dataset: DatasetSource::Idx { images, labels },
        ..Default::default()
    };
    let last = run_experiment(&config)?.pop().expect("rounds");
    println!(
        "idx run: accuracy {:.4}, macro auc {:.4}, jfi {:.4}",
        last.global_accuracy, last.auc_macro, last.jfi
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
