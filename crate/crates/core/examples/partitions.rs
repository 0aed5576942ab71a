// How the three partition schemes spread a pool over clients.
//
//     cargo run --example partitions

use fedsel::data::{generate_synthetic, partition_class_noniid, partition_iid, partition_quantity_skew};
use fedsel::{derive_stream, Partition};

fn describe(name: &str, p: &Partition, ds: &fedsel::Dataset) {
    let sizes = p.sizes();
    let labels = p.label_sets(ds);
    let max_labels = labels.iter().map(Vec::len).max().unwrap_or(0);
    println!(
        "{name:<14} sizes min {:>4} max {:>4}; at most {max_labels} classes per client; client 0 holds {:?}",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap(),
        labels[0]
    );
}

pub fn run() -> fedsel::Result<()> {
    let ds = generate_synthetic(10_000, 20, 10, 3.0, &mut derive_stream(0, "dataset"));
    let rng = || derive_stream(0, "partition");

    describe("iid", &partition_iid(&ds, 50, &mut rng())?, &ds);
    describe("class_non_iid", &partition_class_noniid(&ds, 50, 2, &mut rng())?, &ds);
    for alpha in [0.1, 0.5, 5.0] {
        let p = partition_quantity_skew(&ds, 50, alpha, &mut rng())?;
        describe(&format!("skew a={alpha}"), &p, &ds);
    }

    // two clients cannot cover ten classes with two classes each
    match partition_class_noniid(&ds, 2, 2, &mut rng()) {
        Err(e) => println!("2 clients x 2 classes: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
