//! k-NN weights of a training sample toward an evaluation sample.
//!
//! Run with `cargo run --example knn_weights`.

use wknn::{knn_weights, neighbor_table, NormSpec, Sample};

fn main() -> wknn::Result<()> {
    let eval = Sample::from_scalars(&[1.0, 2.0, 9.0])?;
    let train = Sample::from_scalars(&[0.0, 10.0])?;

    for k in [1, 2] {
        let table = neighbor_table(&eval, &train, k, NormSpec::L2)?;
        let wv = knn_weights(&table, train.len())?;
        println!("k = {k}: counts {:?}, weights {:?}", wv.counts(), wv.weights());
        let sum: f64 = wv.weights().iter().sum();
        let sq: f64 = wv.weights().iter().map(|w| w * w).sum();
        println!("  sum = {sum} (= m), sum of squares = {sq} <= m^2/k = {}", 4.0 / k as f64);
    }
    Ok(())
}
