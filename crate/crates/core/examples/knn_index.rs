//! Exact k-NN queries with the k-d tree, ties broken by training index.

use wknn::knn::neighbor_table_brute;
use wknn::{build_index, knn_query, neighbor_table, NormSpec, Sample};

fn main() -> wknn::Result<()> {
    // a 5x5 integer grid: many equidistant neighbors
    let rows: Vec<[f64; 2]> = (0..25).map(|i| [(i % 5) as f64, (i / 5) as f64]).collect();
    let train = Sample::from_rows(&rows)?;
    let query = [2.0, 2.0];

    for norm in [NormSpec::L1, NormSpec::L2, NormSpec::LInf] {
        let index = build_index(&train, norm);
        let fast = index.query(&query, 6)?;
        let slow = knn_query(&query, &train, 6, norm)?;
        assert_eq!(fast, slow);
        let listed: Vec<String> = fast.iter().map(|n| format!("{}@{}", n.index, n.distance)).collect();
        println!("{norm}: {}", listed.join(" "));
    }

    let eval = Sample::from_rows(&[[0.5, 0.5], [3.0, 1.0], [4.5, 4.5]])?;
    let table = neighbor_table(&eval, &train, 4, NormSpec::L2)?;
    assert_eq!(table, neighbor_table_brute(&eval, &train, 4, NormSpec::L2)?);
    for (i, row) in table.rows().enumerate() {
        println!("eval {i}: neighbors {row:?}");
    }
    Ok(())
}
