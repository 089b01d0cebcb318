//! Exact W_q^q between discrete measures via the transportation LP, and the
//! 1-NN closed form it certifies.

use wknn::ot::table_cost;
use wknn::random::{stream_rng, Law};
use wknn::{
    exact_wq, knn_weights, neighbor_table, validate_measure, weighted_measure, DiscreteMeasure,
    NormSpec, Sample,
};

fn main() -> wknn::Result<()> {
    // two weighted measures on the plane
    let a = validate_measure(
        Sample::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])?,
        vec![0.5, 0.25, 0.25],
    )?;
    let b = validate_measure(Sample::from_rows(&[[0.5, 0.5], [2.0, 2.0]])?, vec![0.75, 0.25])?;
    let (cost, plan) = exact_wq(&a, &b, 2.0, NormSpec::L2)?;
    println!("W_2^2 = {cost}");
    for (i, j, mass) in &plan.entries {
        println!("  move {mass} from source {i} to target {j}");
    }
    println!(
        "dual objective {} (gap {:.1e}), {} pivots",
        plan.dual_objective,
        (plan.dual_objective - cost).abs(),
        plan.pivots
    );

    // the 1-NN reweighting attains its closed form exactly
    let law = Law::uniform_box(vec![0.0; 2], vec![1.0; 2])?;
    let mut rng = stream_rng(1, 0);
    let eval = law.sample(&mut rng, 40)?;
    let train = law.sample(&mut rng, 60)?;
    for k in [1, 3] {
        let table = neighbor_table(&eval, &train, k, NormSpec::L2)?;
        let closed = table_cost(&table, 2.0)?;
        let target = weighted_measure(&train, &knn_weights(&table, train.len())?)?;
        let (lp, _) = exact_wq(&DiscreteMeasure::uniform(eval.clone()), &target, 2.0, NormSpec::L2)?;
        println!("k = {k}: closed form {closed:.6}, exact LP {lp:.6}");
    }
    Ok(())
}
