//! Squared error of the k-NN weighted estimate against how well the training
//! law covers the evaluation law.

use wknn::experiments::{builtin_scenario, qi_experiment, Overrides, QiConfig};

fn main() -> wknn::Result<()> {
    let scenario = builtin_scenario("diag_uniform_gauss", &Overrides::default())?;
    let cfg = QiConfig {
        replications: 200,
        ..QiConfig::new(vec![-0.9, -0.5, 0.0, 0.5, 0.9])
    };
    let out = qi_experiment(&scenario, &cfg)?;
    println!("n = m = {}, k = {}", cfg.m, cfg.k);
    for row in &out.summary {
        println!("s_corr = {:>4}: E[(QI hat - QI)^2] = {:.3e} ± {:.1e}", row.x, row.estimate.mean, row.estimate.stderr);
    }
    Ok(())
}
