//! L2 error of the quantity-of-interest estimate with k = ceil(m^{2/(d+2)}).

use wknn::experiments::{builtin_scenario, noisy_rate_experiment, NoisyRateConfig, Overrides};

fn main() -> wknn::Result<()> {
    let scenario = builtin_scenario("atom_demo", &Overrides::default())?;
    let cfg = NoisyRateConfig {
        n: 100,
        replications: 200,
        ..NoisyRateConfig::new(vec![1600, 6400, 25_600], 2)
    };
    let out = noisy_rate_experiment(&scenario, &cfg)?;
    for row in &out.summary {
        println!("m = {:>6}: RMS error {:.4}", row.x, row.estimate.mean.sqrt());
    }
    println!("slope {:.3} (theory -1/(d+2) = -0.25)", out.fit.expect("three points").slope);
    Ok(())
}
