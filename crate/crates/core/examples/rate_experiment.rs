//! Mean W_2^2 between the evaluation sample and the 1-NN reweighted training
//! sample as m grows, compared with the asymptotic constant.

use wknn::experiments::{builtin_scenario, wasserstein_rate_experiment, Overrides, RateConfig};
use wknn::theory::rate_constant;
use wknn::NormSpec;

fn main() -> wknn::Result<()> {
    let ov = Overrides { dim: Some(2), ..Default::default() };
    let scenario = builtin_scenario("gauss_gauss", &ov)?;
    let cfg = RateConfig {
        replications: 100,
        n: 200,
        certify: true,
        ..RateConfig::new(vec![100, 200, 400, 800, 1600])
    };
    let out = wasserstein_rate_experiment(&scenario, &cfg)?;
    for row in &out.summary {
        println!(
            "m = {:>5}: E[W_2^2] = {:.3e} ± {:.1e}, m E[W_2^2] = {:.4}",
            row.x,
            row.estimate.mean,
            row.estimate.stderr,
            row.x * row.estimate.mean
        );
    }
    let fit = out.fit.expect("several grid points");
    println!("slope {:.3} (theory -q/d = -1), {} replications LP-certified", fit.slope, out.certified);

    let moment = scenario.inv_density_moment(2.0, 200_000, 0)?;
    let c = rate_constant(2.0, 2, NormSpec::L2, moment.mean)?;
    println!("limit of m E[W_2^2]: {:.4}", c.value);
    Ok(())
}
