//! Generalization error of k-NN regression under covariate shift.

use wknn::estimators::{generalization_error_mc, GeneralizationConfig};
use wknn::experiments::{builtin_scenario, Overrides};
use wknn::NormSpec;

fn main() -> wknn::Result<()> {
    let ov = Overrides { s_corr: Some(0.5), ..Default::default() };
    let s = builtin_scenario("diag_uniform_gauss", &ov)?;
    let psi = s.psi.clone().expect("built-in regression function");
    let truth = move |x: &[f64]| vec![psi(x)];
    for m in [200, 800, 3200] {
        for k in [1, 8] {
            let cfg = GeneralizationConfig {
                m,
                k,
                n_test: 200,
                replications: 50,
                norm: NormSpec::L2,
                seed: 0,
            };
            let err = generalization_error_mc(&s.model, &s.x_law, &s.train_law, &truth, &cfg)?;
            println!("m = {m:>4}, k = {k}: E|r - r_hat|^2 = {:.4e} ± {:.1e}", err.mean, err.stderr);
        }
    }
    Ok(())
}
