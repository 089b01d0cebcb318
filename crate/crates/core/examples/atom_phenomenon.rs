//! With an atom in the evaluation law and a noisy model, the 1-NN estimate
//! keeps a fixed error while a growing number of neighbors averages the
//! noise away.

use wknn::experiments::{atom_consistency_experiment, builtin_scenario, AtomConfig, Overrides};
use wknn::NormSpec;

fn main() -> wknn::Result<()> {
    for noiseless in [false, true] {
        let ov = Overrides { noiseless: Some(noiseless), ..Default::default() };
        let scenario = builtin_scenario("atom_demo", &ov)?;
        let cfg = AtomConfig {
            m_grid: vec![100, 1000, 10_000],
            n: 10,
            replications: 200,
            base_seed: 0,
            norm: NormSpec::L2,
            timing: false,
        };
        let out = atom_consistency_experiment(&scenario, &cfg)?;
        println!("noiseless = {noiseless}");
        for (one, many) in out.single_neighbor.iter().zip(&out.growing_neighbors) {
            println!(
                "  m = {:>5}: |error| 1-NN {:.4}, ceil(sqrt(m))-NN {:.4}",
                one.x, one.estimate.mean, many.estimate.mean
            );
        }
    }
    Ok(())
}
