//! Asymptotic constants of the reweighting rates.

use wknn::experiments::{builtin_scenario, Overrides};
use wknn::theory::{cdq, gaussian_moment_check, rate_constant, unit_ball_volume, zador_exponent, KLimit};
use wknn::NormSpec;

fn main() -> wknn::Result<()> {
    for norm in [NormSpec::L1, NormSpec::L2, NormSpec::LInf] {
        println!("{norm}: v_2 = {:.6}, v_3 = {:.6}", unit_ball_volume(2, norm), unit_ball_volume(3, norm));
    }

    for k in [1, 2, 4, 16, 256] {
        println!("c(q=2, d=2, k={k}) = {:.6}", cdq(2.0, 2, KLimit::Finite(k)));
    }
    println!("c(q=2, d=2, k->inf) = {:.6}", cdq(2.0, 2, KLimit::Infinite));
    println!("Zador exponent for q = 2, d = 2: {}", zador_exponent(2.0, 2));

    for sp in [0.2, 0.3, 0.45] {
        let ok = gaussian_moment_check(0.3, sp, 2.0, 2);
        print!("sigma' = {sp}: moment finite = {ok}");
        if ok {
            let ov = Overrides { sigma_prime: Some(sp), ..Default::default() };
            let s = builtin_scenario("gauss_gauss", &ov)?;
            let m = s.inv_density_moment(2.0, 100_000, 0)?;
            let c = rate_constant(2.0, 2, NormSpec::L2, m.mean)?;
            print!(", rate constant {:.4}", c.value);
        }
        println!();
    }
    Ok(())
}
