use std::f64::consts::PI;

use wknn::experiments::{builtin_scenario, Overrides};
use wknn::random::Law;
use wknn::theory::{inv_density_moment, rate_constant};
use wknn::NormSpec;

/// E[p'(X)^{-q/d}] for X ~ N(μ, σ² I_d) and p' the N(μ, σ'² I_d) density.
fn gaussian_moment(sigma: f64, sigma_p: f64, q: f64, d: usize) -> f64 {
    let df = d as f64;
    (2.0 * PI * sigma_p * sigma_p).powf(q / 2.0) * (1.0 - sigma * sigma * q / (df * sigma_p * sigma_p)).powf(-df / 2.0)
}

#[test]
fn gaussian_moment_matches_closed_form() {
    for (d, q, sp) in [(1, 1.0, 0.5), (2, 2.0, 0.45), (3, 2.0, 0.6)] {
        let ov = Overrides { dim: Some(d), sigma_prime: Some(sp), ..Default::default() };
        let s = builtin_scenario("gauss_gauss", &ov).unwrap();
        let est = s.inv_density_moment(q, 200_000, 5).unwrap();
        let exact = gaussian_moment(0.3, sp, q, d);
        assert!(
            (est.mean - exact).abs() < 4.0 * est.stderr,
            "d={d}: {} ± {} vs {exact}",
            est.mean,
            est.stderr
        );
    }
}

#[test]
fn diagonal_moment_matches_quadrature() {
    for s_corr in [-0.5, 0.0, 0.9] {
        let ov = Overrides { s_corr: Some(s_corr), ..Default::default() };
        let sc = builtin_scenario("diag_uniform_gauss", &ov).unwrap();
        let law = Law::correlated_gaussian_2d(0.5, 0.3, s_corr).unwrap();
        // E[1/p'(U, U)] for q = d = 2, Simpson's rule on [0, 1]
        let nodes = 2001;
        let h = 1.0 / (nodes - 1) as f64;
        let f = |u: f64| (-law.log_density(&[u, u]).unwrap()).exp();
        let quad: f64 = (0..nodes)
            .map(|i| {
                let w = if i == 0 || i == nodes - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let est = sc.inv_density_moment(2.0, 200_000, 6).unwrap();
        assert!((est.mean - quad).abs() < 4.0 * est.stderr, "s={s_corr}: {} vs {quad}", est.mean);
    }
}

#[test]
fn moment_is_exact_for_an_atom() {
    let sc = builtin_scenario("atom_demo", &Overrides::default()).unwrap();
    let law = Law::correlated_gaussian_2d(0.5, 0.3, 0.0).unwrap();
    let est = inv_density_moment(
        &sc.x_law,
        &|x| law.log_density(x).unwrap(),
        1.0,
        2,
        10,
        0,
    )
    .unwrap();
    let p = (-(0.0625_f64 + 0.0625) / (2.0 * 0.09)).exp() / (2.0 * PI * 0.09);
    assert!((est.mean - p.powf(-0.5)).abs() < 1e-12);
}

#[test]
fn rate_constant_of_uniform_interval() {
    let sc = builtin_scenario("identity_1d_uniform", &Overrides::default()).unwrap();
    let moment = sc.inv_density_moment(1.0, 1000, 0).unwrap();
    assert_eq!(moment.mean, 1.0);
    let c = rate_constant(1.0, 1, NormSpec::L2, moment.mean).unwrap();
    assert_eq!(c.value, 0.5);
}

#[test]
fn infinite_moment_is_a_numerical_failure() {
    let ov = Overrides { sigma: Some(0.01), ..Default::default() };
    let sc = builtin_scenario("diag_uniform_gauss", &ov).unwrap();
    assert_eq!(sc.inv_density_moment(2.0, 10_000, 0).unwrap_err().exit_code(), 3);
}
