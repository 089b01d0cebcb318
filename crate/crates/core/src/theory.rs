//! Asymptotic constants for the 1-NN and k-NN transport rates, and advisory
//! checks of the assumptions behind them.
//!
//! For `X ~ μ_X` and a training law with density `p'`, the 1-NN reweighted
//! measure satisfies
//!
//! ```text
//! m^{q/d} E[W_q^q] -> Γ(1 + q/d) / v_d^{q/d} · E[p'(X)^{-q/d}]
//! ```
//!
//! where `v_d` is the volume of the unit ball of the chosen norm. With `k_m`
//! neighbors the same constant, multiplied by [`cdq`], bounds the limit of
//! `(m/k_m)^{q/d} E[W_q^q]`.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::random::{stream_rng, Law};
use crate::sample::NormSpec;
use crate::stats::{neumaier_sum, MeanEstimate};

/// Volume of the unit ball of ℝ^d for the given norm.
pub fn unit_ball_volume(d: usize, norm: NormSpec) -> f64 {
    match norm {
        // V_d = V_{d-2} 2π/d from V_0 = 1, V_1 = 2
        NormSpec::L2 => {
            let (mut v, start) = if d.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
            for j in (start..=d).step_by(2) {
                v *= 2.0 * std::f64::consts::PI / j as f64;
            }
            v
        }
        NormSpec::L1 => (1..=d).fold(1.0, |v, j| v * 2.0 / j as f64),
        NormSpec::LInf => 2f64.powi(d as i32),
    }
}

/// The limiting constant of `m^{q/d} E[W_q^q]` for the 1-NN weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstant {
    pub q: f64,
    pub d: usize,
    pub v_d: f64,
    pub inv_density_moment: f64,
    pub value: f64,
}

pub fn rate_constant(
    q: f64,
    d: usize,
    norm: NormSpec,
    inv_density_moment: f64,
) -> Result<RateConstant> {
    if q.is_nan() || q < 1.0 || d == 0 {
        return Err(Error::invalid("need q >= 1 and d >= 1"));
    }
    if inv_density_moment.is_nan() || inv_density_moment <= 0.0 || inv_density_moment.is_infinite() {
        return Err(Error::invalid("inverse density moment must be positive and finite"));
    }
    let v_d = unit_ball_volume(d, norm);
    let a = q / d as f64;
    Ok(RateConstant {
        q,
        d,
        v_d,
        inv_density_moment,
        value: gamma(1.0 + a) / v_d.powf(a) * inv_density_moment,
    })
}

/// Limit of the neighbor count sequence in [`cdq`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KLimit {
    Finite(u64),
    Infinite,
}

/// Multiplicative constant of the k-NN rate:
/// `(2^{q/d+1}/k) Σ_{l<=k} (l/k)^{q/d}`, or `2^{q/d+1}/(q/d+1)` when `k -> ∞`.
pub fn cdq(q: f64, d: usize, k: KLimit) -> f64 {
    let a = q / d as f64;
    let lead = 2f64.powf(a + 1.0);
    match k {
        KLimit::Infinite => lead / (a + 1.0),
        KLimit::Finite(k) => {
            let kf = k as f64;
            lead / kf * neumaier_sum((1..=k).map(|l| (l as f64 / kf).powf(a)))
        }
    }
}

/// `σ'^2 > σ^2 q / d`: finiteness of `E[p'(X)^{-q/d}]` for
/// `X ~ N(μ, σ^2 I)` and training law `N(μ, σ'^2 I)`.
pub fn gaussian_moment_check(sigma: f64, sigma_prime: f64, q: f64, d: usize) -> bool {
    sigma_prime * sigma_prime > sigma * sigma * q / d as f64
}

/// Exponent `d/(q+d)` such that a training density proportional to
/// `p_X^{d/(q+d)}` minimises the rate constant.
pub fn zador_exponent(q: f64, d: usize) -> f64 {
    d as f64 / (q + d as f64)
}

/// Monte Carlo estimate of `E[p'(X)^{-q/d}]` with `X ~ x_law`, given the log
/// density of the training law.
pub fn inv_density_moment(
    x_law: &Law,
    log_density: &dyn Fn(&[f64]) -> f64,
    q: f64,
    d: usize,
    n_draws: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if n_draws == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    let a = q / d as f64;
    let mut rng = stream_rng(seed, 0);
    let mut buf = Vec::with_capacity(x_law.dim());
    let mut values = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        buf.clear();
        x_law.sample_into(&mut rng, &mut buf);
        let lp = log_density(&buf);
        let v = (-a * lp).exp();
        if !v.is_finite() {
            return Err(Error::numerical(format!(
                "inverse density not finite at {buf:?} (log density {lp})"
            )));
        }
        values.push(v);
    }
    Ok(MeanEstimate::from_values(&values))
}

/// Result of an advisory assumption check.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub name: &'static str,
    /// `None` when the check does not apply.
    pub holds: Option<bool>,
    pub detail: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2, NormSpec::L2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3, NormSpec::L2) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert_eq!(unit_ball_volume(3, NormSpec::LInf), 8.0);
        assert!((unit_ball_volume(2, NormSpec::L1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(3, NormSpec::L1) - 8.0 / 6.0).abs() < 1e-14);
        for norm in [NormSpec::L1, NormSpec::L2, NormSpec::LInf] {
            assert_eq!(unit_ball_volume(1, norm), 2.0);
        }
        // against the gamma-function formula
        for d in 1..12 {
            let df = d as f64;
            let v = PI.powf(df / 2.0) / gamma(df / 2.0 + 1.0);
            assert!((unit_ball_volume(d, NormSpec::L2) / v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_constant_examples() {
        let c = rate_constant(1.0, 1, NormSpec::L2, 1.0).unwrap();
        assert!((c.value - 0.5).abs() < 1e-14);
        for d in 1..5 {
            let c = rate_constant(d as f64, d, NormSpec::L2, 3.0).unwrap();
            assert!((c.value - 3.0 / unit_ball_volume(d, NormSpec::L2)).abs() < 1e-12);
        }
        let c = rate_constant(2.0, 2, NormSpec::L2, 2.5).unwrap();
        assert!((c.value - 2.5 / PI).abs() < 1e-14);
        let c2 = rate_constant(2.0, 2, NormSpec::L2, 5.0).unwrap();
        assert!((c2.value - 2.0 * c.value).abs() < 1e-14);
        assert!(rate_constant(0.5, 2, NormSpec::L2, 1.0).is_err());
        assert!(rate_constant(1.0, 2, NormSpec::L2, 0.0).is_err());
    }

    #[test]
    fn cdq_examples() {
        for (q, d) in [(1.0, 1), (2.0, 3), (3.0, 2)] {
            let a: f64 = q / d as f64;
            assert!((cdq(q, d, KLimit::Finite(1)) - 2f64.powf(a + 1.0)).abs() < 1e-14);
        }
        assert!((cdq(2.0, 2, KLimit::Infinite) - 2.0).abs() < 1e-15);
        assert!((cdq(2.0, 2, KLimit::Finite(2)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn cdq_converges_and_exceeds_one() {
        for (q, d) in [(1.0, 1), (2.0, 2), (1.0, 5), (3.0, 2), (2.0, 10)] {
            let lim = cdq(q, d, KLimit::Infinite);
            let at = cdq(q, d, KLimit::Finite(1_000_000));
            assert!(((at - lim) / lim).abs() < 1e-4, "q={q} d={d}");
            for k in [1, 2, 5, 100, 1000] {
                assert!(cdq(q, d, KLimit::Finite(k)) > 1.0);
            }
            assert!(lim > 1.0);
        }
    }

    #[test]
    fn gaussian_check_is_strict() {
        assert!(!gaussian_moment_check(1.0, 1.0, 2.0, 2));
        assert!(gaussian_moment_check(1.0, 1.5, 2.0, 4));
        assert!(gaussian_moment_check(1.0, 1e6, 3.0, 1));
    }

    #[test]
    fn zador_examples() {
        assert_eq!(zador_exponent(2.0, 2), 0.5);
        assert_eq!(zador_exponent(1.0, 1), 0.5);
        assert!(zador_exponent(1.0, 10_000) > 0.9998);
    }

    #[test]
    fn moment_uniform_and_atom() {
        let unit = Law::uniform_box(vec![0.0], vec![1.0]).unwrap();
        let est = inv_density_moment(&unit, &|x| unit.log_density(x).unwrap(), 2.0, 1, 100, 0)
            .unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);

        let gauss = Law::correlated_gaussian_2d(0.5, 0.3, 0.0).unwrap();
        let x0 = [0.25, 0.25];
        let atom = Law::Atom { point: x0.to_vec() };
        let est = inv_density_moment(&atom, &|x| gauss.log_density(x).unwrap(), 2.0, 2, 10, 0)
            .unwrap();
        let exact = (-gauss.log_density(&x0).unwrap()).exp();
        assert_eq!(est.mean, exact);
    }

    #[test]
    fn moment_outside_support_is_numerical_failure() {
        let x_law = Law::uniform_box(vec![0.0], vec![2.0]).unwrap();
        let dens = Law::uniform_box(vec![0.0], vec![1.0]).unwrap();
        let err = inv_density_moment(&x_law, &|x| dens.log_density(x).unwrap(), 1.0, 1, 100, 0)
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
