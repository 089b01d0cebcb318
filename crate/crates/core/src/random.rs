//! Reproducible random streams and the input laws used by the scenarios.
//!
//! Every Monte Carlo replication draws from its own ChaCha8 stream:
//! the key is the 64-bit base seed and the stream id is the replication
//! index. Results therefore never depend on how replications are scheduled.
//! Uniforms use the top 53 bits of a `u64` shifted to the open interval
//! (0, 1); normal variates come from the inverse normal CDF.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::sample::Sample;

pub type SimRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform variate on the open interval (0, 1).
#[inline]
pub fn open01(rng: &mut SimRng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal quantile function.
#[inline]
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

#[inline]
pub fn standard_normal(rng: &mut SimRng) -> f64 {
    normal_quantile(open01(rng))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(cov: &[f64], d: usize) -> Result<Vec<f64>> {
    if cov.len() != d * d {
        return Err(Error::invalid("covariance must be d x d"));
    }
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = cov[i * d + j];
            for p in 0..j {
                s -= l[i * d + p] * l[j * d + p];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::invalid("covariance is not positive definite"));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Probability law of an input vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    /// Uniform on the box `[lo, hi]`.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// `(U, ..., U)` with `U` uniform on `[lo, hi]`: mass on the diagonal
    /// segment of ℝ^d, no Lebesgue density.
    Diagonal { dim: usize, lo: f64, hi: f64 },
    /// Gaussian with mean and lower Cholesky factor of the covariance.
    Gaussian {
        mean: Vec<f64>,
        chol: Vec<f64>,
        log_norm: f64,
    },
    /// Dirac mass at a point.
    Atom { point: Vec<f64> },
}

impl Law {
    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a.is_nan() || b.is_nan() || a >= b) {
            return Err(Error::invalid("uniform box needs lo < hi in every coordinate"));
        }
        Ok(Law::UniformBox { lo, hi })
    }

    pub fn gaussian(mean: Vec<f64>, cov: &[f64]) -> Result<Self> {
        let d = mean.len();
        let chol = cholesky(cov, d)?;
        let log_det: f64 = (0..d).map(|i| chol[i * d + i].ln()).sum::<f64>() * 2.0;
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(Law::Gaussian {
            mean,
            chol,
            log_norm,
        })
    }

    /// Bivariate Gaussian with mean `(mu, mu)` and covariance
    /// `sigma^2 [[1, s], [s, 1]]`.
    pub fn correlated_gaussian_2d(mu: f64, sigma: f64, s_corr: f64) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 || s_corr.is_nan() || s_corr.abs() >= 1.0 {
            return Err(Error::invalid(format!(
                "need sigma > 0 and s_corr in (-1, 1), got sigma = {sigma}, s_corr = {s_corr}"
            )));
        }
        let v = sigma * sigma;
        Law::gaussian(vec![mu, mu], &[v, v * s_corr, v * s_corr, v])
    }

    pub fn dim(&self) -> usize {
        match self {
            Law::UniformBox { lo, .. } => lo.len(),
            Law::Diagonal { dim, .. } => *dim,
            Law::Gaussian { mean, .. } => mean.len(),
            Law::Atom { point } => point.len(),
        }
    }

    /// Appends one draw to `out`.
    pub fn sample_into(&self, rng: &mut SimRng, out: &mut Vec<f64>) {
        match self {
            Law::UniformBox { lo, hi } => {
                for (a, b) in lo.iter().zip(hi) {
                    out.push(a + (b - a) * open01(rng));
                }
            }
            Law::Diagonal { dim, lo, hi } => {
                let u = lo + (hi - lo) * open01(rng);
                out.extend(std::iter::repeat_n(u, *dim));
            }
            Law::Gaussian { mean, chol, .. } => {
                let d = mean.len();
                let z: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
                for i in 0..d {
                    let s: f64 = (0..=i).map(|j| chol[i * d + j] * z[j]).sum();
                    out.push(mean[i] + s);
                }
            }
            Law::Atom { point } => out.extend_from_slice(point),
        }
    }

    /// `n` i.i.d. draws.
    pub fn sample(&self, rng: &mut SimRng, n: usize) -> Result<Sample> {
        let mut data = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            self.sample_into(rng, &mut data);
        }
        Sample::new(self.dim(), data)
    }

    /// Log of the Lebesgue density at `x`; `None` for laws without one.
    pub fn log_density(&self, x: &[f64]) -> Option<f64> {
        match self {
            Law::UniformBox { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(c, (a, b))| a <= c && c <= b);
                Some(if inside {
                    -lo.iter().zip(hi).map(|(a, b)| (b - a).ln()).sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                })
            }
            Law::Gaussian {
                mean,
                chol,
                log_norm,
            } => {
                let d = mean.len();
                // forward substitution L z = x - mean
                let mut z = vec![0.0; d];
                for i in 0..d {
                    let s: f64 = (0..i).map(|j| chol[i * d + j] * z[j]).sum();
                    z[i] = (x[i] - mean[i] - s) / chol[i * d + i];
                }
                Some(log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>())
            }
            Law::Diagonal { .. } | Law::Atom { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::MeanEstimate;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 3).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(stream_rng(7, 3).next_u64(), stream_rng(7, 4).next_u64());
        assert_ne!(stream_rng(7, 3).next_u64(), stream_rng(8, 3).next_u64());
    }

    #[test]
    fn open_interval() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..10_000 {
            let u = open01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn quantile_reference_values() {
        // reference quantiles of the standard normal
        let cases = [
            (0.5, 0.0),
            (0.975, 1.959963984540054),
            (0.025, -1.959963984540054),
            (0.8413447460685429, 1.0),
            (1e-10, -6.361340902404056),
        ];
        for (p, z) in cases {
            assert!((normal_quantile(p) - z).abs() < 1e-9, "p = {p}");
        }
    }

    #[test]
    fn correlated_gaussian_moments() {
        let law = Law::correlated_gaussian_2d(0.5, 0.3, 0.9).unwrap();
        let mut rng = stream_rng(5, 0);
        let s = law.sample(&mut rng, 200_000).unwrap();
        let xs: Vec<f64> = s.points().map(|p| p[0]).collect();
        let prods: Vec<f64> = s.points().map(|p| (p[0] - 0.5) * (p[1] - 0.5)).collect();
        let mx = MeanEstimate::from_values(&xs);
        let cov = MeanEstimate::from_values(&prods);
        assert!((mx.mean - 0.5).abs() < 4.0 * mx.stderr);
        assert!((cov.mean - 0.081).abs() < 4.0 * cov.stderr);
    }

    #[test]
    fn gaussian_density_matches_closed_form() {
        let law = Law::correlated_gaussian_2d(0.5, 0.3, 0.5).unwrap();
        let (x, y) = (0.2, 0.9);
        let v: f64 = 0.09;
        let det = v * v * (1.0 - 0.25);
        let (dx, dy) = (x - 0.5, y - 0.5);
        let quad = (dx * dx - 2.0 * 0.5 * dx * dy + dy * dy) / (v * (1.0 - 0.25));
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad;
        assert!((law.log_density(&[x, y]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Law::correlated_gaussian_2d(0.5, 0.3, 1.0).is_err());
        assert!(Law::correlated_gaussian_2d(0.5, 0.0, 0.0).is_err());
        assert!(Law::uniform_box(vec![1.0], vec![0.0]).is_err());
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
    }
}
