use crate::error::{Error, Result};

/// Least-squares line through `(ln x, ln y)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// `(ln x, ln y)` pairs the line was fitted to.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    /// Natural-log intercept: `y ≈ exp(intercept) x^slope`.
    pub intercept: f64,
    /// Root mean square of the residuals in log space.
    pub rms: f64,
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<RateFit> {
    if let Some(&(x, y)) = points.iter().find(|(x, y)| x.is_nan() || y.is_nan() || *x <= 0.0 || *y <= 0.0) {
        return Err(Error::invalid(format!(
            "log-log fit needs positive values, got ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if logs.len() < 2 || sxx <= 0.0 {
        return Err(Error::invalid("log-log fit needs at least two distinct abscissae"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (logs
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        points: logs,
        slope,
        intercept,
        rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{standard_normal, stream_rng};

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&m| (m, 3.0 / m)).collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn constant_has_zero_slope() {
        let f = fit_loglog(&[(1.0, 2.0), (5.0, 2.0), (9.0, 2.0)]).unwrap();
        assert!(f.slope.abs() < 1e-15);
    }

    #[test]
    fn noisy_square_root_law() {
        let mut rng = stream_rng(42, 0);
        let pts: Vec<(f64, f64)> = (1..=20)
            .map(|i| {
                let m = 50.0 * i as f64;
                (m, m.powf(-0.5) * (1.0 + 0.01 * standard_normal(&mut rng)))
            })
            .collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 0.05, "{}", f.slope);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0)]).is_err());
    }
}
