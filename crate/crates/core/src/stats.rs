//! Small summation and summary-statistics helpers.

/// Compensated (Neumaier) sum. Order-dependent only at the last-ulp level.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return MeanEstimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                count,
            };
        }
        let mean = neumaier_sum(values.iter().copied()) / count as f64;
        let stderr = if count > 1 {
            let ss = neumaier_sum(values.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (count - 1) as f64 / count as f64).sqrt()
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            stderr,
            count,
        }
    }
}
