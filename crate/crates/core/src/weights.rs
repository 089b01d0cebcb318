//! Nearest-neighbor weight vectors and the weighted empirical measures they induce.
//!
//! Training point `j` receives weight `m / (k n)` times the number of
//! `(evaluation point, rank <= k)` pairs that select it. For `k = 1` these
//! weights minimise the Wasserstein distance between the weighted training
//! measure and the evaluation empirical measure over all nonnegative weight
//! vectors summing to `m`.

use crate::error::{Error, Result};
use crate::knn::NeighborTable;
use crate::sample::{validate_measure, DiscreteMeasure, Sample};

/// Weights `w_1..w_m`, nonnegative and summing to `m`.
///
/// Stored alongside the integer selection counts they were scaled from.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    k: usize,
    n: usize,
    counts: Vec<u64>,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of evaluation points the counts were accumulated over.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of `(i, l)` pairs selecting each training point.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Uniform weights (all ones), as produced with `k = m`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("weight vector must be nonempty"));
        }
        Ok(WeightVector {
            k: m,
            n: 1,
            counts: vec![1; m],
            weights: vec![1.0; m],
        })
    }

    /// Arbitrary nonnegative weights summing to `m` (within 1e-9).
    ///
    /// Counts are not meaningful for such vectors and are left at zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let m = weights.len();
        if m == 0 {
            return Err(Error::invalid("weight vector must be nonempty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - m as f64).abs() > 1e-9 * m as f64 {
            return Err(Error::invalid(format!("weights sum to {total}, expected {m}")));
        }
        Ok(WeightVector {
            k: 1,
            n: 1,
            counts: vec![0; m],
            weights,
        })
    }
}

/// Computes `w^(k)` from a neighbor table over a training sample of size `m`.
pub fn knn_weights(table: &NeighborTable, m: usize) -> Result<WeightVector> {
    if m == 0 {
        return Err(Error::invalid("training sample size must be positive"));
    }
    let mut counts = vec![0u64; m];
    for &j in table.all_indices() {
        if j >= m {
            return Err(Error::invalid(format!(
                "neighbor index {j} out of range for m = {m}"
            )));
        }
        counts[j] += 1;
    }
    let k = table.k();
    let n = table.n();
    let scale = m as f64 / (k * n) as f64;
    let weights = counts.iter().map(|&c| c as f64 * scale).collect();
    Ok(WeightVector {
        k,
        n,
        counts,
        weights,
    })
}

/// The probability measure `(1/m) Σ w_j δ_{X'_j}`.
pub fn weighted_measure(train: &Sample, wv: &WeightVector) -> Result<DiscreteMeasure> {
    if wv.m() != train.len() {
        return Err(Error::SizeMismatch {
            what: "weight vector vs training sample",
            left: wv.m(),
            right: train.len(),
        });
    }
    let m = wv.m() as f64;
    let mut masses: Vec<f64> = wv.weights().iter().map(|w| w / m).collect();
    // absorb the last ulp-level drift so the mass check is exact
    let total: f64 = masses.iter().sum();
    if let Some(last) = masses.iter_mut().rev().find(|x| **x > 0.0) {
        *last = (*last + (1.0 - total)).max(0.0);
    }
    validate_measure(train.clone(), masses)
}
