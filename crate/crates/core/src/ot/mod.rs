//! Wasserstein costs between discrete measures.
//!
//! All functions return `W_q^q`, the q-th power of the Wasserstein distance,
//! never `W_q` itself.
//!
//! The nearest-neighbor closed forms ([`wq_1nn`], [`wq_knn_bound`]) are cheap;
//! [`exact_wq`] solves the transportation linear program exactly and
//! certifies optimality with the dual solution. The LP is meant for measures
//! with up to a few hundred support points.

mod simplex;

use crate::error::{Error, Result};
use crate::knn::{neighbor_table, NeighborTable};
use crate::sample::{DiscreteMeasure, NormSpec, Sample};
use crate::stats::neumaier_sum;

/// Largest allowed difference between the total masses of the two measures.
pub const MASS_MISMATCH_TOLERANCE: f64 = 1e-9;

/// Relative duality gap accepted when certifying an LP solution.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

/// Optimal coupling returned by [`exact_wq`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `(source index, target index, mass)` with mass > 0, row-major order.
    /// Indices refer to the measures as passed in, zero-mass points included.
    pub entries: Vec<(usize, usize, f64)>,
    /// `Σ γ_ij |x_i - y_j|^q`.
    pub cost: f64,
    /// Dual objective `Σ a_i u_i + Σ b_j v_j` of the certifying dual.
    pub dual_objective: f64,
    /// Smallest reduced cost over all cells (nonnegative up to rounding).
    pub min_reduced_cost: f64,
    pub pivots: usize,
}

impl TransportPlan {
    pub fn row_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for &(i, _, g) in &self.entries {
            s[i] += g;
        }
        s
    }

    pub fn col_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for &(_, j, g) in &self.entries {
            s[j] += g;
        }
        s
    }
}

pub(crate) fn check_order(q: f64) -> Result<()> {
    if !q.is_finite() || q < 1.0 {
        return Err(Error::invalid(format!("order q = {q} must satisfy q >= 1")));
    }
    Ok(())
}

/// `d^q`, shared by every cost evaluation so that closed forms and the LP
/// see bit-identical costs.
#[inline]
pub fn cost_pow(d: f64, q: f64) -> f64 {
    if q == 1.0 {
        d
    } else if q == 2.0 {
        d * d
    } else {
        d.powf(q)
    }
}

/// `(1/(k n)) Σ_i Σ_{l<=k} d_{i,l}^q` over a neighbor table.
pub fn table_cost(table: &NeighborTable, q: f64) -> Result<f64> {
    check_order(q)?;
    let total = neumaier_sum(table.all_distances().iter().map(|&d| cost_pow(d, q)));
    Ok(total / (table.k() * table.n()) as f64)
}

/// `W_q^q` between the evaluation empirical measure and the 1-NN reweighted
/// training measure: `(1/n) Σ_i |X_i - NN(X_i)|^q`.
pub fn wq_1nn(eval: &Sample, train: &Sample, q: f64, norm: NormSpec) -> Result<f64> {
    wq_knn_bound(eval, train, 1, q, norm)
}

/// Upper bound on `W_q^q` for the k-NN reweighted training measure:
/// the average q-th power distance over all `(i, l <= k)` neighbor pairs.
pub fn wq_knn_bound(
    eval: &Sample,
    train: &Sample,
    k: usize,
    q: f64,
    norm: NormSpec,
) -> Result<f64> {
    check_order(q)?;
    let table = neighbor_table(eval, train, k, norm)?;
    table_cost(&table, q)
}

/// Exact `W_q^q` between two discrete measures, with the optimal plan.
pub fn exact_wq(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    q: f64,
    norm: NormSpec,
) -> Result<(f64, TransportPlan)> {
    check_order(q)?;
    source.points().check_same_dim(target.points())?;
    let sa: f64 = source.masses().iter().sum();
    let sb: f64 = target.masses().iter().sum();
    if (sa - sb).abs() > MASS_MISMATCH_TOLERANCE {
        return Err(Error::invalid(format!(
            "total masses differ: {sa} vs {sb}"
        )));
    }

    let rows: Vec<usize> = (0..source.len()).filter(|&i| source.masses()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..target.len()).filter(|&j| target.masses()[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::invalid("measure has no positive mass"));
    }
    let supply: Vec<f64> = rows.iter().map(|&i| source.masses()[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| target.masses()[j]).collect();
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        let x = source.points().point(i);
        for &j in &cols {
            let d = norm.distance_unchecked(x, target.points().point(j));
            cost.push(cost_pow(d, q));
        }
    }
    let max_cost = cost.iter().copied().fold(0.0, f64::max);
    let tol = 1e-13 * max_cost;

    let sol = simplex::solve(
        &simplex::Transport {
            supply: &supply,
            demand: &demand,
            cost: &cost,
        },
        tol,
    )?;

    // certificate: dual feasibility, duality gap, marginals
    let m = cols.len();
    let mut min_reduced = f64::INFINITY;
    for (a, u) in sol.row_duals.iter().enumerate() {
        for (b, v) in sol.col_duals.iter().enumerate() {
            min_reduced = min_reduced.min(cost[a * m + b] - u - v);
        }
    }
    let dual_objective = neumaier_sum(
        supply
            .iter()
            .zip(&sol.row_duals)
            .map(|(a, u)| a * u)
            .chain(demand.iter().zip(&sol.col_duals).map(|(b, v)| b * v)),
    );
    let scale = sol.cost.abs().max(dual_objective.abs());
    let gap_allowed = CERTIFICATE_TOLERANCE * scale + 1e-12 * max_cost;
    if min_reduced < -(CERTIFICATE_TOLERANCE * max_cost.max(f64::MIN_POSITIVE)) {
        return Err(Error::numerical(format!(
            "dual infeasible after pivoting (min reduced cost {min_reduced:e})"
        )));
    }
    if (sol.cost - dual_objective).abs() > gap_allowed {
        return Err(Error::numerical(format!(
            "duality gap {:e} exceeds tolerance",
            (sol.cost - dual_objective).abs()
        )));
    }

    let entries: Vec<(usize, usize, f64)> = sol
        .basis
        .iter()
        .filter(|&&(_, _, f)| f > 0.0)
        .map(|&(a, b, f)| (rows[a], cols[b], f))
        .collect();
    let plan = TransportPlan {
        entries,
        cost: sol.cost,
        dual_objective,
        min_reduced_cost: min_reduced,
        pivots: sol.pivots,
    };
    let marginal_ok = plan
        .row_sums(source.len())
        .iter()
        .zip(source.masses())
        .chain(plan.col_sums(target.len()).iter().zip(target.masses()))
        .all(|(s, t)| (s - t).abs() <= MASS_MISMATCH_TOLERANCE);
    if !marginal_ok {
        return Err(Error::numerical("plan marginals do not match the measures"));
    }
    Ok((sol.cost, plan))
}

/// `W_q^q` between two equal-size uniform measures on the line, via the
/// monotone (sorted) coupling.
pub fn wq_1d_uniform_oracle(a: &[f64], b: &[f64], q: f64) -> Result<f64> {
    check_order(q)?;
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            what: "1-D samples",
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let total = neumaier_sum(a.iter().zip(&b).map(|(x, y)| cost_pow((x - y).abs(), q)));
    Ok(total / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::validate_measure;
    use crate::weights::{knn_weights, weighted_measure};

    fn line(v: &[f64]) -> Sample {
        Sample::from_scalars(v).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let eval = line(&[1.0, 2.0, 9.0]);
        let train = line(&[0.0, 10.0]);
        let w1 = wq_1nn(&eval, &train, 1.0, NormSpec::L2).unwrap();
        assert!((w1 - 4.0 / 3.0).abs() < 1e-15);
        let w2 = wq_1nn(&eval, &train, 2.0, NormSpec::L2).unwrap();
        assert!((w2 - 2.0).abs() < 1e-15);
        assert_eq!(wq_1nn(&eval, &eval, 2.0, NormSpec::L2).unwrap(), 0.0);
        let b = wq_knn_bound(&eval, &train, 2, 1.0, NormSpec::L2).unwrap();
        assert!((b - 5.0).abs() < 1e-15);
        assert_eq!(
            wq_knn_bound(&eval, &train, 1, 3.0, NormSpec::L1).unwrap(),
            wq_1nn(&eval, &train, 3.0, NormSpec::L1).unwrap()
        );
        assert!(wq_knn_bound(&eval, &train, 3, 1.0, NormSpec::L2).is_err());
        assert!(wq_1nn(&eval, &train, 0.5, NormSpec::L2).is_err());
    }

    #[test]
    fn exact_identical_measures() {
        let mu = DiscreteMeasure::uniform(line(&[0.0, 1.0, 3.0]));
        let (c, plan) = exact_wq(&mu, &mu, 2.0, NormSpec::L2).unwrap();
        assert_eq!(c, 0.0);
        assert!(plan.entries.iter().all(|&(i, j, _)| i == j));
    }

    #[test]
    fn exact_single_target() {
        let src = DiscreteMeasure::uniform(line(&[0.0, 1.0]));
        let tgt = validate_measure(line(&[0.5]), vec![1.0]).unwrap();
        let (c, plan) = exact_wq(&src, &tgt, 1.0, NormSpec::L2).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
        assert_eq!(plan.entries.len(), 2);
    }

    #[test]
    fn exact_matches_closed_form_on_small_instance() {
        let eval = line(&[1.0, 2.0, 9.0]);
        let train = line(&[0.0, 10.0]);
        let t = neighbor_table(&eval, &train, 1, NormSpec::L2).unwrap();
        let mu = weighted_measure(&train, &knn_weights(&t, 2).unwrap()).unwrap();
        let (c, plan) =
            exact_wq(&DiscreteMeasure::uniform(eval.clone()), &mu, 1.0, NormSpec::L2).unwrap();
        assert!((c - 4.0 / 3.0).abs() < 1e-12);
        // a basic solution has at most n + m - 1 positive cells
        assert!(plan.entries.len() < 3 + 2);
    }

    #[test]
    fn zero_masses_are_dropped() {
        let src = DiscreteMeasure::uniform(line(&[0.0, 1.0]));
        let tgt = validate_measure(line(&[5.0, 0.0, 1.0]), vec![0.0, 0.5, 0.5]).unwrap();
        let (c, plan) = exact_wq(&src, &tgt, 1.0, NormSpec::L2).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(plan.entries, vec![(0, 1, 0.5), (1, 2, 0.5)]);
    }

    #[test]
    fn exact_errors() {
        let a = DiscreteMeasure::uniform(line(&[0.0]));
        let b = DiscreteMeasure::uniform(Sample::from_rows(&[[0.0, 1.0]]).unwrap());
        assert!(exact_wq(&a, &b, 1.0, NormSpec::L2).is_err());
        assert!(exact_wq(&a, &a, 0.9, NormSpec::L2).is_err());
    }

    #[test]
    fn one_d_oracle_examples() {
        assert_eq!(wq_1d_uniform_oracle(&[0.0, 1.0], &[0.0, 1.0], 2.0).unwrap(), 0.0);
        assert_eq!(wq_1d_uniform_oracle(&[0.0, 1.0], &[2.0, 3.0], 1.0).unwrap(), 2.0);
        assert_eq!(wq_1d_uniform_oracle(&[1.0, 0.0], &[3.0, 2.0], 1.0).unwrap(), 2.0);
        assert!(wq_1d_uniform_oracle(&[0.0], &[0.0, 1.0], 1.0).is_err());
    }
}
