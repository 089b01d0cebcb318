use itertools::Itertools;
use rand::Rng;
use wknn::random::stream_rng;
use wknn::{
    exact_wq, knn_weights, neighbor_table, validate_measure, weighted_measure, wq_1nn,
    DiscreteMeasure, NormSpec, Sample,
};

/// W_q^q on the line between arbitrary discrete measures by integrating the
/// distance between quantile functions.
fn quantile_coupling_1d(a: &[(f64, f64)], b: &[(f64, f64)], q: f64) -> f64 {
    let sort = |v: &[(f64, f64)]| {
        let mut v = v.to_vec();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let (a, b) = (sort(a), sort(b));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let step = ra.min(rb);
        total += step * (a[i].0 - b[j].0).abs().powf(q);
        ra -= step;
        rb -= step;
        if ra <= 1e-15 {
            i += 1;
            ra = a.get(i).map_or(0.0, |p| p.1);
        }
        if rb <= 1e-15 {
            j += 1;
            rb = b.get(j).map_or(0.0, |p| p.1);
        }
    }
    total
}

fn random_masses(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.1..1.0) })
        .collect();
    let s: f64 = raw.iter().sum();
    if s == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    let mut m: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let drift = 1.0 - m.iter().sum::<f64>();
    let last = m.iter().rposition(|&x| x > 0.0).unwrap();
    m[last] += drift;
    m
}

#[test]
fn weighted_measures_on_the_line_match_quantile_coupling() {
    let mut rng = stream_rng(11, 0);
    for case in 0..150 {
        let n = rng.random_range(1..9);
        let m = rng.random_range(1..9);
        let q = [1.0, 1.5, 2.0, 3.0][case % 4];
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (wa, wb) = (random_masses(&mut rng, n), random_masses(&mut rng, m));
        let a = validate_measure(Sample::from_scalars(&xs).unwrap(), wa.clone()).unwrap();
        let b = validate_measure(Sample::from_scalars(&ys).unwrap(), wb.clone()).unwrap();
        let (lp, plan) = exact_wq(&a, &b, q, NormSpec::L2).unwrap();
        let oracle = quantile_coupling_1d(
            &xs.iter().copied().zip(wa.iter().copied()).collect::<Vec<_>>(),
            &ys.iter().copied().zip(wb.iter().copied()).collect::<Vec<_>>(),
            q,
        );
        assert!((lp - oracle).abs() <= 1e-9, "case {case}: lp {lp} vs oracle {oracle}");
        assert!((plan.dual_objective - lp).abs() <= 1e-9 * lp.max(1.0));
        assert!(plan.entries.iter().all(|&(i, j, g)| g > 0.0 && wa[i] > 0.0 && wb[j] > 0.0));
    }
}

#[test]
fn uniform_assignments_match_permutation_search() {
    let mut rng = stream_rng(12, 0);
    for case in 0..40 {
        let n = rng.random_range(1..7);
        let d = rng.random_range(1..4);
        let q = [1.0, 2.0, 3.0][case % 3];
        let norm = [NormSpec::L1, NormSpec::L2, NormSpec::LInf][case % 3];
        let draw = |rng: &mut wknn::random::SimRng| {
            Sample::new(d, (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
        };
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let best = (0..n)
            .permutations(n)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| norm.distance_unchecked(x.point(i), y.point(j)).powf(q))
                    .sum::<f64>()
                    / n as f64
            })
            .fold(f64::INFINITY, f64::min);
        let (lp, _) = exact_wq(&DiscreteMeasure::uniform(x), &DiscreteMeasure::uniform(y), q, norm)
            .unwrap();
        assert!((lp - best).abs() <= 1e-9, "case {case}: {lp} vs {best}");
    }
}

#[test]
fn plans_have_the_prescribed_marginals_and_beat_random_couplings() {
    let mut rng = stream_rng(13, 0);
    for _ in 0..30 {
        let (n, m) = (rng.random_range(2..7), rng.random_range(2..7));
        let x = Sample::new(2, (0..2 * n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let y = Sample::new(2, (0..2 * m).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let (wa, wb) = (random_masses(&mut rng, n), random_masses(&mut rng, m));
        let a = validate_measure(x.clone(), wa.clone()).unwrap();
        let b = validate_measure(y.clone(), wb.clone()).unwrap();
        let (lp, plan) = exact_wq(&a, &b, 2.0, NormSpec::L2).unwrap();
        for (s, t) in plan.row_sums(n).iter().zip(&wa) {
            assert!((s - t).abs() < 1e-12);
        }
        for (s, t) in plan.col_sums(m).iter().zip(&wb) {
            assert!((s - t).abs() < 1e-12);
        }
        assert!(plan.min_reduced_cost >= -1e-12);
        // northwest-corner plans under random orderings are feasible couplings
        for _ in 0..20 {
            let mut ri: Vec<usize> = (0..n).collect();
            let mut cj: Vec<usize> = (0..m).collect();
            use rand::seq::SliceRandom;
            ri.shuffle(&mut rng);
            cj.shuffle(&mut rng);
            let (mut sa, mut sb) = (wa.clone(), wb.clone());
            let (mut p, mut r, mut cost) = (0, 0, 0.0);
            while p < n && r < m {
                let (i, j) = (ri[p], cj[r]);
                let g = sa[i].min(sb[j]);
                cost += g * NormSpec::L2.distance_unchecked(x.point(i), y.point(j)).powi(2);
                sa[i] -= g;
                sb[j] -= g;
                if sa[i] <= 1e-15 {
                    p += 1;
                } else {
                    r += 1;
                }
            }
            assert!(lp <= cost + 1e-12);
        }
    }
}

#[test]
fn knn_measure_is_reachable_by_closed_form() {
    // the 1-NN closed form is the exact transport cost to its own weights
    let mut rng = stream_rng(14, 0);
    for _ in 0..50 {
        let (n, m) = (rng.random_range(1..15), rng.random_range(1..15));
        let eval = Sample::new(3, (0..3 * n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let train = Sample::new(3, (0..3 * m).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let table = neighbor_table(&eval, &train, 1, NormSpec::L2).unwrap();
        let target = weighted_measure(&train, &knn_weights(&table, m).unwrap()).unwrap();
        let (lp, _) = exact_wq(&DiscreteMeasure::uniform(eval.clone()), &target, 2.0, NormSpec::L2).unwrap();
        let closed = wq_1nn(&eval, &train, 2.0, NormSpec::L2).unwrap();
        assert!((lp - closed).abs() <= 1e-9);
    }
}

#[test]
fn mismatched_and_invalid_inputs() {
    let a = DiscreteMeasure::uniform(Sample::from_scalars(&[0.0, 1.0]).unwrap());
    let b = DiscreteMeasure::uniform(Sample::from_rows(&[[0.0, 1.0]]).unwrap());
    assert!(exact_wq(&a, &b, 2.0, NormSpec::L2).is_err());
    assert!(exact_wq(&a, &a, 0.5, NormSpec::L2).is_err());
    assert!(validate_measure(Sample::from_scalars(&[0.0, 1.0]).unwrap(), vec![0.7, 0.7]).is_err());
    assert!(validate_measure(Sample::from_scalars(&[0.0, 1.0]).unwrap(), vec![1.1, -0.1]).is_err());
    let (same, _) = exact_wq(&a, &a, 3.0, NormSpec::L2).unwrap();
    assert_eq!(same, 0.0);
}
