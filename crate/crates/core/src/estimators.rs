//! Quantity-of-interest estimators and k-NN regression under covariate shift.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::{knn_query, neighbor_table, KdIndex};
use crate::random::{stream_rng, Law, SimRng};
use crate::sample::{LabeledSample, NormSpec, Sample};
use crate::stats::{neumaier_sum, MeanEstimate};
use crate::weights::WeightVector;

type ObservableFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type ModelFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;
type ThetaSampler = dyn Fn(&mut SimRng) -> f64 + Send + Sync;

/// A scalar observable `φ` of the model output.
#[derive(Clone)]
pub struct Observable {
    name: String,
    func: Arc<ObservableFn>,
    sup_bound: Option<f64>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        sup_bound: Option<f64>,
    ) -> Self {
        Observable {
            name: name.into(),
            func: Arc::new(func),
            sup_bound,
        }
    }

    /// First output coordinate.
    pub fn identity(sup_bound: Option<f64>) -> Self {
        Observable::new("identity", |y| y[0], sup_bound)
    }

    pub fn constant(c: f64) -> Self {
        Observable::new("constant", move |_| c, Some(c.abs()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Declared bound on `|φ|`, if any.
    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn with_sup_bound(mut self, bound: Option<f64>) -> Self {
        self.sup_bound = bound;
        self
    }

    #[inline]
    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.func)(y)
    }

    /// Evaluates and checks the value against the declared bound.
    pub fn eval_checked(&self, y: &[f64]) -> Result<f64> {
        let v = self.eval(y);
        if !v.is_finite() {
            return Err(Error::numerical(format!("observable '{}' is not finite", self.name)));
        }
        if let Some(b) = self.sup_bound {
            if v.abs() > b * (1.0 + 1e-12) {
                return Err(Error::invalid(format!(
                    "observable '{}' value {v} exceeds declared bound {b}",
                    self.name
                )));
            }
        }
        Ok(v)
    }
}

/// A numerical model `y = f(x, θ)` together with the law of its parameter `θ`.
#[derive(Clone)]
pub struct Model {
    name: String,
    output_dim: usize,
    func: Arc<ModelFn>,
    theta: Arc<ThetaSampler>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("output_dim", &self.output_dim)
            .finish()
    }
}

impl Model {
    pub fn new(
        name: impl Into<String>,
        output_dim: usize,
        func: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        theta: impl Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Model {
            name: name.into(),
            output_dim,
            func: Arc::new(func),
            theta: Arc::new(theta),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64], theta: f64) -> Vec<f64> {
        (self.func)(x, theta)
    }

    pub fn draw_theta(&self, rng: &mut SimRng) -> f64 {
        (self.theta)(rng)
    }

    /// Draws one θ per input and evaluates the model.
    pub fn label(&self, inputs: Sample, rng: &mut SimRng) -> Result<LabeledSample> {
        let mut out = Vec::with_capacity(inputs.len() * self.output_dim);
        for x in inputs.points() {
            let theta = self.draw_theta(rng);
            let y = self.eval(x, theta);
            if y.len() != self.output_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.output_dim,
                    found: y.len(),
                });
            }
            out.extend(y);
        }
        let outputs = Sample::new(self.output_dim, out)?;
        LabeledSample::new(inputs, outputs)
    }
}

/// `(1/m) Σ_j w_j φ(Y'_j)`.
pub fn qi_hat(wv: &WeightVector, outputs: &Sample, phi: &Observable) -> Result<f64> {
    if wv.m() != outputs.len() {
        return Err(Error::SizeMismatch {
            what: "weight vector vs output rows",
            left: wv.m(),
            right: outputs.len(),
        });
    }
    let terms = wv
        .weights()
        .iter()
        .zip(outputs.points())
        .map(|(w, y)| Ok(w * phi.eval_checked(y)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(neumaier_sum(terms) / wv.m() as f64)
}

/// `(1/m) Σ_j w_j ψ(X'_j)` from precomputed regression values `ψ(X'_j)`.
pub fn qi_tilde(wv: &WeightVector, psi_values: &[f64]) -> Result<f64> {
    if wv.m() != psi_values.len() {
        return Err(Error::SizeMismatch {
            what: "weight vector vs regression values",
            left: wv.m(),
            right: psi_values.len(),
        });
    }
    Ok(neumaier_sum(wv.weights().iter().zip(psi_values).map(|(w, p)| w * p)) / wv.m() as f64)
}

fn mean_rows(outputs: &Sample, rows: impl Iterator<Item = usize>, count: usize) -> Vec<f64> {
    let mut acc = vec![0.0; outputs.dim()];
    for j in rows {
        for (a, y) in acc.iter_mut().zip(outputs.point(j)) {
            *a += y;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    acc
}

/// k-NN regression estimate at `x`: mean output of the `k` nearest training inputs.
pub fn knn_regress(x: &[f64], train: &LabeledSample, k: usize, norm: NormSpec) -> Result<Vec<f64>> {
    let nbrs = knn_query(x, train.inputs(), k, norm)?;
    Ok(mean_rows(train.outputs(), nbrs.iter().map(|n| n.index), k))
}

/// `(1/n) Σ_i (1/k) Σ_l φ(Y'_{j_i^(l)})`, the plug-in k-NN estimator of the
/// quantity of interest. Equals [`qi_hat`] under the k-NN weights.
pub fn qi_knn(
    eval: &Sample,
    train: &LabeledSample,
    k: usize,
    phi: &Observable,
    norm: NormSpec,
) -> Result<f64> {
    let table = neighbor_table(eval, train.inputs(), k, norm)?;
    let phis = train
        .outputs()
        .points()
        .map(|y| phi.eval_checked(y))
        .collect::<Result<Vec<f64>>>()?;
    let per_point = table
        .rows()
        .map(|row| neumaier_sum(row.iter().map(|&j| phis[j])) / k as f64);
    Ok(neumaier_sum(per_point) / table.n() as f64)
}

/// Configuration of a generalization-error Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizationConfig {
    pub m: usize,
    pub k: usize,
    pub n_test: usize,
    pub replications: usize,
    pub norm: NormSpec,
    pub seed: u64,
}

/// Monte Carlo estimate of `E[|r(X) - r̂_m^(k)(X)|^2]` with `X ~ x_law`, a fresh
/// training sample from `train_law` per replication, and ground truth `r`.
///
/// Returns the mean over replications of the per-replication test error and
/// its standard error.
pub fn generalization_error_mc(
    model: &Model,
    x_law: &Law,
    train_law: &Law,
    truth: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    cfg: &GeneralizationConfig,
) -> Result<MeanEstimate> {
    let per_rep = generalization_error_samples(model, x_law, train_law, truth, cfg)?;
    Ok(MeanEstimate::from_values(&per_rep))
}

/// Per-replication test errors behind [`generalization_error_mc`], in
/// replication order.
pub fn generalization_error_samples(
    model: &Model,
    x_law: &Law,
    train_law: &Law,
    truth: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    cfg: &GeneralizationConfig,
) -> Result<Vec<f64>> {
    if cfg.m == 0 || cfg.n_test == 0 || cfg.replications == 0 {
        return Err(Error::invalid("m, n_test and replications must be positive"));
    }
    if cfg.k == 0 || cfg.k > cfg.m {
        return Err(Error::invalid(format!("k = {} out of range for m = {}", cfg.k, cfg.m)));
    }
    if x_law.dim() != train_law.dim() {
        return Err(Error::DimensionMismatch {
            expected: x_law.dim(),
            found: train_law.dim(),
        });
    }
    let per_rep = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(cfg.seed, rep as u64);
            let inputs = train_law.sample(&mut rng, cfg.m)?;
            let train = model.label(inputs, &mut rng)?;
            let test = x_law.sample(&mut rng, cfg.n_test)?;
            let index = KdIndex::build(train.inputs(), cfg.norm);
            let errs = test.points().map(|x| {
                let nbrs = index.query_unchecked(x, cfg.k);
                let est = mean_rows(train.outputs(), nbrs.iter().map(|n| n.index), cfg.k);
                let r = truth(x);
                est.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            });
            Ok(neumaier_sum(errs) / cfg.n_test as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::neighbor_table;
    use crate::random::open01;
    use crate::weights::knn_weights;
    use proptest::prelude::*;

    fn line(v: &[f64]) -> Sample {
        Sample::from_scalars(v).unwrap()
    }

    fn labeled(x: &[f64], y: &[f64]) -> LabeledSample {
        LabeledSample::new(line(x), line(y)).unwrap()
    }

    #[test]
    fn qi_hat_examples() {
        let wv = WeightVector::from_weights(vec![4.0 / 3.0, 2.0 / 3.0]).unwrap();
        let ys = line(&[3.0, 6.0]);
        let id = Observable::identity(None);
        assert!((qi_hat(&wv, &ys, &id).unwrap() - 4.0).abs() < 1e-15);
        assert!((qi_hat(&wv, &ys, &Observable::constant(1.0)).unwrap() - 1.0).abs() < 1e-15);
        let u = WeightVector::uniform(2).unwrap();
        assert_eq!(qi_hat(&u, &ys, &id).unwrap(), 4.5);
        assert!(qi_hat(&u, &line(&[1.0]), &id).is_err());
    }

    #[test]
    fn bound_violation_is_reported() {
        let u = WeightVector::uniform(2).unwrap();
        let phi = Observable::identity(Some(1.0));
        assert!(qi_hat(&u, &line(&[0.5, 2.0]), &phi).is_err());
    }

    #[test]
    fn qi_tilde_examples() {
        let wv = WeightVector::from_weights(vec![1.0, 1.0]).unwrap();
        assert_eq!(qi_tilde(&wv, &[2.0, 4.0]).unwrap(), 3.0);
        let wv = WeightVector::from_weights(vec![1.5, 0.5]).unwrap();
        assert_eq!(qi_tilde(&wv, &[7.0, 7.0]).unwrap(), 7.0);
        assert!(qi_tilde(&wv, &[1.0]).is_err());
    }

    #[test]
    fn noiseless_tilde_equals_hat() {
        let eval = line(&[0.1, 0.4, 0.45, 0.9]);
        let xs = [0.0, 0.3, 0.5, 0.7, 1.0];
        let f = |x: f64| (3.0 * x).sin();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let t = neighbor_table(&eval, &line(&xs), 2, NormSpec::L2).unwrap();
        let wv = knn_weights(&t, 5).unwrap();
        let hat = qi_hat(&wv, &line(&ys), &Observable::identity(None)).unwrap();
        assert_eq!(hat, qi_tilde(&wv, &ys).unwrap());
    }

    #[test]
    fn regression_examples() {
        let train = labeled(&[0.0, 10.0], &[1.0, 5.0]);
        assert_eq!(knn_regress(&[1.5], &train, 1, NormSpec::L2).unwrap(), vec![1.0]);
        assert_eq!(knn_regress(&[1.5], &train, 2, NormSpec::L2).unwrap(), vec![3.0]);
        assert!(knn_regress(&[1.5], &train, 3, NormSpec::L2).is_err());
    }

    #[test]
    fn qi_knn_examples() {
        let train = labeled(&[0.0, 10.0], &[3.0, 6.0]);
        let eval = line(&[1.0, 2.0, 9.0]);
        let id = Observable::identity(None);
        assert!((qi_knn(&eval, &train, 1, &id, NormSpec::L2).unwrap() - 4.0).abs() < 1e-15);
        let one = Observable::constant(1.0);
        assert_eq!(qi_knn(&eval, &train, 2, &one, NormSpec::L2).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn qi_knn_equals_weighted_form(
            seed in any::<u64>(),
            n in 1usize..40,
            m in 1usize..40,
            dim in 1usize..4,
            kf in 0.0f64..1.0,
        ) {
            let mut rng = stream_rng(seed, 0);
            let k = 1 + ((m - 1) as f64 * kf) as usize;
            let eval = Sample::new(dim, (0..n * dim).map(|_| open01(&mut rng)).collect()).unwrap();
            let xs = Sample::new(dim, (0..m * dim).map(|_| open01(&mut rng)).collect()).unwrap();
            let ys = Sample::new(1, (0..m).map(|_| open01(&mut rng) - 0.5).collect()).unwrap();
            let train = LabeledSample::new(xs.clone(), ys.clone()).unwrap();
            let phi = Observable::new("cube", |y| y[0].powi(3), None);
            let direct = qi_knn(&eval, &train, k, &phi, NormSpec::L2).unwrap();
            let wv = knn_weights(&neighbor_table(&eval, &xs, k, NormSpec::L2).unwrap(), m).unwrap();
            let via_weights = qi_hat(&wv, &ys, &phi).unwrap();
            prop_assert!((direct - via_weights).abs() <= 1e-12);
        }
    }

    fn unit_interval() -> Law {
        Law::uniform_box(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn generalization_noiseless_identity() {
        let model = Model::new("identity", 1, |x, _| vec![x[0]], |_| 0.0);
        let cfg = GeneralizationConfig {
            m: 2000,
            k: 1,
            n_test: 200,
            replications: 20,
            norm: NormSpec::L2,
            seed: 1,
        };
        let est = generalization_error_mc(&model, &unit_interval(), &unit_interval(), &|x| vec![x[0]], &cfg)
            .unwrap();
        assert!(est.mean < 1e-3, "{}", est.mean);
    }

    #[test]
    fn generalization_pure_noise() {
        // f = θ with θ uniform on [-1, 1]: variance 1/3, regression function 0
        let model = Model::new("noise", 1, |_, t| vec![t], |rng| 2.0 * open01(rng) - 1.0);
        let var = 1.0 / 3.0;
        let truth = |_: &[f64]| vec![0.0];
        let law = unit_interval();
        let k = 8;
        let cfg = GeneralizationConfig {
            m: 200,
            k,
            n_test: 50,
            replications: 400,
            norm: NormSpec::L2,
            seed: 2,
        };
        let est = generalization_error_mc(&model, &law, &law, &truth, &cfg).unwrap();
        assert!(est.mean <= var / k as f64 + 3.0 * est.stderr, "{est:?}");
        assert!((est.mean - var / k as f64).abs() < 4.0 * est.stderr, "{est:?}");

        // k = m: the estimate is the mean of m noises
        let cfg = GeneralizationConfig { m: 50, k: 50, n_test: 5, replications: 2000, ..cfg };
        let est = generalization_error_mc(&model, &law, &law, &truth, &cfg).unwrap();
        assert!((est.mean - var / 50.0).abs() < 4.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn generalization_rejects_bad_config() {
        let model = Model::new("identity", 1, |x, _| vec![x[0]], |_| 0.0);
        let cfg = GeneralizationConfig {
            m: 5,
            k: 6,
            n_test: 1,
            replications: 1,
            norm: NormSpec::L2,
            seed: 0,
        };
        let law = unit_interval();
        assert!(generalization_error_mc(&model, &law, &law, &|x| vec![x[0]], &cfg).is_err());
    }
}
