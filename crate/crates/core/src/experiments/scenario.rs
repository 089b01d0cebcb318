//! Built-in experiment scenarios.
//!
//! | name                  | d | evaluation law `X`        | training law `X'`               |
//! |-----------------------|---|---------------------------|---------------------------------|
//! | `diag_uniform_gauss`  | 2 | `(U, U)`, `U ~ U[0, 1]`   | `N((μ, μ), σ²[[1, s], [s, 1]])` |
//! | `atom_demo`           | 2 | Dirac mass at `x0`        | same Gaussian as above          |
//! | `identity_1d_uniform` | 1 | `U[0, 1]`                 | `U[0, 1]`                       |
//! | `gauss_gauss`         | d | `N(μ 1, σ² I)`            | `N(μ 1, σ'² I)`                 |
//!
//! The two-dimensional scenarios use the model
//! `f(x, θ) = sin(2π x1) sin(2π x2) (1 + θ)` with `θ ~ U[-1, 1]` and the
//! identity observable; `gauss_gauss` uses the product of `sin(2π x_i)` over
//! all coordinates. The noiseless variants drop the `(1 + θ)` factor.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::{Model, Observable};
use crate::random::{open01, Law, SimRng};
use crate::sample::{LabeledSample, Sample};
use crate::theory::{gaussian_moment_check, inv_density_moment, Diagnostic};
use crate::stats::MeanEstimate;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Names of the built-in scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    DiagUniformGauss,
    AtomDemo,
    Identity1dUniform,
    GaussGauss,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::DiagUniformGauss,
        ScenarioKind::AtomDemo,
        ScenarioKind::Identity1dUniform,
        ScenarioKind::GaussGauss,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::DiagUniformGauss => "diag_uniform_gauss",
            ScenarioKind::AtomDemo => "atom_demo",
            ScenarioKind::Identity1dUniform => "identity_1d_uniform",
            ScenarioKind::GaussGauss => "gauss_gauss",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown scenario '{s}' (expected one of diag_uniform_gauss, atom_demo, identity_1d_uniform, gauss_gauss)"
                ))
            })
    }
}

/// Optional parameter overrides for [`builtin_scenario`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub s_corr: Option<f64>,
    pub sigma_prime: Option<f64>,
    pub dim: Option<usize>,
    pub noiseless: Option<bool>,
    pub atom: Option<Vec<f64>>,
}

/// Fully resolved scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub mu: f64,
    pub sigma: f64,
    /// Correlation of the training Gaussian; `None` where it does not apply.
    pub s_corr: Option<f64>,
    /// Training standard deviation of `gauss_gauss`.
    pub sigma_prime: Option<f64>,
    pub noiseless: bool,
    /// Location of the atom in `atom_demo`.
    pub atom: Option<Vec<f64>>,
}

/// A fully specified experiment: input laws, model, observable and the
/// analytic quantities available for it.
#[derive(Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub d: usize,
    pub e: usize,
    pub x_law: Law,
    pub train_law: Law,
    pub model: Model,
    pub phi: Observable,
    /// Regression function `ψ(x) = E[φ(f(x, Θ))]`.
    pub psi: Option<Arc<ScalarFn>>,
    /// Noise variance `ϑ(x) = Var(φ(f(x, Θ)))`.
    pub noise_variance: Option<Arc<ScalarFn>>,
    /// Exact quantity of interest `E[φ(f(X, Θ))]`.
    pub qi: Option<f64>,
    pub params: ScenarioParams,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("kind", &self.kind)
            .field("d", &self.d)
            .field("x_law", &self.x_law)
            .field("train_law", &self.train_law)
            .field("model", &self.model)
            .field("qi", &self.qi)
            .field("params", &self.params)
            .finish()
    }
}

const DEFAULT_MU: f64 = 0.5;
const DEFAULT_SIGMA: f64 = 0.3;
const DEFAULT_SIGMA_PRIME: f64 = 0.45;
const DEFAULT_ATOM: [f64; 2] = [0.25, 0.25];

fn sine_product(x: &[f64]) -> f64 {
    x.iter().map(|c| (2.0 * PI * c).sin()).product()
}

fn theta_uniform(rng: &mut SimRng) -> f64 {
    2.0 * open01(rng) - 1.0
}

/// Variance of `θ ~ U[-1, 1]`.
const THETA_VARIANCE: f64 = 1.0 / 3.0;

fn sine_model(noiseless: bool) -> (Model, Observable, Arc<ScalarFn>, Arc<ScalarFn>) {
    let psi: Arc<ScalarFn> = Arc::new(sine_product);
    if noiseless {
        let model = Model::new("sine_product", 1, |x, _| vec![sine_product(x)], theta_uniform);
        let var: Arc<ScalarFn> = Arc::new(|_| 0.0);
        (model, Observable::identity(Some(1.0)), psi, var)
    } else {
        let model = Model::new(
            "sine_product_noisy",
            1,
            |x, t| vec![sine_product(x) * (1.0 + t)],
            theta_uniform,
        );
        let var: Arc<ScalarFn> = Arc::new(|x| {
            let s = sine_product(x);
            s * s * THETA_VARIANCE
        });
        (model, Observable::identity(Some(2.0)), psi, var)
    }
}

fn check_positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

fn reject(kind: ScenarioKind, field: &str, present: bool) -> Result<()> {
    if present {
        return Err(Error::invalid(format!(
            "override '{field}' does not apply to scenario {kind}"
        )));
    }
    Ok(())
}

/// Builds a named scenario, applying `overrides` to its defaults.
pub fn builtin_scenario(name: &str, overrides: &Overrides) -> Result<Scenario> {
    build(name.parse()?, overrides)
}

fn build(kind: ScenarioKind, ov: &Overrides) -> Result<Scenario> {
    let noiseless = ov.noiseless.unwrap_or(false);
    match kind {
        ScenarioKind::DiagUniformGauss | ScenarioKind::AtomDemo => {
            reject(kind, "sigma_prime", ov.sigma_prime.is_some())?;
            reject(kind, "dim", ov.dim.is_some_and(|d| d != 2))?;
            let mu = ov.mu.unwrap_or(DEFAULT_MU);
            let sigma = check_positive("sigma", ov.sigma.unwrap_or(DEFAULT_SIGMA))?;
            let s_corr = ov.s_corr.unwrap_or(0.0);
            let train_law = Law::correlated_gaussian_2d(mu, sigma, s_corr)?;
            let (model, phi, psi, var) = sine_model(noiseless);
            let (x_law, qi, atom) = if kind == ScenarioKind::DiagUniformGauss {
                reject(kind, "atom", ov.atom.is_some())?;
                // E[sin(2πU)^2] = 1/2
                (Law::Diagonal { dim: 2, lo: 0.0, hi: 1.0 }, 0.5, None)
            } else {
                let x0 = ov.atom.clone().unwrap_or_else(|| DEFAULT_ATOM.to_vec());
                if x0.len() != 2 || x0.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("atom must be a finite point of the plane"));
                }
                let qi = sine_product(&x0);
                (Law::Atom { point: x0.clone() }, qi, Some(x0))
            };
            Ok(Scenario {
                kind,
                d: 2,
                e: 1,
                x_law,
                train_law,
                model,
                phi,
                psi: Some(psi),
                noise_variance: Some(var),
                qi: Some(qi),
                params: ScenarioParams {
                    mu,
                    sigma,
                    s_corr: Some(s_corr),
                    sigma_prime: None,
                    noiseless,
                    atom,
                },
            })
        }
        ScenarioKind::Identity1dUniform => {
            for (field, present) in [
                ("mu", ov.mu.is_some()),
                ("sigma", ov.sigma.is_some()),
                ("s_corr", ov.s_corr.is_some()),
                ("sigma_prime", ov.sigma_prime.is_some()),
                ("atom", ov.atom.is_some()),
                ("dim", ov.dim.is_some_and(|d| d != 1)),
            ] {
                reject(kind, field, present)?;
            }
            let unit = Law::uniform_box(vec![0.0], vec![1.0])?;
            let model = Model::new("identity", 1, |x, _| vec![x[0]], |_| 0.0);
            Ok(Scenario {
                kind,
                d: 1,
                e: 1,
                x_law: unit.clone(),
                train_law: unit,
                model,
                phi: Observable::identity(Some(1.0)),
                psi: Some(Arc::new(|x| x[0])),
                noise_variance: Some(Arc::new(|_| 0.0)),
                qi: Some(0.5),
                params: ScenarioParams {
                    mu: 0.5,
                    sigma: (1.0f64 / 12.0).sqrt(),
                    s_corr: None,
                    sigma_prime: None,
                    noiseless: true,
                    atom: None,
                },
            })
        }
        ScenarioKind::GaussGauss => {
            reject(kind, "s_corr", ov.s_corr.is_some())?;
            reject(kind, "atom", ov.atom.is_some())?;
            let d = ov.dim.unwrap_or(2);
            if d == 0 {
                return Err(Error::invalid("dim must be positive"));
            }
            let mu = ov.mu.unwrap_or(DEFAULT_MU);
            let sigma = check_positive("sigma", ov.sigma.unwrap_or(DEFAULT_SIGMA))?;
            let sigma_p =
                check_positive("sigma_prime", ov.sigma_prime.unwrap_or(DEFAULT_SIGMA_PRIME))?;
            let iso = |s: f64| {
                let mut cov = vec![0.0; d * d];
                (0..d).for_each(|i| cov[i * d + i] = s * s);
                cov
            };
            let x_law = Law::gaussian(vec![mu; d], &iso(sigma))?;
            let train_law = Law::gaussian(vec![mu; d], &iso(sigma_p))?;
            let (model, phi, psi, var) = sine_model(noiseless);
            // E[sin(2πX)] = sin(2πμ) exp(-2π²σ²) for X ~ N(μ, σ²)
            let qi = ((2.0 * PI * mu).sin() * (-2.0 * PI * PI * sigma * sigma).exp()).powi(d as i32);
            Ok(Scenario {
                kind,
                d,
                e: 1,
                x_law,
                train_law,
                model,
                phi,
                psi: Some(psi),
                noise_variance: Some(var),
                qi: Some(qi),
                params: ScenarioParams {
                    mu,
                    sigma,
                    s_corr: None,
                    sigma_prime: Some(sigma_p),
                    noiseless,
                    atom: None,
                },
            })
        }
    }
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        self.kind.as_str()
    }

    fn overrides(&self) -> Overrides {
        let p = &self.params;
        let gaussian = matches!(
            self.kind,
            ScenarioKind::DiagUniformGauss | ScenarioKind::AtomDemo | ScenarioKind::GaussGauss
        );
        Overrides {
            mu: gaussian.then_some(p.mu),
            sigma: gaussian.then_some(p.sigma),
            s_corr: p.s_corr,
            sigma_prime: p.sigma_prime,
            dim: (self.kind == ScenarioKind::GaussGauss).then_some(self.d),
            noiseless: Some(p.noiseless),
            atom: p.atom.clone(),
        }
    }

    /// The same scenario with another training correlation.
    pub fn with_s_corr(&self, s_corr: f64) -> Result<Scenario> {
        if self.params.s_corr.is_none() {
            return Err(Error::invalid(format!("scenario {} has no s_corr", self.name())));
        }
        let mut ov = self.overrides();
        ov.s_corr = Some(s_corr);
        let mut out = build(self.kind, &ov)?;
        out.phi = self.phi.clone();
        out.qi = self.qi;
        out.psi = self.psi.clone();
        out.noise_variance = self.noise_variance.clone();
        Ok(out)
    }

    /// Replaces the observable. `qi`, `psi` and the noise variance are reset
    /// to the supplied values since they depend on it.
    pub fn with_observable(
        &self,
        phi: Observable,
        qi: Option<f64>,
        psi: Option<Arc<ScalarFn>>,
    ) -> Scenario {
        let mut out = self.clone();
        out.phi = phi;
        out.qi = qi;
        out.psi = psi;
        out.noise_variance = None;
        out
    }

    /// Draws the evaluation sample, then the labeled training sample.
    pub fn draw(&self, rng: &mut SimRng, n: usize, m: usize) -> Result<(Sample, LabeledSample)> {
        let eval = self.x_law.sample(rng, n)?;
        let inputs = self.train_law.sample(rng, m)?;
        let train = self.model.label(inputs, rng)?;
        Ok((eval, train))
    }

    pub fn psi_values(&self, points: &Sample) -> Option<Vec<f64>> {
        self.psi.as_ref().map(|psi| points.points().map(|x| psi(x)).collect())
    }

    /// Estimate of `E[p'(X)^{-q/d}]` for this scenario's laws.
    pub fn inv_density_moment(&self, q: f64, n_draws: usize, seed: u64) -> Result<MeanEstimate> {
        let law = &self.train_law;
        inv_density_moment(
            &self.x_law,
            &|x| law.log_density(x).unwrap_or(f64::NAN),
            q,
            self.d,
            n_draws,
            seed,
        )
    }

    /// Advisory assumption checks for transport order `q`.
    pub fn diagnostics(&self, q: f64) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if let (ScenarioKind::GaussGauss, Some(sp)) = (self.kind, self.params.sigma_prime) {
            let holds = gaussian_moment_check(self.params.sigma, sp, q, self.d);
            out.push(Diagnostic {
                name: "gaussian_moment_condition",
                holds: Some(holds),
                detail: format!(
                    "sigma'^2 = {} vs sigma^2 q/d = {}",
                    sp * sp,
                    self.params.sigma * self.params.sigma * q / self.d as f64
                ),
            });
        }
        let absolutely_continuous = matches!(self.x_law, Law::UniformBox { .. } | Law::Gaussian { .. });
        out.push(Diagnostic {
            name: "evaluation_law_has_density",
            holds: Some(absolutely_continuous),
            detail: "rate constant only needs the training density; kappa, r_kappa and the min-integrability index are not checked".into(),
        });
        out
    }
}
