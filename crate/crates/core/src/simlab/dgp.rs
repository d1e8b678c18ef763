//! Data-generating processes for the Monte Carlo studies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use super::heavy_tail::HeavyTailP3;
use super::rng::{rng_stream, SimRng, PARAMETER_STREAM};
use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::estimators::Dataset;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Setting {
    /// Correlated Gaussian covariates, quadratic surface, heteroskedastic noise.
    GaussQuad,
    /// Covariates and noise from the `1/(1+|x|³)` law.
    HeavyTail,
    /// Poisson(10) covariates, `Y | X ~ Poisson(10·X₁)`.
    PoissonChain,
    /// Independent standard normal covariates with a linear surface.
    GaussLinear,
}

impl Setting {
    pub fn label(self) -> &'static str {
        match self {
            Setting::GaussQuad => "gauss-quad",
            Setting::HeavyTail => "heavy-tail",
            Setting::PoissonChain => "poisson",
            Setting::GaussLinear => "gauss-linear",
        }
    }

    fn code(self) -> u64 {
        match self {
            Setting::GaussQuad => 1,
            Setting::HeavyTail => 2,
            Setting::PoissonChain => 3,
            Setting::GaussLinear => 4,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gauss-quad" | "1" => Ok(Setting::GaussQuad),
            "heavy-tail" | "2" => Ok(Setting::HeavyTail),
            "poisson" | "3" => Ok(Setting::PoissonChain),
            "gauss-linear" => Ok(Setting::GaussLinear),
            other => Err(Error::InvalidSpec(format!("unknown setting {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DgpSpec {
    pub setting: Setting,
    pub n: usize,
    pub p: usize,
    /// Unlabeled rows drawn per replication.
    pub m: usize,
    /// Noise variance of the linear setting.
    pub tau2: f64,
    /// Common slope of the linear setting; its intercept is 1.
    pub slope: f64,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(setting: Setting, n: usize, p: usize, m: usize, seed: u64) -> Self {
        Self {
            setting,
            n,
            p,
            m,
            tau2: 1.0,
            slope: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec("n must be at least 2".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidSpec("p must be at least 1".into()));
        }
        if !(self.tau2 >= 0.0 && self.tau2.is_finite()) || !self.slope.is_finite() {
            return Err(Error::InvalidSpec(
                "tau2 must be finite and nonnegative, slope finite".into(),
            ));
        }
        Ok(())
    }

    /// Seed for one `(p, n)` cell of a grid, independent of grid order.
    pub fn cell_seed(seed: u64, setting: Setting, p: usize, n: usize) -> u64 {
        super::rng::mix_seed(
            seed ^ super::rng::mix_seed(setting.code() << 48 ^ (p as u64) << 24 ^ n as u64),
        )
    }
}

/// A process with its per-spec parameters drawn and frozen.
#[derive(Debug, Clone)]
pub struct Dgp {
    spec: DgpSpec,
    mu: Vec<f64>,
    /// Intercept then slopes.
    beta: Vec<f64>,
    /// Off-diagonal covariance of the equicorrelated Gaussian design.
    rho: f64,
    theta: f64,
    heavy: Option<HeavyTailP3>,
}

impl Dgp {
    pub fn new(spec: DgpSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.p;
        let mut params = rng_stream(spec.seed, PARAMETER_STREAM);
        let (mu, beta, rho, heavy) = match spec.setting {
            Setting::GaussQuad => {
                let mu: Vec<f64> = (0..p).map(|_| params.sample(StandardNormal)).collect();
                let beta: Vec<f64> = (0..=p).map(|_| params.sample(StandardNormal)).collect();
                (mu, beta, 1.0 / (2.0 * p as f64), None)
            }
            Setting::HeavyTail => (
                vec![0.0; p],
                vec![0.0; p + 1],
                0.0,
                Some(HeavyTailP3::new()),
            ),
            Setting::PoissonChain => {
                let mut beta = vec![0.0; p + 1];
                beta[1] = 10.0;
                (vec![10.0; p], beta, 0.0, None)
            }
            Setting::GaussLinear => {
                let mut beta = vec![spec.slope; p + 1];
                beta[0] = 1.0;
                (vec![0.0; p], beta, 0.0, None)
            }
        };
        let theta = match spec.setting {
            // E‖X‖² − p = ‖μ‖² under unit variances
            Setting::GaussQuad => {
                beta[0]
                    + mu.iter().zip(&beta[1..]).map(|(m, b)| m * b).sum::<f64>()
                    + mu.iter().map(|m| m * m).sum::<f64>()
            }
            Setting::HeavyTail => 0.0,
            Setting::PoissonChain => 100.0,
            Setting::GaussLinear => beta[0],
        };
        Ok(Self {
            spec,
            mu,
            beta,
            rho,
            theta,
            heavy,
        })
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    /// `θ = E[Y]`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `μ = E[X]`.
    pub fn population_mean(&self) -> &[f64] {
        &self.mu
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.beta
    }

    fn draw_x(&self, rng: &mut SimRng, out: &mut [f64]) {
        match self.spec.setting {
            Setting::GaussQuad => {
                // Σ = (1 − ρ)I + ρ11ᵀ through one shared factor
                let common: f64 = rng.sample(StandardNormal);
                let own = (1.0 - self.rho).sqrt();
                let shared = self.rho.sqrt() * common;
                for (o, m) in out.iter_mut().zip(&self.mu) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = m + own * z + shared;
                }
            }
            Setting::GaussLinear => {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
            }
            Setting::HeavyTail => {
                let sampler = self.heavy.as_ref().expect("heavy-tail sampler");
                for o in out.iter_mut() {
                    *o = sampler.sample(rng);
                }
            }
            Setting::PoissonChain => {
                let pois = Poisson::new(10.0).expect("valid rate");
                for o in out.iter_mut() {
                    *o = pois.sample(rng);
                }
            }
        }
    }

    fn draw_y(&self, rng: &mut SimRng, x: &[f64]) -> f64 {
        match self.spec.setting {
            Setting::GaussQuad => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let sd = (2.0 * sq / self.spec.p as f64).sqrt();
                let eps: f64 = rng.sample(StandardNormal);
                self.regression_surface(x) + sd * eps
            }
            Setting::GaussLinear => {
                let eps: f64 = rng.sample(StandardNormal);
                self.regression_surface(x) + self.spec.tau2.sqrt() * eps
            }
            Setting::HeavyTail => {
                let sampler = self.heavy.as_ref().expect("heavy-tail sampler");
                self.regression_surface(x) + 0.5 * sampler.sample(rng)
            }
            Setting::PoissonChain => {
                let rate = 10.0 * x[0];
                if rate > 0.0 {
                    Poisson::new(rate).expect("valid rate").sample(rng)
                } else {
                    0.0
                }
            }
        }
    }

    /// `ξ(x) = E[Y | X = x]`.
    pub fn regression_surface(&self, x: &[f64]) -> f64 {
        let linear = self.beta[0]
            + x.iter()
                .zip(&self.beta[1..])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        match self.spec.setting {
            Setting::GaussQuad => {
                linear + x.iter().map(|v| v * v).sum::<f64>() - self.spec.p as f64
            }
            Setting::HeavyTail => x.iter().map(|v| v.sin() + v).sum(),
            Setting::PoissonChain | Setting::GaussLinear => linear,
        }
    }

    /// Draws `n` labeled and `m` unlabeled rows from stream `rep_index`.
    /// The unlabeled rows come after the labeled ones in the stream, so the
    /// first `k` unlabeled rows do not depend on `m`.
    pub fn draw(&self, rep_index: u64) -> Dataset {
        let mut rng = rng_stream(self.spec.seed, rep_index);
        self.draw_from(&mut rng)
    }

    pub fn draw_from(&self, rng: &mut SimRng) -> Dataset {
        let (n, p, m) = (self.spec.n, self.spec.p, self.spec.m);
        let mut x = vec![0.0; n * p];
        let mut y = Vec::with_capacity(n);
        for row in x.chunks_exact_mut(p) {
            self.draw_x(rng, row);
            y.push(self.draw_y(rng, row));
        }
        let mut xu = vec![0.0; m * p];
        for row in xu.chunks_exact_mut(p) {
            self.draw_x(rng, row);
        }
        let x = Matrix::new(n, p, x).expect("finite covariates");
        let xu = Matrix::new(m, p, xu).expect("finite covariates");
        Dataset::new(y, x, xu, Some(self.mu.clone())).expect("consistent draw")
    }

    fn cov_quad_form(&self, v: &[f64]) -> f64 {
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        let sum: f64 = v.iter().sum();
        (1.0 - self.rho) * norm2 + self.rho * sum * sum
    }

    /// `σ² = E Var(Y | X)`, when finite.
    pub fn noise_variance(&self) -> Option<f64> {
        let p = self.spec.p as f64;
        match self.spec.setting {
            Setting::GaussQuad => {
                let mu2: f64 = self.mu.iter().map(|m| m * m).sum();
                Some(2.0 * (mu2 + p) / p)
            }
            Setting::GaussLinear => Some(self.spec.tau2),
            Setting::PoissonChain => Some(100.0),
            Setting::HeavyTail => None,
        }
    }

    /// `β₍₂₎ᵀ Cov(X) β₍₂₎` for the population least squares slope.
    pub fn slope_quadform(&self) -> Option<f64> {
        match self.spec.setting {
            Setting::GaussQuad => {
                // best linear slope of ‖X‖² + bᵀX is 2μ + b
                let slope: Vec<f64> = self
                    .mu
                    .iter()
                    .zip(&self.beta[1..])
                    .map(|(m, b)| 2.0 * m + b)
                    .collect();
                Some(self.cov_quad_form(&slope))
            }
            Setting::GaussLinear => Some(self.cov_quad_form(&self.beta[1..])),
            Setting::PoissonChain => Some(1000.0),
            Setting::HeavyTail => None,
        }
    }

    /// `τ² = E(Y − X⃗ᵀβ)²` for the population least squares fit.
    pub fn tau2(&self) -> Option<f64> {
        match self.spec.setting {
            Setting::GaussQuad => {
                let p = self.spec.p as f64;
                // Var(‖X‖²) beyond its linear part is 2·tr(Σ²)
                let tr_sigma2 = p + p * (p - 1.0) * self.rho * self.rho;
                Some(2.0 * tr_sigma2 + self.noise_variance()?)
            }
            Setting::GaussLinear => Some(self.spec.tau2),
            Setting::PoissonChain => Some(100.0),
            Setting::HeavyTail => None,
        }
    }

    /// `Var(Y)`, when finite.
    pub fn response_variance(&self) -> Option<f64> {
        Some(self.tau2()? + self.slope_quadform()?)
    }

    /// Population means of the expansion columns when they are available in
    /// closed form: raw Gaussian moments for the polynomial family, zero for
    /// the trigonometric rank terms.
    pub fn basis_means(&self, spec: &BasisSpec) -> Option<Vec<f64>> {
        match spec {
            BasisSpec::None => Some(Vec::new()),
            BasisSpec::TrigOnRank { terms } => Some(vec![0.0; terms * self.spec.p]),
            BasisSpec::Polynomial { degree } => match self.spec.setting {
                Setting::GaussQuad | Setting::GaussLinear => {
                    let mut out = Vec::new();
                    for &m in &self.mu {
                        // E X^k = m E X^{k−1} + (k − 1) E X^{k−2} for unit variance
                        let mut moments = vec![1.0, m];
                        for k in 2..=*degree {
                            let next = m * moments[k - 1] + (k - 1) as f64 * moments[k - 2];
                            moments.push(next);
                        }
                        out.extend_from_slice(&moments[2..=*degree]);
                    }
                    Some(out)
                }
                _ => None,
            },
            BasisSpec::Custom(c) => c.means.clone(),
        }
    }
}
