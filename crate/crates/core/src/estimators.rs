//! Population-mean estimators: the sample mean, the least squares estimator
//! for a known covariate mean, the semi-supervised least squares estimator
//! for a finite unlabeled sample, the two oracle benchmarks, and the
//! exact risks under a Gaussian design.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{build_design, ols_solve, Matrix};
use crate::normal::{check_alpha, z_critical};

/// Labeled rows `(y, x)`, unlabeled covariate rows, and optionally the
/// population covariate mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Matrix,
    x_unlabeled: Matrix,
    known_mu: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        y: Vec<f64>,
        x: Matrix,
        x_unlabeled: Matrix,
        known_mu: Option<Vec<f64>>,
    ) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InsufficientData("no labeled rows".into()));
        }
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} responses for {} covariate rows",
                y.len(),
                x.rows()
            )));
        }
        if x_unlabeled.cols() != x.cols() {
            return Err(Error::DimensionMismatch(format!(
                "labeled rows have {} covariates, unlabeled rows have {}",
                x.cols(),
                x_unlabeled.cols()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response"));
        }
        if let Some(mu) = &known_mu {
            if mu.len() != x.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "mu has {} entries for {} covariates",
                    mu.len(),
                    x.cols()
                )));
            }
            if mu.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("mu"));
            }
        }
        Ok(Self {
            y,
            x,
            x_unlabeled,
            known_mu,
        })
    }

    /// Labeled sample only.
    pub fn labeled(y: Vec<f64>, x: Matrix) -> Result<Self> {
        let p = x.cols();
        Self::new(y, x, Matrix::empty(p), None)
    }

    pub fn with_unlabeled(self, x_unlabeled: Matrix) -> Result<Self> {
        Self::new(self.y, self.x, x_unlabeled, self.known_mu)
    }

    pub fn with_known_mu(self, mu: Option<Vec<f64>>) -> Result<Self> {
        Self::new(self.y, self.x, self.x_unlabeled, mu)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x_unlabeled.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn x_unlabeled(&self) -> &Matrix {
        &self.x_unlabeled
    }

    pub fn known_mu(&self) -> Option<&[f64]> {
        self.known_mu.as_deref()
    }

    /// Covariate mean over all `n + m` rows.
    pub fn pooled_mean(&self) -> Vec<f64> {
        let total = (self.n() + self.m()) as f64;
        self.x
            .column_sums()
            .into_iter()
            .zip(self.x_unlabeled.column_sums())
            .map(|(a, b)| (a + b) / total)
            .collect()
    }
}

/// OLS fit with the intercept split from the slopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub beta1: f64,
    pub beta2: Vec<f64>,
    /// Residual sum of squares over `n − p − 1`.
    pub mse: f64,
    pub condition_estimate: f64,
}

impl RegressionFit {
    /// `(1, μ)ᵀ β̂`.
    pub fn predict_mean(&self, mu: &[f64]) -> f64 {
        self.beta1 + self.beta2.iter().zip(mu).map(|(b, m)| b * m).sum::<f64>()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        std::iter::once(self.beta1)
            .chain(self.beta2.iter().copied())
            .collect()
    }
}

/// Regresses `y` on `x` with an intercept. Needs `n ≥ p + 2`.
pub fn fit_regression(y: &[f64], x: &Matrix) -> Result<RegressionFit> {
    let (n, p) = (y.len(), x.cols());
    if n < p + 2 {
        return Err(Error::InsufficientData(format!(
            "regression on {p} covariates needs at least {} labeled rows, got {n}",
            p + 2
        )));
    }
    let sol = ols_solve(&build_design(x), y)?;
    let mse = sol.residual_sum_of_squares() / (n - p - 1) as f64;
    Ok(RegressionFit {
        beta1: sol.beta[0],
        beta2: sol.beta[1..].to_vec(),
        mse,
        condition_estimate: sol.condition_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EstimatorKind {
    SampleMean,
    LeastSquares,
    SemiSupervised,
    OracleIdeal,
    OracleSemiSupervised,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::SampleMean => "mean",
            EstimatorKind::LeastSquares => "ls",
            EstimatorKind::SemiSupervised => "ssls",
            EstimatorKind::OracleIdeal => "oracle",
            EstimatorKind::OracleSemiSupervised => "oracle_ss",
        }
    }
}

/// A point estimate of `θ = E[Y]` with its normal-theory interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub kind: EstimatorKind,
    pub theta_hat: f64,
    /// Asymptotic variance of `√n (θ̂ − θ)`; the interval half-width is `z·√(variance_per_n / n)`.
    pub variance_per_n: f64,
    pub n: usize,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    /// Whether the estimate was clamped into the response band.
    pub truncated: bool,
    pub fit: Option<RegressionFit>,
    /// Label of the covariate expansion used, if any.
    pub basis: Option<String>,
}

impl MeanEstimate {
    fn build(
        kind: EstimatorKind,
        raw: f64,
        variance_per_n: f64,
        y: &[f64],
        alpha: f64,
        truncate: bool,
    ) -> Result<Self> {
        let n = y.len();
        let half = z_critical(alpha)? * (variance_per_n / n as f64).sqrt();
        let (theta_hat, truncated) = if truncate {
            truncate_to_band(raw, y)
        } else {
            (raw, false)
        };
        // the interval stays centered on the untruncated estimate
        Ok(Self {
            kind,
            theta_hat,
            variance_per_n,
            n,
            ci_lower: raw - half,
            ci_upper: raw + half,
            alpha,
            truncated,
            fit: None,
            basis: None,
        })
    }

    pub fn ci_length(&self) -> f64 {
        self.ci_upper - self.ci_lower
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.ci_length()
    }

    pub fn covers(&self, theta: f64) -> bool {
        self.ci_lower <= theta && theta <= self.ci_upper
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance (divisor `n − 1`).
pub(crate) fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// `ȳ − β̂₍₂₎ᵀ(x̄ − target)`, the single formula behind both LS and SSLS.
fn adjusted_mean(y_mean: f64, beta2: &[f64], x_mean: &[f64], target: &[f64]) -> f64 {
    let shift: f64 = beta2
        .iter()
        .zip(x_mean.iter().zip(target))
        .map(|(b, (xm, t))| b * (xm - t))
        .sum();
    y_mean - shift
}

/// The traditional z-interval around `Ȳ`.
pub fn estimate_sample_mean(ds: &Dataset, alpha: f64) -> Result<MeanEstimate> {
    check_alpha(alpha)?;
    if ds.n() < 2 {
        return Err(Error::InsufficientData(
            "the sample mean interval needs at least two labeled rows".into(),
        ));
    }
    MeanEstimate::build(
        EstimatorKind::SampleMean,
        mean(ds.y()),
        sample_variance(ds.y()),
        ds.y(),
        alpha,
        false,
    )
}

/// A regression of the labeled sample shared by every regression-adjusted
/// estimate drawn from it.
#[derive(Debug, Clone)]
pub struct LabeledFit<'a> {
    ds: &'a Dataset,
    fit: RegressionFit,
    y_mean: f64,
    y_var: f64,
    x_mean: Vec<f64>,
}

impl<'a> LabeledFit<'a> {
    pub fn new(ds: &'a Dataset) -> Result<Self> {
        let fit = fit_regression(ds.y(), ds.x())?;
        Ok(Self {
            ds,
            fit,
            y_mean: mean(ds.y()),
            y_var: sample_variance(ds.y()),
            x_mean: ds.x().column_means(),
        })
    }

    pub fn regression(&self) -> &RegressionFit {
        &self.fit
    }

    pub fn labeled_x_mean(&self) -> &[f64] {
        &self.x_mean
    }

    pub fn response_variance(&self) -> f64 {
        self.y_var
    }

    /// `β̂₍₂₎ᵀ(target − x̄)`: how far the adjusted estimate moves away from `Ȳ`.
    pub fn adjustment(&self, target: &[f64]) -> f64 {
        adjusted_mean(0.0, &self.fit.beta2, &self.x_mean, target)
    }

    /// Regression-adjusted point value at an arbitrary covariate mean.
    pub fn point_at(&self, target: &[f64]) -> f64 {
        adjusted_mean(self.y_mean, &self.fit.beta2, &self.x_mean, target)
    }

    pub fn least_squares(&self, alpha: f64, truncate: bool) -> Result<MeanEstimate> {
        let mu = self.ds.known_mu().ok_or(Error::MissingMu)?;
        let mut est = MeanEstimate::build(
            EstimatorKind::LeastSquares,
            self.point_at(mu),
            self.fit.mse,
            self.ds.y(),
            alpha,
            truncate,
        )?;
        est.fit = Some(self.fit.clone());
        Ok(est)
    }

    /// SSLS with the pooled mean of all labeled and unlabeled rows.
    pub fn semi_supervised(&self, alpha: f64, truncate: bool) -> Result<MeanEstimate> {
        self.semi_supervised_at(&self.ds.pooled_mean(), self.ds.m(), alpha, truncate)
    }

    /// SSLS for a pooled covariate mean computed from `m` unlabeled rows elsewhere.
    pub fn semi_supervised_at(
        &self,
        pooled_mean: &[f64],
        m: usize,
        alpha: f64,
        truncate: bool,
    ) -> Result<MeanEstimate> {
        if pooled_mean.len() != self.ds.p() {
            return Err(Error::DimensionMismatch(format!(
                "pooled mean has {} entries for {} covariates",
                pooled_mean.len(),
                self.ds.p()
            )));
        }
        let n = self.ds.n() as f64;
        let m = m as f64;
        let nu2 = (m / (m + n)) * self.fit.mse + (n / (m + n)) * self.y_var;
        let mut est = MeanEstimate::build(
            EstimatorKind::SemiSupervised,
            self.point_at(pooled_mean),
            nu2,
            self.ds.y(),
            alpha,
            truncate,
        )?;
        est.fit = Some(self.fit.clone());
        Ok(est)
    }
}

/// `θ̂_LS = Ȳ − β̂₍₂₎ᵀ(X̄ − μ)` with interval half-width `z·√(MSE/n)`.
pub fn estimate_ls(ds: &Dataset, alpha: f64, truncate: bool) -> Result<MeanEstimate> {
    check_alpha(alpha)?;
    if ds.known_mu().is_none() {
        return Err(Error::MissingMu);
    }
    LabeledFit::new(ds)?.least_squares(alpha, truncate)
}

/// `θ̂_SSLS = Ȳ − β̂₍₂₎ᵀ(X̄ − μ̂)` with `μ̂` the pooled covariate mean and
/// `ν̂² = (m/(m+n))·MSE + (n/(m+n))·σ̂²_Y`.
pub fn estimate_ssls(ds: &Dataset, alpha: f64, truncate: bool) -> Result<MeanEstimate> {
    check_alpha(alpha)?;
    LabeledFit::new(ds)?.semi_supervised(alpha, truncate)
}

/// Data-driven clamp band built from the labeled response range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationBand {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub half_width: f64,
}

impl TruncationBand {
    pub fn from_response(y: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InsufficientData("empty response".into()));
        }
        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let n = y.len() as f64;
        Ok(Self {
            lower: (n + 1.0) * lo - n * hi,
            upper: (n + 1.0) * hi - n * lo,
            center: 0.5 * (hi + lo),
            half_width: (n + 0.5) * (hi - lo),
        })
    }

    /// Returns the clamped value and whether clamping happened.
    pub fn apply(&self, x: f64) -> (f64, bool) {
        if x > self.upper {
            (self.upper, true)
        } else if x < self.lower {
            (self.lower, true)
        } else {
            (x, false)
        }
    }
}

/// Clamps `x` into the band `[(n+1)y_min − n·y_max, (n+1)y_max − n·y_min]`.
pub fn truncate_to_band(x: f64, y: &[f64]) -> (f64, bool) {
    match TruncationBand::from_response(y) {
        Ok(band) => band.apply(x),
        Err(_) => (x, false),
    }
}

/// Ideal-setting oracle `(1/n)Σ(Yₖ − ξ₀(Xₖ)) + E ξ₀(X)`.
pub fn estimate_oracle<F>(ds: &Dataset, xi0: F, e_xi0: f64, alpha: f64) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    check_alpha(alpha)?;
    if ds.n() < 2 {
        return Err(Error::InsufficientData(
            "the oracle needs at least two labeled rows".into(),
        ));
    }
    let centered: Vec<f64> = ds
        .x()
        .iter_rows()
        .zip(ds.y())
        .map(|(row, y)| y - xi0(row))
        .collect();
    MeanEstimate::build(
        EstimatorKind::OracleIdeal,
        mean(&centered) + e_xi0,
        sample_variance(&centered),
        ds.y(),
        alpha,
        false,
    )
}

/// Semi-supervised oracle `Ȳ − (1/n)Σₖ≤ₙ ξ₀(Xₖ) + (1/(n+m))Σₖ≤ₙ₊ₘ ξ₀(Xₖ)`.
pub fn estimate_oracle_ss<F>(ds: &Dataset, xi0: F, alpha: f64) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    check_alpha(alpha)?;
    if ds.n() < 2 {
        return Err(Error::InsufficientData(
            "the oracle needs at least two labeled rows".into(),
        ));
    }
    let xi_lab: Vec<f64> = ds.x().iter_rows().map(&xi0).collect();
    let xi_all: Vec<f64> = xi_lab
        .iter()
        .copied()
        .chain(ds.x_unlabeled().iter_rows().map(&xi0))
        .collect();
    let centered: Vec<f64> = ds.y().iter().zip(&xi_lab).map(|(y, s)| y - s).collect();
    let (n, total) = (ds.n() as f64, xi_all.len() as f64);
    let point = mean(ds.y()) - mean(&xi_lab) + mean(&xi_all);
    let variance = sample_variance(&centered) + (n / total) * sample_variance(&xi_all);
    MeanEstimate::build(
        EstimatorKind::OracleSemiSupervised,
        point,
        variance,
        ds.y(),
        alpha,
        false,
    )
}

/// Number of unlabeled rows, with `Infinite` standing for a known covariate distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnlabeledSize {
    Finite(usize),
    Infinite,
}

impl std::fmt::Display for UnlabeledSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnlabeledSize::Finite(m) => write!(f, "{m}"),
            UnlabeledSize::Infinite => f.write_str("inf"),
        }
    }
}

/// A count, or the string `"inf"`.
impl Serialize for UnlabeledSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            UnlabeledSize::Finite(m) => s.serialize_u64(*m as u64),
            UnlabeledSize::Infinite => s.serialize_str("inf"),
        }
    }
}

impl std::str::FromStr for UnlabeledSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(UnlabeledSize::Infinite);
        }
        s.parse()
            .map(UnlabeledSize::Finite)
            .map_err(|_| Error::InvalidArgs(format!("not an unlabeled sample size: {s:?}")))
    }
}

/// Exact scaled risks `n·E(θ̂ − θ)²` under a Gaussian design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianRisk {
    pub sample_mean: f64,
    pub ls: f64,
    pub ssls: f64,
}

/// `slope_quadform` is `β₍₂₎ᵀ Cov(X) β₍₂₎`.
pub fn gaussian_exact_risk(
    n: usize,
    p: usize,
    m: UnlabeledSize,
    tau2: f64,
    slope_quadform: f64,
) -> Result<GaussianRisk> {
    if n <= p + 2 {
        return Err(Error::InvalidArgs(format!(
            "exact Gaussian risk needs n > p + 2 (n = {n}, p = {p})"
        )));
    }
    if tau2.is_nan() || slope_quadform.is_nan() || tau2 < 0.0 || slope_quadform < 0.0 {
        return Err(Error::InvalidArgs(
            "tau2 and the slope quadratic form must be nonnegative".into(),
        ));
    }
    let inflation = p as f64 * tau2 / (n - p - 2) as f64;
    let ls = tau2 + inflation;
    let sample_mean = tau2 + slope_quadform;
    let ssls = match m {
        UnlabeledSize::Infinite => ls,
        UnlabeledSize::Finite(m) => {
            let (n, m) = (n as f64, m as f64);
            tau2 + (m / (n + m)) * inflation + (n / (n + m)) * slope_quadform
        }
    };
    Ok(GaussianRisk {
        sample_mean,
        ls,
        ssls,
    })
}
