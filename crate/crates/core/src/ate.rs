//! Semi-supervised average treatment effect for a randomized experiment
//! with extra covariate-only rows.

use crate::error::{Error, Result};
use crate::estimators::{fit_regression, RegressionFit};
use crate::linalg::{add_scatter, dot, quad_form, symmetrize_upper, Matrix};
use crate::normal::{check_alpha, z_critical};

/// Responses and covariates of one experimental arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSample {
    pub y: Vec<f64>,
    pub x: Matrix,
}

impl ArmSample {
    pub fn new(y: Vec<f64>, x: Matrix) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} responses for {} covariate rows",
                y.len(),
                x.rows()
            )));
        }
        Ok(Self { y, x })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteDataset {
    treatment: ArmSample,
    control: ArmSample,
    extra_x: Matrix,
}

impl AteDataset {
    pub fn new(treatment: ArmSample, control: ArmSample, extra_x: Matrix) -> Result<Self> {
        let p = treatment.x.cols();
        if control.x.cols() != p || extra_x.cols() != p {
            return Err(Error::DimensionMismatch(format!(
                "covariate counts differ: treatment {p}, control {}, extra {}",
                control.x.cols(),
                extra_x.cols()
            )));
        }
        for (name, arm) in [("treatment", &treatment), ("control", &control)] {
            if arm.len() < p + 2 {
                return Err(Error::InsufficientData(format!(
                    "{name} arm has {} rows, needs at least {}",
                    arm.len(),
                    p + 2
                )));
            }
        }
        Ok(Self {
            treatment,
            control,
            extra_x,
        })
    }

    pub fn treatment(&self) -> &ArmSample {
        &self.treatment
    }

    pub fn control(&self) -> &ArmSample {
        &self.control
    }

    pub fn extra_x(&self) -> &Matrix {
        &self.extra_x
    }

    pub fn p(&self) -> usize {
        self.treatment.x.cols()
    }

    /// Same data with the arms exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            treatment: self.control.clone(),
            control: self.treatment.clone(),
            extra_x: self.extra_x.clone(),
        }
    }

    fn total_rows(&self) -> usize {
        self.treatment.len() + self.control.len() + self.extra_x.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteEstimate {
    pub d_hat: f64,
    /// Variance of `d̂` itself; the half-width is `z·√v_hat2`.
    pub v_hat2: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub fit_t: RegressionFit,
    pub fit_c: RegressionFit,
    pub mu_hat: Vec<f64>,
    /// Pooled centered second moments of all covariate rows.
    pub sigma_x: Matrix,
}

impl AteEstimate {
    pub fn ci_length(&self) -> f64 {
        self.ci_upper - self.ci_lower
    }

    pub fn covers(&self, d: f64) -> bool {
        self.ci_lower <= d && d <= self.ci_upper
    }
}

fn fit_arms(ds: &AteDataset) -> (Result<RegressionFit>, Result<RegressionFit>) {
    let fit_t = || fit_regression(&ds.treatment.y, &ds.treatment.x);
    let fit_c = || fit_regression(&ds.control.y, &ds.control.x);
    #[cfg(feature = "parallel")]
    {
        rayon::join(fit_t, fit_c)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (fit_t(), fit_c())
    }
}

/// `d̂ = (1, μ̂)ᵀ(β̂_t − β̂_c)` with `μ̂` pooled over both arms and the extra rows,
/// and `V̂² = MSE_t/n_t + MSE_c/n_c + Δ₍₂₎ᵀ Σ̂_X Δ₍₂₎ / (n_t + n_c + m)`
/// where `Δ₍₂₎` is the slope difference.
pub fn estimate_ate(ds: &AteDataset, alpha: f64) -> Result<AteEstimate> {
    check_alpha(alpha)?;
    let (fit_t, fit_c) = fit_arms(ds);
    let (fit_t, fit_c) = (fit_t?, fit_c?);
    let p = ds.p();
    let total = ds.total_rows() as f64;

    // arm sums are added pairwise first so swapping arms is exact
    let st = ds.treatment.x.column_sums();
    let sc = ds.control.x.column_sums();
    let sa = ds.extra_x.column_sums();
    let mu_hat: Vec<f64> = (0..p).map(|j| ((st[j] + sc[j]) + sa[j]) / total).collect();

    let mut scatter_t = vec![0.0; p * p];
    let mut scatter_c = vec![0.0; p * p];
    let mut scatter_a = vec![0.0; p * p];
    add_scatter(&mut scatter_t, &ds.treatment.x, &mu_hat);
    add_scatter(&mut scatter_c, &ds.control.x, &mu_hat);
    add_scatter(&mut scatter_a, &ds.extra_x, &mu_hat);
    let mut sigma: Vec<f64> = (0..p * p)
        .map(|k| ((scatter_t[k] + scatter_c[k]) + scatter_a[k]) / total)
        .collect();
    symmetrize_upper(&mut sigma, p);
    let sigma_x = Matrix::new(p, p, sigma)?;

    let intercept_diff = fit_t.beta1 - fit_c.beta1;
    let slope_diff: Vec<f64> = fit_t
        .beta2
        .iter()
        .zip(&fit_c.beta2)
        .map(|(a, b)| a - b)
        .collect();
    let d_hat = intercept_diff + dot(&mu_hat, &slope_diff);

    let n_t = ds.treatment.len() as f64;
    let n_c = ds.control.len() as f64;
    let v_hat2 = (fit_t.mse / n_t + fit_c.mse / n_c) + quad_form(&sigma_x, &slope_diff)? / total;
    let half = z_critical(alpha)? * v_hat2.sqrt();

    Ok(AteEstimate {
        d_hat,
        v_hat2,
        ci_lower: d_hat - half,
        ci_upper: d_hat + half,
        alpha,
        fit_t,
        fit_c,
        mu_hat,
        sigma_x,
    })
}
