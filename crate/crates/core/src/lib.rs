//! Estimators of a population mean `θ = E[Y]` that use covariates from
//! unlabeled rows.
//!
//! - [`estimate_sample_mean`]: `Ȳ` with its z-interval.
//! - [`estimate_ls`]: regression adjustment toward a known covariate mean.
//! - [`estimate_ssls`]: regression adjustment toward the pooled labeled and
//!   unlabeled covariate mean.
//! - [`basis`]: the same estimators on expanded covariates.
//! - [`ate`]: the treatment-effect analogue for a randomized experiment.
//! - [`simlab`]: seeded Monte Carlo studies of all of the above.
//!
//! ```
//! use ssls::{estimate_ssls, Dataset, Matrix};
//!
//! let x = Matrix::column(&[0.0, 1.0, 2.0, 3.0]).unwrap();
//! let xu = Matrix::column(&[4.0, 5.0]).unwrap();
//! let ds = Dataset::labeled(vec![1.0, 3.0, 5.0, 7.0], x)
//!     .unwrap()
//!     .with_unlabeled(xu)
//!     .unwrap();
//! let est = estimate_ssls(&ds, 0.05, false).unwrap();
//! assert!((est.theta_hat - 6.0).abs() < 1e-12);
//! ```

pub mod ate;
pub mod basis;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod normal;
pub mod simlab;

pub use ate::{estimate_ate, ArmSample, AteDataset, AteEstimate};
pub use basis::{
    augment, augment_with_means, default_q, estimate_ls_augmented,
    estimate_ls_augmented_with_means, estimate_ssls_augmented, BasisSpec, CustomBasis,
};
pub use error::{Error, Result};
pub use estimators::{
    estimate_ls, estimate_oracle, estimate_oracle_ss, estimate_sample_mean, estimate_ssls,
    fit_regression, gaussian_exact_risk, truncate_to_band, Dataset, EstimatorKind, GaussianRisk,
    LabeledFit, MeanEstimate, RegressionFit, TruncationBand, UnlabeledSize,
};
pub use linalg::{ols_solve, qr_least_squares, Matrix, OlsSolution};
pub use normal::{inverse_cdf, z_critical};
