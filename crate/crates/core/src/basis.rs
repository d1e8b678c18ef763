//! Covariate expansion `X• = (X, g₁(X), …, g_q(X))`.
//!
//! Least squares on the expanded covariates approaches the oracle risk when
//! the response surface is non-linear in `X`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::{estimate_ls, estimate_ssls, Dataset, MeanEstimate};
use crate::linalg::Matrix;

type BasisFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// User-supplied functions `g(x) ∈ ℝ^q`.
#[derive(Clone)]
pub struct CustomBasis {
    pub name: String,
    pub q: usize,
    pub func: Arc<BasisFn>,
    /// Population means `E g(X)` when known.
    pub means: Option<Vec<f64>>,
}

impl fmt::Debug for CustomBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomBasis")
            .field("name", &self.name)
            .field("q", &self.q)
            .field("means", &self.means)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub enum BasisSpec {
    #[default]
    None,
    /// Powers `x_j², …, x_j^degree` of every coordinate.
    Polynomial {
        degree: usize,
    },
    /// `√2·cos(2πkz)`, `√2·sin(2πkz)` of the pooled rank score `z` of every
    /// coordinate, `terms` functions per coordinate.
    TrigOnRank {
        terms: usize,
    },
    Custom(CustomBasis),
}

impl BasisSpec {
    /// Number of columns added to a `p`-covariate dataset.
    pub fn added_columns(&self, p: usize) -> usize {
        match self {
            BasisSpec::None => 0,
            BasisSpec::Polynomial { degree } => p * degree.saturating_sub(1),
            BasisSpec::TrigOnRank { terms } => p * terms,
            BasisSpec::Custom(c) => c.q,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BasisSpec::None => "none".into(),
            BasisSpec::Polynomial { degree } => format!("poly:{degree}"),
            BasisSpec::TrigOnRank { terms } => format!("trig:{terms}"),
            BasisSpec::Custom(c) => format!("custom:{}", c.name),
        }
    }

    /// Quadratic terms when `p > 1`, otherwise the trigonometric rank basis with
    /// [`default_q`] functions.
    pub fn default_for(n: usize, p: usize) -> BasisSpec {
        if p > 1 {
            BasisSpec::Polynomial { degree: 2 }
        } else {
            BasisSpec::TrigOnRank {
                terms: default_q(n, p),
            }
        }
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for BasisSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(BasisSpec::None);
        }
        let bad = || Error::InvalidArgs(format!("basis must be none, poly:D or trig:Q, got {s:?}"));
        let (family, arg) = s.split_once(':').ok_or_else(bad)?;
        let arg: usize = arg.trim().parse().map_err(|_| bad())?;
        match family.trim() {
            "poly" if arg >= 1 => Ok(BasisSpec::Polynomial { degree: arg }),
            "trig" => Ok(BasisSpec::TrigOnRank { terms: arg }),
            _ => Err(bad()),
        }
    }
}

fn integer_cbrt(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r * r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `max(1, ⌊n^{1/3}⌋)`, capped so that `p + q ≤ n − 2`.
pub fn default_q(n: usize, p: usize) -> usize {
    integer_cbrt(n)
        .max(1)
        .min(n.saturating_sub(2).saturating_sub(p))
}

/// Centered average-rank scores `r/N − (N+1)/(2N)`, ties sharing their mean rank.
pub fn pooled_rank_scores(values: &[f64]) -> Vec<f64> {
    let total = values.len();
    let nf = total as f64;
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut scores = vec![0.0; total];
    let mut start = 0;
    while start < total {
        let mut end = start + 1;
        while end < total && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            scores[idx] = rank / nf - (nf + 1.0) / (2.0 * nf);
        }
        start = end;
    }
    scores
}

fn trig_term(t: usize, z: f64) -> f64 {
    let k = t.div_ceil(2) as f64;
    if t % 2 == 1 {
        SQRT_2 * (2.0 * PI * k * z).cos()
    } else {
        SQRT_2 * (2.0 * PI * k * z).sin()
    }
}

/// Added columns for the labeled and unlabeled blocks.
fn expansion(ds: &Dataset, spec: &BasisSpec) -> Result<(Matrix, Matrix)> {
    let p = ds.p();
    let q = spec.added_columns(p);
    let (n, m) = (ds.n(), ds.m());
    let mut lab = vec![0.0; n * q];
    let mut unl = vec![0.0; m * q];
    match spec {
        BasisSpec::None => {}
        BasisSpec::Polynomial { degree } => {
            let per = degree - 1;
            let fill = |out: &mut [f64], x: &Matrix| {
                for (row, dst) in x.iter_rows().zip(out.chunks_exact_mut(q)) {
                    for j in 0..p {
                        let mut power = row[j];
                        for d in 0..per {
                            power *= row[j];
                            dst[j * per + d] = power;
                        }
                    }
                }
            };
            fill(&mut lab, ds.x());
            fill(&mut unl, ds.x_unlabeled());
        }
        BasisSpec::TrigOnRank { terms } => {
            for j in 0..p {
                let pooled: Vec<f64> = ds
                    .x()
                    .iter_rows()
                    .chain(ds.x_unlabeled().iter_rows())
                    .map(|r| r[j])
                    .collect();
                let z = pooled_rank_scores(&pooled);
                for (k, &zk) in z.iter().enumerate() {
                    let (out, row) = if k < n {
                        (&mut lab, k)
                    } else {
                        (&mut unl, k - n)
                    };
                    for t in 1..=*terms {
                        out[row * q + j * terms + t - 1] = trig_term(t, zk);
                    }
                }
            }
        }
        BasisSpec::Custom(c) => {
            let fill = |out: &mut [f64], x: &Matrix| -> Result<()> {
                for (row, dst) in x.iter_rows().zip(out.chunks_exact_mut(q.max(1))) {
                    let g = (c.func)(row);
                    if g.len() != q {
                        return Err(Error::DimensionMismatch(format!(
                            "custom basis {} returned {} values, declared {q}",
                            c.name,
                            g.len()
                        )));
                    }
                    dst.copy_from_slice(&g);
                }
                Ok(())
            };
            if q > 0 {
                fill(&mut lab, ds.x())?;
                fill(&mut unl, ds.x_unlabeled())?;
            }
        }
    }
    Ok((Matrix::new(n, q, lab)?, Matrix::new(m, q, unl)?))
}

fn augment_inner(ds: &Dataset, spec: &BasisSpec, added_means: Option<&[f64]>) -> Result<Dataset> {
    let p = ds.p();
    let q = spec.added_columns(p);
    if q == 0 {
        return Ok(ds.clone());
    }
    let limit = ds.n().saturating_sub(2);
    if p + q > limit {
        return Err(Error::DimensionOverflow {
            augmented: p + q,
            limit,
        });
    }
    let (lab, unl) = expansion(ds, spec)?;
    let known_mu = match (ds.known_mu(), added_means) {
        (Some(mu), Some(extra)) => {
            if extra.len() != q {
                return Err(Error::DimensionMismatch(format!(
                    "{} basis means supplied for {q} added columns",
                    extra.len()
                )));
            }
            Some(mu.iter().chain(extra).copied().collect::<Vec<_>>())
        }
        _ => None,
    };
    Dataset::new(
        ds.y().to_vec(),
        ds.x().hstack(&lab)?,
        ds.x_unlabeled().hstack(&unl)?,
        known_mu,
    )
}

/// Appends the expansion columns to every labeled and unlabeled row.
///
/// A known covariate mean survives only when the family has closed-form
/// means: the trigonometric rank terms average to zero under the ideal
/// setting, and a custom basis may carry its own. Otherwise it is dropped
/// and only the semi-supervised estimator applies.
pub fn augment(ds: &Dataset, spec: &BasisSpec) -> Result<Dataset> {
    let q = spec.added_columns(ds.p());
    let means = match spec {
        BasisSpec::TrigOnRank { .. } => Some(vec![0.0; q]),
        BasisSpec::Custom(c) => c.means.clone(),
        _ => None,
    };
    augment_inner(ds, spec, means.as_deref())
}

/// As [`augment`], with the population means of the added columns supplied
/// by the caller (for instance Gaussian moments of a polynomial basis).
pub fn augment_with_means(ds: &Dataset, spec: &BasisSpec, added_means: &[f64]) -> Result<Dataset> {
    augment_inner(ds, spec, Some(added_means))
}

fn tag(mut est: MeanEstimate, spec: &BasisSpec) -> MeanEstimate {
    if !matches!(spec, BasisSpec::None) {
        est.basis = Some(spec.label());
    }
    est
}

pub fn estimate_ls_augmented(
    ds: &Dataset,
    spec: &BasisSpec,
    alpha: f64,
    truncate: bool,
) -> Result<MeanEstimate> {
    let aug = augment(ds, spec)?;
    estimate_ls(&aug, alpha, truncate).map(|e| tag(e, spec))
}

/// LS on the expanded covariates with caller-supplied means for the added columns.
pub fn estimate_ls_augmented_with_means(
    ds: &Dataset,
    spec: &BasisSpec,
    added_means: &[f64],
    alpha: f64,
    truncate: bool,
) -> Result<MeanEstimate> {
    let aug = augment_with_means(ds, spec, added_means)?;
    estimate_ls(&aug, alpha, truncate).map(|e| tag(e, spec))
}

pub fn estimate_ssls_augmented(
    ds: &Dataset,
    spec: &BasisSpec,
    alpha: f64,
    truncate: bool,
) -> Result<MeanEstimate> {
    let aug = augment(ds, spec)?;
    estimate_ssls(&aug, alpha, truncate).map(|e| tag(e, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_regression;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: &[f64], y: &[f64], xu: &[f64]) -> Dataset {
        Dataset::new(
            y.to_vec(),
            Matrix::column(x).unwrap(),
            Matrix::column(xu).unwrap(),
            Some(vec![0.0]),
        )
        .unwrap()
    }

    fn quadratic_sample(seed: u64, n: usize, m: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let xu: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v * v + 0.5 * v + rng.random_range(-0.3..0.3))
            .collect();
        scalar(&x, &y, &xu)
    }

    #[test]
    fn zero_columns_is_identity() {
        let ds = quadratic_sample(1, 20, 5);
        assert_eq!(augment(&ds, &BasisSpec::None).unwrap(), ds);
        assert_eq!(
            augment(&ds, &BasisSpec::TrigOnRank { terms: 0 }).unwrap(),
            ds
        );
        assert_eq!(
            augment(&ds, &BasisSpec::Polynomial { degree: 1 }).unwrap(),
            ds
        );
    }

    #[test]
    fn squares_of_a_scalar() {
        let ds = scalar(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 2.0, 1.0], &[]);
        let aug = augment(&ds, &BasisSpec::Polynomial { degree: 2 }).unwrap();
        let added: Vec<f64> = aug.x().iter_rows().map(|r| r[1]).collect();
        assert_eq!(added, vec![0.0, 1.0, 4.0, 9.0, 16.0]);
        // polynomial means are not known in closed form
        assert!(aug.known_mu().is_none());
    }

    #[test]
    fn trig_columns_match_direct_rank_computation() {
        let x = [0.3, -1.2, 0.3, 2.5, 1.1];
        let xu = [0.0, 4.0];
        let ds = scalar(&x, &[1.0, 2.0, 3.0, 4.0, 5.0], &xu);
        let aug = augment(&ds, &BasisSpec::TrigOnRank { terms: 2 }).unwrap();
        // pooled: 0.3, -1.2, 0.3, 2.5, 1.1, 0.0, 4.0 -> ranks 3.5, 1, 3.5, 6, 5, 2, 7
        let ranks = [3.5, 1.0, 3.5, 6.0, 5.0, 2.0, 7.0];
        let total = 7.0;
        let all_rows: Vec<&[f64]> = aug
            .x()
            .iter_rows()
            .chain(aug.x_unlabeled().iter_rows())
            .collect();
        for (row, r) in all_rows.iter().zip(ranks) {
            let z: f64 = r / total - (total + 1.0) / (2.0 * total);
            assert!((row[1] - SQRT_2 * (2.0 * PI * z).cos()).abs() < 1e-14);
            assert!((row[2] - SQRT_2 * (2.0 * PI * z).sin()).abs() < 1e-14);
        }
        assert_eq!(aug.known_mu().unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn trig_columns_are_bounded() {
        let ds = quadratic_sample(3, 40, 60);
        let aug = augment(&ds, &BasisSpec::TrigOnRank { terms: 6 }).unwrap();
        for row in aug.x().iter_rows().chain(aug.x_unlabeled().iter_rows()) {
            assert!(row[1..].iter().all(|v| v.abs() <= SQRT_2 + 1e-15));
        }
    }

    #[test]
    fn augmentation_preserves_sample_sizes() {
        let ds = quadratic_sample(4, 30, 11);
        for spec in [
            BasisSpec::Polynomial { degree: 3 },
            BasisSpec::TrigOnRank { terms: 4 },
        ] {
            let aug = augment(&ds, &spec).unwrap();
            assert_eq!((aug.n(), aug.m()), (ds.n(), ds.m()));
            assert_eq!(aug.p(), ds.p() + spec.added_columns(ds.p()));
        }
    }

    #[test]
    fn nested_fit_never_increases_residual_sum() {
        for seed in 0..20 {
            let ds = quadratic_sample(seed, 25, 0);
            let base = fit_regression(ds.y(), ds.x()).unwrap();
            let base_rss = base.mse * (ds.n() - ds.p() - 1) as f64;
            for spec in [
                BasisSpec::Polynomial { degree: 3 },
                BasisSpec::TrigOnRank { terms: 3 },
            ] {
                let aug = augment(&ds, &spec).unwrap();
                let fit = fit_regression(aug.y(), aug.x()).unwrap();
                let rss = fit.mse * (aug.n() - aug.p() - 1) as f64;
                assert!(rss <= base_rss * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn too_many_columns_overflow() {
        let ds = quadratic_sample(5, 6, 0);
        assert_eq!(
            augment(&ds, &BasisSpec::TrigOnRank { terms: 4 }),
            Err(Error::DimensionOverflow {
                augmented: 5,
                limit: 4
            })
        );
    }

    #[test]
    fn default_q_examples() {
        assert_eq!(default_q(100, 1), 4);
        assert_eq!(default_q(8, 1), 2);
        assert_eq!(default_q(1000, 1), 10);
        assert_eq!(default_q(999, 1), 9);
        assert_eq!(default_q(4, 1), 1);
        // cap binds
        assert_eq!(default_q(1000, 995), 3);
    }

    #[test]
    fn no_added_columns_gives_base_estimates() {
        let ds = quadratic_sample(6, 30, 20);
        let base = estimate_ssls(&ds, 0.1, false).unwrap();
        let aug = estimate_ssls_augmented(&ds, &BasisSpec::None, 0.1, false).unwrap();
        assert_eq!(base, aug);
        let base = estimate_ls(&ds, 0.1, false).unwrap();
        let aug = estimate_ls_augmented(&ds, &BasisSpec::None, 0.1, false).unwrap();
        assert_eq!(base, aug);
    }

    #[test]
    fn polynomial_ls_needs_supplied_means() {
        let ds = quadratic_sample(7, 30, 0);
        let spec = BasisSpec::Polynomial { degree: 2 };
        assert_eq!(
            estimate_ls_augmented(&ds, &spec, 0.05, false),
            Err(Error::MissingMu)
        );
        let est = estimate_ls_augmented_with_means(&ds, &spec, &[4.0 / 3.0], 0.05, false).unwrap();
        assert_eq!(est.basis.as_deref(), Some("poly:2"));
    }

    #[test]
    fn custom_basis_with_means() {
        let ds = quadratic_sample(8, 30, 10);
        let spec = BasisSpec::Custom(CustomBasis {
            name: "abs".into(),
            q: 1,
            func: Arc::new(|x: &[f64]| vec![x[0].abs()]),
            means: Some(vec![1.0]),
        });
        let aug = augment(&ds, &spec).unwrap();
        assert_eq!(aug.x().get(0, 1), ds.x().get(0, 0).abs());
        assert_eq!(aug.known_mu().unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn parse_specs() {
        assert!(matches!("none".parse::<BasisSpec>(), Ok(BasisSpec::None)));
        assert!(matches!(
            "poly:2".parse::<BasisSpec>(),
            Ok(BasisSpec::Polynomial { degree: 2 })
        ));
        assert!(matches!(
            "trig:8".parse::<BasisSpec>(),
            Ok(BasisSpec::TrigOnRank { terms: 8 })
        ));
        assert!("spline:3".parse::<BasisSpec>().is_err());
        assert!("poly:x".parse::<BasisSpec>().is_err());
        assert_eq!(BasisSpec::TrigOnRank { terms: 8 }.to_string(), "trig:8");
    }

    #[test]
    fn default_family_follows_dimension() {
        assert!(matches!(
            BasisSpec::default_for(100, 3),
            BasisSpec::Polynomial { degree: 2 }
        ));
        assert!(matches!(
            BasisSpec::default_for(100, 1),
            BasisSpec::TrigOnRank { terms: 4 }
        ));
    }
}
