use proptest::prelude::*;
use rand::Rng;

use ssls::simlab::{rng_stream, Dgp, DgpSpec, Setting};
use ssls::{
    estimate_ls, estimate_oracle, estimate_oracle_ss, estimate_sample_mean, estimate_ssls,
    fit_regression, Dataset, Matrix,
};

fn dataset(seed: u64, n: usize, p: usize, m: usize) -> Dataset {
    let mut rng = rng_stream(seed, 1);
    let mut draw = |k: usize| {
        let v: Vec<f64> = (0..k * p).map(|_| rng.random_range(-2.0..2.0)).collect();
        Matrix::new(k, p, v).unwrap()
    };
    let (x, xu) = (draw(n), draw(m));
    let y = x
        .iter_rows()
        .enumerate()
        .map(|(i, r)| r.iter().map(|v| v * v).sum::<f64>() + (i % 3) as f64)
        .collect();
    let mu = vec![0.0; p];
    Dataset::new(y, x, xu, Some(mu)).unwrap()
}

/// Population residual `δ = Y − (1, X)ᵀβ` has mean zero and is uncorrelated
/// with `X`, even though the surface is quadratic.
#[test]
fn population_residual_moments_vanish() {
    let n = 100_000;
    let dgp = Dgp::new(DgpSpec::new(Setting::GaussQuad, n, 2, 0, 99)).unwrap();
    let ds = dgp.draw(0);
    let mu = dgp.population_mean().to_vec();
    let b = &dgp.coefficients()[1..];
    // Cov(X, ‖X‖²) = 2Σμ, so the slope is 2μ + b
    let slope: Vec<f64> = mu.iter().zip(b).map(|(m, b)| 2.0 * m + b).collect();
    let intercept = dgp.theta() - mu.iter().zip(&slope).map(|(m, s)| m * s).sum::<f64>();
    let delta: Vec<f64> = ds
        .x()
        .iter_rows()
        .zip(ds.y())
        .map(|(x, y)| y - intercept - x.iter().zip(&slope).map(|(a, s)| a * s).sum::<f64>())
        .collect();
    let se = |v: &[f64]| {
        let k = v.len() as f64;
        let m = v.iter().sum::<f64>() / k;
        (
            m,
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0) / k).sqrt(),
        )
    };
    let (m0, s0) = se(&delta);
    assert!(m0.abs() < 4.0 * s0, "E delta = {m0} +- {s0}");
    for j in 0..2 {
        let prod: Vec<f64> = delta
            .iter()
            .zip(ds.x().iter_rows())
            .map(|(d, x)| d * (x[j] - mu[j]))
            .collect();
        let (m, s) = se(&prod);
        assert!(m.abs() < 4.0 * s, "E delta X_{j} = {m} +- {s}");
    }
    let tau2 = dgp.tau2().unwrap();
    let (msq, ssq) = se(&delta.iter().map(|d| d * d).collect::<Vec<_>>());
    assert!(
        (msq - tau2).abs() < 4.0 * ssq,
        "E delta^2 = {msq} vs {tau2}"
    );
}

#[test]
fn oracle_with_the_true_surface_has_noise_variance() {
    let dgp = Dgp::new(DgpSpec::new(Setting::GaussQuad, 50_000, 1, 50_000, 4)).unwrap();
    let ds = dgp.draw(0);
    let surface = |x: &[f64]| dgp.regression_surface(x);
    let est = estimate_oracle(&ds, surface, dgp.theta(), 0.05).unwrap();
    let sigma2 = dgp.noise_variance().unwrap();
    assert!((est.variance_per_n / sigma2 - 1.0).abs() < 0.05);
    let ss = estimate_oracle_ss(&ds, surface, 0.05).unwrap();
    assert!(ss.variance_per_n > est.variance_per_n);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ssls_interpolates_between_mean_and_ls_as_m_grows(seed in any::<u64>(), p in 1usize..4) {
        let ds = dataset(seed, 30, p, 0);
        let base = estimate_ls(&ds, 0.05, false).unwrap();
        let fit = fit_regression(ds.y(), ds.x()).unwrap();
        let mut last = f64::INFINITY;
        for m in [0usize, 10, 100, 1000] {
            let big = dataset(seed, 30, p, m);
            let v = estimate_ssls(&big, 0.05, false).unwrap().variance_per_n;
            let s2 = estimate_sample_mean(&big, 0.05).unwrap().variance_per_n;
            let w = m as f64 / (m as f64 + 30.0);
            prop_assert!((v - (w * fit.mse + (1.0 - w) * s2)).abs() < 1e-9 * (1.0 + s2));
            if fit.mse <= s2 {
                prop_assert!(v <= last + 1e-12);
            }
            last = v;
        }
        prop_assert!((base.variance_per_n - fit.mse).abs() < 1e-12 * (1.0 + fit.mse));
    }

    #[test]
    fn interval_brackets_the_untruncated_point(seed in any::<u64>(), m in 0usize..40, alpha in 0.01f64..0.5) {
        let ds = dataset(seed, 25, 2, m);
        for est in [
            estimate_sample_mean(&ds, alpha).unwrap(),
            estimate_ls(&ds, alpha, true).unwrap(),
            estimate_ssls(&ds, alpha, true).unwrap(),
        ] {
            prop_assert!(est.ci_lower <= est.ci_upper);
            let center = 0.5 * (est.ci_lower + est.ci_upper);
            if !est.truncated {
                prop_assert!((center - est.theta_hat).abs() <= 1e-9 * (1.0 + center.abs()));
            }
            let z = ssls::z_critical(alpha).unwrap();
            let half = z * (est.variance_per_n / est.n as f64).sqrt();
            prop_assert!((est.half_width() - half).abs() <= 1e-9 * (1.0 + half));
        }
    }

    #[test]
    fn labeled_rows_permuted_give_the_same_estimate(seed in any::<u64>(), shift in 1usize..29) {
        let ds = dataset(seed, 30, 2, 15);
        let n = ds.n();
        let order: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let y: Vec<f64> = order.iter().map(|&i| ds.y()[i]).collect();
        let rows: Vec<Vec<f64>> = order.iter().map(|&i| ds.x().row(i).to_vec()).collect();
        let permuted = Dataset::new(
            y,
            Matrix::from_rows(&rows).unwrap(),
            ds.x_unlabeled().clone(),
            ds.known_mu().map(<[f64]>::to_vec),
        )
        .unwrap();
        let a = estimate_ssls(&ds, 0.05, false).unwrap().theta_hat;
        let b = estimate_ssls(&permuted, 0.05, false).unwrap().theta_hat;
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }
}
