//! Inverse-CDF sampler for the density `f(x) ∝ 1/(1 + |x|³)`.
//!
//! The distribution has a finite mean but no finite variance beyond a
//! logarithmic divergence, so its tail behaves like a Pareto law of index 2.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Distribution;

/// `∫ 1/(1 + |x|³) dx` over the real line.
pub const P3_NORMALIZER: f64 = 4.0 * PI / (3.0 * 1.732_050_807_568_877_2);

const TABLE_LIMIT: f64 = 1e3;
const TABLE_SIZE: usize = 4096;
const SERIES_FROM: f64 = 2.0;

/// `∫₀ᵗ dx / (1 + x³)` in closed form.
fn half_integral(t: f64) -> f64 {
    let s3 = 3f64.sqrt();
    (1.0 + t).ln() / 3.0 - (t * t - t + 1.0).ln() / 6.0
        + (((2.0 * t - 1.0) / s3).atan() + PI / 6.0) / s3
}

/// `∫ₜ^∞ dx / (1 + x³)`; a convergent series in `t⁻³` for `t ≥ 2`.
fn tail_integral(t: f64) -> f64 {
    if t < SERIES_FROM {
        return 0.5 * P3_NORMALIZER - half_integral(t);
    }
    let inv3 = t.powi(-3);
    let mut power = t.powi(-2);
    let mut sum = 0.0;
    for k in 0..60 {
        let term = power / (2.0 + 3.0 * k as f64);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < 1e-18 * sum {
            break;
        }
        power *= inv3;
    }
    sum
}

/// `P(|X| > t)`.
fn survival_abs(t: f64) -> f64 {
    2.0 * tail_integral(t) / P3_NORMALIZER
}

fn density_abs(t: f64) -> f64 {
    2.0 / (P3_NORMALIZER * (1.0 + t * t * t))
}

/// Sampler with a precomputed survival table on `|x| ≤ 10³` and an inverse
/// Pareto tail beyond it, both refined by Newton steps on the exact CDF.
#[derive(Debug, Clone)]
pub struct HeavyTailP3 {
    knots: Vec<f64>,
    survival: Vec<f64>,
}

impl Default for HeavyTailP3 {
    fn default() -> Self {
        Self::new()
    }
}

impl HeavyTailP3 {
    pub fn new() -> Self {
        // quadratic spacing: dense near the mode
        let knots: Vec<f64> = (0..=TABLE_SIZE)
            .map(|i| {
                let u = i as f64 / TABLE_SIZE as f64;
                TABLE_LIMIT * u * u
            })
            .collect();
        let survival = knots.iter().map(|&t| survival_abs(t)).collect();
        Self { knots, survival }
    }

    pub fn density(x: f64) -> f64 {
        1.0 / (P3_NORMALIZER * (1.0 + x.abs().powi(3)))
    }

    pub fn cdf(x: f64) -> f64 {
        let s = 0.5 * survival_abs(x.abs());
        if x < 0.0 {
            s
        } else {
            1.0 - s
        }
    }

    /// Smallest `t ≥ 0` with `P(|X| > t) = s` for `s ∈ (0, 1]`.
    pub fn abs_quantile_from_survival(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        let last = *self.survival.last().unwrap_or(&0.0);
        let (mut lo, mut hi, mut t) = if s < last {
            // P(|X| > t) ≈ 1/(C t²)
            let t0 = 1.0 / (P3_NORMALIZER * s).sqrt();
            (TABLE_LIMIT, f64::INFINITY, t0.max(TABLE_LIMIT))
        } else {
            // survival is decreasing along the knots
            let idx = self.survival.partition_point(|&v| v > s).max(1);
            let (t0, t1) = (self.knots[idx - 1], self.knots[idx]);
            let (s0, s1) = (self.survival[idx - 1], self.survival[idx]);
            let w = if s0 > s1 { (s0 - s) / (s0 - s1) } else { 0.5 };
            (t0, t1, t0 + w * (t1 - t0))
        };
        for _ in 0..60 {
            let f = survival_abs(t) - s;
            if f > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let mut next = t + f / density_abs(t);
            if !(next > lo && next < hi) {
                next = if hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    2.0 * lo
                };
            }
            if (next - t).abs() <= 1e-14 * (1.0 + t) {
                return next;
            }
            t = next;
        }
        t
    }
}

impl Distribution<f64> for HeavyTailP3 {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let negative: bool = rng.random();
        // in (0, 1]
        let s = 1.0 - rng.random::<f64>();
        let t = self.abs_quantile_from_survival(s);
        if negative {
            -t
        } else {
            t
        }
    }
}
