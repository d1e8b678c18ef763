//! Standard normal quantiles.
//!
//! Wichura's AS 241 (PPND16) rational approximations, good to about 1e-16
//! relative over the open unit interval.

use crate::error::{Error, Result};

fn poly(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// Inverse standard normal CDF at `p ∈ (0, 1)`.
pub fn inverse_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Two-sided critical value `z_{1-α/2}`.
pub fn z_critical(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(inverse_cdf(1.0 - alpha / 2.0))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgs(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn familiar_critical_values() {
        assert!((z_critical(0.05).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((z_critical(0.10).unwrap() - 1.644_853_626_951_472_2).abs() < 1e-12);
        assert!((z_critical(0.01).unwrap() - 2.575_829_303_548_900_4).abs() < 1e-12);
        assert_eq!(inverse_cdf(0.5), 0.0);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn matches_high_precision_quantiles() {
        // 50-digit values at the exact binary inputs
        let cases = [
            (1e-300, -37.047_096_299_361_199),
            (1e-20, -9.262_340_089_798_407_6),
            (1e-10, -6.361_340_902_404_056_2),
            (0.0225, -2.004_654_461_765_096),
            (0.075, -1.439_531_470_938_456),
            (0.3, -0.524_400_512_708_040_8),
            (0.6, 0.253_347_103_135_799_74),
            (0.925, 1.439_531_470_938_456_2),
            (0.999999, 4.753_424_308_817_088),
        ];
        for (p, want) in cases {
            let got = inverse_cdf(p);
            assert!(
                (got - want).abs() < 1e-14 * want.abs().max(1.0),
                "p={p}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn agrees_with_independent_cdf_on_a_grid() {
        let normal = Normal::standard();
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let x = inverse_cdf(p);
            // the reference CDF is only good to about 1e-11
            assert!((normal.cdf(x) - p).abs() < 1e-10, "p={p}");
        }
        for &p in &[1e-12, 1e-8, 1e-5, 1.0 - 1e-9] {
            let x = inverse_cdf(p);
            assert!(((normal.cdf(x) - p) / p.min(1.0 - p)).abs() < 1e-6, "p={p}");
        }
    }

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        assert!(z_critical(0.0).is_err());
        assert!(z_critical(1.0).is_err());
        assert!(z_critical(-0.2).is_err());
    }

    #[test]
    fn width_vanishes_as_alpha_approaches_one() {
        assert!(z_critical(1.0 - 1e-9).unwrap() < 1e-8);
    }
}
