//! Standard normal density, distribution and quantile functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Result};

/// `1/√(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `Φ̄(x) = 1 − Φ(x)` without cancellation for large `x`.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `log Φ̄(x)`, finite for all finite `x`.
pub fn log_std_normal_sf(x: f64) -> f64 {
    if x < 30.0 {
        return std_normal_sf(x).ln();
    }
    // Mills ratio series; the truncation error is below 1e-13 relative here.
    let r = 1.0 / (x * x);
    let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
    -0.5 * x * x - x.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// `Φ⁻¹(p)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("probability {p} outside (0, 1)"));
    }
    Ok(if p <= 0.5 {
        refined_lower(p)
    } else {
        -refined_lower(1.0 - p)
    })
}

/// `Φ̄⁻¹(q)`, accurate for tiny upper-tail probabilities.
pub fn std_normal_quantile_upper(q: f64) -> Result<f64> {
    std_normal_quantile(q).map(|z| -z)
}

fn refined_lower(p: f64) -> f64 {
    let x = ppnd16(p);
    let density = std_normal_pdf(x);
    if density > 0.0 {
        x - (std_normal_cdf(x) - p) / density
    } else {
        x
    }
}

/// Wichura's AS 241 rational approximation to `Φ⁻¹(p)`, relative accuracy
/// about 1e-16. No input checks; `p` must lie in `(0, 1)`.
pub(crate) fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[inline]
fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        // 50-digit inverse-erfc values
        let cases = [
            (1e-12, 7.034_483_825_301_131_9),
            (1e-15, 7.941_345_326_170_996_8),
            (1e-6, 4.753_424_308_822_898_9),
            (0.01, 2.326_347_874_040_841_1),
            (0.3, 0.524_400_512_708_040_78),
        ];
        for (q, z) in cases {
            let got = std_normal_quantile_upper(q).unwrap();
            assert!((got - z).abs() < 1e-13 * z, "q={q}: {got} vs {z}");
        }
        assert!((std_normal_quantile(1.0 - 1e-12).unwrap() - 7.0345).abs() < 5e-4);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut p = 1e-15;
        while p < 0.5 {
            for prob in [p, 1.0 - p] {
                let x = std_normal_quantile(prob).unwrap();
                let back = if prob < 0.5 {
                    std_normal_cdf(x)
                } else {
                    1.0 - std_normal_sf(x)
                };
                let scale = prob.min(1.0 - prob);
                assert!((back - prob).abs() <= 1e-10 * scale.max(1e-15));
            }
            p *= 1.7;
        }
    }

    #[test]
    fn quantile_rejects_bounds() {
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn log_sf_is_continuous_at_switch() {
        let below = std_normal_sf(29.999_999).ln();
        let above = log_std_normal_sf(30.0);
        assert!((below - above).abs() < 1e-4);
        assert!((log_std_normal_sf(30.0) - std_normal_sf(30.0).ln()).abs() < 1e-12);
        assert!(log_std_normal_sf(60.0).is_finite());
    }

    #[test]
    fn raw_rational_is_accurate() {
        for p in [1e-300, 1e-20, 1e-5, 0.2, 0.5, 0.77, 1.0 - 1e-10] {
            let raw = ppnd16(p);
            let refined = std_normal_quantile(p).unwrap();
            assert!((raw - refined).abs() <= 1e-13 * refined.abs().max(1.0));
        }
    }
}
