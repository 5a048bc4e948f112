//! Normal distribution helpers accurate in both tails.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(x) without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Φ(b) − Φ(a) for a ≤ b, computed on the side of zero that avoids cancellation.
pub fn norm_cdf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
    .max(0.0)
}

/// Φ⁻¹(p) with one Newton step on the accurate tail.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    let d = norm_pdf(x);
    if d > 0.0 && x.is_finite() {
        let err = if p < 0.5 {
            norm_cdf(x) - p
        } else {
            (1.0 - p) - norm_sf(x)
        };
        x -= err / d;
    }
    x
}

/// Φ⁻¹(1 − a), accurate for small a.
pub fn norm_isf(a: f64) -> f64 {
    if a <= 0.5 {
        -norm_quantile(a)
    } else {
        norm_quantile(1.0 - a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_known_values() {
        assert!((norm_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((norm_cdf(0.5) - 0.691_462_461_274_013_1).abs() < 1e-15);
        let tail = norm_cdf(-20.0);
        assert!((tail / 2.753_624_118_606_233_7e-89 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..1000 {
            let u = i as f64 * 1e-3;
            assert!((norm_cdf(norm_quantile(u)) - u).abs() < 1e-15);
        }
        for e in 1..300 {
            let a = 10f64.powi(-e);
            let z = norm_isf(a);
            assert!((norm_sf(z) / a - 1.0).abs() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn diff_is_accurate_in_tails() {
        let d = norm_cdf_diff(30.0, 31.0);
        assert!(d > 0.0 && (d / norm_sf(30.0) - 1.0).abs() < 1e-12);
        assert!((norm_cdf_diff(-1.0, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-15);
    }
}
