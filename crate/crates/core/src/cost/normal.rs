//! Standard normal distribution function and quantile, and the second-order
//! coefficients built from them.

use serde::Serialize;
use libm::erfc;

use crate::cost::spectrum::Spectrum;
use crate::error::{Error, Result};

/// `Phi(x)` via the complementary error function, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Phi^{-1}(p)`: Acklam's rational approximation followed by two Newton steps.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidEpsilon(p));
    }
    if p > 0.5 {
        return Ok(-normal_quantile(1.0 - p)?);
    }
    let mut x = acklam(p);
    for _ in 0..2 {
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / pdf;
    }
    Ok(x)
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondOrderCoeffs {
    /// First-order rate `S(rho)` in ebits per copy.
    pub a: f64,
    /// Coefficient of `1/sqrt(n)`, `-s Phi^{-1}(eps^2/4)`.
    pub b: f64,
    /// Information standard deviation.
    pub s: f64,
    pub epsilon: f64,
}

/// `s` below this is treated as exactly zero.
const S_FLOOR: f64 = 1e-12;

pub fn information_std(spec: &Spectrum) -> f64 {
    let s = spec.information_variance().sqrt();
    if s < S_FLOOR {
        0.0
    } else {
        s
    }
}

/// `a = S(rho)`, `s = sqrt(V(rho))`, `b = -s Phi^{-1}(eps^2 / 4)` for `0 < eps < 2`.
pub fn second_order(spec: &Spectrum, eps: f64) -> Result<SecondOrderCoeffs> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let a = spec.entropy();
    let s = information_std(spec);
    let b = if s == 0.0 { 0.0 } else { -s * normal_quantile(eps * eps / 4.0)? };
    Ok(SecondOrderCoeffs { a, b, s, epsilon: eps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_points() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        // 40-digit reference
        let q = normal_quantile(1e-4).unwrap();
        assert!((q + 3.719016485455680564).abs() < 1e-12, "{q:e} {:e}", normal_cdf(q) - 1e-4);
        assert!((normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-12);
        assert!(normal_quantile(0.0).is_err() && normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for k in 0..=1000 {
            let p = 1e-6 + (1.0 - 2e-6) * k as f64 / 1000.0;
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() <= 1e-9 * p.max(1e-3), "p = {p}");
        }
    }

    #[test]
    fn coefficients_of_reference_spectra() {
        let s = Spectrum::new(vec![(0.75, 1), (0.25, 1)]).unwrap();
        let c = second_order(&s, 0.04).unwrap();
        assert!((c.a - 0.8112781244591328639).abs() < 1e-12);
        assert!((c.s - 0.6863088948351164560).abs() < 1e-12);
        assert!((c.b - 2.301052880417215869).abs() < 1e-9, "{}", c.b);
        let flat = Spectrum::new(vec![(0.5, 1), (0.5, 1)]).unwrap();
        for eps in [0.01, 0.5, 1.0, 1.9] {
            let c = second_order(&flat, eps).unwrap();
            assert_eq!((c.s, c.b), (0.0, 0.0));
            assert!((c.a - 1.0).abs() < 1e-15);
        }
        assert!(second_order(&s, 2.0).is_err() && second_order(&s, 0.0).is_err());
    }
}
