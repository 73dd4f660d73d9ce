//! Allocation of the total error budget across edges.
//!
//! Minimizes the summed second-order coefficient `sum_e -s_e Phi^{-1}(eps'_e^2 / 4)`
//! subject to `sum_e eps'_e^2 = eps^2`. Writing `u_e = eps'_e^2 / 4`, the
//! stationarity condition is `s_e / phi(Phi^{-1}(u_e)) = c` for one multiplier
//! `c`, which is solved by bisection on `ln c`.

use crate::cost::normal::{information_std, normal_cdf, normal_quantile};
use crate::cost::spectrum::Spectrum;
use crate::error::{Error, Result};

/// Constant split `eps / sqrt(|E|)` over every edge.
pub fn uniform_thresholds(edges: usize, eps: f64) -> Vec<f64> {
    if edges == 0 {
        return Vec::new();
    }
    vec![eps / (edges as f64).sqrt(); edges]
}

/// `sum_e b(rho_e, eps'_e)`; edges with `s_e = 0` contribute nothing and an
/// edge with `s_e > 0` and no budget contributes `+inf`.
pub fn threshold_objective(spectra: &[Spectrum], thresholds: &[f64]) -> Result<f64> {
    if spectra.len() != thresholds.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} spectra vs {} thresholds",
            spectra.len(),
            thresholds.len()
        )));
    }
    let mut total = 0.0;
    for (spec, &e) in spectra.iter().zip(thresholds) {
        let s = information_std(spec);
        if s == 0.0 {
            continue;
        }
        if e <= 0.0 {
            return Ok(f64::INFINITY);
        }
        total += -s * normal_quantile(e * e / 4.0)?;
    }
    Ok(total)
}

/// Budget share of each edge at multiplier `exp(ln_c)`.
fn shares(stds: &[f64], ln_c: f64) -> Vec<f64> {
    let ln_root_two_pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    stds.iter()
        .map(|&s| {
            if s == 0.0 {
                return 0.0;
            }
            let gap = ln_c - s.ln() - ln_root_two_pi;
            normal_cdf(-(2.0 * gap.max(0.0)).sqrt())
        })
        .collect()
}

/// Thresholds minimizing [`threshold_objective`] with `sqrt(sum eps'^2) = eps`.
///
/// Edges whose spectrum is flat get `eps' = 0` and the budget goes to the
/// rest. For `eps^2 > 2` the objective is no longer convex on the feasible
/// set and the budget is split evenly over the active edges instead.
pub fn optimize_thresholds(spectra: &[Spectrum], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let stds: Vec<f64> = spectra.iter().map(information_std).collect();
    let active: Vec<usize> = (0..stds.len()).filter(|&i| stds[i] > 0.0).collect();
    let mut out = vec![0.0; stds.len()];
    if active.is_empty() {
        return Ok(out);
    }
    if active.len() == 1 {
        out[active[0]] = eps;
        return Ok(out);
    }
    if eps * eps > 2.0 {
        let share = eps / (active.len() as f64).sqrt();
        for &i in &active {
            out[i] = share;
        }
        return Ok(out);
    }

    let target = eps * eps / 4.0;
    let s_max = active.iter().map(|&i| stds[i]).fold(0.0, f64::max);
    let total = |ln_c: f64| shares(&stds, ln_c).iter().sum::<f64>();
    let mut lo = s_max.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut step = 1.0;
    let mut hi = lo + step;
    while total(hi) > target {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let u = shares(&stds, 0.5 * (lo + hi));
    let sum: f64 = u.iter().sum();
    for (o, ui) in out.iter_mut().zip(&u) {
        *o = (4.0 * ui * target / sum).sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed() -> Spectrum {
        Spectrum::new(vec![(0.75, 1), (0.25, 1)]).unwrap()
    }

    fn flat() -> Spectrum {
        Spectrum::uniform(2).unwrap()
    }

    #[test]
    fn w4_edges() {
        let eps = 0.04;
        let t = optimize_thresholds(&[skewed(), flat(), skewed()], eps).unwrap();
        assert_eq!(t[1], 0.0);
        for i in [0, 2] {
            assert!((t[i] - eps / 2f64.sqrt()).abs() < 1e-12, "{t:?}");
        }
    }

    #[test]
    fn single_and_flat() {
        assert_eq!(optimize_thresholds(&[skewed()], 0.3).unwrap(), vec![0.3]);
        assert_eq!(optimize_thresholds(&[flat(), flat()], 0.3).unwrap(), vec![0.0, 0.0]);
        assert!(optimize_thresholds(&[skewed()], 0.0).is_err());
    }

    #[test]
    fn budget_is_exhausted_and_beats_uniform() {
        let specs = vec![
            skewed(),
            Spectrum::new(vec![(0.9, 1), (0.1, 1)]).unwrap(),
            Spectrum::new(vec![(0.5, 1), (0.3, 1), (0.2, 1)]).unwrap(),
        ];
        for eps in [0.01, 0.1, 0.5, 1.0, 1.4] {
            let t = optimize_thresholds(&specs, eps).unwrap();
            let used: f64 = t.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((used - eps).abs() < 1e-12 * eps.max(1.0));
            let opt = threshold_objective(&specs, &t).unwrap();
            let uni = threshold_objective(&specs, &uniform_thresholds(3, eps)).unwrap();
            assert!(opt <= uni + 1e-12, "eps {eps}: {opt} > {uni}");
        }
    }

    #[test]
    fn objective_edge_cases() {
        assert_eq!(threshold_objective(&[flat()], &[0.0]).unwrap(), 0.0);
        assert_eq!(threshold_objective(&[skewed()], &[0.0]).unwrap(), f64::INFINITY);
        assert!(threshold_objective(&[skewed()], &[]).is_err());
    }
}
