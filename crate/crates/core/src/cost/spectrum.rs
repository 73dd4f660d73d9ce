//! Eigenvalue spectra and the information spectrum entropy of their i.i.d. powers.
//!
//! `H_S^eps(rho) = inf { gamma : tr (rho - 2^-gamma)_+ >= 1 - eps }`. For
//! `rho^{(x)n}` the eigenvalues are products over type classes, so the
//! distinct values and their multiplicities can be enumerated without ever
//! expanding the `d^n` products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap below which two eigenvalues are merged.
const MERGE_TOL: f64 = 1e-12;

/// Distinct positive eigenvalues with multiplicities, descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    levels: Vec<(f64, usize)>,
}

impl Spectrum {
    /// Validates, sorts, merges near-equal values and renormalizes away roundoff.
    pub fn new(levels: Vec<(f64, usize)>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSpectrum("no eigenvalues".into()));
        }
        for &(v, m) in &levels {
            if !(v > 0.0 && v.is_finite()) || m == 0 {
                return Err(Error::InvalidSpectrum(format!("level ({v}, {m})")));
            }
        }
        let total: f64 = levels.iter().map(|&(v, m)| v * m as f64).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpectrum(format!("weights sum to {total}")));
        }
        let mut sorted = levels;
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut merged: Vec<(f64, usize)> = Vec::with_capacity(sorted.len());
        for (v, m) in sorted {
            match merged.last_mut() {
                Some(last) if (last.0 - v).abs() <= MERGE_TOL * last.0 => {
                    let w = last.0 * last.1 as f64 + v * m as f64;
                    last.1 += m;
                    last.0 = w / last.1 as f64;
                }
                _ => merged.push((v, m)),
            }
        }
        for level in &mut merged {
            level.0 /= total;
        }
        Ok(Self { levels: merged })
    }

    /// Spectrum from raw eigenvalues, dropping those at or below `drop_tol`.
    pub fn from_eigenvalues(values: &[f64], drop_tol: f64) -> Result<Self> {
        Self::new(values.iter().filter(|&&v| v > drop_tol).map(|&v| (v, 1)).collect())
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSpectrum("empty uniform spectrum".into()));
        }
        Self::new(vec![(1.0 / d as f64, d)])
    }

    pub fn levels(&self) -> &[(f64, usize)] {
        &self.levels
    }

    /// Number of nonzero eigenvalues counted with multiplicity.
    pub fn rank(&self) -> usize {
        self.levels.iter().map(|l| l.1).sum()
    }

    /// All eigenvalues with repetition, descending.
    pub fn expanded(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
            .collect()
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.levels
            .iter()
            .map(|&(v, m)| -(m as f64) * v * v.log2())
            .sum()
    }

    /// Variance of `-log2 lambda` under `lambda`; exactly zero for a single level.
    pub fn information_variance(&self) -> f64 {
        if self.levels.len() == 1 {
            return 0.0;
        }
        let a = self.entropy();
        let v: f64 = self
            .levels
            .iter()
            .map(|&(v, m)| {
                let dev = -v.log2() - a;
                m as f64 * v * dev * dev
            })
            .sum();
        v.max(0.0)
    }
}

/// `C(n + d - 1, d - 1)`, the number of type classes of length `n` over `d` letters.
pub fn type_class_count(d: usize, n: usize) -> f64 {
    use libm::lgamma as ln_gamma;
    if d <= 1 {
        return 1.0;
    }
    let (n, d) = (n as f64, d as f64);
    (ln_gamma(n + d) - ln_gamma(n + 1.0) - ln_gamma(d)).exp().round()
}

/// Sorted eigenvalue classes of `rho^{(x)n}`, reusable across smoothing parameters.
#[derive(Clone, Debug)]
pub struct SpectrumEntropy {
    /// `ln mu` per class, descending.
    log_value: Vec<f64>,
    /// `ln` of the cumulative count of eigenvalues in classes `0..=k`.
    log_count_prefix: Vec<f64>,
    /// Mass in classes strictly after `k`.
    tail_after: Vec<f64>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl SpectrumEntropy {
    pub fn new(spec: &Spectrum, n: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("block length must be at least 1".into()));
        }
        let lv = spec.levels();
        let d = lv.len();
        let needed = type_class_count(d, n);
        if needed > cap as f64 {
            return Err(Error::EnumerationCapExceeded { needed, cap });
        }
        let mut ln_fact = vec![0.0f64; n + 1];
        for k in 1..=n {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let ln_val: Vec<f64> = lv.iter().map(|l| l.0.ln()).collect();
        let ln_mult: Vec<f64> = lv.iter().map(|l| (l.1 as f64).ln()).collect();

        // (ln mu, ln count) per type class
        let mut classes: Vec<(f64, f64)> = Vec::with_capacity(needed as usize);
        let mut k = vec![0usize; d];
        fn walk(
            pos: usize,
            left: usize,
            k: &mut [usize],
            ln_val: &[f64],
            ln_mult: &[f64],
            ln_fact: &[f64],
            out: &mut Vec<(f64, f64)>,
        ) {
            if pos + 1 == k.len() {
                k[pos] = left;
                let n = ln_fact.len() - 1;
                let mut lmu = 0.0;
                let mut lcount = ln_fact[n];
                for i in 0..k.len() {
                    if k[i] > 0 {
                        lmu += k[i] as f64 * ln_val[i];
                        lcount += k[i] as f64 * ln_mult[i] - ln_fact[k[i]];
                    }
                }
                out.push((lmu, lcount));
                return;
            }
            for take in (0..=left).rev() {
                k[pos] = take;
                walk(pos + 1, left - take, k, ln_val, ln_mult, ln_fact, out);
            }
        }
        walk(0, n, &mut k, &ln_val, &ln_mult, &ln_fact, &mut classes);
        classes.sort_by(|a, b| b.0.total_cmp(&a.0));

        let m = classes.len();
        let mut log_value = Vec::with_capacity(m);
        let mut log_count_prefix = Vec::with_capacity(m);
        let mut acc = f64::NEG_INFINITY;
        for &(lmu, lc) in &classes {
            acc = log_add(acc, lc);
            log_value.push(lmu);
            log_count_prefix.push(acc);
        }
        let mut tail_after = vec![0.0; m];
        let mut tail = 0.0;
        for i in (0..m).rev() {
            tail_after[i] = tail;
            tail += (classes[i].0 + classes[i].1).exp();
        }
        Ok(Self { log_value, log_count_prefix, tail_after })
    }

    /// `H_S^eps(rho^{(x)n})` in bits for `eps` in `(0, 1)`.
    pub fn evaluate(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidEpsilon(eps));
        }
        let m = self.log_value.len();
        // tr(rho - t)_+ at t = mu_{k+1} is nondecreasing in k, so the first
        // class where it reaches 1 - eps can be found by bisection
        let reaches = |k: usize| {
            let slack = eps - self.tail_after[k];
            let next = if k + 1 < m { self.log_value[k + 1] } else { f64::NEG_INFINITY };
            slack > 0.0 && slack.ln() >= self.log_count_prefix[k] + next
        };
        let (mut lo, mut hi) = (0, m - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if reaches(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let k = lo;
        // on [mu_{k+1}, mu_k]: tr(rho - t)_+ = 1 - tail_k - N_k t
        let ln_t = (eps - self.tail_after[k]).ln() - self.log_count_prefix[k];
        Ok(-ln_t / std::f64::consts::LN_2)
    }

    /// Number of eigenvalues of `rho^{(x)n}` that are at least `2^-gamma`,
    /// within a relative tolerance, as a natural logarithm.
    pub fn log_count_at_least(&self, gamma: f64) -> f64 {
        let ln_t = -gamma * std::f64::consts::LN_2;
        let idx = self.log_value.partition_point(|&lv| lv >= ln_t - 1e-12 * ln_t.abs().max(1.0));
        if idx == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_count_prefix[idx - 1]
        }
    }

    pub fn class_count(&self) -> usize {
        self.log_value.len()
    }
}

/// `H_S^eps(rho^{(x)n})` in bits.
pub fn spectrum_entropy(spec: &Spectrum, n: usize, eps: f64, cap: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    SpectrumEntropy::new(spec, n, cap)?.evaluate(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAP: usize = 2_000_000;

    #[test]
    fn closed_forms() {
        let one = Spectrum::new(vec![(1.0, 1)]).unwrap();
        assert!((spectrum_entropy(&one, 1, 0.01, CAP).unwrap() - 100f64.log2()).abs() < 1e-12);
        let u4 = Spectrum::uniform(4).unwrap();
        assert!((spectrum_entropy(&u4, 1, 0.5, CAP).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_reference_values() {
        // 40-digit evaluations of the defining formula
        let s = Spectrum::new(vec![(0.75, 1), (0.25, 1)]).unwrap();
        let h6 = spectrum_entropy(&s, 6, 0.04, CAP).unwrap();
        assert!((h6 - 10.62996860713463085).abs() < 1e-9, "{h6}");
        let h2 = spectrum_entropy(&s, 2, 0.07, CAP).unwrap();
        assert!((h2 - 5.836501267717120588).abs() < 1e-9, "{h2}");
    }

    #[test]
    fn merges_and_validates() {
        let s = Spectrum::new(vec![(0.25, 1), (0.5, 1), (0.25 * (1.0 + 1e-14), 1)]).unwrap();
        assert_eq!(s.levels().len(), 2);
        assert_eq!(s.levels()[1].1, 2);
        assert!(Spectrum::new(vec![(0.5, 1)]).is_err());
        assert!(Spectrum::new(vec![(-0.5, 1), (1.5, 1)]).is_err());
        assert_eq!(Spectrum::uniform(2).unwrap().information_variance(), 0.0);
        assert_eq!(Spectrum::new(vec![(0.5, 1), (0.5, 1)]).unwrap().information_variance(), 0.0);
    }

    #[test]
    fn type_class_cap() {
        assert_eq!(type_class_count(2, 10), 11.0);
        assert_eq!(type_class_count(3, 4), 15.0);
        let s = Spectrum::new(vec![(0.4, 1), (0.3, 1), (0.2, 1), (0.1, 1)]).unwrap();
        assert!(matches!(
            spectrum_entropy(&s, 10_000, 0.1, CAP),
            Err(Error::EnumerationCapExceeded { .. })
        ));
        assert!(matches!(spectrum_entropy(&s, 3, 0.0, CAP), Err(Error::InvalidEpsilon(_))));
        assert!(matches!(spectrum_entropy(&s, 3, 1.0, CAP), Err(Error::InvalidEpsilon(_))));
    }

    #[test]
    fn large_block_lengths_stay_finite() {
        let s = Spectrum::new(vec![(0.75, 1), (0.25, 1)]).unwrap();
        let h = spectrum_entropy(&s, 100_000, 0.01, CAP).unwrap();
        let rate = h / 100_000.0;
        assert!((rate - s.entropy()).abs() < 0.01, "{rate}");
    }

    #[test]
    fn counts_above_threshold() {
        let s = Spectrum::new(vec![(0.75, 1), (0.25, 1)]).unwrap();
        let table = SpectrumEntropy::new(&s, 2, CAP).unwrap();
        // products 9/16, 3/16 (x2), 1/16
        assert!((table.log_count_at_least(-(9.0f64 / 16.0).log2()).exp() - 1.0).abs() < 1e-9);
        assert!((table.log_count_at_least(-(3.0f64 / 16.0).log2()).exp() - 3.0).abs() < 1e-9);
        assert!((table.log_count_at_least(10.0).exp() - 4.0).abs() < 1e-9);
        assert_eq!(table.log_count_at_least(0.0), f64::NEG_INFINITY);
    }
}
