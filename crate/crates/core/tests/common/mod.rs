//! Reference implementations that share no code with the library paths they check.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treecost::{PartyId, PureState, RootedTree};

/// Schmidt rank across `inside | rest`, by walking every amplitude index and
/// taking singular values of the resulting matrix.
pub fn oracle_rank(s: &PureState, inside: &[PartyId], rel_tol: f64) -> usize {
    let dims = s.dims();
    let mask: Vec<bool> = (0..dims.len()).map(|p| inside.contains(&PartyId(p))).collect();
    let rows: usize = (0..dims.len()).filter(|&p| mask[p]).map(|p| dims[p]).product();
    let cols = s.total_dim() / rows;
    let mut m = DMatrix::<Complex64>::zeros(rows, cols);
    for (flat, amp) in s.amplitudes().iter().enumerate() {
        let mut rest = flat;
        let mut digits = vec![0; dims.len()];
        for p in (0..dims.len()).rev() {
            digits[p] = rest % dims[p];
            rest /= dims[p];
        }
        let (mut r, mut c) = (0, 0);
        for p in 0..dims.len() {
            if mask[p] {
                r = r * dims[p] + digits[p];
            } else {
                c = c * dims[p] + digits[p];
            }
        }
        m[(r, c)] = *amp;
    }
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&x| x > rel_tol * max).count()
}

/// `|<a|b>|^2` summed directly over amplitudes.
pub fn oracle_fidelity(a: &PureState, b: &PureState) -> f64 {
    assert_eq!(a.dims(), b.dims());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
        acc += x.conj() * y;
    }
    acc.norm_sqr()
}

/// `H_S^eps` of `rho^{(x)n}` from every one of the `d^n` eigenvalue products,
/// by bisection on `ln t` for `sum_i (mu_i - t)_+ = 1 - eps`.
pub fn brute_force_spectrum_entropy(eigs: &[f64], n: usize, eps: f64) -> f64 {
    let mut products = vec![1.0f64];
    for _ in 0..n {
        products = products.iter().flat_map(|p| eigs.iter().map(move |e| p * e)).collect();
    }
    products.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = vec![0.0; products.len() + 1];
    for (i, p) in products.iter().enumerate() {
        prefix[i + 1] = prefix[i] + p;
    }
    let excess = |t: f64| {
        let k = products.partition_point(|&p| p > t);
        prefix[k] - k as f64 * t
    };
    let target = 1.0 - eps;
    // excess is decreasing in t; find the largest t with excess(t) >= target
    let (mut lo, mut hi) = ((1e-300f64).ln(), 0.0f64);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if excess(mid.exp()) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    -lo / std::f64::consts::LN_2
}

/// `Phi(x) = 1/2 + phi(x) sum_k x^{2k+1} / (2k+1)!!`.
pub fn series_normal_cdf(x: f64) -> f64 {
    let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        k += 1.0;
        term *= x * x / (2.0 * k + 1.0);
        sum += term;
    }
    0.5 + phi * sum
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random state on a random tree with `2..=max_n` parties of dimension `2..=max_d`.
pub fn random_triple(seed: u64, max_n: usize, max_d: usize) -> (PureState, RootedTree) {
    let mut r = rng(seed);
    let n = r.random_range(2..=max_n);
    let dims: Vec<usize> = (0..n).map(|_| r.random_range(2..=max_d)).collect();
    let t = RootedTree::random(&dims, r.random()).unwrap();
    let s = treecost::NamedState::Random(r.random()).build(&dims).unwrap();
    (s, t)
}

/// Random probability vector of length `1..=max_len`.
pub fn random_probabilities(r: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let k = r.random_range(1..=max_len);
    let w: Vec<f64> = (0..k).map(|_| r.random_range(0.02..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
