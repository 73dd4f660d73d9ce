//! Data series for the W-state second-order coefficient and the rate
//! comparison between error allocations.

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::normal::second_order;
use crate::cost::spectrum::Spectrum;
use crate::cost::thresholds::optimize_thresholds;
use crate::error::{Error, Result};

pub const FIGURE_SCHEMA_VERSION: u32 = 1;

/// Reduced spectrum of `W_N` on `k` of its parties: `{k/N, (N-k)/N}`.
pub fn w_cut_spectrum(n: usize, k: usize) -> Result<Spectrum> {
    if n == 0 || k > n {
        return Err(Error::InvalidGrid(format!("cut of {k} parties out of {n}")));
    }
    if k == 0 || k == n {
        return Spectrum::new(vec![(1.0, 1)]);
    }
    let p = k as f64 / n as f64;
    Spectrum::new(vec![(p, 1), (1.0 - p, 1)])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WSecondOrderRow {
    pub parties: usize,
    pub eps_prime: f64,
    pub a: f64,
    pub b: f64,
}

pub fn default_party_grid() -> Vec<usize> {
    (4..=80).step_by(4).collect()
}

/// `a` and `b` of the `W_N` cut after `N/4` parties at the constant threshold
/// `eps / sqrt(N - 1)`.
pub fn w_second_order(eps: f64, parties: &[usize]) -> Result<Vec<WSecondOrderRow>> {
    if parties.is_empty() {
        return Err(Error::InvalidGrid("empty party grid".into()));
    }
    if let Some(bad) = parties.iter().find(|&&n| n == 0 || n % 4 != 0) {
        return Err(Error::InvalidGrid(format!("party count {bad} is not a positive multiple of 4")));
    }
    parties
        .par_iter()
        .map(|&n| {
            let spec = w_cut_spectrum(n, n / 4)?;
            let eps_prime = eps / ((n - 1) as f64).sqrt();
            let c = second_order(&spec, eps_prime)?;
            Ok(WSecondOrderRow { parties: n, eps_prime, a: c.a, b: c.b })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub r_const: f64,
    pub r_opt: f64,
    pub r_lower: f64,
}

/// Integer block lengths, ten per decade from 10 to 1e5.
pub fn default_block_grid() -> Vec<usize> {
    let mut v: Vec<usize> = (0..=40).map(|i| 10f64.powf(1.0 + i as f64 / 10.0).round() as usize).collect();
    v.dedup();
    v
}

/// Second-order rates at the first edge of the four-party W line: constant
/// thresholds `eps / sqrt(3)`, optimized thresholds, and the converse at `eps`.
pub fn rate_comparison(eps: f64, blocks: &[usize]) -> Result<Vec<RateRow>> {
    if blocks.is_empty() || blocks.contains(&0) {
        return Err(Error::InvalidGrid("block lengths must be positive".into()));
    }
    let skewed = w_cut_spectrum(4, 1)?;
    let flat = w_cut_spectrum(4, 2)?;
    let opt = optimize_thresholds(&[skewed.clone(), flat, skewed.clone()], eps)?;
    let b_const = second_order(&skewed, eps / 3f64.sqrt())?;
    let b_opt = second_order(&skewed, opt[0])?;
    let b_lower = second_order(&skewed, eps)?;
    Ok(blocks
        .iter()
        .map(|&n| {
            let root = (n as f64).sqrt();
            RateRow {
                n,
                r_const: b_const.a + b_const.b / root,
                r_opt: b_opt.a + b_opt.b / root,
                r_lower: b_lower.a + b_lower.b / root,
            }
        })
        .collect())
}

pub fn w_second_order_csv(eps: f64, rows: &[WSecondOrderRow]) -> String {
    let mut out = format!("# treecost w-second-order schema {FIGURE_SCHEMA_VERSION} eps={eps}\nN,a,b\n");
    for r in rows {
        out.push_str(&format!("{},{:.12},{:.12}\n", r.parties, r.a, r.b));
    }
    out
}

pub fn rate_comparison_csv(eps: f64, rows: &[RateRow]) -> String {
    let mut out = format!("# treecost rate-comparison schema {FIGURE_SCHEMA_VERSION} eps={eps}\nn,R_const,R_opt,R_lower\n");
    for r in rows {
        out.push_str(&format!("{},{:.12},{:.12},{:.12}\n", r.n, r.r_const, r.r_opt, r.r_lower));
    }
    out
}
