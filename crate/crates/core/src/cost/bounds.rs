//! Per-edge exact costs and finite-block-length bounds.

use serde::Serialize;

use crate::config::Config;
use crate::cost::normal::{information_std, normal_quantile, second_order, SecondOrderCoeffs};
use crate::cost::spectrum::{Spectrum, SpectrumEntropy};
use crate::error::{Error, Result};
use crate::state::{schmidt_wrt_edge, PureState};
use crate::tree::{Edge, LabelEntry, RootedTree};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// `delta` used for the reported best lower bound.
pub const DEFAULT_DELTA: f64 = 1e-9;
/// Points in the log-spaced `eta` grid for the best lower bound.
pub const ETA_GRID_POINTS: usize = 200;

/// Eigenvalues of `rho_e`, i.e. the squared Schmidt coefficients across `e`.
pub fn edge_spectrum(s: &PureState, t: &RootedTree, e: &Edge, cfg: &Config) -> Result<Spectrum> {
    let sd = schmidt_wrt_edge(s, t, e, cfg)?;
    Spectrum::from_eigenvalues(&sd.lambdas(), 0.0)
}

/// `log2 R_e` in ebits.
pub fn exact_edge_cost(s: &PureState, t: &RootedTree, e: &Edge, cfg: &Config) -> Result<f64> {
    Ok((schmidt_wrt_edge(s, t, e, cfg)?.rank as f64).log2())
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeExact {
    pub label: usize,
    pub parent: String,
    pub child: String,
    pub rank: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactCostReport {
    pub schema_version: u32,
    pub label_map: Vec<LabelEntry>,
    pub edges: Vec<EdgeExact>,
    pub total: f64,
}

pub fn exact_costs(s: &PureState, t: &RootedTree, cfg: &Config) -> Result<ExactCostReport> {
    let mut edges = Vec::with_capacity(t.edges().len());
    for e in t.edges() {
        let rank = schmidt_wrt_edge(s, t, e, cfg)?.rank;
        edges.push(EdgeExact {
            label: e.label,
            parent: t.name(e.parent).to_string(),
            child: t.name(e.child).to_string(),
            rank,
            cost: (rank as f64).log2(),
        });
    }
    let total = edges.iter().map(|e| e.cost).sum();
    Ok(ExactCostReport { schema_version: REPORT_SCHEMA_VERSION, label_map: t.label_map(), edges, total })
}

/// How a spectrum-entropy value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    /// Exact type-class evaluation.
    TypeClass,
    /// `n a - sqrt(n) s Phi^{-1}(eps)`, used past the type-class cap.
    SecondOrder,
    /// Zero smoothing: `n log2 rank`.
    Support,
}

/// `H_S^eps(rho^{(x)n})` for one spectrum and block length, reused across `eps`.
pub enum SmoothedEntropy {
    Exact(SpectrumEntropy),
    Gaussian { n: f64, a: f64, s: f64 },
}

impl SmoothedEntropy {
    /// Exact when the type-class count fits under `cap`, second order otherwise.
    pub fn new(spec: &Spectrum, n: usize, cap: usize) -> Result<Self> {
        match SpectrumEntropy::new(spec, n, cap) {
            Ok(table) => Ok(Self::Exact(table)),
            Err(Error::EnumerationCapExceeded { .. }) => Ok(Self::Gaussian {
                n: n as f64,
                a: spec.entropy(),
                s: information_std(spec),
            }),
            Err(e) => Err(e),
        }
    }

    pub fn method(&self) -> BoundMethod {
        match self {
            Self::Exact(_) => BoundMethod::TypeClass,
            Self::Gaussian { .. } => BoundMethod::SecondOrder,
        }
    }

    pub fn evaluate(&self, eps: f64) -> Result<f64> {
        match self {
            Self::Exact(table) => table.evaluate(eps),
            Self::Gaussian { n, a, s } => {
                let q = if *s == 0.0 { 0.0 } else { normal_quantile(eps)? };
                Ok(n * a - n.sqrt() * s * q)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeBounds {
    pub label: usize,
    pub parent: String,
    pub child: String,
    pub rank: usize,
    /// `log2 R_e`.
    pub exact_cost: f64,
    /// `S(rho_e)`, the asymptotic cost per copy.
    pub asymptotic_rate: f64,
    pub threshold: f64,
    /// Second-order coefficients at this edge's threshold; absent when it is zero.
    pub second_order: Option<SecondOrderCoeffs>,
    /// `H_S^{eps'^2/4}(rho_e^{(x)n}) / n`.
    pub upper: f64,
    pub upper_method: BoundMethod,
    /// `[H_S^{eps^2/4 + eta}(rho_e^{(x)n}) - delta + log2 eta] / n`.
    pub lower: f64,
    pub best_lower: f64,
    pub best_eta: f64,
    pub lower_method: BoundMethod,
}

#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    pub schema_version: u32,
    pub label_map: Vec<LabelEntry>,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub thresholds: Vec<f64>,
    /// `sqrt(sum_e eps'(e)^2)`.
    pub threshold_norm: f64,
    pub edges: Vec<EdgeBounds>,
    pub total_exact: f64,
    pub total_upper: f64,
    pub total_lower: f64,
    pub total_best_lower: f64,
}

/// Log-spaced `eta` values in `[1e-12, (1 - base)(1 - 1e-6)]`.
pub fn eta_grid(base: f64, points: usize) -> Vec<f64> {
    let lo = 1e-12f64.ln();
    let hi = ((1.0 - base) * (1.0 - 1e-6)).ln();
    if points <= 1 || hi <= lo {
        return vec![hi.exp()];
    }
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Per-edge upper and lower bounds on the approximate cost at block length `n`.
///
/// `thresholds` is indexed by edge position and must satisfy
/// `sqrt(sum eps'(e)^2) <= eps`.
#[allow(clippy::too_many_arguments)]
pub fn approx_bounds(
    s: &PureState,
    t: &RootedTree,
    n: usize,
    eps: f64,
    thresholds: &[f64],
    delta: f64,
    eta: f64,
    cfg: &Config,
) -> Result<CostReport> {
    if n == 0 {
        return Err(Error::InvalidGrid("block length must be at least 1".into()));
    }
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    if thresholds.len() != t.edges().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} thresholds for {} edges",
            thresholds.len(),
            t.edges().len()
        )));
    }
    if let Some(&bad) = thresholds.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidEpsilon(bad));
    }
    let norm = thresholds.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > eps * (1.0 + 1e-12) {
        return Err(Error::ThresholdBudgetExceeded { total: norm, eps });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    let base = eps * eps / 4.0;
    if !(eta > 0.0 && base + eta < 1.0) {
        return Err(Error::InvalidEta(eta));
    }
    let grid = eta_grid(base, ETA_GRID_POINTS);
    let nf = n as f64;

    let mut edges = Vec::with_capacity(t.edges().len());
    for (e, &thr) in t.edges().iter().zip(thresholds) {
        let spec = edge_spectrum(s, t, e, cfg)?;
        let table = SmoothedEntropy::new(&spec, n, cfg.type_class_cap)?;
        let (upper, upper_method) = if thr == 0.0 {
            ((spec.rank() as f64).log2(), BoundMethod::Support)
        } else {
            (table.evaluate(thr * thr / 4.0)? / nf, table.method())
        };
        let lower_at = |eta: f64| -> Result<f64> {
            Ok((table.evaluate(base + eta)? - delta + eta.log2()) / nf)
        };
        let lower = lower_at(eta)?;
        let (mut best_lower, mut best_eta) = (f64::NEG_INFINITY, grid[0]);
        for &g in &grid {
            let v = (table.evaluate(base + g)? - DEFAULT_DELTA + g.log2()) / nf;
            if v > best_lower {
                best_lower = v;
                best_eta = g;
            }
        }
        let second = if thr > 0.0 && thr < 2.0 { Some(second_order(&spec, thr)?) } else { None };
        edges.push(EdgeBounds {
            label: e.label,
            parent: t.name(e.parent).to_string(),
            child: t.name(e.child).to_string(),
            rank: spec.rank(),
            exact_cost: (spec.rank() as f64).log2(),
            asymptotic_rate: spec.entropy(),
            threshold: thr,
            second_order: second,
            upper,
            upper_method,
            lower,
            best_lower,
            best_eta,
            lower_method: table.method(),
        });
    }
    let sum = |f: fn(&EdgeBounds) -> f64| edges.iter().map(f).sum::<f64>();
    Ok(CostReport {
        schema_version: REPORT_SCHEMA_VERSION,
        label_map: t.label_map(),
        n,
        eps,
        delta,
        eta,
        thresholds: thresholds.to_vec(),
        threshold_norm: norm,
        total_exact: sum(|e| e.exact_cost),
        total_upper: sum(|e| e.upper),
        total_lower: sum(|e| e.lower),
        total_best_lower: sum(|e| e.best_lower),
        edges,
    })
}
