//! Approximate targets: spectral projections of `n` copies, the projected
//! state, its exact construction, and the sequential-projection union bound.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::Config;
use crate::cost::bounds::REPORT_SCHEMA_VERSION;
use crate::cost::spectrum::{Spectrum, SpectrumEntropy};
use crate::decomposition::decompose;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::protocol::{build_program, simulate, summarize, Mode, ResourceConfig, SimOptions, SimulationSummary, Transcript};
use crate::state::{schmidt_wrt_edge, trace_distance_pure, DensityOperator, PureState};
use crate::tensor::{self, C64};
use crate::tree::{Edge, LabelEntry, PartyId, RootedTree};

/// Relative slack when comparing eigenvalue products against `2^-gamma`.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Projector onto the eigenvectors of `rho_e^{(x)n}` with eigenvalue at least `2^-gamma`.
#[derive(Clone, Debug)]
pub struct EdgeProjection {
    pub edge: Edge,
    /// `+inf` for zero threshold, where the projector is the full support.
    pub gamma: f64,
    /// On the `n`-copy registers of `D'_v`, in [`RootedTree::bipartition`] order.
    pub projector: DMatrix<C64>,
    pub rank: usize,
    /// `tr(Pi rho_e^{(x)n})`.
    pub retained_mass: f64,
    pub parties: Vec<PartyId>,
}

/// `n`-copy register index order is party-major with the copy index innermost,
/// matching [`PureState::n_copies`].
fn copy_interleave(vec_copy_major: &[C64], dims: &[usize], n: usize) -> Vec<C64> {
    let k = dims.len();
    let copy_major: Vec<usize> = (0..n).flat_map(|_| dims.iter().copied()).collect();
    let perm: Vec<usize> = (0..k).flat_map(|p| (0..n).map(move |c| c * k + p)).collect();
    tensor::permute(vec_copy_major, &copy_major, &perm)
}

pub fn build_projection(
    s: &PureState,
    t: &RootedTree,
    e: &Edge,
    n: usize,
    eps_prime: f64,
    cfg: &Config,
) -> Result<EdgeProjection> {
    if n == 0 {
        return Err(Error::InvalidGrid("block length must be at least 1".into()));
    }
    if !(0.0..2.0).contains(&eps_prime) {
        return Err(Error::InvalidEpsilon(eps_prime));
    }
    let sd = schmidt_wrt_edge(s, t, e, cfg)?;
    let inside_dims: Vec<usize> = sd.left_parties.iter().map(|p| t.dim(*p)).collect();
    let block: usize = inside_dims.iter().product();
    let big = block
        .checked_pow(n as u32)
        .filter(|b| b.checked_mul(*b).is_some_and(|sq| sq <= cfg.dim_cap))
        .ok_or(Error::DimensionCapExceeded {
            needed: block.saturating_pow(2 * n as u32),
            cap: cfg.dim_cap,
        })?;

    let lambdas = sd.lambdas();
    let gamma = if eps_prime == 0.0 {
        f64::INFINITY
    } else {
        let spec = Spectrum::from_eigenvalues(&lambdas, 0.0)?;
        SpectrumEntropy::new(&spec, n, cfg.type_class_cap)?.evaluate(eps_prime * eps_prime / 4.0)?
    };
    let ln_t = -gamma * std::f64::consts::LN_2;
    let ln_lambda: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();

    let r = lambdas.len();
    let mut projector = DMatrix::<C64>::zeros(big, big);
    let mut rank = 0;
    let mut retained = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let ln_mu: f64 = idx.iter().map(|&l| ln_lambda[l]).sum();
        if ln_mu >= ln_t - THRESHOLD_SLACK * ln_t.abs().max(1.0) {
            let mut v = vec![C64::new(1.0, 0.0)];
            for &l in &idx {
                let col: Vec<C64> = sd.left_basis.column(l).iter().copied().collect();
                v = tensor::kron(&v, &col);
            }
            let v = nalgebra::DVector::from_vec(copy_interleave(&v, &inside_dims, n));
            projector += &v * v.adjoint();
            rank += 1;
            retained += ln_mu.exp();
        }
        // odometer over multi-indices
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(EdgeProjection {
                    edge: *e,
                    gamma,
                    projector,
                    rank,
                    retained_mass: retained,
                    parties: sd.left_parties.clone(),
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < r {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `op` applied to the joint register of `parties`, identity elsewhere.
pub fn apply_on_parties(s: &PureState, parties: &[PartyId], op: &DMatrix<C64>) -> Result<Vec<C64>> {
    let rest: Vec<PartyId> = (0..s.n_parties()).map(PartyId).filter(|p| !parties.contains(p)).collect();
    let m = s.split(parties, &rest)?;
    if op.ncols() != m.nrows() || op.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a {}-dimensional block",
            op.nrows(),
            op.ncols(),
            m.nrows()
        )));
    }
    let out = op * m;
    let order: Vec<PartyId> = parties.iter().chain(&rest).copied().collect();
    let grouped: Vec<usize> = order.iter().map(|p| s.dims()[p.0]).collect();
    let mut inv = vec![0; order.len()];
    for (i, p) in order.iter().enumerate() {
        inv[p.0] = i;
    }
    Ok(tensor::permute(&tensor::to_row_major(&out), &grouped, &inv))
}

#[derive(Clone, Debug)]
pub struct ApproxState {
    /// N-party state with party `v` of dimension `d_v^n`.
    pub state: PureState,
    /// The input tree with `n`-copy dimensions.
    pub tree: RootedTree,
    pub n: usize,
    pub thresholds: Vec<f64>,
    pub projections: Vec<EdgeProjection>,
    /// `|| psi^{(x)n} - psi_n ||_1`.
    pub achieved_distance: f64,
    /// `sqrt(sum eps'(e)^2)`.
    pub bound: f64,
}

/// `Pi_{e_{N-1}} ... Pi_{e_1} |psi>^{(x)n}`, normalized.
pub fn approx_state(s: &PureState, t: &RootedTree, n: usize, thresholds: &[f64], cfg: &Config) -> Result<ApproxState> {
    if thresholds.len() != t.edges().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} thresholds for {} edges",
            thresholds.len(),
            t.edges().len()
        )));
    }
    let copies = s.n_copies(n, cfg.dim_cap)?;
    let tn = t.with_dims(copies.dims())?;
    let mut cur = copies.clone();
    let mut projections = Vec::with_capacity(thresholds.len());
    for (e, &thr) in t.edges().iter().zip(thresholds) {
        let p = build_projection(s, t, e, n, thr, cfg)?;
        let amps = apply_on_parties(&cur, &p.parties, &p.projector)?;
        cur = PureState::from_unnormalized(copies.dims().to_vec(), amps)?;
        projections.push(p);
    }
    let achieved_distance = trace_distance_pure(&copies, &cur)?;
    Ok(ApproxState {
        state: cur,
        tree: tn,
        n,
        thresholds: thresholds.to_vec(),
        projections,
        achieved_distance,
        bound: thresholds.iter().map(|x| x * x).sum::<f64>().sqrt(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxEdge {
    pub label: usize,
    pub threshold: f64,
    /// Absent for zero threshold (full support).
    pub gamma: Option<f64>,
    pub projector_rank: usize,
    pub retained_mass: f64,
    /// Schmidt rank of the approximate state across this edge.
    pub rank: usize,
    /// `log2(rank) / n`.
    pub cost_per_copy: f64,
    pub exact_cost: f64,
    pub within_gamma: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub schema_version: u32,
    pub label_map: Vec<LabelEntry>,
    pub n: usize,
    pub thresholds: Vec<f64>,
    pub achieved_distance: f64,
    pub bound: f64,
    pub edges: Vec<ApproxEdge>,
    pub simulation: Option<SimulationSummary>,
}

pub fn approx_report(s: &PureState, t: &RootedTree, a: &ApproxState, cfg: &Config) -> Result<ApproxReport> {
    let nf = a.n as f64;
    let mut edges = Vec::with_capacity(a.projections.len());
    for (e, p) in t.edges().iter().zip(&a.projections) {
        let rank = schmidt_wrt_edge(&a.state, &a.tree, &a.tree.edge(e.label)?, cfg)?.rank;
        let exact = schmidt_wrt_edge(s, t, e, cfg)?.rank;
        let cost = (rank as f64).log2() / nf;
        edges.push(ApproxEdge {
            label: e.label,
            threshold: a.thresholds[e.index()],
            gamma: p.gamma.is_finite().then_some(p.gamma),
            projector_rank: p.rank,
            retained_mass: p.retained_mass,
            rank,
            cost_per_copy: cost,
            exact_cost: (exact as f64).log2(),
            within_gamma: rank <= p.rank && cost <= p.gamma / nf + 1e-9,
        });
    }
    Ok(ApproxReport {
        schema_version: REPORT_SCHEMA_VERSION,
        label_map: t.label_map(),
        n: a.n,
        thresholds: a.thresholds.clone(),
        achieved_distance: a.achieved_distance,
        bound: a.bound,
        edges,
        simulation: None,
    })
}

#[derive(Clone, Debug)]
pub struct ApproxConstruction {
    pub approx: ApproxState,
    pub report: ApproxReport,
    pub transcripts: Vec<Transcript>,
}

/// Builds the approximate state and runs the exact protocol with it as the target.
pub fn construct_approx(
    s: &PureState,
    t: &RootedTree,
    n: usize,
    thresholds: &[f64],
    mode: &Mode,
    cfg: &Config,
) -> Result<ApproxConstruction> {
    let approx = approx_state(s, t, n, thresholds, cfg)?;
    let mut report = approx_report(s, t, &approx, cfg)?;
    let d = decompose(&approx.state, &approx.tree, cfg)?;
    let program = build_program(&d, &ResourceConfig::optimal(&d))?;
    let opts = SimOptions { prune_tol: cfg.prune_tol, ..SimOptions::with_target(&approx.state) };
    let transcripts = simulate(&program, mode, &opts)?;
    report.simulation = Some(summarize(&program, &transcripts));
    Ok(ApproxConstruction { approx, report, transcripts })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnionBound {
    /// `|| rho - P rho P^dag / tr(P rho P^dag) ||_1` with `P = Pi_k ... Pi_1`.
    pub lhs: f64,
    /// `2 sqrt(sum_i (1 - tr Pi_i rho))`.
    pub rhs: f64,
    pub holds: bool,
}

/// Tolerance for Hermiticity and idempotence of the input projectors.
const PROJECTOR_TOL: f64 = 1e-9;

pub fn union_bound_check(rho: &DensityOperator, projections: &[DMatrix<C64>]) -> Result<UnionBound> {
    let d = rho.dim();
    let mut p = DMatrix::<C64>::identity(d, d);
    let mut deficit = 0.0;
    for (i, pi) in projections.iter().enumerate() {
        if pi.nrows() != d || pi.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "projector {i} is {}x{}, state is {d}x{d}",
                pi.nrows(),
                pi.ncols()
            )));
        }
        let herm = (pi - pi.adjoint()).camax();
        let idem = (pi * pi - pi).camax();
        if herm > PROJECTOR_TOL || idem > PROJECTOR_TOL {
            return Err(Error::NotAProjector(format!("projector {i}: hermiticity {herm:e}, idempotence {idem:e}")));
        }
        deficit += 1.0 - (pi * &rho.matrix).trace().re;
        p = pi * p;
    }
    let projected = &p * &rho.matrix * p.adjoint();
    let tr = projected.trace().re;
    if tr < 1e-12 {
        return Err(Error::DegenerateDenominator(tr));
    }
    let diff = &rho.matrix - projected / C64::new(tr, 0.0);
    let lhs = hermitian_eigenvalues(&diff).into_iter().map(f64::abs).sum();
    let rhs = 2.0 * deficit.max(0.0).sqrt();
    Ok(UnionBound { lhs, rhs, holds: lhs <= rhs + 1e-9 })
}
