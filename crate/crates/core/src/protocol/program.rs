//! Measurement operators, corrections and leaf isometries for every party.
//!
//! A nonleaf vertex `v` with children `c_1..c_k` measures its registers
//! `[incoming, out_{c_1}, ..., out_{c_k}]` with operators
//!
//! ```text
//! M_{x,z} = sum T^v_{l, l_C, l_v} |l><l_v| (x) prod_c <l_c| Z(z_c) X(x_c) / sqrt(R_c)
//! ```
//!
//! If an edge carries a resource of dimension `m_e > R_e`, the parent first
//! compresses its end with the cyclic-window operators
//! `K_j = R_e^{-1/2} sum_{s < R_e} |s><s + j mod m_e|` (`m_e` outcomes) and the
//! child undoes the shift `j` before its Pauli correction.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::{TreeDecomposition, VertexTensor};
use crate::error::{Error, Result};
use crate::linalg::hermitian_norm;
use crate::protocol::pauli::{correction, root_of_unity};
use crate::tensor::C64;
use crate::tree::{PartyId, RootedTree};

/// Local dimension `m_e` of the maximally entangled resource on each edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceConfig {
    dims: Vec<usize>,
}

impl ResourceConfig {
    /// `m_e = R_e`.
    pub fn optimal(d: &TreeDecomposition) -> Self {
        Self { dims: d.ranks() }
    }

    pub fn uniform(t: &RootedTree, m: usize) -> Self {
        Self { dims: vec![m; t.n().saturating_sub(1)] }
    }

    pub fn from_dims(t: &RootedTree, dims: Vec<usize>) -> Result<Self> {
        if dims.len() + 1 != t.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} resource dimensions for {} edges",
                dims.len(),
                t.n() - 1
            )));
        }
        if dims.contains(&0) {
            return Err(Error::IncompatibleDims("resource dimension must be at least 1".into()));
        }
        Ok(Self { dims })
    }

    /// Overrides `m_e` for the edge with 1-based `label`.
    pub fn set(&mut self, label: usize, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::IncompatibleDims("resource dimension must be at least 1".into()));
        }
        let slot = self
            .dims
            .get_mut(label.wrapping_sub(1))
            .ok_or_else(|| Error::UnknownEdge(format!("e{label}")))?;
        *slot = m;
        Ok(())
    }

    /// By edge index.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `log2 m_e` per edge.
    pub fn ebits(&self) -> Vec<f64> {
        self.dims.iter().map(|&m| (m as f64).log2()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Root,
    Internal,
    Leaf,
}

#[derive(Clone, Debug)]
struct Perturbation {
    vertex: PartyId,
    outcome: usize,
    factor: f64,
}

#[derive(Clone, Debug)]
pub struct MeasurementProgram {
    tree: RootedTree,
    tensors: Vec<VertexTensor>,
    ranks: Vec<usize>,
    resources: Vec<usize>,
    perturbation: Option<Perturbation>,
}

/// Builds every party's operators; fails if some `m_e < R_e`.
pub fn build_program(d: &TreeDecomposition, r: &ResourceConfig) -> Result<MeasurementProgram> {
    let ranks = d.ranks();
    if r.dims.len() != ranks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} resource dimensions for {} edges",
            r.dims.len(),
            ranks.len()
        )));
    }
    for (e, (&rank, &m)) in d.tree.edges().iter().zip(ranks.iter().zip(&r.dims)) {
        if m < rank {
            return Err(Error::InsufficientResource {
                edge: e.label,
                rank,
                available: m,
            });
        }
    }
    Ok(MeasurementProgram {
        tree: d.tree.clone(),
        tensors: d.tensors.clone(),
        ranks,
        resources: r.dims.clone(),
        perturbation: None,
    })
}

impl MeasurementProgram {
    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    /// `R_e` by edge index.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// `m_e` by edge index.
    pub fn resources(&self) -> &[usize] {
        &self.resources
    }

    pub fn target_dims(&self) -> &[usize] {
        self.tree.dims()
    }

    pub fn role(&self, v: PartyId) -> Role {
        if v == self.tree.root() {
            Role::Root
        } else if self.tree.is_leaf(v) {
            Role::Leaf
        } else {
            Role::Internal
        }
    }

    pub fn is_padded(&self, edge_index: usize) -> bool {
        self.resources[edge_index] > self.ranks[edge_index]
    }

    fn incoming_rank(&self, v: PartyId) -> usize {
        self.tree.edge_to(v).map_or(1, |e| self.ranks[e.index()])
    }

    fn child_ranks(&self, v: PartyId) -> Vec<usize> {
        self.tree
            .children(v)
            .iter()
            .map(|&c| self.incoming_rank(c))
            .collect()
    }

    /// Number of outcomes `prod_c R_c^2` of the measurement at `v` (1 at leaves).
    pub fn outcome_count(&self, v: PartyId) -> usize {
        self.child_ranks(v).iter().map(|r| r * r).product()
    }

    /// Flat outcome index to `(x_c, z_c)` per child, children in BFS order.
    pub fn decode_outcome(&self, v: PartyId, mut idx: usize) -> Vec<(usize, usize)> {
        let ranks = self.child_ranks(v);
        let mut out = vec![(0, 0); ranks.len()];
        for (k, &r) in ranks.iter().enumerate().rev() {
            let z = idx % r;
            idx /= r;
            let x = idx % r;
            idx /= r;
            out[k] = (x, z);
        }
        out
    }

    pub fn encode_outcome(&self, v: PartyId, xz: &[(usize, usize)]) -> Result<usize> {
        let ranks = self.child_ranks(v);
        if xz.len() != ranks.len() {
            return Err(Error::MalformedProgram(format!(
                "{} outcome pairs for {} children",
                xz.len(),
                ranks.len()
            )));
        }
        let mut idx = 0;
        for (&(x, z), &r) in xz.iter().zip(&ranks) {
            if x >= r || z >= r {
                return Err(Error::OutOfRangeIndex { index: x.max(z), dim: r });
            }
            idx = (idx * r + x) * r + z;
        }
        Ok(idx)
    }

    /// Dimensions of the registers the measurement at `v` acts on,
    /// `[R_v, R_{c_1}, ..., R_{c_k}]`.
    pub fn input_dims(&self, v: PartyId) -> Vec<usize> {
        let mut dims = vec![self.incoming_rank(v)];
        dims.extend(self.child_ranks(v));
        dims
    }

    /// `M^v_{x,z}` as a `d_v x (R_v prod R_c)` matrix.
    pub fn measurement_operator(&self, v: PartyId, outcome: usize) -> DMatrix<C64> {
        let vt = &self.tensors[v.0];
        let ranks = self.child_ranks(v);
        let xz = self.decode_outcome(v, outcome);
        let r_v = self.incoming_rank(v);
        let mid: usize = ranks.iter().product();
        let scale = 1.0 / (mid as f64).sqrt();
        let d = vt.dim();
        let mut m = DMatrix::zeros(d, r_v * mid);
        let mut k = vec![0usize; ranks.len()];
        for kc in 0..mid {
            // digits k_c of kc, then l_c = k_c + x_c and the phase prod w^{z_c l_c}
            let mut rem = kc;
            for (slot, &r) in ranks.iter().enumerate().rev() {
                k[slot] = rem % r;
                rem /= r;
            }
            let mut lc = 0;
            let mut phase = C64::new(scale, 0.0);
            for (slot, &r) in ranks.iter().enumerate() {
                let (x, z) = xz[slot];
                let l = (k[slot] + x) % r;
                lc = lc * r + l;
                phase *= root_of_unity(r, z * l);
            }
            for lv in 0..r_v {
                for l in 0..d {
                    m[(l, lv * mid + kc)] = vt.data[(l * mid + lc) * r_v + lv] * phase;
                }
            }
        }
        if let Some(p) = &self.perturbation {
            if p.vertex == v && p.outcome == outcome {
                m *= C64::new(p.factor, 0.0);
            }
        }
        m
    }

    /// True if a fault was injected at `v`.
    pub fn is_perturbed(&self, v: PartyId) -> bool {
        self.perturbation.as_ref().is_some_and(|p| p.vertex == v)
    }

    /// Upper bound on `||M^v_{x,z}||^2` over all outcomes of an unperturbed program.
    pub fn operator_norm_bound(&self, v: PartyId) -> f64 {
        let a = self.tensors[v.0].as_operator();
        let mid: usize = self.child_ranks(v).iter().product();
        hermitian_norm(&(&a * a.adjoint())) / mid as f64
    }

    /// `U_v: |l_v> -> |w_{l_v}>`, a `d_v x R_v` isometry.
    pub fn leaf_isometry(&self, v: PartyId) -> DMatrix<C64> {
        self.tensors[v.0].as_operator()
    }

    /// `Z(-z) X(x)` on the incoming register of `v`.
    pub fn correction_operator(&self, v: PartyId, x: usize, z: usize) -> Result<DMatrix<C64>> {
        correction(self.incoming_rank(v), x, z)
    }

    /// Parent-side `K_j`, `R_e x m_e`.
    pub fn compression_operator(&self, edge_index: usize, j: usize) -> DMatrix<C64> {
        let (r, m) = (self.ranks[edge_index], self.resources[edge_index]);
        let scale = C64::new(1.0 / (r as f64).sqrt(), 0.0);
        let mut k = DMatrix::zeros(r, m);
        for s in 0..r {
            k[(s, (s + j) % m)] = scale;
        }
        k
    }

    /// Child-side relabel `|k> -> |k - j mod m_e>` restricted to its first `R_e` outputs.
    pub fn relabel_operator(&self, edge_index: usize, j: usize) -> DMatrix<C64> {
        let (r, m) = (self.ranks[edge_index], self.resources[edge_index]);
        let mut u = DMatrix::zeros(r, m);
        for s in 0..r {
            u[(s, (s + j) % m)] = C64::new(1.0, 0.0);
        }
        u
    }

    /// Multiplies one measurement operator by `factor` (fault injection for negative controls).
    pub fn perturb_operator(&mut self, v: PartyId, outcome: usize, factor: f64) -> Result<()> {
        if self.role(v) == Role::Leaf {
            return Err(Error::MalformedProgram(format!("{} is a leaf", self.tree.name(v))));
        }
        let count = self.outcome_count(v);
        if outcome >= count {
            return Err(Error::OutOfRangeIndex { index: outcome, dim: count });
        }
        self.perturbation = Some(Perturbation { vertex: v, outcome, factor });
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexDeviation {
    pub vertex: String,
    pub label: usize,
    pub kind: &'static str,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessReport {
    pub entries: Vec<VertexDeviation>,
    pub max_deviation: f64,
    pub passes: bool,
}

fn sum_gram(ops: impl IndexedParallelIterator<Item = DMatrix<C64>>, dim: usize) -> DMatrix<C64> {
    ops.fold(|| DMatrix::zeros(dim, dim), |acc, m| acc + m.adjoint() * m)
        .reduce(|| DMatrix::zeros(dim, dim), |a, b| a + b)
}

/// `|| sum M^dag M - 1 ||` for every measurement and compression, and
/// `|| U^dag U - 1 ||` for every leaf isometry.
pub fn check_completeness(p: &MeasurementProgram, tol: f64) -> CompletenessReport {
    let t = &p.tree;
    let mut entries = Vec::new();
    for &v in t.bfs_order() {
        let name = t.name(v).to_string();
        let label = t.label(v);
        for &c in t.children(v) {
            let e = t.edge_to(c).expect("child edge").index();
            if p.is_padded(e) {
                let m = p.resources[e];
                let g = sum_gram((0..m).into_par_iter().map(|j| p.compression_operator(e, j)), m);
                entries.push(VertexDeviation {
                    vertex: name.clone(),
                    label,
                    kind: "compression",
                    deviation: hermitian_norm(&(g - DMatrix::identity(m, m))),
                });
            }
        }
        let (kind, gram) = match p.role(v) {
            Role::Leaf => {
                let u = p.leaf_isometry(v);
                ("isometry", u.adjoint() * u)
            }
            _ => {
                let dim: usize = p.input_dims(v).iter().product();
                let ops = (0..p.outcome_count(v)).into_par_iter().map(|o| p.measurement_operator(v, o));
                ("measurement", sum_gram(ops, dim))
            }
        };
        let n = gram.nrows();
        entries.push(VertexDeviation {
            vertex: name,
            label,
            kind,
            deviation: hermitian_norm(&(gram - DMatrix::identity(n, n))),
        });
    }
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    CompletenessReport {
        entries,
        max_deviation,
        passes: max_deviation <= tol,
    }
}
