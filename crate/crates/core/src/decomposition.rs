//! Recursive coefficient tensors of a pure state along a rooted tree.
//!
//! For each vertex `v` the tensor `T^v` has axes `[l, l_{c_1}, ..., l_{c_k}, l_v]`
//! (children in BFS order, `l_v` of size 1 at the root) with
//!
//! ```text
//! T^v_{l, l_C, l_v} = (<l| (x) <w_{l_{c_1}}| (x) ... ) |w_{l_v}>
//! ```
//!
//! where `|w_{l_v}>` is the `l_v`-th left Schmidt vector across the edge into
//! `v` and `|w_{l_v}>` at the root is the state itself. The split
//! `T = alpha * beta` takes `alpha_{l, l_v}` as the norm over `l_C`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::state::{check_tree_dims, PureState};
use crate::tensor::{self, C64};
use crate::tree::{PartyId, RootedTree};

#[derive(Clone, Debug, Serialize)]
pub struct VertexTensor {
    pub vertex: PartyId,
    /// `[d_v, R_{c_1}, ..., R_{c_k}, R_v]`.
    pub shape: Vec<usize>,
    /// `T^v` in row-major order over `shape`.
    pub data: Vec<C64>,
    /// `alpha_{l, l_v}`, row-major over `[d_v, R_v]`.
    pub alpha: Vec<f64>,
    /// `beta_{l, l_C, l_v}`, same shape as `data`.
    pub beta: Vec<C64>,
}

impl VertexTensor {
    fn new(vertex: PartyId, shape: Vec<usize>, data: Vec<C64>) -> Self {
        let d = shape[0];
        let r_v = *shape.last().expect("nonempty shape");
        let mid: usize = shape[1..shape.len() - 1].iter().product();
        let at = |l: usize, c: usize, lv: usize| (l * mid + c) * r_v + lv;
        let mut alpha = vec![0.0; d * r_v];
        let mut beta = vec![C64::new(0.0, 0.0); data.len()];
        for l in 0..d {
            for lv in 0..r_v {
                let a = (0..mid).map(|c| data[at(l, c, lv)].norm_sqr()).sum::<f64>().sqrt();
                alpha[l * r_v + lv] = a;
                if a > 1e-300 {
                    for c in 0..mid {
                        beta[at(l, c, lv)] = data[at(l, c, lv)] / a;
                    }
                } else {
                    // any unit vector works where alpha vanishes
                    beta[at(l, 0, lv)] = C64::new(1.0, 0.0);
                }
            }
        }
        Self { vertex, shape, data, alpha, beta }
    }

    pub fn dim(&self) -> usize {
        self.shape[0]
    }

    pub fn incoming_rank(&self) -> usize {
        *self.shape.last().expect("nonempty shape")
    }

    pub fn child_ranks(&self) -> &[usize] {
        &self.shape[1..self.shape.len() - 1]
    }

    /// `T^v` as a `d_v x (R_v * prod R_c)` matrix with columns ordered `(l_v, l_C)`.
    pub fn as_operator(&self) -> DMatrix<C64> {
        let d = self.dim();
        let r_v = self.incoming_rank();
        let mid: usize = self.child_ranks().iter().product();
        DMatrix::from_fn(d, r_v * mid, |l, col| {
            let (lv, c) = (col / mid, col % mid);
            self.data[(l * mid + c) * r_v + lv]
        })
    }

    /// Largest deviation of the Gram matrix `sum_{l, l_C} conj(T_{., l'_v}) T_{., l_v}` from the identity.
    pub fn orthogonality_deviation(&self) -> f64 {
        let r_v = self.incoming_rank();
        let rows = self.data.len() / r_v;
        let m = tensor::as_matrix(&self.data, rows, r_v);
        crate::linalg::isometry_deviation(&m)
    }
}

/// Per-vertex tensors plus the Schmidt bases they were computed from.
#[derive(Clone, Debug)]
pub struct TreeDecomposition {
    pub tree: RootedTree,
    /// Indexed by [`PartyId`].
    pub tensors: Vec<VertexTensor>,
    /// `|w_{l_v}>` as columns over `D'_v` (BFS order), indexed by [`PartyId`];
    /// the root entry holds the state itself as a single column.
    pub bases: Vec<DMatrix<C64>>,
}

impl TreeDecomposition {
    pub fn tensor(&self, v: PartyId) -> &VertexTensor {
        &self.tensors[v.0]
    }

    /// `R_e` for every edge, by edge index.
    pub fn ranks(&self) -> Vec<usize> {
        self.tree
            .edges()
            .iter()
            .map(|e| self.tensors[e.child.0].incoming_rank())
            .collect()
    }

    pub fn max_orthogonality_deviation(&self) -> f64 {
        self.tree
            .bfs_order()
            .iter()
            .filter(|&&v| v != self.tree.root())
            .map(|&v| self.tensors[v.0].orthogonality_deviation())
            .fold(0.0, f64::max)
    }
}

/// Positions of `[v, D'_{c_1}..., D'_{c_2}..., ...]` inside `D'_v` (both BFS-ordered).
fn grouped_perm(t: &RootedTree, v: PartyId) -> Result<(Vec<PartyId>, Vec<usize>, Vec<usize>)> {
    let closure = t.descendants_closure(v)?;
    let mut grouped = vec![v];
    let mut group_dims = vec![t.dim(v)];
    for &c in t.children(v) {
        let sub = t.descendants_closure(c)?;
        group_dims.push(t.dim_of(&sub));
        grouped.extend(sub);
    }
    let perm = grouped
        .iter()
        .map(|p| closure.iter().position(|q| q == p).expect("subtree inside closure"))
        .collect();
    Ok((closure, perm, group_dims))
}

/// Computes the tensors `T^v` from edge-wise Schmidt decompositions.
pub fn decompose(s: &PureState, t: &RootedTree, cfg: &Config) -> Result<TreeDecomposition> {
    check_tree_dims(s, t)?;
    let n = t.n();
    let mut bases: Vec<DMatrix<C64>> = vec![DMatrix::zeros(0, 0); n];
    for e in t.edges() {
        let (inside, outside) = t.bipartition(e)?;
        bases[e.child.0] = s.schmidt(&inside, &outside, cfg.rank_tol)?.left_basis;
    }
    let root = t.root();
    let all = t.descendants_closure(root)?;
    bases[root.0] = DMatrix::from_column_slice(s.total_dim(), 1, &s.amplitudes_in_order(&all));

    let mut tensors = Vec::with_capacity(n);
    for v in (0..n).map(PartyId) {
        let (closure, perm, group_dims) = grouped_perm(t, v)?;
        let w = &bases[v.0];
        let r_v = w.ncols();
        let mut dims: Vec<usize> = closure.iter().map(|p| t.dim(*p)).collect();
        dims.push(r_v);
        let mut perm_full = perm;
        perm_full.push(closure.len());
        let data = tensor::permute(&tensor::to_row_major(w), &dims, &perm_full);
        let mut cur_dims = group_dims;
        cur_dims.push(r_v);
        let mut cur = data;
        for (k, &c) in t.children(v).iter().enumerate() {
            let (next, nd) = tensor::apply_axis(&cur, &cur_dims, k + 1, &bases[c.0].adjoint());
            cur = next;
            cur_dims = nd;
        }
        tensors.push(VertexTensor::new(v, cur_dims, cur));
    }
    Ok(TreeDecomposition { tree: t.clone(), tensors, bases })
}

/// Builds a decomposition from externally supplied vertex tensors
/// (row-major over `[d_v, R_{c_1}, ..., R_v]`), recomputing the bases bottom-up.
pub fn from_vertex_tensors(t: &RootedTree, tensors: Vec<(Vec<usize>, Vec<C64>)>) -> Result<TreeDecomposition> {
    if tensors.len() != t.n() {
        return Err(Error::MalformedTensors(format!(
            "{} tensors for {} vertices",
            tensors.len(),
            t.n()
        )));
    }
    let mut vts: Vec<Option<VertexTensor>> = vec![None; t.n()];
    for (k, (shape, data)) in tensors.into_iter().enumerate() {
        let v = PartyId(k);
        let kids = t.children(v);
        if shape.len() != kids.len() + 2 || shape[0] != t.dim(v) {
            return Err(Error::MalformedTensors(format!(
                "vertex {} has shape {shape:?}",
                t.name(v)
            )));
        }
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::MalformedTensors(format!(
                "vertex {} has {} entries for shape {shape:?}",
                t.name(v),
                data.len()
            )));
        }
        if v == t.root() && shape[shape.len() - 1] != 1 {
            return Err(Error::MalformedTensors("root tensor needs a trailing axis of size 1".into()));
        }
        vts[k] = Some(VertexTensor::new(v, shape, data));
    }
    let tensors: Vec<VertexTensor> = vts.into_iter().map(|x| x.expect("filled")).collect();
    for e in t.edges() {
        let (p, c) = (&tensors[e.parent.0], &tensors[e.child.0]);
        let slot = t.children(e.parent).iter().position(|&x| x == e.child).expect("child of parent");
        if p.child_ranks()[slot] != c.incoming_rank() {
            return Err(Error::MalformedTensors(format!(
                "rank mismatch on e{}: parent axis {} vs child axis {}",
                e.label,
                p.child_ranks()[slot],
                c.incoming_rank()
            )));
        }
    }
    let bases = build_bases(t, &tensors)?;
    Ok(TreeDecomposition { tree: t.clone(), tensors, bases })
}

/// Contracts the tensors leaves-first, returning `|w_{l_v}>` over `D'_v` for every vertex.
fn build_bases(t: &RootedTree, tensors: &[VertexTensor]) -> Result<Vec<DMatrix<C64>>> {
    let mut bases: Vec<DMatrix<C64>> = vec![DMatrix::zeros(0, 0); t.n()];
    for &v in t.bfs_order().iter().rev() {
        let vt = &tensors[v.0];
        let mut cur = vt.data.clone();
        let mut cur_dims = vt.shape.clone();
        for (k, &c) in t.children(v).iter().enumerate() {
            let (next, nd) = tensor::apply_axis(&cur, &cur_dims, k + 1, &bases[c.0]);
            cur = next;
            cur_dims = nd;
        }
        // expand grouped child axes into individual parties, then restore BFS order
        let (closure, perm, _) = grouped_perm(t, v)?;
        let mut grouped_party_dims: Vec<usize> = vec![t.dim(v)];
        for &c in t.children(v) {
            grouped_party_dims.extend(t.descendants_closure(c)?.iter().map(|p| t.dim(*p)));
        }
        let r_v = vt.incoming_rank();
        grouped_party_dims.push(r_v);
        let mut inv = vec![0; closure.len() + 1];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        inv[closure.len()] = closure.len();
        let data = tensor::permute(&cur, &grouped_party_dims, &inv);
        bases[v.0] = tensor::as_matrix(&data, t.dim_of(&closure), r_v);
    }
    Ok(bases)
}

/// Contracts the tensors back into a state in [`PartyId`] order.
pub fn recompose(d: &TreeDecomposition) -> Result<PureState> {
    let t = &d.tree;
    if d.tensors.len() != t.n() {
        return Err(Error::MalformedTensors("tensor count does not match the tree".into()));
    }
    let bases = build_bases(t, &d.tensors)?;
    let root = t.root();
    let all = t.descendants_closure(root)?;
    let col = bases[root.0].column(0).iter().copied().collect::<Vec<_>>();
    let dims_bfs: Vec<usize> = all.iter().map(|p| t.dim(*p)).collect();
    let mut inv = vec![0; all.len()];
    for (i, p) in all.iter().enumerate() {
        inv[p.0] = i;
    }
    let amps = tensor::permute(&col, &dims_bfs, &inv);
    PureState::from_unnormalized(t.dims().to_vec(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{fidelity_pure, ghz_state, w_state, NamedState};

    #[test]
    fn ghz_line_bases_are_all_zeros_and_all_ones() {
        let t = RootedTree::line(&[2; 4]).unwrap();
        let d = decompose(&ghz_state(4), &t, &Config::default()).unwrap();
        assert_eq!(d.ranks(), vec![2, 2, 2]);
        for e in t.edges() {
            let w = &d.bases[e.child.0];
            let last = w.nrows() - 1;
            // columns are {|0..0>, |1..1>} in some order
            let mut hits = [false; 2];
            for j in 0..2 {
                if (w[(0, j)].norm() - 1.0).abs() < 1e-12 {
                    hits[0] = true;
                }
                if (w[(last, j)].norm() - 1.0).abs() < 1e-12 {
                    hits[1] = true;
                }
            }
            assert_eq!(hits, [true, true]);
        }
    }

    #[test]
    fn product_state_has_unit_ranks_and_unimodular_betas() {
        let t = RootedTree::star(&[2, 3, 2, 2]).unwrap();
        let s = NamedState::Product.build(&[2, 3, 2, 2]).unwrap();
        let d = decompose(&s, &t, &Config::default()).unwrap();
        assert!(d.ranks().iter().all(|&r| r == 1));
        for vt in &d.tensors {
            let nz = vt.alpha.iter().filter(|a| **a > 1e-12).count();
            assert_eq!(nz, 1);
            for (l, a) in vt.alpha.iter().enumerate() {
                if *a > 1e-12 {
                    assert!((vt.beta[l].norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn w4_line_matches_hand_expansion() {
        // across e_1 the larger coefficient sqrt(3/4) pairs |0> with W_3 on D'_{v_2},
        // so w_0 = W_3, w_1 = |000> and T_{0,0} = sqrt(3)/2, T_{1,1} = 1/2 up to phase
        let t = RootedTree::line(&[2; 4]).unwrap();
        let d = decompose(&w_state(4), &t, &Config::default()).unwrap();
        let root = d.tensor(PartyId(0));
        assert_eq!(root.shape, vec![2, 2, 1]);
        let mags: Vec<f64> = root.data.iter().map(|z| z.norm()).collect();
        let want = [0.75f64.sqrt(), 0.0, 0.0, 0.5];
        for (m, w) in mags.iter().zip(want) {
            assert!((m - w).abs() < 1e-12, "{mags:?}");
        }
        assert!((root.alpha[0] - want[0]).abs() < 1e-12 && (root.alpha[1] - 0.5).abs() < 1e-12);
        let leaf = d.tensor(PartyId(3));
        assert_eq!(leaf.shape, vec![2, 2]);
    }

    #[test]
    fn round_trips() {
        let cfg = Config::default();
        let t = RootedTree::line(&[2; 4]).unwrap();
        let back = recompose(&decompose(&w_state(4), &t, &cfg).unwrap()).unwrap();
        assert!(fidelity_pure(&back, &w_state(4)).unwrap() > 1.0 - 1e-12);

        let dims = [2, 3, 2, 3];
        let s = NamedState::Random(7).build(&dims).unwrap();
        let star = RootedTree::star(&dims).unwrap();
        let d = decompose(&s, &star, &cfg).unwrap();
        assert!(fidelity_pure(&recompose(&d).unwrap(), &s).unwrap() > 1.0 - 1e-12);
        assert!(d.max_orthogonality_deviation() < 1e-9);

        let single = RootedTree::line(&[3]).unwrap();
        let s1 = NamedState::Random(2).build(&[3]).unwrap();
        let d1 = decompose(&s1, &single, &cfg).unwrap();
        assert!(d1.ranks().is_empty());
        assert!(fidelity_pure(&recompose(&d1).unwrap(), &s1).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn from_vertex_tensors_matches_decompose() {
        let cfg = Config::default();
        let dims = [3, 2, 2, 3, 2];
        let t = RootedTree::random(&dims, 3).unwrap();
        let s = NamedState::Random(1).build(&dims).unwrap();
        let d = decompose(&s, &t, &cfg).unwrap();
        let raw = d.tensors.iter().map(|v| (v.shape.clone(), v.data.clone())).collect();
        let d2 = from_vertex_tensors(&t, raw).unwrap();
        assert!(fidelity_pure(&recompose(&d2).unwrap(), &s).unwrap() > 1.0 - 1e-12);
        for v in 0..5 {
            assert!((&d.bases[v] - &d2.bases[v]).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_malformed_tensors() {
        let t = RootedTree::line(&[2, 2]).unwrap();
        let one = C64::new(1.0, 0.0);
        let bad = vec![(vec![2, 2, 1], vec![one; 4]), (vec![2, 3], vec![one; 6])];
        assert!(matches!(from_vertex_tensors(&t, bad), Err(Error::MalformedTensors(_))));
        let short = vec![(vec![2, 2, 1], vec![one; 3]), (vec![2, 2], vec![one; 4])];
        assert!(matches!(from_vertex_tensors(&t, short), Err(Error::MalformedTensors(_))));
    }
}
