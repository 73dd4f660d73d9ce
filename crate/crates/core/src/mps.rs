//! Vidal canonical form of a line-topology state by sequential SVD, and its
//! translation into per-vertex tree tensors.

use nalgebra::DMatrix;

use crate::config::Config;
use crate::decomposition::{from_vertex_tensors, TreeDecomposition};
use crate::error::{Error, Result};
use crate::linalg::canonical_svd;
use crate::state::{check_tree_dims, PureState};
use crate::tensor::{self, C64};
use crate::tree::RootedTree;

/// `psi_{i_1..i_N} = Gamma^{[1] i_1} lambda^{[1]} Gamma^{[2] i_2} ... Gamma^{[N] i_N}`.
#[derive(Clone, Debug)]
pub struct CanonicalMps {
    pub tree: RootedTree,
    /// `Gamma^{[k]}` row-major over `[chi_{k-1}, d_k, chi_k]`, sites in BFS order.
    pub gammas: Vec<Vec<C64>>,
    /// `lambda^{[k]}` for the cut after site `k`, descending.
    pub lambdas: Vec<Vec<f64>>,
    pub site_dims: Vec<usize>,
}

impl CanonicalMps {
    pub fn bond_dims(&self) -> Vec<usize> {
        self.lambdas.iter().map(Vec::len).collect()
    }

    fn bond(&self, k: usize) -> (usize, usize) {
        let left = if k == 0 { 1 } else { self.lambdas[k - 1].len() };
        let right = self.lambdas.get(k).map_or(1, Vec::len);
        (left, right)
    }

    /// Full contraction back to a state in [`PartyId`] order.
    pub fn contract(&self) -> Result<PureState> {
        let n = self.site_dims.len();
        // running tensor over [i_1..i_k, a_k], row-major
        let mut cur = vec![C64::new(1.0, 0.0)];
        let mut width = 1;
        for k in 0..n {
            let (chi_l, chi_r) = self.bond(k);
            let d = self.site_dims[k];
            if chi_l != width || self.gammas[k].len() != chi_l * d * chi_r {
                return Err(Error::MalformedTensors(format!("site {} has inconsistent bonds", k + 1)));
            }
            let rows = cur.len() / width;
            let mut next = vec![C64::new(0.0, 0.0); rows * d * chi_r];
            for r in 0..rows {
                for a in 0..chi_l {
                    let c = cur[r * width + a];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for i in 0..d {
                        for b in 0..chi_r {
                            let lam = if k + 1 < n { self.lambdas[k][b] } else { 1.0 };
                            next[(r * d + i) * chi_r + b] += c * self.gammas[k][(a * d + i) * chi_r + b] * lam;
                        }
                    }
                }
            }
            cur = next;
            width = chi_r;
        }
        let bfs = self.tree.bfs_order();
        let mut inv = vec![0; n];
        for (i, p) in bfs.iter().enumerate() {
            inv[p.0] = i;
        }
        let amps = tensor::permute(&cur, &self.site_dims, &inv);
        PureState::from_unnormalized(self.tree.dims().to_vec(), amps)
    }
}

/// Sequential Schmidt decompositions along a line rooted at one end.
pub fn mps_canonical_form(s: &PureState, t: &RootedTree, cfg: &Config) -> Result<CanonicalMps> {
    if !t.is_line_from_root() {
        return Err(Error::NotALine);
    }
    check_tree_dims(s, t)?;
    let order = t.bfs_order().to_vec();
    let site_dims: Vec<usize> = order.iter().map(|p| t.dim(*p)).collect();
    let n = order.len();
    let mut gammas = Vec::with_capacity(n);
    let mut lambdas: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    let mut rem = s.amplitudes_in_order(&order);
    let mut chi = 1usize;
    for k in 0..n.saturating_sub(1) {
        let d = site_dims[k];
        let cols = rem.len() / (chi * d);
        let m = tensor::as_matrix(&rem, chi * d, cols);
        let svd = canonical_svd(&m, cfg.rank_tol);
        let r = svd.s.len();
        let mut g = vec![C64::new(0.0, 0.0); chi * d * r];
        for a in 0..chi {
            let scale = if k == 0 { 1.0 } else { lambdas[k - 1][a] };
            for i in 0..d {
                for b in 0..r {
                    g[(a * d + i) * r + b] = svd.u[(a * d + i, b)] / scale;
                }
            }
        }
        gammas.push(g);
        // remainder diag(s) V^dag, row-major over [chi_k, rest]
        let sv = DMatrix::from_fn(r, cols, |b, j| svd.v[(j, b)].conj() * svd.s[b]);
        rem = tensor::to_row_major(&sv);
        lambdas.push(svd.s);
        chi = r;
    }
    let d = site_dims[n - 1];
    let mut g = vec![C64::new(0.0, 0.0); chi * d];
    for a in 0..chi {
        let scale = if n == 1 { 1.0 } else { lambdas[n - 2][a] };
        for i in 0..d {
            g[a * d + i] = rem[a * d + i] / scale;
        }
    }
    gammas.push(g);
    Ok(CanonicalMps { tree: t.clone(), gammas, lambdas, site_dims })
}

/// Tree tensors `T^{v_k}_{l, l_{k+1}, l_k} = Gamma^{[k] l}_{l_k l_{k+1}} lambda^{[k]}_{l_{k+1}}`.
pub fn decomposition_from_mps(m: &CanonicalMps) -> Result<TreeDecomposition> {
    let t = &m.tree;
    let n = m.site_dims.len();
    if m.gammas.len() != n || m.lambdas.len() + 1 != n {
        return Err(Error::MalformedTensors("site and bond counts disagree".into()));
    }
    let mut raw: Vec<(Vec<usize>, Vec<C64>)> = vec![(Vec::new(), Vec::new()); n];
    for (k, &v) in t.bfs_order().iter().enumerate() {
        let (chi_l, chi_r) = m.bond(k);
        let d = m.site_dims[k];
        let g = &m.gammas[k];
        if g.len() != chi_l * d * chi_r {
            return Err(Error::MalformedTensors(format!("site {} has {} entries", k + 1, g.len())));
        }
        let leaf = k + 1 == n;
        let shape = if leaf { vec![d, chi_l] } else { vec![d, chi_r, chi_l] };
        let mut data = vec![C64::new(0.0, 0.0); g.len()];
        for a in 0..chi_l {
            for i in 0..d {
                for b in 0..chi_r {
                    let lam = if leaf { 1.0 } else { m.lambdas[k][b] };
                    let val = g[(a * d + i) * chi_r + b] * lam;
                    if leaf {
                        data[i * chi_l + a] = val;
                    } else {
                        data[(i * chi_r + b) * chi_l + a] = val;
                    }
                }
            }
        }
        raw[v.0] = (shape, data);
    }
    from_vertex_tensors(t, raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::recompose;
    use crate::state::{fidelity_pure, ghz_state, w_state, NamedState};

    #[test]
    fn w4_first_bond_and_round_trip() {
        let t = RootedTree::line(&[2; 4]).unwrap();
        let m = mps_canonical_form(&w_state(4), &t, &Config::default()).unwrap();
        assert!((m.lambdas[0][0] - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((m.lambdas[0][1] - 0.5).abs() < 1e-12);
        assert!(fidelity_pure(&m.contract().unwrap(), &w_state(4)).unwrap() > 1.0 - 1e-12);
        let d = decomposition_from_mps(&m).unwrap();
        assert!(fidelity_pure(&recompose(&d).unwrap(), &w_state(4)).unwrap() > 1.0 - 1e-12);
        assert!(d.max_orthogonality_deviation() < 1e-9);
    }

    #[test]
    fn ghz_and_product_bonds() {
        let t = RootedTree::line(&[2; 5]).unwrap();
        let m = mps_canonical_form(&ghz_state(5), &t, &Config::default()).unwrap();
        for lam in &m.lambdas {
            assert_eq!(lam.len(), 2);
            assert!(lam.iter().all(|x| (x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12));
        }
        let p = NamedState::Product.build(&[3, 2, 2]).unwrap();
        let tp = RootedTree::line(&[3, 2, 2]).unwrap();
        let mp = mps_canonical_form(&p, &tp, &Config::default()).unwrap();
        assert_eq!(mp.bond_dims(), vec![1, 1]);
        assert!(decomposition_from_mps(&mp).unwrap().ranks().iter().all(|&r| r == 1));
    }

    #[test]
    fn rejects_non_lines() {
        let t = RootedTree::star(&[2; 4]).unwrap();
        assert!(matches!(
            mps_canonical_form(&w_state(4), &t, &Config::default()),
            Err(Error::NotALine)
        ));
    }

    #[test]
    fn random_line_with_reversed_root() {
        let dims = [2, 3, 3, 2, 3];
        let t = RootedTree::line(&dims).unwrap().reroot(crate::tree::PartyId(4)).unwrap();
        let s = NamedState::Random(21).build(&dims).unwrap();
        let m = mps_canonical_form(&s, &t, &Config::default()).unwrap();
        assert!(fidelity_pure(&m.contract().unwrap(), &s).unwrap() > 1.0 - 1e-12);
        let d = decomposition_from_mps(&m).unwrap();
        assert!(fidelity_pure(&recompose(&d).unwrap(), &s).unwrap() > 1.0 - 1e-9);
        assert_eq!(d.ranks(), m.bond_dims());
    }
}
