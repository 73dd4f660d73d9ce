//! Thin wrappers over nalgebra's complex SVD and Hermitian eigensolver with
//! deterministic basis choices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::tensor::C64;

/// Relative gap below which two singular values are treated as degenerate.
const DEGENERACY_TOL: f64 = 1e-9;

/// Truncated SVD `m = sum_j s_j u_j v_j^dag` with canonical bases.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Left singular vectors as columns (`rows x rank`).
    pub u: DMatrix<C64>,
    /// Singular values, descending.
    pub s: Vec<f64>,
    /// Right singular vectors as columns (`cols x rank`).
    pub v: DMatrix<C64>,
}

/// Computes the SVD of `m`, keeps singular values above `rank_tol * s_max`,
/// and canonicalizes the left vectors:
/// degenerate blocks are rotated onto a basis fixed by the spanned subspace
/// alone, and each column's largest-magnitude entry is made real positive.
pub fn canonical_svd(m: &DMatrix<C64>, rank_tol: f64) -> Svd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Svd {
            u: DMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        };
    }
    let svd = m.clone().svd(true, true);
    let u_full = svd.u.expect("left vectors requested");
    let vt_full = svd.v_t.expect("right vectors requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s_max = idx.first().map_or(0.0, |&i| svd.singular_values[i]);
    let keep: Vec<usize> = idx
        .into_iter()
        .filter(|&i| s_max > 0.0 && svd.singular_values[i] > rank_tol * s_max)
        .collect();
    let r = keep.len();
    let mut u = DMatrix::zeros(rows, r);
    let mut v = DMatrix::zeros(cols, r);
    let mut s = Vec::with_capacity(r);
    for (j, &i) in keep.iter().enumerate() {
        u.set_column(j, &u_full.column(i));
        v.set_column(j, &vt_full.row(i).adjoint());
        s.push(svd.singular_values[i]);
    }

    let mut start = 0;
    while start < r {
        let mut end = start + 1;
        while end < r && (s[start] - s[end]) <= DEGENERACY_TOL * s_max {
            end += 1;
        }
        if end - start > 1 {
            rotate_block(&mut u, &mut v, start, end);
        }
        start = end;
    }
    for j in 0..r {
        let col = u.column(j);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = col
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-9))
            .expect("nonempty column");
        let phase = col[pivot].conj() / col[pivot].norm();
        for z in u.column_mut(j).iter_mut() {
            *z *= phase;
        }
        for z in v.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    Svd { u, s, v }
}

/// Replaces columns `start..end` of `u` by a basis of their span chosen
/// greedily from projected computational basis vectors, and applies the same
/// rotation to `v` so that `u v^dag` is unchanged.
fn rotate_block(u: &mut DMatrix<C64>, v: &mut DMatrix<C64>, start: usize, end: usize) {
    let g = end - start;
    let block = u.columns(start, g).into_owned();
    // coordinates of P e_i in the block basis
    let coords: Vec<DVector<C64>> = (0..block.nrows())
        .map(|i| block.row(i).adjoint())
        .collect();
    let mut chosen: Vec<DVector<C64>> = Vec::with_capacity(g);
    for _ in 0..g {
        let residuals: Vec<DVector<C64>> = coords
            .iter()
            .map(|c| {
                let mut r = c.clone();
                for b in &chosen {
                    let overlap = b.dotc(&r);
                    r -= b * overlap;
                }
                r
            })
            .collect();
        let best = residuals.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let pick = residuals
            .iter()
            .position(|r| r.norm() >= best * (1.0 - 1e-9))
            .expect("residual available");
        chosen.push(residuals[pick].unscale(residuals[pick].norm()));
    }
    let q = DMatrix::from_columns(&chosen);
    let new_u = &block * &q;
    let new_v = v.columns(start, g) * &q;
    u.columns_mut(start, g).copy_from(&new_u);
    v.columns_mut(start, g).copy_from(&new_v);
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // symmetrize against roundoff before handing to the solver
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// Largest deviation of `q^dag q` from the identity.
pub fn isometry_deviation(q: &DMatrix<C64>) -> f64 {
    let gram = q.adjoint() * q;
    hermitian_norm(&(gram - DMatrix::identity(q.ncols(), q.ncols())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let m = DMatrix::from_fn(3, 5, |i, j| C64::new((i * j) as f64 + 0.5, (i as f64) - 0.3 * j as f64));
        let svd = canonical_svd(&m, 1e-12);
        let rebuilt = &svd.u * DMatrix::from_diagonal(&DVector::from_iterator(svd.s.len(), svd.s.iter().map(|&x| c(x)))) * svd.v.adjoint();
        assert!((rebuilt - &m).norm() < 1e-10);
        assert!(isometry_deviation(&svd.u) < 1e-12);
        assert!(isometry_deviation(&svd.v) < 1e-12);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn degenerate_block_is_rotated_to_computational_vectors() {
        // |00> + |11> scrambled by a rotation inside the degenerate block
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.0);
        m[(1, 1)] = c(1.0);
        let th: f64 = 0.37;
        let rot = DMatrix::from_row_slice(2, 2, &[c(th.cos()), c(-th.sin()), c(th.sin()), c(th.cos())]);
        let scrambled = &rot * &m * rot.transpose();
        let svd = canonical_svd(&scrambled, 1e-9);
        assert_eq!(svd.s.len(), 2);
        // basis is fixed by the span: span is the whole space, so we get e_0, e_1
        assert!((svd.u[(0, 0)] - c(1.0)).norm() < 1e-12);
        assert!((svd.u[(1, 1)] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn rank_tolerance_drops_tiny_values() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = c(1.0);
        m[(1, 1)] = c(1e-11);
        assert_eq!(canonical_svd(&m, 1e-9).s.len(), 1);
        assert_eq!(canonical_svd(&m, 1e-12).s.len(), 2);
    }
}
