//! Dense mixed-radix tensor helpers. Axis 0 is the most significant digit.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Reorders tensor axes: output axis `i` is input axis `perm[i]`.
pub fn permute(data: &[C64], dims: &[usize], perm: &[usize]) -> Vec<C64> {
    debug_assert_eq!(dims.len(), perm.len());
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return data.to_vec();
    }
    let in_strides = strides(dims);
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mapped: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = Vec::with_capacity(data.len());
    let mut digits = vec![0usize; dims.len()];
    let mut src = 0usize;
    for _ in 0..data.len() {
        out.push(data[src]);
        // odometer increment over output digits, tracking the source offset
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            src += mapped[k];
            if digits[k] < out_dims[k] {
                break;
            }
            src -= mapped[k] * out_dims[k];
            digits[k] = 0;
        }
    }
    out
}

/// Applies `mat` (shape `new_dim x dims[axis]`) to one axis of a tensor.
pub fn apply_axis(data: &[C64], dims: &[usize], axis: usize, mat: &DMatrix<C64>) -> (Vec<C64>, Vec<usize>) {
    debug_assert_eq!(mat.ncols(), dims[axis]);
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let (old, new) = (dims[axis], mat.nrows());
    let mut out = vec![C64::new(0.0, 0.0); outer * new * inner];
    for o in 0..outer {
        for j in 0..old {
            let src = &data[(o * old + j) * inner..(o * old + j + 1) * inner];
            for i in 0..new {
                let m = mat[(i, j)];
                if m == C64::new(0.0, 0.0) {
                    continue;
                }
                let dst = &mut out[(o * new + i) * inner..(o * new + i + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    let mut out_dims = dims.to_vec();
    out_dims[axis] = new;
    (out, out_dims)
}

/// Row-major `rows x cols` slice as a matrix.
pub fn as_matrix(data: &[C64], rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Matrix entries in row-major order.
pub fn to_row_major(m: &DMatrix<C64>) -> Vec<C64> {
    m.transpose().as_slice().to_vec()
}

/// Kronecker product of two vectors, `a` most significant.
pub fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Index-walk oracle: decode every input index digit by digit.
    fn permute_by_walk(data: &[C64], dims: &[usize], perm: &[usize]) -> Vec<C64> {
        let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let mut out = vec![C64::new(0.0, 0.0); data.len()];
        for (idx, &val) in data.iter().enumerate() {
            let mut digits = vec![0; dims.len()];
            let mut rem = idx;
            for k in (0..dims.len()).rev() {
                digits[k] = rem % dims[k];
                rem /= dims[k];
            }
            let mut o = 0;
            for (i, &p) in perm.iter().enumerate() {
                o = o * out_dims[i] + digits[p];
            }
            out[o] = val;
        }
        out
    }

    #[test]
    fn permute_matches_index_walk() {
        let dims = [2, 3, 1, 4, 2];
        let data: Vec<C64> = (0..48).map(|k| C64::new(k as f64, -(k as f64) / 3.0)).collect();
        for perm in [[4, 3, 2, 1, 0], [1, 0, 3, 4, 2], [0, 1, 2, 3, 4], [3, 1, 4, 0, 2]] {
            assert_eq!(permute(&data, &dims, &perm), permute_by_walk(&data, &dims, &perm));
        }
    }

    #[test]
    fn apply_axis_matches_dense_kron() {
        let dims = [2, 3, 2];
        let data: Vec<C64> = (0..12).map(|k| C64::new(k as f64, 1.0)).collect();
        let m = DMatrix::from_fn(4, 3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let (out, out_dims) = apply_axis(&data, &dims, 1, &m);
        assert_eq!(out_dims, vec![2, 4, 2]);
        let full = DMatrix::<C64>::identity(2, 2).kronecker(&m).kronecker(&DMatrix::identity(2, 2));
        let v = nalgebra::DVector::from_column_slice(&data);
        let expect = full * v;
        for (a, b) in out.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
