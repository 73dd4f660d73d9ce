//! Generalized Pauli (Heisenberg-Weyl) operators on `C^d`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::C64;

fn check(d: usize, k: usize) -> Result<()> {
    if d == 0 || k >= d {
        return Err(Error::OutOfRangeIndex { index: k, dim: d });
    }
    Ok(())
}

/// `X(x)|l> = |l + x mod d>`.
pub fn generalized_pauli_x(d: usize, x: usize) -> Result<DMatrix<C64>> {
    check(d, x)?;
    let mut m = DMatrix::zeros(d, d);
    for l in 0..d {
        m[((l + x) % d, l)] = C64::new(1.0, 0.0);
    }
    Ok(m)
}

/// `Z(z)|l> = exp(2 pi i z l / d)|l>`.
pub fn generalized_pauli_z(d: usize, z: usize) -> Result<DMatrix<C64>> {
    check(d, z)?;
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |l, _| root_of_unity(d, z * l))))
}

/// `exp(2 pi i k / d)`, reducing `k` first so large exponents stay exact.
pub fn root_of_unity(d: usize, k: usize) -> C64 {
    let k = k % d;
    if k == 0 {
        return C64::new(1.0, 0.0);
    }
    C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / d as f64)
}

/// Child-side correction `Z(-z) X(x)` undoing an outcome `(x, z)` of the parent.
pub fn correction(d: usize, x: usize, z: usize) -> Result<DMatrix<C64>> {
    let zi = generalized_pauli_z(d, (d - z % d) % d)?;
    Ok(zi * generalized_pauli_x(d, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::isometry_deviation;

    fn ket(d: usize, k: usize) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(d);
        v[k] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn definitions() {
        assert_eq!(generalized_pauli_x(2, 1).unwrap() * ket(2, 0), ket(2, 1));
        let z = generalized_pauli_z(3, 1).unwrap() * ket(3, 2);
        let want = C64::from_polar(1.0, 4.0 * std::f64::consts::PI / 3.0);
        assert!((z[2] - want).norm() < 1e-15);
        for d in 1..5 {
            let id = DMatrix::<C64>::identity(d, d);
            assert_eq!(generalized_pauli_x(d, 0).unwrap(), id);
            assert_eq!(generalized_pauli_z(d, 0).unwrap(), id);
        }
        assert!(matches!(generalized_pauli_x(3, 3), Err(Error::OutOfRangeIndex { index: 3, dim: 3 })));
        assert!(generalized_pauli_z(0, 0).is_err());
    }

    #[test]
    fn unitary_and_weyl_commutation() {
        for d in 2..6 {
            let x = generalized_pauli_x(d, 1).unwrap();
            let z = generalized_pauli_z(d, 1).unwrap();
            assert!(isometry_deviation(&x) < 1e-14 && isometry_deviation(&z) < 1e-14);
            // Z X = w X Z
            let lhs = &z * &x;
            let rhs = &x * &z * root_of_unity(d, 1);
            assert!((lhs - rhs).norm() < 1e-13);
            // X(-x) = X(x)^T
            for s in 0..d {
                let inv = generalized_pauli_x(d, (d - s) % d).unwrap();
                assert_eq!(inv, generalized_pauli_x(d, s).unwrap().transpose());
            }
        }
    }

    #[test]
    fn correction_undoes_transposed_twirl() {
        for d in 1..5 {
            for x in 0..d {
                for z in 0..d {
                    let zx = generalized_pauli_z(d, z).unwrap() * generalized_pauli_x(d, x).unwrap();
                    // correcting (ZX)^T leaves only a global phase
                    let prod = correction(d, x, z).unwrap() * zx.transpose();
                    let phase = prod[(0, 0)];
                    assert!((phase.norm() - 1.0).abs() < 1e-13);
                    assert!((prod - DMatrix::identity(d, d) * phase).norm() < 1e-12);
                }
            }
        }
    }
}
