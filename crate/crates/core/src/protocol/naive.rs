//! Baseline cost of a root that prepares the whole target and teleports each
//! share down a line.

use crate::error::{Error, Result};
use crate::state::{check_tree_dims, PureState};
use crate::tree::RootedTree;

/// Ebits per edge, by edge index: `e_i` carries `sum_{j > i} log2 d_{v_j}`.
pub fn naive_distribution_cost(t: &RootedTree, s: &PureState) -> Result<Vec<f64>> {
    if !t.is_line_from_root() {
        return Err(Error::NotALine);
    }
    check_tree_dims(s, t)?;
    let bits: Vec<f64> = t.bfs_order().iter().map(|&v| (t.dim(v) as f64).log2()).collect();
    Ok((1..t.n()).map(|i| bits[i..].iter().sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{w_state, NamedState};

    #[test]
    fn w_line_totals_triangular_number() {
        for n in 2..9 {
            let t = RootedTree::line(&vec![2; n]).unwrap();
            let c = naive_distribution_cost(&t, &w_state(n)).unwrap();
            for (i, x) in c.iter().enumerate() {
                assert_eq!(*x, (n - 1 - i) as f64);
            }
            assert_eq!(c.iter().sum::<f64>(), (n * (n - 1) / 2) as f64);
        }
    }

    #[test]
    fn qutrits_and_non_lines() {
        let t = RootedTree::line(&[3; 3]).unwrap();
        let c = naive_distribution_cost(&t, &NamedState::Product.build(&[3; 3]).unwrap()).unwrap();
        assert!((c[0] - 2.0 * 3f64.log2()).abs() < 1e-15);
        assert!((c[1] - 3f64.log2()).abs() < 1e-15);
        let star = RootedTree::star(&[2; 4]).unwrap();
        assert!(matches!(naive_distribution_cost(&star, &w_state(4)), Err(Error::NotALine)));
    }
}
