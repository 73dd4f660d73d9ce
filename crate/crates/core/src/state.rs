//! Dense pure states, reduced density operators and edge-wise Schmidt data.
//!
//! Amplitudes are stored in mixed radix over the parties in [`PartyId`] order,
//! party 0 being the most significant digit. Reshapes across a tree
//! bipartition order each side by ascending BFS label.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{canonical_svd, hermitian_eigenvalues};
use crate::tensor::{self, C64};
use crate::tree::{Edge, PartyId, RootedTree};

const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        check_len(&dims, amps.len())?;
        let norm = tensor::norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { dims, amps })
    }

    /// Normalizes `amps`; fails with [`Error::ZeroNorm`] for the zero vector.
    pub fn from_unnormalized(dims: Vec<usize>, mut amps: Vec<C64>) -> Result<Self> {
        check_len(&dims, amps.len())?;
        let norm = tensor::norm(&amps);
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { dims, amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.amps.len()
    }

    /// Amplitudes with the party axes reordered: axis `i` of the result is
    /// party `order[i]`. `order` must be a permutation of all parties.
    pub fn amplitudes_in_order(&self, order: &[PartyId]) -> Vec<C64> {
        let perm: Vec<usize> = order.iter().map(|p| p.0).collect();
        tensor::permute(&self.amps, &self.dims, &perm)
    }

    /// Amplitude matrix with rows indexed by `left` and columns by `right`.
    pub fn split(&self, left: &[PartyId], right: &[PartyId]) -> Result<DMatrix<C64>> {
        self.check_partition(left, right)?;
        let order: Vec<PartyId> = left.iter().chain(right).copied().collect();
        let rows = left.iter().map(|p| self.dims[p.0]).product();
        let cols = right.iter().map(|p| self.dims[p.0]).product();
        Ok(tensor::as_matrix(&self.amplitudes_in_order(&order), rows, cols))
    }

    fn check_partition(&self, left: &[PartyId], right: &[PartyId]) -> Result<()> {
        let mut seen = vec![false; self.n_parties()];
        for p in left.iter().chain(right) {
            if p.0 >= self.n_parties() || seen[p.0] {
                return Err(Error::DimensionMismatch(format!(
                    "party {p} is out of range or repeated in the bipartition"
                )));
            }
            seen[p.0] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::DimensionMismatch(
                "bipartition does not cover every party".into(),
            ));
        }
        Ok(())
    }

    /// `tr_{complement} |psi><psi|` on the parties in `keep` (in the given order).
    pub fn reduced_state(&self, keep: &[PartyId]) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let rest: Vec<PartyId> = (0..self.n_parties())
            .map(PartyId)
            .filter(|p| !keep.contains(p))
            .collect();
        let m = self.split(keep, &rest)?;
        Ok(DensityOperator {
            matrix: &m * m.adjoint(),
            dims: keep.iter().map(|p| self.dims[p.0]).collect(),
        })
    }

    /// Schmidt decomposition across `left | right`.
    pub fn schmidt(&self, left: &[PartyId], right: &[PartyId], rank_tol: f64) -> Result<SchmidtData> {
        let m = self.split(left, right)?;
        let svd = canonical_svd(&m, rank_tol);
        let rank = svd.s.len();
        Ok(SchmidtData {
            coefficients: svd.s,
            left_basis: svd.u,
            right_basis: svd.v.map(|z| z.conj()),
            rank,
            left_parties: left.to_vec(),
            right_parties: right.to_vec(),
        })
    }

    /// `|self> (x) |other>` with `other`'s parties appended after `self`'s.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState {
            dims,
            amps: tensor::kron(&self.amps, &other.amps),
        }
    }

    /// State with parties reordered so that new party `i` is old party `order[i]`.
    pub fn permute_parties(&self, order: &[PartyId]) -> Result<PureState> {
        self.check_partition(order, &[])?;
        Ok(PureState {
            dims: order.iter().map(|p| self.dims[p.0]).collect(),
            amps: self.amplitudes_in_order(order),
        })
    }

    /// `|psi>^{(x) n}` regrouped as an N-party state: party `v` holds all `n`
    /// copies of its system in a `d_v^n` register, copy index least significant.
    pub fn n_copies(&self, n: usize, dim_cap: usize) -> Result<PureState> {
        if n == 0 {
            return Err(Error::IncompatibleDims("block length must be at least 1".into()));
        }
        let total = checked_pow(self.total_dim(), n)
            .filter(|&t| t <= dim_cap)
            .ok_or(Error::DimensionCapExceeded {
                needed: checked_pow(self.total_dim(), n).unwrap_or(usize::MAX),
                cap: dim_cap,
            })?;
        let parties = self.n_parties();
        let mut amps = vec![C64::new(1.0, 0.0)];
        for _ in 0..n {
            amps = tensor::kron(&amps, &self.amps);
        }
        debug_assert_eq!(amps.len(), total);
        let copy_major: Vec<usize> = (0..n).flat_map(|_| self.dims.iter().copied()).collect();
        // output axis (party p, copy c) sits at p * n + c; its input axis is c * N + p
        let perm: Vec<usize> = (0..parties)
            .flat_map(|p| (0..n).map(move |c| c * parties + p))
            .collect();
        let amps = tensor::permute(&amps, &copy_major, &perm);
        let dims = self.dims.iter().map(|d| d.pow(n as u32)).collect();
        Ok(PureState { dims, amps })
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(tensor::inner(&self.amps, &other.amps))
    }

    pub fn to_density(&self) -> DensityOperator {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityOperator {
            matrix: &v * v.adjoint(),
            dims: self.dims.clone(),
        }
    }
}

fn check_len(dims: &[usize], len: usize) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::IncompatibleDims("zero-dimensional party".into()));
    }
    let want: usize = dims.iter().product();
    if want != len {
        return Err(Error::DimensionMismatch(format!(
            "{len} amplitudes for dims {dims:?} (need {want})"
        )));
    }
    Ok(())
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// `|<a|b>|^2`, insensitive to global phase.
pub fn fidelity_pure(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `||a - b||_1`, the sum of absolute eigenvalues of the difference.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch(format!(
            "dims {:?} vs {:?}",
            a.dims, b.dims
        )));
    }
    Ok(hermitian_eigenvalues(&(&a.matrix - &b.matrix))
        .into_iter()
        .map(f64::abs)
        .sum())
}

/// `||a - b||_1` for pure states, `2 sqrt(1 - |<a|b>|^2)`.
pub fn trace_distance_pure(a: &PureState, b: &PureState) -> Result<f64> {
    let f = fidelity_pure(a, b)?.min(1.0);
    Ok(2.0 * (1.0 - f).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    pub matrix: DMatrix<C64>,
    pub dims: Vec<usize>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dims {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, dims })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Hermitian, unit trace and positive semidefinite within the documented tolerances.
    pub fn is_valid(&self) -> bool {
        let herm = (&self.matrix - self.matrix.adjoint()).camax() <= 1e-10;
        let tr = (self.trace() - 1.0).abs() <= 1e-9;
        herm && tr && self.eigenvalues().iter().all(|&x| x >= -1e-10)
    }
}

/// Schmidt decomposition `|psi> = sum_l sqrt(lambda_l) |w_l> (x) |wbar_l>`.
#[derive(Clone, Debug)]
pub struct SchmidtData {
    /// `sqrt(lambda_l)`, descending, only those above the rank tolerance.
    pub coefficients: Vec<f64>,
    /// `|w_l>` as columns, on the `left_parties` factor.
    pub left_basis: DMatrix<C64>,
    /// `|wbar_l>` as columns, on the `right_parties` factor.
    pub right_basis: DMatrix<C64>,
    pub rank: usize,
    pub left_parties: Vec<PartyId>,
    pub right_parties: Vec<PartyId>,
}

impl SchmidtData {
    /// Eigenvalues `lambda_l` of the reduced operator.
    pub fn lambdas(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// `sum_l sqrt(lambda_l) |w_l> (x) |wbar_l>` with parties back in id order.
    pub fn reconstruct(&self, dims: &[usize]) -> Result<PureState> {
        let rows = self.left_basis.nrows();
        let cols = self.right_basis.nrows();
        let mut m = DMatrix::<C64>::zeros(rows, cols);
        for (l, &c) in self.coefficients.iter().enumerate() {
            m += self.left_basis.column(l) * self.right_basis.column(l).transpose() * C64::new(c, 0.0);
        }
        let order: Vec<PartyId> = self.left_parties.iter().chain(&self.right_parties).copied().collect();
        let grouped_dims: Vec<usize> = order.iter().map(|p| dims[p.0]).collect();
        let data = tensor::to_row_major(&m);
        // inverse permutation: party p sits at position pos[p] in `order`
        let mut inv = vec![0; order.len()];
        for (i, p) in order.iter().enumerate() {
            inv[p.0] = i;
        }
        let amps = tensor::permute(&data, &grouped_dims, &inv);
        PureState::from_unnormalized(dims.to_vec(), amps)
    }
}

/// Schmidt decomposition across the bipartition `(D'_v, complement)` of `e`.
pub fn schmidt_wrt_edge(s: &PureState, t: &RootedTree, e: &Edge, cfg: &Config) -> Result<SchmidtData> {
    check_tree_dims(s, t)?;
    let (inside, outside) = t.bipartition(e)?;
    s.schmidt(&inside, &outside, cfg.rank_tol)
}

pub(crate) fn check_tree_dims(s: &PureState, t: &RootedTree) -> Result<()> {
    if s.dims() != t.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} vs tree dims {:?}",
            s.dims(),
            t.dims()
        )));
    }
    Ok(())
}

/// Named state families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedState {
    W,
    Ghz,
    /// Equal superposition of all qubit strings with this many ones.
    Dicke(usize),
    Bell,
    Product,
    /// Normalized standard complex Gaussian amplitudes from this seed.
    Random(u64),
}

impl NamedState {
    pub fn build(&self, dims: &[usize]) -> Result<PureState> {
        if dims.is_empty() {
            return Err(Error::IncompatibleDims("no parties".into()));
        }
        let total: usize = dims.iter().product();
        let qubits = || -> Result<()> {
            if dims.iter().all(|&d| d == 2) {
                Ok(())
            } else {
                Err(Error::IncompatibleDims(format!("{self} needs qubit parties, got {dims:?}")))
            }
        };
        let n = dims.len();
        match *self {
            NamedState::W => {
                qubits()?;
                dicke(n, 1)
            }
            NamedState::Dicke(k) => {
                qubits()?;
                if k > n {
                    return Err(Error::IncompatibleDims(format!("Dicke weight {k} on {n} qubits")));
                }
                dicke(n, k)
            }
            NamedState::Ghz => {
                qubits()?;
                let mut amps = vec![C64::new(0.0, 0.0); total];
                amps[0] = C64::new(1.0, 0.0);
                amps[total - 1] += C64::new(1.0, 0.0);
                PureState::from_unnormalized(dims.to_vec(), amps)
            }
            NamedState::Bell => {
                if dims != [2, 2] {
                    return Err(Error::IncompatibleDims(format!("Bell pair needs dims [2, 2], got {dims:?}")));
                }
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let z = C64::new(0.0, 0.0);
                PureState::new(dims.to_vec(), vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)])
            }
            NamedState::Product => {
                let mut amps = vec![C64::new(0.0, 0.0); total];
                amps[0] = C64::new(1.0, 0.0);
                PureState::new(dims.to_vec(), amps)
            }
            NamedState::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let amps = (0..total)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        C64::new(re, im)
                    })
                    .collect();
                PureState::from_unnormalized(dims.to_vec(), amps)
            }
        }
    }
}

impl fmt::Display for NamedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedState::W => write!(f, "w"),
            NamedState::Ghz => write!(f, "ghz"),
            NamedState::Dicke(k) => write!(f, "dicke{k}"),
            NamedState::Bell => write!(f, "bell"),
            NamedState::Product => write!(f, "product"),
            NamedState::Random(s) => write!(f, "random:{s}"),
        }
    }
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parsed = match lower.as_str() {
            "w" => Some(NamedState::W),
            "ghz" => Some(NamedState::Ghz),
            "bell" => Some(NamedState::Bell),
            "product" => Some(NamedState::Product),
            other => {
                if let Some(rest) = other.strip_prefix("random") {
                    let rest = rest.trim_start_matches([':', '(']).trim_end_matches(')');
                    if rest.is_empty() {
                        Some(NamedState::Random(0))
                    } else {
                        rest.parse().ok().map(NamedState::Random)
                    }
                } else if let Some(rest) = other.strip_prefix("dicke") {
                    rest.trim_start_matches([':', '('])
                        .trim_end_matches(')')
                        .parse()
                        .ok()
                        .map(NamedState::Dicke)
                } else {
                    None
                }
            }
        };
        parsed.ok_or_else(|| Error::Parse(format!("unknown state family `{s}`")))
    }
}

fn dicke(n: usize, k: usize) -> Result<PureState> {
    let total = 1usize << n;
    let amps = (0..total)
        .map(|i: usize| {
            if i.count_ones() as usize == k {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    PureState::from_unnormalized(vec![2; n], amps)
}

/// `W_N` in qubit order `v_1 ... v_N` (shorthand used throughout the tests).
pub fn w_state(n: usize) -> PureState {
    NamedState::W.build(&vec![2; n]).expect("W state on qubits")
}

pub fn ghz_state(n: usize) -> PureState {
    NamedState::Ghz.build(&vec![2; n]).expect("GHZ state on qubits")
}
