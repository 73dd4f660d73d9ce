use serde::{Deserialize, Serialize};

/// Environment variable overriding [`Config::dim_cap`].
pub const DIM_CAP_ENV: &str = "TREECOST_DIM_CAP";

/// Numerical tolerances and size limits shared by every pipeline stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Singular values below `rank_tol * s_max` are treated as zero.
    pub rank_tol: f64,
    /// Required fidelity deficit `1 - F` for a branch to count as exact.
    pub fidelity_tol: f64,
    /// Branches below this probability are pruned during enumeration.
    pub prune_tol: f64,
    /// Allowed deviation of `sum M^dag M` from the identity.
    pub completeness_tol: f64,
    /// Largest number of amplitudes any dense state may hold.
    pub dim_cap: usize,
    /// Largest number of type classes enumerated by the spectrum entropy.
    pub type_class_cap: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            fidelity_tol: 1e-9,
            prune_tol: 1e-12,
            completeness_tol: 1e-10,
            dim_cap: 1 << 22,
            type_class_cap: 2_000_000,
        }
    }
}

impl Config {
    /// Defaults with `TREECOST_DIM_CAP` applied when it parses as an integer.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(cap) = std::env::var(DIM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            cfg.dim_cap = cap;
        }
        cfg
    }
}
