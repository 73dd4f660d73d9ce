//! Exact and finite-block-length entanglement costs per edge.

pub mod bounds;
pub mod figures;
pub mod normal;
pub mod spectrum;
pub mod thresholds;

pub use bounds::{
    approx_bounds, edge_spectrum, exact_costs, exact_edge_cost, BoundMethod, CostReport, EdgeBounds, EdgeExact,
    ExactCostReport, SmoothedEntropy,
};
pub use figures::{rate_comparison, w_second_order, RateRow, WSecondOrderRow};
pub use normal::{normal_cdf, normal_quantile, second_order, SecondOrderCoeffs};
pub use spectrum::{spectrum_entropy, Spectrum, SpectrumEntropy};
pub use thresholds::{optimize_thresholds, threshold_objective, uniform_thresholds};
