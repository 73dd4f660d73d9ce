//! Entanglement costs of multipartite pure states over tree-shaped quantum
//! networks, and an end-to-end simulator for the distributed LOCC protocol
//! that builds such states from one maximally entangled pair per edge.

pub mod approx;
pub mod config;
pub mod cost;
pub mod decomposition;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mps;
pub mod protocol;
pub mod state;
pub mod tensor;
pub mod tree;
pub mod verify;

pub use config::Config;
pub use error::{Error, Result};
pub use state::{DensityOperator, NamedState, PureState, SchmidtData};
pub use tree::{Edge, PartyId, RootedTree};
