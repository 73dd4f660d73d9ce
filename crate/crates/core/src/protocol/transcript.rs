//! Event log of one protocol run.

use serde::Serialize;

use crate::state::PureState;

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

/// Reference into the shared decomposition standing in for a basis description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisHandle {
    /// Edge label whose Schmidt basis `{|w_l>}` is meant.
    pub edge: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Payload {
    pub x: usize,
    pub z: usize,
    /// Shift reported by the compression step on padded edges.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<usize>,
    pub basis: BasisHandle,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Compression {
        vertex: String,
        edge: usize,
        outcome: usize,
        probability: f64,
    },
    Measurement {
        vertex: String,
        /// `(x_c, z_c)` per child in BFS order.
        outcome: Vec<(usize, usize)>,
        probability: f64,
    },
    Message {
        from: String,
        to: String,
        edge: usize,
        payload: Payload,
    },
    Relabel {
        vertex: String,
        edge: usize,
        shift: usize,
    },
    Correction {
        vertex: String,
        edge: usize,
        x: usize,
        z: usize,
    },
    Isometry {
        vertex: String,
        edge: usize,
    },
}

impl Event {
    pub fn vertex(&self) -> &str {
        match self {
            Event::Compression { vertex, .. }
            | Event::Measurement { vertex, .. }
            | Event::Relabel { vertex, .. }
            | Event::Correction { vertex, .. }
            | Event::Isometry { vertex, .. } => vertex,
            Event::Message { from, .. } => from,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub events: Vec<Event>,
    /// One index per random step (compressions and measurements) in schedule order.
    pub outcomes: Vec<usize>,
    pub probability: f64,
    /// Fidelity of the final state to the supplied target, if any.
    pub fidelity: Option<f64>,
    /// Party order of `final_state`.
    pub final_registers: Vec<String>,
    #[serde(skip)]
    pub final_state: PureState,
}

impl Transcript {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
