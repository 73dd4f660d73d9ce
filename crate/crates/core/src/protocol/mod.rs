//! The distributed construction protocol: operators, scheduler and transcripts.

pub mod naive;
pub mod pauli;
pub mod program;
pub mod simulate;
pub mod transcript;

pub use naive::naive_distribution_cost;
pub use pauli::{generalized_pauli_x, generalized_pauli_z};
pub use program::{build_program, check_completeness, CompletenessReport, MeasurementProgram, ResourceConfig, Role};
pub use simulate::{simulate, summarize, Mode, SimOptions, SimulationSummary};
pub use transcript::{Event, Transcript};
