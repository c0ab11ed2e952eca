//! Confidence schedules, adversaries and the consensus update engine.

mod adversary;
mod decompose;
mod engine;
mod schedule;

pub use adversary::AdversaryStrategy;
pub use decompose::{decompose_contributions, transition_matrices, Contributions, TransitionMatrices};
pub use engine::{nom_step, res_step, run_protocol, RoundWeights, RunOptions, Trajectory};
pub use schedule::ConfidenceSchedule;

pub(crate) use engine::{edge_streams, spread};
