//! Scenarios, seeded Monte Carlo ensembles and empirical checks of the
//! analytic bounds.

mod classification;
mod ensemble;
mod scenario;
mod validate;

pub use classification::{simulate_classification, ClassificationEnsemble, MisclassificationCounts};
pub use ensemble::{
    compare_with_window_baseline, run_ensemble, sweep, EnsembleReport, EnsembleSummary, TrialSummary, WindowComparison,
    CONSENSUS_TOL,
};
pub use scenario::{build_platoon_scenario, GraphSpec, PlatoonConfig, Scenario, PLATOON_SIZE};
pub use validate::{validate_bounds, BoundValidation, TailCheck};
