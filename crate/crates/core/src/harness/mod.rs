//! Verification and validation: shot sizing, distribution tests,
//! cross-engine comparison, classical result validators and test suites.

mod stats;
mod suite;
mod validate;
mod verify;

pub use stats::{
    chernoff_shots, compare_distributions, compare_samples, empirical, total_variation, DistributionVerdict,
    RepetitionPlan, Verdict, DEFAULT_ALPHA, MIN_EXPECTED_COUNT,
};
pub use suite::{run_test_suite, run_test_suite_str, CaseReport, CheckReport, SuiteReport};
pub use validate::{validate_grover, validate_shor_factors, ValidationOutcome};
pub use verify::{cross_engine_verify, CrossEngineReport, EngineRun, PairComparison};

use crate::sim::SimError;
use crate::state::StateError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("no observations")]
    EmptyObservation,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("suite error at {location}: {message}")]
    SuiteParse { location: String, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    State(#[from] StateError),
}
