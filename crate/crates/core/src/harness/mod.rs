//! Matches, tournaments, exhaustive adversaries and the self-check suite.

mod adversary;
mod experiment;
mod matches;
mod verify;

pub use adversary::{exhaustive_adversary, AdversaryOptions, AdversaryReport, Seat};
pub use experiment::{
    rows_to_csv, run_experiment, start_position, with_thread_pool, ExperimentConfig, ExperimentMetadata,
    ExperimentOutput, ResultRow, StartKind, CSV_COLUMNS, THREADS_ENV,
};
pub use matches::{play_match, replay, Forfeit, MatchRecord, MoveRecord, RNG_NAME};
pub use verify::{all_positions, verify_suite, verify_suite_with, CheckResult, Oracles, Scale, VerifyReport};
