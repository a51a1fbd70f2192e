//! Impartial-game theory, AC⁰ circuit construction and multi-frame NIM agents.
//!
//! - [`game`]: rule sets, move generation, Grundy values.
//! - [`nimber`]: NIM sums, winning moves, the local nimber difference.
//! - [`circuit`]: circuit IR, evaluator, text format and constant-depth builders.
//! - [`models`]: constant-precision threshold networks and their compiler to circuits.
//! - [`agents`]: oracle, random, single-frame, multi-frame and mirroring policies.
//! - [`harness`]: matches, exhaustive adversaries, experiments and the verification suite.

pub mod agents;
pub mod circuit;
pub mod error;
pub mod game;
pub mod harness;
pub mod models;
pub mod nimber;

pub use error::{Error, Result};
pub use game::{GameMove, GameRules, Heap, Nimber, Position};
