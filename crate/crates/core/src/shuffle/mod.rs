//! The shuffling dynamics on height functions.

mod engine;
mod omega;
mod rules;

pub use engine::{evolve, evolve_coupled, evolve_with, shuffle_once, EvolveReport, StepStats, TrajectoryCsv};
pub use omega::{mark_bits, splitmix64, OmegaSource};
pub use rules::{classify, update_face, Outcome, PatternError};

