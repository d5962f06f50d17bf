//! Exact small-chain enumeration, tilted importance sampling, lifetime tail
//! rates, survival-with-degree bounds and distribution tests.

mod enumerate;
mod lifetime;
pub mod stats;
mod survdeg;
mod tilt;

use thiserror::Error;

use crate::rates::RatesError;

pub use enumerate::{enumerate_small_chain, ChainLaw, MAX_ENUMERATION_STEPS};
pub use lifetime::{lifetime_tail_rate, TailRate, LEVEL_SPACING, MIN_SURVIVORS};
pub use stats::{chi_square_law, chi_square_test, ks_test, tv_distance, ChiSquareResult, KsResult};
pub use survdeg::{survdeg_probability, SurvdegEstimate};
pub use tilt::{index_for_phi2, mdp_estimate, tilted_expectation_estimate, GapSum, TiltedEstimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("enumeration of {0} steps is too large")]
    TooLarge(usize),
    #[error("no tilt reaches the target mean {target}")]
    NoTilt { target: f64 },
    #[error("only {survivors} survivors at t = {t}")]
    InsufficientTail { t: f64, survivors: u64 },
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Rates(#[from] RatesError),
}
