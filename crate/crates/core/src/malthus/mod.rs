//! The analytic side: Laplace transform of the offspring process, the
//! Malthusian parameter, the offspring law and limiting degree
//! distributions, and predicted limit constants.

mod degree;
mod offspring;
mod predict;
mod solve;
mod transform;

use thiserror::Error;

use crate::rates::RatesError;

pub use degree::{limiting_degree_distribution, DegreeDistribution, DegreeKind};
pub use offspring::{DtailReport, OffspringDistribution};
pub use predict::{predicted_constants, LimitTheorem, PredictedAsymptotics, SecondOrder};
pub use solve::{solve_malthusian, MalthusianSolution};
pub use transform::{lambda_underline, mu_hat, mu_hat_until, MuHat, MAX_TERMS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MalthusError {
    #[error("mu_hat stays below one wherever it is finite")]
    Subcritical,
    #[error("could not bracket mu_hat(lambda) = 1 with certified evaluations")]
    NoBracket,
    #[error("tail bound violated at k = {k}: {lhs} > {rhs}")]
    BoundViolated { k: usize, lhs: f64, rhs: f64 },
    #[error("series tail could not be certified")]
    Uncertified,
    #[error("centering needs r(t): K_alpha does not converge")]
    MissingR,
    #[error("regime metadata insufficient for this prediction")]
    NotApplicable,
    #[error(transparent)]
    Rates(#[from] RatesError),
}
