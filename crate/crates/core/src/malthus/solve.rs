use serde::{Deserialize, Serialize};

use super::transform::{lambda_underline, mu_hat, mu_hat_until, MuHat};
use super::MalthusError;
use crate::rates::DerivedSequences;

const MAX_ITER: usize = 200;
const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalthusianSolution {
    pub lambda_star: f64,
    pub residual: f64,
    pub lambda_underline: Option<f64>,
    pub evaluations_used: usize,
}

struct Eval<'a> {
    seqs: &'a DerivedSequences,
    tol: f64,
    count: usize,
}

impl Eval<'_> {
    fn above_one(&mut self, lambda: f64) -> Option<bool> {
        self.count += 1;
        mu_hat_until(self.seqs, lambda, self.tol, 1.0).exceeds(1.0)
    }

    fn full(&mut self, lambda: f64) -> MuHat {
        self.count += 1;
        mu_hat(self.seqs, lambda, self.tol)
    }
}

/// Solves `mu_hat(lambda*) = 1` by bisection on the decreasing map
/// `lambda -> mu_hat(lambda)`.
pub fn solve_malthusian(seqs: &DerivedSequences, tol: f64) -> Result<MalthusianSolution, MalthusError> {
    let underline = lambda_underline(seqs);
    if underline.is_none() {
        log::warn!("lambda_underline unknown; skipping the lambda* > lambda_underline check");
    }
    let mut ev = Eval {
        seqs,
        tol: (tol * 1e-3).max(1e-15),
        count: 0,
    };

    let floor = underline.unwrap_or(0.0);
    let mut lo = floor;
    let mut hi = if floor > 0.0 { 2.0 * floor } else { 1.0 };
    let mut certified_somewhere = false;
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        match ev.above_one(hi) {
            Some(true) => {
                certified_somewhere = true;
                lo = hi;
                hi *= 2.0;
            }
            Some(false) => {
                certified_somewhere = true;
                found = true;
                break;
            }
            None => hi *= 2.0,
        }
    }
    if !found {
        return Err(if certified_somewhere {
            MalthusError::Subcritical
        } else {
            MalthusError::NoBracket
        });
    }
    if lo == floor {
        // mu_hat at the abscissa may be undecidable; walk up towards hi
        let mut probe = lo;
        let mut gap = hi - lo;
        loop {
            match ev.above_one(probe) {
                Some(true) => {
                    lo = probe;
                    break;
                }
                Some(false) if probe == floor => return Err(MalthusError::Subcritical),
                Some(false) => hi = probe,
                None => {}
            }
            gap *= 0.5;
            if gap <= 1e-9 * hi {
                return Err(MalthusError::NoBracket);
            }
            probe = floor + gap;
        }
    }

    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match ev.above_one(mid) {
            Some(true) => lo = mid,
            Some(false) => hi = mid,
            None => return Err(MalthusError::NoBracket),
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let lambda_star = 0.5 * (lo + hi);
    let residual = match ev.full(lambda_star) {
        MuHat::Finite { value, .. } => (value - 1.0).abs(),
        _ => return Err(MalthusError::NoBracket),
    };
    if residual > tol {
        return Err(MalthusError::NoBracket);
    }
    if let Some(u) = underline {
        assert!(
            lambda_star > u,
            "lambda* = {lambda_star} must exceed lambda_underline = {u}"
        );
    }
    Ok(MalthusianSolution {
        lambda_star,
        residual,
        lambda_underline: underline,
        evaluations_used: ev.count,
    })
}
