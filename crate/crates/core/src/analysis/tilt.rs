use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::par;
use crate::rates::RateModel;

const TILT_TOL: f64 = 1e-10;

/// Importance-sampling estimate of a normalised log-probability or
/// log-expectation, `phi2(k)^{-1} log E[...]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Rate shift `eta`: gap `i` is drawn from `Exp(b(i)+d(i)+eta)`.
    pub tilt: f64,
    pub samples: usize,
    pub phi1: f64,
    pub phi2: f64,
}

/// Gap rates `b(i) + d(i)` for `i < k` with their first two moments sums.
#[derive(Debug, Clone)]
pub struct GapSum {
    rates: Vec<f64>,
    phi1: f64,
    phi2: f64,
}

impl GapSum {
    pub fn new(model: &RateModel, k: usize) -> Self {
        let rates: Vec<f64> = (0..k).map(|i| model.total(i)).collect();
        let phi1 = rates.iter().map(|f| 1.0 / f).sum();
        let phi2 = rates.iter().map(|f| 1.0 / (f * f)).sum();
        GapSum { rates, phi1, phi2 }
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    pub fn k(&self) -> usize {
        self.rates.len()
    }

    fn tilted_mean(&self, eta: f64) -> f64 {
        self.rates.iter().map(|f| 1.0 / (f + eta)).sum()
    }

    /// The `eta >= 0` with tilted mean `sum 1/(f_i + eta) = target`, by
    /// bisection to `1e-10`.
    pub fn solve_tilt(&self, target: f64) -> Result<f64, AnalysisError> {
        if target.is_nan() || target <= 0.0 {
            return Err(AnalysisError::NoTilt { target });
        }
        if target >= self.phi1 {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.tilted_mean(hi) > target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(AnalysisError::NoTilt { target });
            }
        }
        while hi - lo > TILT_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.tilted_mean(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `sum log(f_i/(f_i + eta))`.
    fn log_ratio(&self, eta: f64) -> f64 {
        self.rates.iter().map(|f| (f / (f + eta)).ln()).sum()
    }

    /// One draw of `S_k` under the tilt.
    pub fn sample<R: Rng + ?Sized>(&self, eta: f64, rng: &mut R) -> f64 {
        self.rates
            .iter()
            .map(|f| {
                let e: f64 = Exp1.sample(rng);
                e / (f + eta)
            })
            .sum()
    }

    /// Estimates `E[1{S_k <= level} exp(theta (S_k - shift))]` by sampling
    /// under tilt `eta` and weighting by the likelihood ratio
    /// `prod f/(f+eta) * exp(eta S_k)`. Returns the log-estimate and its
    /// delta-method standard error.
    pub fn log_expectation<R: Rng + ?Sized>(
        &self,
        level: f64,
        theta: f64,
        shift: f64,
        eta: f64,
        samples: usize,
        rng: &mut R,
    ) -> (f64, f64) {
        let base = self.log_ratio(eta);
        let seed: u64 = rng.random();
        // weights are scaled by exp(-c) to stay in range
        let c = base + eta * level + theta * (level - shift);
        let parts = par::map_batches(samples, seed, |n, rng| {
            let (mut s1, mut s2) = (0.0f64, 0.0f64);
            for _ in 0..n {
                let s = self.sample(eta, rng);
                if s <= level {
                    let w = (base + eta * s + theta * (s - shift) - c).exp();
                    s1 += w;
                    s2 += w * w;
                }
            }
            (s1, s2)
        });
        let (s1, s2) = parts.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let n = samples as f64;
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        let se = (var / n).sqrt() / mean;
        (mean.ln() + c, se)
    }
}

fn tilted(
    model: &RateModel,
    k: usize,
    z: f64,
    y: f64,
    theta: f64,
    samples: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<TiltedEstimate, AnalysisError> {
    if samples < 2 {
        return Err(AnalysisError::EmptyInput);
    }
    let g = GapSum::new(model, k);
    let level = g.phi1 - z * g.phi2;
    let eta = g.solve_tilt(level)?;
    let shift = g.phi1 - y * g.phi2;
    let (log_e, se) = g.log_expectation(level, theta, shift, eta, samples, rng);
    if !log_e.is_finite() {
        return Err(AnalysisError::InsufficientTail { t: level, survivors: 0 });
    }
    Ok(TiltedEstimate {
        estimate: log_e / g.phi2,
        std_error: se / g.phi2,
        tilt: eta,
        samples,
        phi1: g.phi1,
        phi2: g.phi2,
    })
}

/// `phi2(k)^{-1} log P(S_k - phi1(k) <= -z phi2(k))` by exponential tilting.
pub fn mdp_estimate<R: Rng + ?Sized>(
    model: &RateModel,
    k: usize,
    z: f64,
    samples: usize,
    rng: &mut R,
) -> Result<TiltedEstimate, AnalysisError> {
    tilted(model, k, z, 0.0, 0.0, samples, rng)
}

/// `phi2(k)^{-1} log E[1{S_k <= phi1 - z phi2} exp(theta (S_k - (phi1 - y phi2)))]`.
pub fn tilted_expectation_estimate<R: Rng + ?Sized>(
    model: &RateModel,
    k: usize,
    z: f64,
    y: f64,
    theta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<TiltedEstimate, AnalysisError> {
    tilted(model, k, z, y, theta, samples, rng)
}

/// Smallest `k` with `phi2(k) >= target`, scanning up to `k_max`.
pub fn index_for_phi2(model: &RateModel, target: f64, k_max: usize) -> Option<usize> {
    let mut acc = 0.0;
    for i in 0..k_max {
        if acc >= target {
            return Some(i);
        }
        let f = model.total(i);
        acc += 1.0 / (f * f);
    }
    (acc >= target).then_some(k_max)
}
