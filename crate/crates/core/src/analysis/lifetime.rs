use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::stats::wilson_interval;
use super::AnalysisError;
use crate::par;
use crate::rates::RateModel;

/// Spacing of intermediate splitting levels.
pub const LEVEL_SPACING: f64 = 0.5;
/// Fewest survivors accepted at any level.
pub const MIN_SURVIVORS: u64 = 10;

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRate {
    pub t: f64,
    /// `log P(L > t)`.
    pub log_survival: f64,
    /// `-(1/t) log P(L > t)`.
    pub rate: f64,
    pub std_error: f64,
    /// 95% band for `rate` from per-level Wilson intervals.
    pub rate_lo: f64,
    pub rate_hi: f64,
}

/// Runs an individual with `i` children for `horizon` time units; its
/// child count at the end, or `None` if it died.
fn advance<R: Rng + ?Sized>(model: &RateModel, i: usize, horizon: f64, rng: &mut R) -> Option<usize> {
    let mut i = i;
    let mut t = 0.0;
    loop {
        let (b, d) = (model.birth(i), model.death(i));
        let e: f64 = Exp1.sample(rng);
        t += e / (b + d);
        if t > horizon {
            return Some(i);
        }
        if d > 0.0 && rng.random::<f64>() * (b + d) < d {
            return None;
        }
        i += 1;
    }
}

/// Estimates `-(1/t) log P(L > t)` at each `t` in `t_grid` by fixed-effort
/// splitting: `samples` particles are carried between levels spaced
/// [`LEVEL_SPACING`] apart, survivors are resampled uniformly, and the
/// conditional survival fractions multiply. By memorylessness a living
/// particle is fully described by its number of children.
pub fn lifetime_tail_rate<R: Rng + ?Sized>(
    model: &RateModel,
    t_grid: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<Vec<TailRate>, AnalysisError> {
    if samples == 0 || t_grid.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut targets: Vec<f64> = t_grid.to_vec();
    targets.sort_by(f64::total_cmp);
    if targets[0].is_nan() || targets[0] <= 0.0 || targets.windows(2).any(|w| w[0] == w[1]) {
        return Err(AnalysisError::EmptyInput);
    }
    let t_max = *targets.last().unwrap();
    let mut levels: Vec<f64> = (1..)
        .map(|j| j as f64 * LEVEL_SPACING)
        .take_while(|&t| t < t_max)
        .chain(targets.iter().copied())
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut particles = vec![0usize; samples];
    let (mut log_p, mut var_log, mut band) = (0.0f64, 0.0f64, 0.0f64);
    let mut prev = 0.0;
    let mut out = Vec::new();
    for &level in &levels {
        let dt = level - prev;
        let seed: u64 = rng.random();
        let alive: Vec<usize> = par::map_indexed(particles.len().div_ceil(par::BATCH) as u64, |j| {
            let mut r = par::stream_rng(seed, j);
            let lo = j as usize * par::BATCH;
            let hi = (lo + par::BATCH).min(particles.len());
            particles[lo..hi]
                .iter()
                .filter_map(|&i| advance(model, i, dt, &mut r))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
        let m = alive.len() as u64;
        if m < MIN_SURVIVORS {
            return Err(AnalysisError::InsufficientTail { t: level, survivors: m });
        }
        let n = particles.len() as u64;
        let p = m as f64 / n as f64;
        log_p += p.ln();
        var_log += (1.0 - p) / (n as f64 * p);
        let (wlo, whi) = wilson_interval(m, n, Z95);
        band += (0.5 * (whi.ln() - wlo.ln())).powi(2);
        if targets.iter().any(|t| (t - level).abs() < 1e-12) {
            out.push(TailRate {
                t: level,
                log_survival: log_p,
                rate: -log_p / level,
                std_error: var_log.sqrt() / level,
                rate_lo: (-log_p - band.sqrt()) / level,
                rate_hi: (-log_p + band.sqrt()) / level,
            });
        }
        particles = (0..samples).map(|_| alive[rng.random_range(0..alive.len())]).collect();
        prev = level;
    }
    Ok(out)
}
