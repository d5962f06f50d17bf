use serde::{Deserialize, Serialize};

use super::transform::{remainder, Remainder, MAX_TERMS};
use super::{MalthusError, MalthusianSolution, OffspringDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeKind {
    Alive,
    Born,
}

/// Limiting degree proportions `p_k` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub kind: DegreeKind,
    pub probs: Vec<f64>,
    /// Mass beyond `k_max`.
    pub tail_mass: f64,
    /// Certified bound on the error of every entry and of `tail_mass`.
    pub error_bound: f64,
}

/// With `a_k = P(D >= k) L_k(lambda*) = prod_{i<k} b(i)/(lambda* + b(i) + d(i))`
/// and `s_k = b(k) + d(k)`:
///
/// * alive: `chi_{k,a} = P(D>=k) (L_k - L_{k+1}) / lambda* = a_k / (lambda* + s_k)`,
///   normalised by its sum over `k`;
/// * born: `lambda* chi_{k,b} = a_k (d(k) + lambda* b(k)/(lambda* + s_k)) / s_k`,
///   which simplifies to `a_k - a_{k+1}`, so the mass beyond `k_max` is
///   exactly `a_{k_max+1}`.
pub fn limiting_degree_distribution(
    sol: &MalthusianSolution,
    dist: &OffspringDistribution<'_>,
    kind: DegreeKind,
    k_max: usize,
    tol: f64,
) -> Result<DegreeDistribution, MalthusError> {
    let seqs = dist.seqs();
    let model = seqs.model();
    let lambda = sol.lambda_star;
    let log_ratio = |k: usize| {
        let b = model.birth(k);
        (b / (lambda + b + model.death(k))).ln()
    };

    if kind == DegreeKind::Born {
        let mut probs = Vec::with_capacity(k_max + 1);
        let mut log_a = 0.0f64;
        for k in 0..=k_max {
            let (b, d) = (model.birth(k), model.death(k));
            probs.push(log_a.exp() * (lambda + d) / (lambda + b + d));
            log_a += log_ratio(k);
        }
        return Ok(DegreeDistribution {
            kind,
            probs,
            tail_mass: log_a.exp(),
            error_bound: 16.0 * f64::EPSILON * (k_max as f64 + 1.0),
        });
    }

    let bf = &model.birth_sequence().family;
    let df = &model.death_sequence().family;
    let tail_start = model.tail_start();
    let mut probs = Vec::with_capacity(k_max + 1);
    let mut log_a = 0.0f64;
    // Neumaier summation
    let (mut total, mut comp) = (0.0f64, 0.0f64);
    let mut k = 0usize;
    let rest_bound = loop {
        let w = log_a.exp() / (lambda + model.total(k));
        if k <= k_max {
            probs.push(w);
        }
        let t = total + w;
        comp += if total >= w { (total - t) + w } else { (w - t) + total };
        total = t;
        log_a += log_ratio(k);
        k += 1;
        if k > k_max && k >= tail_start && k.is_power_of_two() {
            // weights beyond k are at most a_n / (lambda + inf_{n>=k} s_n)
            let s_lo = bf.tail_inf(k).unwrap_or(0.0) + df.tail_inf(k).unwrap_or(0.0);
            let coef = 1.0 / (lambda + s_lo);
            match remainder(seqs, lambda, k, log_a.exp()) {
                Remainder::Within { hi, .. } if coef * hi <= tol => break coef * hi,
                _ => {}
            }
        }
        if k >= MAX_TERMS {
            return Err(MalthusError::Uncertified);
        }
    };

    let norm = total + comp + 0.5 * rest_bound;
    for p in &mut probs {
        *p /= norm;
    }
    let kept: f64 = probs.iter().sum();
    Ok(DegreeDistribution {
        kind,
        probs,
        tail_mass: (1.0 - kept).max(0.0),
        error_bound: rest_bound / norm,
    })
}
