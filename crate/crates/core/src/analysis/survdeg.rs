use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tilt::GapSum;
use super::AnalysisError;
use crate::cmj::OffspringSampler;
use crate::par;
use crate::rates::{assumption_report, DerivedSequences, RateModel, Verdict};

/// Monte Carlo estimate of `P(D >= k, S_k <= t, S_{D+1} > t')` with the
/// exponential envelopes that apply to the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvdegEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub upper: Option<f64>,
    pub upper_se: f64,
    pub lower: Option<f64>,
    pub lower_se: f64,
    /// `inf_{i>=k} d(i)`, used in the upper envelope.
    pub x_upper: Option<f64>,
    /// `sup_{i>=k} d(i)`, used in the lower envelope.
    pub x_lower: Option<f64>,
    /// Whether the estimate lies inside the envelopes up to 3 standard errors.
    pub consistent: bool,
}

fn death_inf_from(model: &RateModel, k: usize) -> Option<f64> {
    let ts = model.tail_start();
    let prefix = (k..ts).map(|i| model.death(i)).fold(f64::INFINITY, f64::min);
    Some(prefix.min(model.death_sequence().family.tail_inf(ts.max(k))?))
}

fn death_sup_from(model: &RateModel, k: usize) -> Option<f64> {
    let ts = model.tail_start();
    let prefix = (k..ts).map(|i| model.death(i)).fold(0.0, f64::max);
    Some(prefix.max(model.death_sequence().family.tail_sup(ts.max(k))?))
}

/// `E[1{S_k <= t} exp(x (S_k - t))]` with its standard error, sampling
/// `S_k` under the tilt that centres it at `t` when `t < phi1(k)`.
fn envelope_expectation<R: Rng + ?Sized>(g: &GapSum, t: f64, x: f64, samples: usize, rng: &mut R) -> (f64, f64) {
    if g.k() == 0 {
        return (1.0, 0.0);
    }
    let eta = g.solve_tilt(t).unwrap_or(0.0);
    let (log_e, se) = g.log_expectation(t, x, t, eta, samples, rng);
    let e = log_e.exp();
    (e, if se.is_finite() { e * se } else { 0.0 })
}

/// Direct Monte Carlo of the survive-with-degree event against the
/// exponential envelopes, or the `P(D = inf) P(S_k <= t)` and `P(S_k <= t)`
/// bounds when the offspring can be infinite.
pub fn survdeg_probability<R: Rng + ?Sized>(
    model: &RateModel,
    k: usize,
    t: f64,
    t_prime: f64,
    samples: usize,
    rng: &mut R,
) -> Result<SurvdegEstimate, AnalysisError> {
    if samples < 2 {
        return Err(AnalysisError::EmptyInput);
    }
    assert!(t_prime >= t && t >= 0.0, "need t' >= t >= 0");
    let seqs = DerivedSequences::new(model.clone());
    let sampler = OffspringSampler::new(&seqs);
    let seed: u64 = rng.random();
    let hits: u64 = par::map_batches(samples, seed, |n, rng| {
        (0..n)
            .filter(|_| {
                let o = crate::cmj::sample_offspring_process(&sampler, k, rng);
                let enough = o.children.is_none_or(|d| d >= k as u64);
                let s_k = if k == 0 {
                    0.0
                } else {
                    o.birth_times.get(k - 1).copied().unwrap_or(f64::INFINITY)
                };
                enough && s_k <= t && o.lifetime.is_none_or(|l| l > t_prime)
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    let n = samples as f64;
    let p = hits as f64 / n;
    let se = (p * (1.0 - p) / n).sqrt();

    let report = assumption_report(model);
    let g = GapSum::new(model, k);
    let p_dk = seqs.log_tail(k)?.exp();
    let mut est = SurvdegEstimate {
        estimate: p,
        std_error: se,
        upper: None,
        upper_se: 0.0,
        lower: None,
        lower_se: 0.0,
        x_upper: None,
        x_lower: None,
        consistent: true,
    };
    match report.finite_descendants {
        Verdict::Holds => {
            if let Some(x) = death_inf_from(model, k) {
                let (e, e_se) = envelope_expectation(&g, t, x, samples, rng);
                let f = (-x * (t_prime - t)).exp() * p_dk;
                est.x_upper = Some(x);
                est.upper = Some(f * e);
                est.upper_se = f * e_se;
            }
            if let Some(x) = death_sup_from(model, k).filter(|x| x.is_finite()) {
                let (e, e_se) = envelope_expectation(&g, t, x, samples, rng);
                let f = (-x * (t_prime - t)).exp() * p_dk;
                est.x_lower = Some(x);
                est.lower = Some(f * e);
                est.lower_se = f * e_se;
            }
        }
        Verdict::Fails => {
            let (e, e_se) = envelope_expectation(&g, t, 0.0, samples, rng);
            let p_inf = crate::malthus::OffspringDistribution::new(&seqs).p_infinite();
            est.upper = Some(e);
            est.upper_se = e_se;
            est.lower = Some(p_inf * e);
            est.lower_se = p_inf * e_se;
        }
        Verdict::Unknown => {}
    }
    let slack = |a: f64, b: f64| 3.0 * (a * a + b * b).sqrt();
    if let Some(u) = est.upper {
        est.consistent &= p <= u + slack(se, est.upper_se);
    }
    if let Some(l) = est.lower {
        est.consistent &= p >= l - slack(se, est.lower_se);
    }
    Ok(est)
}
