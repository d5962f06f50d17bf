use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::rates::{assumption_report, DerivedSequences, RateModel, Verdict};

/// Index reached when probing for a no-death horizon.
const HORIZON_SCAN: usize = 1 << 18;
/// Remaining death probability treated as zero past the horizon.
const HORIZON_MASS: f64 = 1e-12;

/// One draw of an individual's life: `D` children at offsets `S_1 < S_2 <
/// ...` and death at `L = S_{D+1}`. `None` stands for infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringSample {
    pub children: Option<u64>,
    pub birth_times: Vec<f64>,
    pub lifetime: Option<f64>,
}

/// Samples the Bernoulli/exponential chain of a single individual without
/// building a tree.
#[derive(Debug, Clone)]
pub struct OffspringSampler {
    model: RateModel,
    // from this index on no death can occur (up to HORIZON_MASS)
    horizon: Option<usize>,
}

impl OffspringSampler {
    pub fn new(seqs: &DerivedSequences) -> Self {
        let model = seqs.model().clone();
        let horizon = if assumption_report(&model).finite_descendants == Verdict::Fails {
            let d = &model.death_sequence().family;
            if d.tail_sup(model.tail_start()) == Some(0.0) {
                Some(model.tail_start())
            } else {
                let far = seqs.log_tail(HORIZON_SCAN).unwrap_or(f64::NEG_INFINITY);
                let mut h = model.tail_start().max(1);
                while h < HORIZON_SCAN && -(far - seqs.log_tail(h).unwrap_or(far)).exp_m1() >= HORIZON_MASS {
                    h *= 2;
                }
                Some(h.min(HORIZON_SCAN))
            }
        } else {
            None
        };
        OffspringSampler { model, horizon }
    }

    pub fn from_model(model: RateModel) -> Self {
        Self::new(&DerivedSequences::new(model))
    }

    pub fn model(&self) -> &RateModel {
        &self.model
    }

    /// Index past which deaths are treated as impossible, when `D` can be
    /// infinite.
    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    fn gap<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / self.model.total(i)
    }

    /// Runs the chain from index `start`; returns (children after `start`,
    /// birth offsets kept up to `k_cap`, death time).
    fn walk<R: Rng + ?Sized>(&self, start: usize, k_cap: usize, rng: &mut R) -> OffspringSample {
        let mut t = 0.0;
        let mut i = start;
        let mut births = Vec::new();
        loop {
            if self.horizon.is_some_and(|h| i >= h) {
                while births.len() < k_cap {
                    t += self.gap(i, rng);
                    i += 1;
                    births.push(t);
                }
                return OffspringSample {
                    children: None,
                    birth_times: births,
                    lifetime: None,
                };
            }
            t += self.gap(i, rng);
            let b = self.model.birth(i);
            let d = self.model.death(i);
            if d > 0.0 && rng.random::<f64>() * (b + d) < d {
                return OffspringSample {
                    children: Some((i - start) as u64),
                    birth_times: births,
                    lifetime: Some(t),
                };
            }
            i += 1;
            if births.len() < k_cap {
                births.push(t);
            }
        }
    }
}

/// Samples `D`, `S_1..S_min(D, k_cap)` and `L`.
pub fn sample_offspring_process<R: Rng + ?Sized>(
    sampler: &OffspringSampler,
    k_cap: usize,
    rng: &mut R,
) -> OffspringSample {
    sampler.walk(0, k_cap, rng)
}

/// Remaining lifetime of an individual that already has `k` children:
/// `E_k + ... + E_{k + D_k}`. `None` when it never dies.
pub fn sample_remaining_lifetime<R: Rng + ?Sized>(sampler: &OffspringSampler, k: usize, rng: &mut R) -> Option<f64> {
    sampler.walk(k, 0, rng).lifetime
}
