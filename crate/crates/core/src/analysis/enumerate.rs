use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::discrete::Outcome;
use crate::rates::RateModel;

pub const MAX_ENUMERATION_STEPS: usize = 8;

/// Exact law of the first `steps` outcomes. Sequences ending in extinction
/// are shorter than `steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLaw {
    pub steps: usize,
    pub probs: BTreeMap<Vec<Outcome>, f64>,
}

impl ChainLaw {
    pub fn total_mass(&self) -> f64 {
        let mut v: Vec<f64> = self.probs.values().copied().collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum()
    }

    pub fn get(&self, seq: &[Outcome]) -> f64 {
        self.probs.get(seq).copied().unwrap_or(0.0)
    }

    /// Law of the first `m <= steps` outcomes.
    pub fn marginal(&self, m: usize) -> BTreeMap<Vec<Outcome>, f64> {
        let mut out = BTreeMap::new();
        for (seq, &p) in &self.probs {
            *out.entry(seq[..m.min(seq.len())].to_vec()).or_insert(0.0) += p;
        }
        out
    }
}

struct Walker<'a> {
    model: &'a RateModel,
    steps: usize,
    probs: BTreeMap<Vec<Outcome>, f64>,
    path: Vec<Outcome>,
}

impl Walker<'_> {
    // alive: (label, degree) sorted by label
    fn expand(&mut self, alive: &mut Vec<(u32, u32)>, p: f64) {
        let done = self.path.len();
        if done == self.steps || alive.is_empty() {
            self.probs.insert(self.path.clone(), p);
            return;
        }
        let total: f64 = alive.iter().map(|&(_, k)| self.model.total(k as usize)).sum();
        let child = done as u32 + 2;
        for idx in 0..alive.len() {
            let (v, k) = alive[idx];
            let (b, d) = (self.model.birth(k as usize), self.model.death(k as usize));
            if b > 0.0 {
                alive[idx].1 += 1;
                alive.push((child, 0));
                self.path.push(Outcome::Birth { parent: v, child });
                self.expand(alive, p * b / total);
                self.path.pop();
                alive.pop();
                alive[idx].1 -= 1;
            }
            if d > 0.0 {
                let removed = alive.remove(idx);
                self.path.push(Outcome::Death(v));
                self.expand(alive, p * d / total);
                self.path.pop();
                alive.insert(idx, removed);
            }
        }
    }
}

/// Depth-first expansion of every outcome sequence of length `steps`
/// from `T_1`, multiplying exact step probabilities.
pub fn enumerate_small_chain(model: &RateModel, steps: usize) -> Result<ChainLaw, AnalysisError> {
    if steps > MAX_ENUMERATION_STEPS {
        return Err(AnalysisError::TooLarge(steps));
    }
    let mut w = Walker {
        model,
        steps,
        probs: BTreeMap::new(),
        path: Vec::with_capacity(steps),
    };
    w.expand(&mut vec![(1, 0)], 1.0);
    Ok(ChainLaw { steps, probs: w.probs })
}
