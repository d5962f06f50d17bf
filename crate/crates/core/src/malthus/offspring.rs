use serde::{Deserialize, Serialize};

use super::MalthusError;
use crate::rates::{DerivedSequences, SequenceKind, Verdict};

/// Terms used to approximate `P(D = inf)` when the death rates are not
/// eventually zero.
const P_INF_TERMS: usize = 1 << 18;

/// The inhomogeneous geometric law of the offspring count `D`:
/// `P(D >= k) = prod_{i<k} b(i)/(b(i)+d(i))`.
#[derive(Debug, Clone, Copy)]
pub struct OffspringDistribution<'a> {
    seqs: &'a DerivedSequences,
    p_infinite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtailReport {
    pub k_max: usize,
    /// Smallest `rhs - lhs` over `1..=k_max` (zero means equality somewhere).
    pub min_slack: f64,
    pub max_slack: f64,
}

impl<'a> OffspringDistribution<'a> {
    pub fn new(seqs: &'a DerivedSequences) -> Self {
        let model = seqs.model();
        let fd = crate::rates::assumption_report(model).finite_descendants;
        let p_infinite = if fd == Verdict::Holds {
            0.0
        } else {
            let zero_tail = model.death_sequence().family.limit() == Some(Some(0.0))
                && model.death_sequence().family.tail().map(|t| t.value(0)) == Some(0.0);
            let n = if zero_tail { model.tail_start() } else { P_INF_TERMS };
            seqs.log_tail(n).map(f64::exp).unwrap_or(0.0)
        };
        OffspringDistribution { seqs, p_infinite }
    }

    pub fn seqs(&self) -> &'a DerivedSequences {
        self.seqs
    }

    /// `P(D = inf)`; exact when the death tail is identically zero,
    /// otherwise a long partial product.
    pub fn p_infinite(&self) -> f64 {
        self.p_infinite
    }

    pub fn log_tail(&self, k: usize) -> f64 {
        self.seqs.log_tail(k).expect("index within memo cap")
    }

    /// `P(D >= k)`.
    pub fn tail(&self, k: usize) -> f64 {
        self.log_tail(k).exp()
    }

    /// `P(D = k) = d(k)/(b(k)+d(k)) * P(D >= k)`.
    pub fn pmf(&self, k: usize) -> f64 {
        let m = self.seqs.model();
        let d = m.death(k);
        if d == 0.0 {
            return 0.0;
        }
        d / (m.birth(k) + d) * self.tail(k)
    }

    /// Checks `log P(D >= k) <= -rho1(k) - rho2(k)/2` for `k <= k_max`.
    pub fn dtail_bound_check(&self, k_max: usize) -> Result<DtailReport, MalthusError> {
        let mut min_slack = f64::INFINITY;
        let mut max_slack = f64::NEG_INFINITY;
        for k in 1..=k_max {
            let lhs = self.log_tail(k);
            let rho1 = self.seqs.at(SequenceKind::Rho1, k)?;
            let rho2 = self.seqs.at(SequenceKind::Rho2, k)?;
            let rhs = -rho1 - 0.5 * rho2;
            let slack = rhs - lhs;
            // both sides are sums of k terms
            if slack < -4.0 * f64::EPSILON * k as f64 * rhs.abs().max(1.0) {
                return Err(MalthusError::BoundViolated { k, lhs, rhs });
            }
            min_slack = min_slack.min(slack);
            max_slack = max_slack.max(slack);
        }
        Ok(DtailReport {
            k_max,
            min_slack,
            max_slack,
        })
    }
}
