use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::{RateModel, RatesError};

/// Largest prefix length the memo will grow to.
pub const MAX_PREFIX: usize = 1 << 24;

const INITIAL_PREFIX: usize = 1 << 10;
const SUMMABLE_SCAN: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Phi1,
    Phi2,
    Rho1,
    Rho2,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    #[serde(rename = "K")]
    K,
    #[serde(rename = "K_alpha")]
    KAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum AlphaMode {
    Shift(f64),
    Rho1,
    Undefined,
}

#[derive(Debug, Default)]
struct Prefix {
    // entry k holds the sum over i < k
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    rho1: Vec<f64>,
    rho2: Vec<f64>,
    alpha: Vec<f64>,
    log_tail: Vec<f64>,
    // entry i holds sup_{j <= i} d(j)
    dbar: Vec<f64>,
}

impl Prefix {
    fn len(&self) -> usize {
        self.phi1.len()
    }

    fn extend(&mut self, model: &RateModel, alpha: AlphaMode, upto: usize) {
        if self.phi1.is_empty() {
            for v in [
                &mut self.phi1,
                &mut self.phi2,
                &mut self.rho1,
                &mut self.rho2,
                &mut self.alpha,
                &mut self.log_tail,
            ] {
                v.push(0.0);
            }
            self.dbar.push(model.death(0));
        }
        let start = self.len();
        let extra = (upto + 1).saturating_sub(start);
        for v in [
            &mut self.phi1,
            &mut self.phi2,
            &mut self.rho1,
            &mut self.rho2,
            &mut self.alpha,
            &mut self.log_tail,
            &mut self.dbar,
        ] {
            v.reserve(extra);
        }
        for k in start..=upto {
            let i = k - 1;
            let (b, d) = (model.birth(i), model.death(i));
            let s = b + d;
            let inv = 1.0 / s;
            let q = d / s;
            self.phi1.push(self.phi1[i] + inv);
            self.phi2.push(self.phi2[i] + inv * inv);
            self.rho1.push(self.rho1[i] + q);
            self.rho2.push(self.rho2[i] + q * q);
            let a = match alpha {
                AlphaMode::Shift(ds) => (d - ds) / s,
                _ => q,
            };
            self.alpha.push(self.alpha[i] + a);
            self.log_tail.push(self.log_tail[i] + (-q).ln_1p());
            self.dbar.push(self.dbar[i].max(model.death(k)));
        }
    }

    fn column(&self, kind: SequenceKind) -> &[f64] {
        match kind {
            SequenceKind::Phi1 => &self.phi1,
            SequenceKind::Phi2 => &self.phi2,
            SequenceKind::Rho1 => &self.rho1,
            SequenceKind::Rho2 => &self.rho2,
            SequenceKind::Alpha => &self.alpha,
        }
    }
}

/// Memoized prefix sums of a rate model:
///
/// * `phi1(k) = sum_{i<k} 1/(b+d)`, `phi2(k) = sum_{i<k} 1/(b+d)^2`
/// * `rho1(k) = sum_{i<k} d/(b+d)`, `rho2(k) = sum_{i<k} (d/(b+d))^2`
/// * `alpha(k) = sum_{i<k} (d - d*)/(b+d)`, or `rho1` when `rho1` converges
/// * `log P(D >= k) = sum_{i<k} log(b/(b+d))`
///
/// Non-integer arguments use linear interpolation between neighbouring
/// integers. The memo grows on demand and is safe to share across threads.
#[derive(Debug)]
pub struct DerivedSequences {
    model: RateModel,
    alpha: AlphaMode,
    prefix: RwLock<Prefix>,
}

impl Clone for DerivedSequences {
    fn clone(&self) -> Self {
        DerivedSequences::new(self.model.clone())
    }
}

impl DerivedSequences {
    pub fn new(model: RateModel) -> Self {
        let alpha = match model.d_star() {
            Some(ds) => AlphaMode::Shift(ds),
            None => {
                if super::regime::fd_verdict(&model) == super::Verdict::Fails {
                    AlphaMode::Rho1
                } else {
                    AlphaMode::Undefined
                }
            }
        };
        let seqs = DerivedSequences {
            model,
            alpha,
            prefix: RwLock::new(Prefix::default()),
        };
        seqs.ensure(INITIAL_PREFIX).expect("initial prefix within cap");
        seqs
    }

    pub fn model(&self) -> &RateModel {
        &self.model
    }

    /// Number of memoized entries (largest `k` available without growth).
    pub fn memo_len(&self) -> usize {
        self.prefix.read().unwrap().len().saturating_sub(1)
    }

    /// Grows the memo so that index `k` is available.
    pub fn ensure(&self, k: usize) -> Result<(), RatesError> {
        if k > MAX_PREFIX {
            return Err(RatesError::CapacityExceeded(k));
        }
        if self.prefix.read().unwrap().len() > k {
            return Ok(());
        }
        let mut p = self.prefix.write().unwrap();
        if p.len() <= k {
            let target = k.max(2 * p.len()).min(MAX_PREFIX);
            p.extend(&self.model, self.alpha, target);
        }
        Ok(())
    }

    fn check_alpha(&self, kind: SequenceKind) -> Result<(), RatesError> {
        if kind == SequenceKind::Alpha && self.alpha == AlphaMode::Undefined {
            return Err(RatesError::AlphaUndefined);
        }
        Ok(())
    }

    /// Exact prefix sum at integer `k`.
    pub fn at(&self, kind: SequenceKind, k: usize) -> Result<f64, RatesError> {
        self.check_alpha(kind)?;
        self.ensure(k)?;
        Ok(self.prefix.read().unwrap().column(kind)[k])
    }

    /// Prefix sum extended to real `t >= 0` by linear interpolation.
    pub fn value(&self, kind: SequenceKind, t: f64) -> Result<f64, RatesError> {
        if !t.is_finite() || t < 0.0 {
            return Err(RatesError::OutOfRange(t));
        }
        self.check_alpha(kind)?;
        let k = t.floor() as usize;
        let frac = t - k as f64;
        self.ensure(k + 1)?;
        let p = self.prefix.read().unwrap();
        let col = p.column(kind);
        if frac == 0.0 {
            Ok(col[k])
        } else {
            Ok(col[k] + frac * (col[k + 1] - col[k]))
        }
    }

    /// `log P(D >= k) = sum_{i<k} log(b(i)/(b(i)+d(i)))`.
    pub fn log_tail(&self, k: usize) -> Result<f64, RatesError> {
        self.ensure(k)?;
        Ok(self.prefix.read().unwrap().log_tail[k])
    }

    /// Running supremum `sup_{j<=i} d(j)`.
    pub fn dbar(&self, i: usize) -> Result<f64, RatesError> {
        self.ensure(i)?;
        Ok(self.prefix.read().unwrap().dbar[i])
    }

    /// The `s >= 0` with `phi1(s) = t` on the interpolated extension.
    pub fn phi1_inverse(&self, t: f64) -> Result<f64, RatesError> {
        if !t.is_finite() || t < 0.0 {
            return Err(RatesError::OutOfRange(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        // a convergent phi1 has no certified supremum; stop early
        let cap = if super::regime::ne_verdict(&self.model) == super::Verdict::Fails {
            SUMMABLE_SCAN
        } else {
            MAX_PREFIX
        };
        loop {
            {
                let p = self.prefix.read().unwrap();
                let phi1 = &p.phi1;
                if *phi1.last().unwrap() >= t {
                    // first k with phi1[k] >= t
                    let k = phi1.partition_point(|&v| v < t);
                    let lo = phi1[k - 1];
                    let step = phi1[k] - lo;
                    let s = (k - 1) as f64 + ((t - lo) / step).clamp(0.0, 1.0);
                    return Ok(s);
                }
            }
            let n = self.memo_len();
            if n >= cap {
                return Err(RatesError::OutOfRange(t));
            }
            self.ensure((2 * n).min(cap))?;
        }
    }

    /// `K(t) = phi2(phi1^{-1}(t))` and `K_alpha(t) = alpha(phi1^{-1}(t))`.
    pub fn k_transform(&self, kind: TransformKind, t: f64) -> Result<f64, RatesError> {
        let seq = match kind {
            TransformKind::K => SequenceKind::Phi2,
            TransformKind::KAlpha => SequenceKind::Alpha,
        };
        self.check_alpha(seq)?;
        let s = self.phi1_inverse(t)?;
        self.value(seq, s)
    }

    pub fn infimum_rate(&self) -> Result<(f64, Option<usize>), RatesError> {
        self.model.infimum_rate()
    }
}
