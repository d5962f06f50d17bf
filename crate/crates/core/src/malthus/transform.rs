use serde::{Deserialize, Serialize};

use crate::rates::{DerivedSequences, Family, Growth, Monotone};

/// Terms summed before giving up on a tail certificate.
pub const MAX_TERMS: usize = 1 << 22;

const FIRST_CHECK: usize = 16;
const MAX_BLOCKS: u32 = 52;

/// Outcome of evaluating the product series for `mu_hat(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MuHat {
    Finite { value: f64, error_bound: f64 },
    DivergesCertified,
    Uncertain { partial_sum: f64 },
}

impl MuHat {
    pub fn finite(&self) -> Option<f64> {
        match self {
            MuHat::Finite { value, .. } => Some(*value),
            _ => None,
        }
    }

    /// `Some(true)` if certainly above `level`, `Some(false)` if certainly
    /// below, `None` when undecided.
    pub fn exceeds(&self, level: f64) -> Option<bool> {
        match *self {
            MuHat::Finite { value, error_bound } => {
                if value - error_bound > level {
                    Some(true)
                } else if value + error_bound < level {
                    Some(false)
                } else {
                    Some(value > level)
                }
            }
            MuHat::DivergesCertified => Some(true),
            MuHat::Uncertain { partial_sum } if partial_sum > level => Some(true),
            MuHat::Uncertain { .. } => None,
        }
    }
}

/// Enclosure of `sum_{n >= m} a_n` where `a_{n+1} = a_n * b(n)/(lambda+b(n)+d(n))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Remainder {
    Within { lo: f64, hi: f64 },
    Diverges,
    Unknown,
}

/// Slope and intercept when the birth tail is `s*i + beta` exactly.
fn affine_birth(f: &Family) -> Option<(f64, f64)> {
    match f {
        Family::Affine { slope, intercept } if *slope > 0.0 => Some((*slope, *intercept)),
        Family::Power { scale, exponent } if *exponent == 1.0 => Some((*scale, *scale)),
        _ => None,
    }
}

/// Tail certificate for the series remainder starting at `m >= tail_start`
/// with first term `a_m`.
pub(crate) fn remainder(seqs: &DerivedSequences, lambda: f64, m: usize, a_m: f64) -> Remainder {
    let model = seqs.model();
    debug_assert!(m >= model.tail_start());
    let bf = &model.birth_sequence().family;
    let df = &model.death_sequence().family;
    let Some(bt) = bf.tail() else {
        return Remainder::Unknown;
    };
    let (Some(d_lo), Some(d_hi)) = (df.tail_inf(m), df.tail_sup(m)) else {
        return Remainder::Unknown;
    };
    if a_m == 0.0 {
        return Remainder::Within { lo: 0.0, hi: 0.0 };
    }

    if let Some((s, beta)) = affine_birth(bt) {
        // ratio (n + u)/(n + v) sums to a_m (m + v - 1)/(v - u - 1); the
        // ratio decreases in d, so d_lo and d_hi give the two sides
        let u = beta / s;
        let hyper = |d: f64| {
            if !d.is_finite() {
                return None;
            }
            let v = (lambda + beta + d) / s;
            (v - u > 1.0).then(|| a_m * (m as f64 + v - 1.0) / (v - u - 1.0))
        };
        if d_hi.is_finite() && hyper(d_hi).is_none() {
            return Remainder::Diverges;
        }
        return match hyper(d_lo) {
            Some(hi) => Remainder::Within {
                lo: hyper(d_hi).unwrap_or(a_m).min(hi),
                hi,
            },
            None => Remainder::Unknown,
        };
    }

    let delta = lambda + d_lo;
    if delta <= 0.0 {
        return Remainder::Unknown;
    }
    let b_hi = bf.tail_sup(m).unwrap_or(f64::INFINITY);
    if b_hi.is_finite() {
        let hi = a_m * (delta + b_hi) / delta;
        let b_lo = bf.tail_inf(m).unwrap_or(0.0);
        let lo = if d_hi.is_finite() {
            a_m * (lambda + b_lo + d_hi) / (lambda + d_hi)
        } else {
            a_m
        };
        return Remainder::Within { lo: lo.min(hi), hi };
    }

    if bf.monotone().is_some_and(Monotone::non_decreasing) && bf.at_most_linear_nondecreasing() {
        // doubling blocks [S, 2S) with b <= B = b(2S) on each block
        let mut lead = a_m;
        let mut acc = 0.0;
        let mut start = m.max(1) as f64;
        for _ in 0..MAX_BLOCKS {
            let big_b = bt.value((2.0 * start) as usize);
            let block = lead * (delta + big_b) / delta;
            acc += block;
            let ratio = 2.0 * (-delta * start / (delta + big_b)).exp();
            if ratio <= 0.5 {
                return Remainder::Within {
                    lo: a_m,
                    hi: acc + block,
                };
            }
            lead *= (start * (big_b / (delta + big_b)).ln()).exp();
            start *= 2.0;
        }
    }
    Remainder::Unknown
}

/// Whether `sum (lambda + d)/(lambda + b + d) < inf`, so that the product
/// terms stay bounded away from zero.
fn diverges_symbolically(seqs: &DerivedSequences, lambda: f64) -> bool {
    let model = seqs.model();
    let (Some(dg), Some(total)) = (model.death_sequence().family.growth(), model.total_growth()) else {
        return false;
    };
    let num = Growth::constant(lambda).plus(dg);
    let den = Growth::constant(lambda).plus(total);
    num.ratio(den).is_some_and(|g| g.summable())
}

/// `mu_hat(lambda) = sum_{k>=1} prod_{i<k} b(i)/(lambda + b(i) + d(i))`.
pub fn mu_hat(seqs: &DerivedSequences, lambda: f64, tol: f64) -> MuHat {
    mu_hat_until(seqs, lambda, tol, f64::INFINITY)
}

/// As [`mu_hat`], but returns `Uncertain` as soon as the partial sum
/// exceeds `stop_above` (the sign of `mu_hat - stop_above` is then known).
pub fn mu_hat_until(seqs: &DerivedSequences, lambda: f64, tol: f64, stop_above: f64) -> MuHat {
    assert!(lambda >= 0.0, "lambda must be non-negative");
    if diverges_symbolically(seqs, lambda) {
        return MuHat::DivergesCertified;
    }
    let model = seqs.model();
    let tail_start = model.tail_start();
    let mut check = tail_start.max(FIRST_CHECK);
    let mut log_a = 0.0f64;
    // Neumaier summation
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let ratio = |i: usize| {
        let b = model.birth(i);
        (b / (lambda + b + model.death(i))).ln()
    };
    let mut k = 0usize;
    while k < MAX_TERMS {
        log_a += ratio(k);
        k += 1;
        let a = log_a.exp();
        let t = sum + a;
        comp += if sum.abs() >= a { (sum - t) + a } else { (a - t) + sum };
        sum = t;
        if sum + comp > stop_above {
            return MuHat::Uncertain {
                partial_sum: sum + comp,
            };
        }
        if k == check {
            check = check.saturating_mul(2);
            let next = (log_a + ratio(k)).exp();
            let rounding = 8.0 * f64::EPSILON * (sum.abs() + k as f64 * f64::EPSILON);
            match remainder(seqs, lambda, k + 1, next) {
                Remainder::Within { lo, hi } if (hi - lo) / 2.0 <= tol => {
                    return MuHat::Finite {
                        value: sum + comp + 0.5 * (lo + hi),
                        error_bound: 0.5 * (hi - lo) + rounding + 8.0 * f64::EPSILON * hi,
                    }
                }
                Remainder::Diverges => return MuHat::DivergesCertified,
                _ => {}
            }
        }
    }
    MuHat::Uncertain {
        partial_sum: sum + comp,
    }
}

/// `lambda_underline = inf { lambda > 0 : mu_hat(lambda) < inf }` from the
/// family metadata; `None` for uncertified or superlinear birth tails.
pub fn lambda_underline(seqs: &DerivedSequences) -> Option<f64> {
    let model = seqs.model();
    let bg = model.birth_sequence().family.growth()?;
    let d_lim = model.death_sequence().family.limit()?;
    match bg {
        Growth::Zero | Growth::Geometric { .. } => Some(0.0),
        Growth::Poly { coef, exp, log_exp } => {
            if exp < 1.0 - 1e-12 {
                Some(0.0)
            } else if (exp - 1.0).abs() <= 1e-12 && log_exp.abs() <= 1e-12 {
                // terms decay like k^{-(lambda + d*)/s}
                Some(match d_lim {
                    Some(ds) => (coef - ds).max(0.0),
                    None => 0.0,
                })
            } else {
                log::warn!("no closed-form lambda_underline for superlinear birth rates");
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{fixtures, RateModel};

    fn seqs(m: RateModel) -> DerivedSequences {
        DerivedSequences::new(m)
    }

    #[test]
    fn constant_rates_closed_form() {
        let s = seqs(RateModel::constant(2.0, 1.0).unwrap());
        for lambda in [0.5, 1.0, 2.0, 5.0] {
            let v = mu_hat(&s, lambda, 1e-12).finite().unwrap();
            assert!((v - 2.0 / (lambda + 1.0)).abs() < 1e-12, "{lambda}: {v}");
        }
    }

    #[test]
    fn zero_death_at_zero_diverges() {
        let s = seqs(RateModel::constant(2.0, 0.0).unwrap());
        assert_eq!(mu_hat(&s, 0.0, 1e-9), MuHat::DivergesCertified);
        let s = seqs(fixtures::linear_no_death());
        assert_eq!(mu_hat(&s, 0.9, 1e-9), MuHat::DivergesCertified);
    }

    #[test]
    fn linear_birth_hypergeometric() {
        let s = seqs(fixtures::linear_no_death());
        // sum equals 1/(lambda - 1)
        for lambda in [1.5, 2.0, 3.0] {
            let v = mu_hat(&s, lambda, 1e-12).finite().unwrap();
            assert!((v - 1.0 / (lambda - 1.0)).abs() < 1e-12, "{lambda}: {v}");
        }
    }

    #[test]
    fn sublinear_birth_uses_blocks() {
        let s = seqs(fixtures::power_no_death(0.5));
        match mu_hat(&s, 0.3, 1e-8) {
            MuHat::Finite { error_bound, .. } => assert!(error_bound <= 1e-8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn underline_closed_forms() {
        assert_eq!(
            lambda_underline(&seqs(RateModel::constant(3.0, 1.0).unwrap())),
            Some(0.0)
        );
        assert_eq!(lambda_underline(&seqs(fixtures::linear_no_death())), Some(1.0));
        assert_eq!(lambda_underline(&seqs(fixtures::power_no_death(0.5))), Some(0.0));
        assert_eq!(lambda_underline(&seqs(fixtures::rich_are_old())), Some(0.0));
    }
}
