use serde::{Deserialize, Serialize};

use super::growth::Growth;
use super::RatesError;

/// Parametric rate families. Indices are the degree `i >= 0`.
///
/// | family      | value at `i`                 |
/// |-------------|------------------------------|
/// | `constant`  | `value`                      |
/// | `affine`    | `slope * i + intercept`      |
/// | `power`     | `scale * (i + 1)^exponent`   |
/// | `geometric` | `scale * ratio^i`            |
/// | `log`       | `scale * ln(i + offset)`     |
/// | `table`     | `values[i]`, then `tail(i)`  |
///
/// A table's tail is evaluated at the absolute index. A table without a
/// tail repeats its last value but carries no asymptotic certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Family {
    Constant {
        value: f64,
    },
    Affine {
        slope: f64,
        intercept: f64,
    },
    Power {
        scale: f64,
        exponent: f64,
    },
    Geometric {
        scale: f64,
        ratio: f64,
    },
    Log {
        scale: f64,
        offset: f64,
    },
    Table {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<Box<Family>>,
    },
}

/// Monotonicity of a family's closed-form tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Constant,
    NonDecreasing,
    NonIncreasing,
}

impl Monotone {
    pub fn non_decreasing(self) -> bool {
        matches!(self, Monotone::Constant | Monotone::NonDecreasing)
    }

    pub fn non_increasing(self) -> bool {
        matches!(self, Monotone::Constant | Monotone::NonIncreasing)
    }
}

impl Family {
    pub fn value(&self, i: usize) -> f64 {
        let x = i as f64;
        match self {
            Family::Constant { value } => *value,
            Family::Affine { slope, intercept } => slope * x + intercept,
            Family::Power { scale, exponent } => {
                if *exponent == 0.0 {
                    *scale
                } else if *exponent == 1.0 {
                    scale * (x + 1.0)
                } else {
                    scale * (x + 1.0).powf(*exponent)
                }
            }
            Family::Geometric { scale, ratio } => scale * ratio.powi(i.min(i32::MAX as usize) as i32),
            Family::Log { scale, offset } => scale * (x + offset).ln(),
            Family::Table { values, tail } => {
                if i < values.len() {
                    values[i]
                } else {
                    match tail {
                        Some(t) => t.value(i),
                        None => *values.last().expect("validated non-empty table"),
                    }
                }
            }
        }
    }

    /// Checks parameters. `strict` requires values `> 0` (birth rates),
    /// otherwise `>= 0` (death rates).
    pub fn validate(&self, strict: bool) -> Result<(), RatesError> {
        let ok = |v: f64| v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
        let bad = |what: &str| Err(RatesError::InvalidFamily(what.to_string()));
        match self {
            Family::Constant { value } => {
                if !ok(*value) {
                    return bad("constant value out of range");
                }
            }
            Family::Affine { slope, intercept } => {
                if !(slope.is_finite() && *slope >= 0.0) {
                    return bad("affine slope must be finite and >= 0");
                }
                if !ok(*intercept) {
                    return bad("affine intercept out of range");
                }
            }
            Family::Power { scale, exponent } => {
                if !ok(*scale) {
                    return bad("power scale out of range");
                }
                if !(exponent.is_finite() && *exponent >= 0.0) {
                    return bad("power exponent must be finite and >= 0");
                }
            }
            Family::Geometric { scale, ratio } => {
                if !ok(*scale) {
                    return bad("geometric scale out of range");
                }
                if !(*ratio > 0.0 && *ratio <= 1.0) {
                    return bad("geometric ratio must lie in (0, 1]");
                }
            }
            Family::Log { scale, offset } => {
                if !ok(*scale) {
                    return bad("log scale out of range");
                }
                let min_offset_ok = if strict { *offset > 1.0 } else { *offset >= 1.0 };
                if !(offset.is_finite() && min_offset_ok) {
                    return bad("log offset too small");
                }
            }
            Family::Table { values, tail } => {
                if values.is_empty() {
                    return bad("table needs at least one value");
                }
                if values.iter().any(|v| !ok(*v)) {
                    return bad("table value out of range");
                }
                if let Some(t) = tail {
                    t.validate(strict)?;
                }
            }
        }
        Ok(())
    }

    /// Number of leading indices not described by the closed-form tail.
    pub fn prefix_len(&self) -> usize {
        match self {
            Family::Table { values, tail } => values.len().max(tail.as_ref().map_or(0, |t| t.prefix_len())),
            _ => 0,
        }
    }

    /// The closed-form family governing indices `>= prefix_len()`, if any.
    pub fn tail(&self) -> Option<&Family> {
        match self {
            Family::Table { tail, .. } => tail.as_ref().and_then(|t| t.tail()),
            f => Some(f),
        }
    }

    pub fn certified(&self) -> bool {
        self.tail().is_some()
    }

    /// Monotonicity of the closed-form tail (only meaningful when certified).
    pub fn monotone(&self) -> Option<Monotone> {
        let m = match self.tail()? {
            Family::Constant { .. } => Monotone::Constant,
            Family::Affine { slope, .. } => {
                if *slope == 0.0 {
                    Monotone::Constant
                } else {
                    Monotone::NonDecreasing
                }
            }
            Family::Power { scale, exponent } => {
                if *exponent == 0.0 || *scale == 0.0 {
                    Monotone::Constant
                } else {
                    Monotone::NonDecreasing
                }
            }
            Family::Geometric { scale, ratio } => {
                if *ratio == 1.0 || *scale == 0.0 {
                    Monotone::Constant
                } else {
                    Monotone::NonIncreasing
                }
            }
            Family::Log { scale, .. } => {
                if *scale == 0.0 {
                    Monotone::Constant
                } else {
                    Monotone::NonDecreasing
                }
            }
            Family::Table { .. } => unreachable!("tail() never returns a table"),
        };
        Some(m)
    }

    pub fn growth(&self) -> Option<Growth> {
        let g = match self.tail()? {
            Family::Constant { value } => Growth::constant(*value),
            Family::Affine { slope, intercept } => {
                if *slope > 0.0 {
                    Growth::Poly {
                        coef: *slope,
                        exp: 1.0,
                        log_exp: 0.0,
                    }
                } else {
                    Growth::constant(*intercept)
                }
            }
            Family::Power { scale, exponent } => {
                if *scale == 0.0 {
                    Growth::Zero
                } else {
                    Growth::Poly {
                        coef: *scale,
                        exp: *exponent,
                        log_exp: 0.0,
                    }
                }
            }
            Family::Geometric { scale, ratio } => {
                if *scale == 0.0 {
                    Growth::Zero
                } else if *ratio == 1.0 {
                    Growth::constant(*scale)
                } else {
                    Growth::Geometric { ratio: *ratio }
                }
            }
            Family::Log { scale, .. } => {
                if *scale == 0.0 {
                    Growth::Zero
                } else {
                    Growth::Poly {
                        coef: *scale,
                        exp: 0.0,
                        log_exp: 1.0,
                    }
                }
            }
            Family::Table { .. } => unreachable!(),
        };
        Some(g)
    }

    /// `lim f(i)` of the tail: `Some(Some(l))` finite, `Some(None)` infinite,
    /// `None` when uncertified.
    pub fn limit(&self) -> Option<Option<f64>> {
        self.growth().map(|g| g.limit())
    }

    /// `inf_{i >= from} f(i)` for `from >= prefix_len()`.
    pub fn tail_inf(&self, from: usize) -> Option<f64> {
        let tail = self.tail()?;
        let m = self.monotone()?;
        Some(if m.non_decreasing() {
            tail.value(from)
        } else {
            self.limit()?.unwrap_or(f64::INFINITY)
        })
    }

    /// `sup_{i >= from} f(i)` for `from >= prefix_len()`; may be infinite.
    pub fn tail_sup(&self, from: usize) -> Option<f64> {
        let tail = self.tail()?;
        let m = self.monotone()?;
        Some(if m.non_increasing() {
            tail.value(from)
        } else {
            self.limit()?.unwrap_or(f64::INFINITY)
        })
    }

    /// Whether the tail satisfies `f(4s) <= 2 f(2s)` and `s / (c + f(2s))`
    /// is non-decreasing for every `c > 0`: true for non-decreasing families
    /// growing at most linearly. Used by the block remainder bound in
    /// `malthus`.
    pub fn at_most_linear_nondecreasing(&self) -> bool {
        match self.tail() {
            Some(Family::Constant { .. }) | Some(Family::Affine { .. }) | Some(Family::Log { .. }) => true,
            Some(Family::Power { exponent, .. }) => *exponent <= 1.0,
            Some(Family::Geometric { ratio, .. }) => *ratio == 1.0,
            _ => false,
        }
    }
}
