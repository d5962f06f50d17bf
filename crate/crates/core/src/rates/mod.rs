//! Birth and death rate sequences, their derived sums, and the regime
//! classification that decides which limit theorems apply.

mod derived;
mod family;
pub mod fixtures;
mod growth;
mod regime;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use derived::{DerivedSequences, SequenceKind, TransformKind, MAX_PREFIX};
pub use family::{Family, Monotone};
pub use growth::Growth;
pub use regime::{assumption_report, Regime, RegimeReport, Verdict};

/// Minimum prefix scanned when computing `R = inf (b + d)`.
pub const R_SCAN_MIN: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatesError {
    #[error("invalid rate family: {0}")]
    InvalidFamily(String),
    #[error("invalid override at index {index}: {value}")]
    InvalidOverride { index: usize, value: f64 },
    #[error("declared d_star = {declared} but the death family tends to {actual:?}")]
    DStarMismatch { declared: f64, actual: Option<f64> },
    #[error("declared b_to_infinity = {declared} contradicts the birth family")]
    BToInfinityMismatch { declared: bool },
    #[error("alpha is undefined: d does not converge and convergence of rho1 is not certified")]
    AlphaUndefined,
    #[error("t = {0} exceeds the certified range of phi1")]
    OutOfRange(f64),
    #[error("prefix length {0} exceeds the memoization cap")]
    CapacityExceeded(usize),
    #[error("tail of b + d has no monotone or lower-bound certificate")]
    Uncertified,
    #[error("malformed rate model JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Birth,
    Death,
}

/// One rate sequence: a family plus finitely many point overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSequence {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<usize, f64>,
}

impl RateSequence {
    pub fn new(family: Family) -> Self {
        RateSequence {
            family,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, index: usize, value: f64) -> Self {
        self.overrides.insert(index, value);
        self
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        if !self.overrides.is_empty() {
            if let Some(v) = self.overrides.get(&i) {
                return *v;
            }
        }
        self.family.value(i)
    }

    /// First index from which the closed-form tail family applies.
    pub fn tail_start(&self) -> usize {
        let ov = self.overrides.keys().next_back().map_or(0, |k| k + 1);
        ov.max(self.family.prefix_len())
    }

    fn validate(&self, strict: bool) -> Result<(), RatesError> {
        self.family.validate(strict)?;
        for (&index, &value) in &self.overrides {
            let ok = value.is_finite() && if strict { value > 0.0 } else { value >= 0.0 };
            if !ok {
                return Err(RatesError::InvalidOverride { index, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    b: RateSequence,
    d: RateSequence,
    #[serde(default)]
    d_star: Option<f64>,
    #[serde(default)]
    b_to_infinity: Option<bool>,
}

/// Birth sequence `b: N0 -> (0, inf)` and death sequence `d: N0 -> [0, inf)`.
///
/// Immutable once constructed; construction validates the declared
/// metadata against the families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct RateModel {
    b: RateSequence,
    d: RateSequence,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_to_infinity: Option<bool>,
}

impl TryFrom<RawModel> for RateModel {
    type Error = RatesError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        let mut model = RateModel::new(raw.b, raw.d)?;
        if let Some(ds) = raw.d_star {
            model = model.declare_d_star(ds)?;
        }
        if let Some(bi) = raw.b_to_infinity {
            model = model.declare_b_to_infinity(bi)?;
        }
        Ok(model)
    }
}

impl RateModel {
    pub fn new(b: RateSequence, d: RateSequence) -> Result<Self, RatesError> {
        b.validate(true)?;
        d.validate(false)?;
        Ok(RateModel {
            b,
            d,
            d_star: None,
            b_to_infinity: None,
        })
    }

    pub fn from_families(b: Family, d: Family) -> Result<Self, RatesError> {
        RateModel::new(RateSequence::new(b), RateSequence::new(d))
    }

    /// `b = c`, `d = e` for all degrees.
    pub fn constant(b: f64, d: f64) -> Result<Self, RatesError> {
        RateModel::from_families(Family::Constant { value: b }, Family::Constant { value: d })
    }

    pub fn from_json(s: &str) -> Result<Self, RatesError> {
        serde_json::from_str(s).map_err(|e| RatesError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rate model serializes")
    }

    pub fn declare_d_star(mut self, d_star: f64) -> Result<Self, RatesError> {
        let actual = self.d.family.limit().flatten();
        match actual {
            Some(a) if (a - d_star).abs() <= 1e-12 * a.abs().max(1.0) => {
                self.d_star = Some(d_star);
                Ok(self)
            }
            _ => Err(RatesError::DStarMismatch {
                declared: d_star,
                actual,
            }),
        }
    }

    pub fn declare_b_to_infinity(mut self, declared: bool) -> Result<Self, RatesError> {
        match self.b.family.limit() {
            Some(lim) if lim.is_none() == declared => {
                self.b_to_infinity = Some(declared);
                Ok(self)
            }
            _ => Err(RatesError::BToInfinityMismatch { declared }),
        }
    }

    pub fn birth_sequence(&self) -> &RateSequence {
        &self.b
    }

    pub fn death_sequence(&self) -> &RateSequence {
        &self.d
    }

    #[inline]
    pub fn birth(&self, i: usize) -> f64 {
        self.b.value(i)
    }

    #[inline]
    pub fn death(&self, i: usize) -> f64 {
        self.d.value(i)
    }

    #[inline]
    pub fn total(&self, i: usize) -> f64 {
        self.b.value(i) + self.d.value(i)
    }

    pub fn rate_at(&self, which: Which, i: usize) -> f64 {
        match which {
            Which::Birth => self.birth(i),
            Which::Death => self.death(i),
        }
    }

    /// First index from which both sequences follow their tail families.
    pub fn tail_start(&self) -> usize {
        self.b.tail_start().max(self.d.tail_start())
    }

    pub fn certified(&self) -> bool {
        self.b.family.certified() && self.d.family.certified()
    }

    /// `lim d(i)`, derived from the family (or the declared value).
    pub fn d_star(&self) -> Option<f64> {
        self.d_star.or_else(|| self.d.family.limit().flatten())
    }

    /// `liminf d(i)`; `Some(inf)` when `d` diverges, `None` when uncertified.
    pub fn d_liminf(&self) -> Option<f64> {
        self.d.family.limit().map(|l| l.unwrap_or(f64::INFINITY))
    }

    pub fn b_limit(&self) -> Option<Option<f64>> {
        self.b.family.limit()
    }

    pub fn b_to_infinity(&self) -> Option<bool> {
        self.b_to_infinity
            .or_else(|| self.b.family.limit().map(|l| l.is_none()))
    }

    /// Growth of `b + d`.
    pub fn total_growth(&self) -> Option<Growth> {
        Some(self.b.family.growth()?.plus(self.d.family.growth()?))
    }

    /// `R = inf_i (b(i) + d(i))` and the smallest index attaining it.
    ///
    /// Scans `max(R_SCAN_MIN, tail_start)` indices and closes the tail with
    /// the families' monotone infima.
    pub fn infimum_rate(&self) -> Result<(f64, Option<usize>), RatesError> {
        let (bf, df) = (&self.b.family, &self.d.family);
        let (bm, dm) = match (bf.monotone(), df.monotone()) {
            (Some(bm), Some(dm)) => (bm, dm),
            _ => return Err(RatesError::Uncertified),
        };
        let both_const = bm == Monotone::Constant && dm == Monotone::Constant;
        if bm.non_increasing() && dm.non_increasing() && !both_const {
            // b + d strictly decreases to its limit on the tail
            let lim = bf.tail_inf(0).unwrap() + df.tail_inf(0).unwrap();
            let mut best = (lim, None);
            for i in 0..self.tail_start() {
                let v = self.total(i);
                if v <= best.0 && best.1.is_none() || v < best.0 {
                    best = (v, Some(i));
                }
            }
            return Ok(best);
        }
        let mut n = R_SCAN_MIN.max(self.tail_start());
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        let mut scanned = 0usize;
        loop {
            for i in scanned..n {
                let v = self.total(i);
                if v < best {
                    best = v;
                    arg = i;
                }
            }
            scanned = n;
            let lower = bf.tail_inf(n).unwrap() + df.tail_inf(n).unwrap();
            if lower >= best {
                return Ok((best, Some(arg)));
            }
            if n >= MAX_PREFIX {
                return Err(RatesError::Uncertified);
            }
            n *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_at_examples() {
        let rao = fixtures::rich_are_old();
        assert_eq!(rao.rate_at(Which::Death, 2), 1.5);
        assert_eq!(rao.rate_at(Which::Birth, 4), 5.0);
        let c = RateModel::constant(2.0, 1.0).unwrap();
        assert_eq!(c.rate_at(Which::Birth, 123), 2.0);
        let rdy1 = fixtures::rich_die_young_1();
        assert_eq!(rdy1.rate_at(Which::Death, 0), 0.25);
        assert_eq!(rdy1.rate_at(Which::Death, 1), 2.0);
    }

    #[test]
    fn infimum_rate_examples() {
        assert_eq!(fixtures::rich_are_old().infimum_rate().unwrap(), (2.0, Some(0)));
        assert_eq!(fixtures::rich_die_young_1().infimum_rate().unwrap(), (1.25, Some(0)));
        assert_eq!(fixtures::rich_die_young_2().infimum_rate().unwrap(), (1.25, Some(0)));
        assert_eq!(
            RateModel::constant(2.0, 1.0).unwrap().infimum_rate().unwrap(),
            (3.0, Some(0))
        );
    }

    #[test]
    fn infimum_not_attained() {
        let m = RateModel::from_families(
            Family::Constant { value: 1.0 },
            Family::Geometric { scale: 1.0, ratio: 0.5 },
        )
        .unwrap();
        let (r, at) = m.infimum_rate().unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(at, None);
    }

    #[test]
    fn uncertified_table_has_no_infimum() {
        let m = RateModel::from_families(
            Family::Table {
                values: vec![1.0, 3.0],
                tail: None,
            },
            Family::Constant { value: 1.0 },
        )
        .unwrap();
        assert_eq!(m.infimum_rate(), Err(RatesError::Uncertified));
    }

    #[test]
    fn json_round_trip_and_overrides() {
        let s = r#"{
            "b": {"family": "affine", "slope": 1, "intercept": 1},
            "d": {"family": "table", "values": [1, 2], "tail": {"family": "constant", "value": 1.5},
                  "overrides": {"0": 0.25}},
            "d_star": 1.5,
            "b_to_infinity": true
        }"#;
        let m = RateModel::from_json(s).unwrap();
        assert_eq!(m.death(0), 0.25);
        assert_eq!(m.d_star(), Some(1.5));
        let back = RateModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn declared_metadata_is_checked() {
        let s = r#"{"b": {"family": "constant", "value": 2},
                    "d": {"family": "constant", "value": 1}, "d_star": 2}"#;
        assert!(matches!(RateModel::from_json(s), Err(RatesError::Json(_))));
        let m = RateModel::constant(2.0, 1.0).unwrap();
        assert!(m.clone().declare_b_to_infinity(true).is_err());
        assert!(m.declare_b_to_infinity(false).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let s = r#"{"b": {"family": "constant", "value": 2, "overrides": {"3": 0}},
                    "d": {"family": "constant", "value": 1}}"#;
        assert!(RateModel::from_json(s).is_err());
        let s = r#"{"b": {"family": "constant", "value": 2, "bogus": 1},
                    "d": {"family": "constant", "value": 1}}"#;
        assert!(RateModel::from_json(s).is_err());
    }
}
