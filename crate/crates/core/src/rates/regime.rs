use serde::{Deserialize, Serialize};

use super::growth::Growth;
use super::RateModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

impl Verdict {
    fn diverges(g: Option<Growth>) -> Verdict {
        match g {
            Some(g) if g.summable() => Verdict::Fails,
            Some(_) => Verdict::Holds,
            None => Verdict::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    RichAreOld,
    RichDieYoung,
    Boundary,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub non_explosion: Verdict,
    pub diverging_variance: Verdict,
    pub finite_descendants: Verdict,
    pub r: Option<f64>,
    pub r_attained_at: Option<usize>,
    pub d_star: Option<f64>,
    pub d_liminf: Option<f64>,
    pub b_to_infinity: Option<bool>,
    pub regime: Regime,
}

fn inv_total(model: &RateModel) -> Option<Growth> {
    Growth::constant(1.0).ratio(model.total_growth()?)
}

/// `sum 1/(b+d) = inf`.
pub(crate) fn ne_verdict(model: &RateModel) -> Verdict {
    Verdict::diverges(inv_total(model))
}

/// `sum 1/(b+d)^2 = inf`.
pub(crate) fn dv_verdict(model: &RateModel) -> Verdict {
    Verdict::diverges(inv_total(model).map(Growth::square))
}

/// `sum d/(b+d) = inf`.
pub(crate) fn fd_verdict(model: &RateModel) -> Verdict {
    let ratio = model
        .total_growth()
        .and_then(|t| model.death_sequence().family.growth()?.ratio(t));
    Verdict::diverges(ratio)
}

/// Classifies a model from its family metadata.
pub fn assumption_report(model: &RateModel) -> RegimeReport {
    let ne = ne_verdict(model);
    let dv = dv_verdict(model);
    let fd = fd_verdict(model);
    let (r, r_at) = match model.infimum_rate() {
        Ok((r, at)) => (Some(r), at),
        Err(_) => (None, None),
    };
    let d_star = model.d_star();
    let d_liminf = model.d_liminf();
    let regime = if fd == Verdict::Fails {
        Regime::RichAreOld
    } else {
        match (d_liminf, r) {
            (Some(dl), Some(r)) if dl < r => Regime::RichAreOld,
            (Some(dl), Some(r)) if dl > r => Regime::RichDieYoung,
            (Some(_), Some(_)) => Regime::Boundary,
            _ => Regime::Unknown,
        }
    };
    RegimeReport {
        non_explosion: ne,
        diverging_variance: dv,
        finite_descendants: fd,
        r,
        r_attained_at: r_at,
        d_star,
        d_liminf: d_liminf.filter(|v| v.is_finite()),
        b_to_infinity: model.b_to_infinity(),
        regime,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{fixtures, Family, RateModel};
    use super::*;

    #[test]
    fn constant_rates_are_rich_are_old() {
        let r = assumption_report(&RateModel::constant(2.0, 1.0).unwrap());
        assert_eq!(r.non_explosion, Verdict::Holds);
        assert_eq!(r.diverging_variance, Verdict::Holds);
        assert_eq!(r.finite_descendants, Verdict::Holds);
        assert_eq!(r.regime, Regime::RichAreOld);
        assert_eq!(r.r, Some(3.0));
    }

    #[test]
    fn no_death_fails_fd() {
        let r = assumption_report(&fixtures::linear_no_death());
        assert_eq!(r.finite_descendants, Verdict::Fails);
        assert_eq!(r.regime, Regime::RichAreOld);
    }

    #[test]
    fn regime_examples() {
        assert_eq!(
            assumption_report(&fixtures::rich_die_young_1()).regime,
            Regime::RichDieYoung
        );
        assert_eq!(
            assumption_report(&fixtures::rich_die_young_2()).regime,
            Regime::RichDieYoung
        );
        assert_eq!(assumption_report(&fixtures::rich_are_old()).regime, Regime::RichAreOld);
    }

    #[test]
    fn power_thresholds() {
        let pw = |e: f64| {
            RateModel::from_families(
                Family::Power {
                    scale: 1.0,
                    exponent: e,
                },
                Family::Constant { value: 0.0 },
            )
            .unwrap()
        };
        assert_eq!(ne_verdict(&pw(1.0)), Verdict::Holds);
        assert_eq!(ne_verdict(&pw(1.2)), Verdict::Fails);
        assert_eq!(dv_verdict(&pw(0.5)), Verdict::Holds);
        assert_eq!(dv_verdict(&pw(0.6)), Verdict::Fails);
    }

    #[test]
    fn boundary_and_unknown() {
        let m = RateModel::from_families(
            Family::Constant { value: 1.0 },
            Family::Table {
                values: vec![0.5],
                tail: Some(Box::new(Family::Constant { value: 3.0 })),
            },
        )
        .unwrap();
        // R = 1.5 at i = 0, liminf d = 3 > R
        assert_eq!(assumption_report(&m).regime, Regime::RichDieYoung);
        let m = RateModel::from_families(
            Family::Constant { value: 1.0 },
            Family::Table {
                values: vec![0.5],
                tail: Some(Box::new(Family::Constant { value: 0.5 })),
            },
        )
        .unwrap();
        assert_eq!(assumption_report(&m).regime, Regime::RichAreOld);
        let m = RateModel::from_families(
            Family::Constant { value: 1.0 },
            Family::Table {
                values: vec![0.5, 2.0],
                tail: None,
            },
        )
        .unwrap();
        let r = assumption_report(&m);
        assert_eq!(r.regime, Regime::Unknown);
        assert_eq!(r.non_explosion, Verdict::Unknown);
    }

    #[test]
    fn boundary_when_liminf_equals_r() {
        let m = RateModel::from_families(
            Family::Constant { value: 1.0 },
            Family::Table {
                values: vec![0.5],
                tail: Some(Box::new(Family::Constant { value: 1.5 })),
            },
        )
        .unwrap();
        // R = 1.5 attained at 0, liminf d = 1.5
        assert_eq!(assumption_report(&m).regime, Regime::Boundary);
    }
}
