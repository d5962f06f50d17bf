//! Named models used throughout the tests, benches and CLI examples.

use super::{Family, RateModel, RateSequence};

fn linear() -> Family {
    Family::Affine {
        slope: 1.0,
        intercept: 1.0,
    }
}

fn table(values: &[f64], tail: Family) -> Family {
    Family::Table {
        values: values.to_vec(),
        tail: Some(Box::new(tail)),
    }
}

/// `b = (1, 2, 3, ...)`, `d = (1, 2, 3/2, 3/2, ...)`.
pub fn rich_are_old() -> RateModel {
    RateModel::from_families(linear(), table(&[1.0, 2.0], Family::Constant { value: 1.5 })).expect("valid fixture")
}

/// `b = (1, 2, 3, ...)`, `d = (1/4, 2, 3/2, 3/2, ...)`.
pub fn rich_die_young_1() -> RateModel {
    let d = RateSequence::new(table(&[1.0, 2.0], Family::Constant { value: 1.5 })).with_override(0, 0.25);
    RateModel::new(RateSequence::new(linear()), d).expect("valid fixture")
}

/// `b = (1/4, 2, 3, ...)`, `d = (1, 2, 3/2, 3/2, ...)`.
pub fn rich_die_young_2() -> RateModel {
    let b = RateSequence::new(linear()).with_override(0, 0.25);
    let d = RateSequence::new(table(&[1.0, 2.0], Family::Constant { value: 1.5 }));
    RateModel::new(b, d).expect("valid fixture")
}

/// `b = i + 1`, `d = 0`.
pub fn linear_no_death() -> RateModel {
    RateModel::from_families(linear(), Family::Constant { value: 0.0 }).expect("valid fixture")
}

/// `b = (i + 1)^exponent`, `d = 0`.
pub fn power_no_death(exponent: f64) -> RateModel {
    RateModel::from_families(Family::Power { scale: 1.0, exponent }, Family::Constant { value: 0.0 })
        .expect("valid fixture")
}

/// `b = i + 1`, `d = 2^{-i}`.
pub fn linear_geometric_death() -> RateModel {
    RateModel::from_families(linear(), Family::Geometric { scale: 1.0, ratio: 0.5 }).expect("valid fixture")
}

/// `b = i + 1`, `d = log(i + 2)`.
pub fn linear_log_death() -> RateModel {
    RateModel::from_families(
        linear(),
        Family::Log {
            scale: 1.0,
            offset: 2.0,
        },
    )
    .expect("valid fixture")
}

/// Every named fixture, for sweeps.
pub fn all() -> Vec<(&'static str, RateModel)> {
    vec![
        ("constant_2_1", RateModel::constant(2.0, 1.0).unwrap()),
        ("constant_5_1", RateModel::constant(5.0, 1.0).unwrap()),
        ("rich_are_old", rich_are_old()),
        ("rich_die_young_1", rich_die_young_1()),
        ("rich_die_young_2", rich_die_young_2()),
        ("linear_no_death", linear_no_death()),
        ("power_0.4_no_death", power_no_death(0.4)),
        ("linear_geometric_death", linear_geometric_death()),
        ("linear_log_death", linear_log_death()),
    ]
}

/// Looks up a fixture by the name used in [`all`].
pub fn by_name(name: &str) -> Option<RateModel> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
}
