use serde::{Deserialize, Serialize};

use super::{MalthusError, MalthusianSolution};
use crate::rates::{DerivedSequences, Family, Regime, RegimeReport, TransformKind, Verdict};

/// Which limit theorem the predicted constants come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitTheorem {
    /// Finite descendants fail and `b -> inf`: `O_n` converges.
    NoDeathLike,
    /// `d -> d* < R`, `b -> inf`.
    ConvergingDeath,
    /// `liminf d >= R`.
    RichDieYoung,
    /// `b -> c`, `d -> d* > 0`.
    ConvergingRates,
    None,
}

/// Second-order description of `log I_n`, `log O_n` and the maximal degree:
/// `(log I_n - i_centering) / normalizer -> i_coefficient` and
/// `(phi1(maxdeg) - maxdeg_centering) / normalizer -> maxdeg_coefficient`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrder {
    pub normalizer: f64,
    pub o_centering: Option<f64>,
    pub i_centering: f64,
    pub i_coefficient: f64,
    pub maxdeg_centering: f64,
    pub maxdeg_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedAsymptotics {
    pub theorem: LimitTheorem,
    pub n: f64,
    pub lambda_star: f64,
    /// `lim log O_n / log n`.
    pub o_exponent: Option<f64>,
    /// `O_n` converges almost surely on survival.
    pub o_converges: bool,
    /// `lim log I_n / log n`.
    pub i_exponent: Option<f64>,
    /// `lim max_deg / log n`.
    pub maxdeg_over_log_n: Option<f64>,
    pub second_order: Option<SecondOrder>,
}

impl PredictedAsymptotics {
    fn empty(theorem: LimitTheorem, n: f64, lambda_star: f64) -> Self {
        PredictedAsymptotics {
            theorem,
            n,
            lambda_star,
            o_exponent: None,
            o_converges: false,
            i_exponent: None,
            maxdeg_over_log_n: None,
            second_order: None,
        }
    }
}

/// Whether `alpha = sum (d - d*)/(b + d)` converges, read off the death tail.
fn alpha_converges(seqs: &DerivedSequences) -> bool {
    match seqs.model().death_sequence().family.tail() {
        Some(Family::Constant { .. }) => true,
        Some(Family::Geometric { .. }) => true,
        Some(Family::Affine { slope, .. }) => *slope == 0.0,
        Some(Family::Power { exponent, .. }) => *exponent == 0.0,
        _ => false,
    }
}

/// Limit constants and centerings for `log O_n`, `log I_n` and the maximal
/// degree at size `n`. `r` overrides the default time change
/// `r(t) = lambda*/(lambda* + d*) t` in the converging-death centering.
pub fn predicted_constants(
    sol: &MalthusianSolution,
    seqs: &DerivedSequences,
    report: &RegimeReport,
    n: f64,
    r: Option<&dyn Fn(f64) -> f64>,
) -> Result<PredictedAsymptotics, MalthusError> {
    let lam = sol.lambda_star;
    let log_n = n.ln();
    let model = seqs.model();
    let b_lim = model.b_limit();
    let d_star = report.d_star;

    // converging birth and death rates: rescale time so that d* = 1
    if let (Some(Some(c)), Some(ds)) = (b_lim, d_star) {
        if ds > 0.0 && c > ds {
            let mut out = PredictedAsymptotics::empty(LimitTheorem::ConvergingRates, n, lam);
            if let Some(big_r) = report.r {
                let m = ds.min(big_r);
                out.o_exponent = Some(m / (lam + m));
            }
            out.i_exponent = Some(1.0 - lam / (2.0 * (lam + ds) * std::f64::consts::LN_2));
            out.maxdeg_over_log_n = Some(1.0 / std::f64::consts::LN_2);
            return Ok(out);
        }
    }

    let b_inf = report.b_to_infinity == Some(true);
    match report.regime {
        Regime::RichAreOld if report.finite_descendants == Verdict::Fails => {
            let mut out = PredictedAsymptotics::empty(LimitTheorem::NoDeathLike, n, lam);
            out.o_exponent = Some(0.0);
            out.o_converges = true;
            if b_inf && report.diverging_variance == Verdict::Holds {
                let t = log_n / lam;
                out.second_order = Some(SecondOrder {
                    normalizer: seqs.k_transform(TransformKind::K, t)?,
                    o_centering: None,
                    i_centering: 0.0,
                    i_coefficient: lam * lam / 2.0,
                    maxdeg_centering: t,
                    maxdeg_coefficient: lam / 2.0,
                });
            }
            Ok(out)
        }
        Regime::RichAreOld => {
            let ds = d_star.ok_or(MalthusError::NotApplicable)?;
            let mut out = PredictedAsymptotics::empty(LimitTheorem::ConvergingDeath, n, lam);
            let lead = ds / (lam + ds);
            out.o_exponent = Some(lead);
            out.i_exponent = Some(lead);
            if b_inf && report.diverging_variance == Verdict::Holds {
                let t = log_n / lam;
                let rt = match r {
                    Some(f) => f(t),
                    None if alpha_converges(seqs) => lam / (lam + ds) * t,
                    None => return Err(MalthusError::MissingR),
                };
                let ka = seqs.k_transform(TransformKind::KAlpha, rt)?;
                let center = lead * log_n + lam / (lam + ds) * ka;
                out.second_order = Some(SecondOrder {
                    normalizer: seqs.k_transform(TransformKind::K, log_n / (lam + ds))?,
                    o_centering: Some(center),
                    i_centering: center,
                    i_coefficient: lam * (lam + ds) / 2.0,
                    maxdeg_centering: (log_n - ka) / (lam + ds),
                    maxdeg_coefficient: (lam - ds) / 2.0,
                });
            }
            Ok(out)
        }
        Regime::RichDieYoung | Regime::Boundary => {
            let big_r = report.r.ok_or(MalthusError::NotApplicable)?;
            let mut out = PredictedAsymptotics::empty(LimitTheorem::RichDieYoung, n, lam);
            out.o_exponent = Some(big_r / (lam + big_r));
            Ok(out)
        }
        Regime::Unknown => Ok(PredictedAsymptotics::empty(LimitTheorem::None, n, lam)),
    }
}
