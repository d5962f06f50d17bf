use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use super::ExperimentError;
use crate::analysis::{self, stats, ChainLaw};
use crate::cmj::{sample_offspring_process, BPState, OffspringSampler};
use crate::discrete::Outcome;
use crate::discrete::TreeState;
use crate::malthus::{limiting_degree_distribution, mu_hat, solve_malthusian, DegreeKind, OffspringDistribution};
use crate::par;
use crate::rates::{fixtures, DerivedSequences, RateModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Embedding,
    Mdp,
    Lifetime,
    Bounds,
    DegreeDist,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Embedding,
        Suite::Mdp,
        Suite::Lifetime,
        Suite::Bounds,
        Suite::DegreeDist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Embedding => "embedding",
            Suite::Mdp => "mdp",
            Suite::Lifetime => "lifetime",
            Suite::Bounds => "bounds",
            Suite::DegreeDist => "degree-dist",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Multiplies every Monte Carlo sample count.
    pub scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 1, scale: 1.0 }
    }
}

impl VerifyOptions {
    fn n(&self, base: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(100)
    }
}

fn check(name: &str, passed: bool, values: &[(&str, f64)]) -> Check {
    Check {
        name: name.to_string(),
        passed,
        values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

pub fn run_suite(suite: Suite, opts: VerifyOptions) -> Result<VerifyReport, ExperimentError> {
    let checks = match suite {
        Suite::Embedding => embedding(opts)?,
        Suite::Mdp => mdp(opts)?,
        Suite::Lifetime => lifetime(opts)?,
        Suite::Bounds => bounds(opts)?,
        Suite::DegreeDist => degree_dist(opts)?,
    };
    Ok(VerifyReport {
        suite,
        seed: opts.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Empirical law of the first `steps` outcomes of the continuous process.
pub fn cmj_outcome_law(model: &RateModel, steps: u64, samples: usize, seed: u64) -> BTreeMap<Vec<Outcome>, f64> {
    let runs = par::map_batches(samples, seed, |n, rng| {
        (0..n)
            .map(|_| {
                let mut s = BPState::new(model.clone(), rng).with_history();
                s.run_until_events(steps, rng);
                s.history().unwrap_or_default().to_vec()
            })
            .collect::<Vec<_>>()
    });
    stats::empirical_law(runs.into_iter().flatten())
}

/// Expected total-variation distance between a law and the empirical law
/// of `n` exact draws from it (normal approximation per cell).
pub fn tv_noise_floor(law: &ChainLaw, n: usize) -> f64 {
    let n = n as f64;
    0.5 * law
        .probs
        .values()
        .map(|p| (2.0 * p * (1.0 - p) / (std::f64::consts::PI * n)).sqrt())
        .sum::<f64>()
}

fn embedding(o: VerifyOptions) -> Result<Vec<Check>, ExperimentError> {
    let m = RateModel::constant(2.0, 1.0)?;
    let law = analysis::enumerate_small_chain(&m, 5)?;
    let n = o.n(1_000_000);
    let emp = cmj_outcome_law(&m, 5, n, o.seed);
    let tv = stats::tv_distance(&law.probs, &emp);
    Ok(vec![
        check(
            "mass_is_one",
            (law.total_mass() - 1.0).abs() < 1e-12,
            &[("mass", law.total_mass())],
        ),
        check(
            "cmj_vs_exact_tv_n5",
            tv < 0.015,
            &[
                ("tv", tv),
                ("samples", n as f64),
                ("noise_floor", tv_noise_floor(&law, n)),
            ],
        ),
    ])
}

/// Criterion-grade MDP model: `b(i) = (i+1)^0.4`, `d = 0` at the first `k`
/// with `phi2(k) >= 40`.
pub fn mdp_setup() -> (RateModel, usize) {
    let m = fixtures::power_no_death(0.4);
    let k = analysis::index_for_phi2(&m, 40.0, 1 << 22).expect("phi2 diverges");
    (m, k)
}

fn mdp(o: VerifyOptions) -> Result<Vec<Check>, ExperimentError> {
    let mut rng = par::stream_rng(o.seed, 0);
    let c = RateModel::constant(2.0, 1.0)?;
    let e = analysis::mdp_estimate(&c, 180, 1.0, o.n(20_000), &mut rng)?;
    let exact = Gamma::new(180.0, 3.0).expect("valid").cdf(40.0).ln() / 20.0;
    let (m, k) = mdp_setup();
    let z1 = analysis::mdp_estimate(&m, k, 1.0, o.n(4_000), &mut rng)?;
    let t = analysis::tilted_expectation_estimate(&m, k, 1.0, 2.0, 1.0, o.n(4_000), &mut rng)?;
    Ok(vec![
        check(
            "erlang_exact_tail",
            (e.estimate - exact).abs() <= 3.0 * e.std_error,
            &[("estimate", e.estimate), ("exact", exact), ("se", e.std_error)],
        ),
        check(
            "mdp_z1",
            (z1.estimate + 0.5).abs() <= 0.15,
            &[
                ("estimate", z1.estimate),
                ("se", z1.std_error),
                ("phi2", z1.phi2),
                ("k", k as f64),
            ],
        ),
        check(
            "tilted_theta1_y2_z1",
            (t.estimate - 0.5).abs() <= 0.2,
            &[("estimate", t.estimate), ("se", t.std_error)],
        ),
    ])
}

fn lifetime(o: VerifyOptions) -> Result<Vec<Check>, ExperimentError> {
    let mut checks = Vec::new();
    let affine = RateModel::from_families(
        crate::rates::Family::Affine {
            slope: 1.0,
            intercept: 1.0,
        },
        crate::rates::Family::Constant { value: 1.0 },
    )?;
    for (name, m) in [
        ("ks_exp1_b_const", RateModel::constant(2.0, 1.0)?),
        ("ks_exp1_b_affine", affine),
    ] {
        let sampler = OffspringSampler::from_model(m);
        let n = o.n(100_000);
        let ls: Vec<f64> = par::map_batches(n, o.seed, |n, rng| {
            (0..n)
                .map(|_| crate::cmj::sample_remaining_lifetime(&sampler, 0, rng).unwrap_or(f64::INFINITY))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
        let ks = stats::ks_test(&ls, |x| 1.0 - (-x).exp())?;
        checks.push(check(
            name,
            ks.p_value > 0.01,
            &[("statistic", ks.statistic), ("p_value", ks.p_value)],
        ));
    }
    let mut rng = par::stream_rng(o.seed, 1);
    let r = analysis::lifetime_tail_rate(&fixtures::rich_die_young_1(), &[8.0], o.n(100_000), &mut rng)?;
    checks.push(check(
        "rdy1_rate_t8",
        (r[0].rate - 1.25).abs() <= 0.2,
        &[("rate", r[0].rate), ("se", r[0].std_error), ("target", 1.25)],
    ));
    let r = analysis::lifetime_tail_rate(&fixtures::rich_are_old(), &[4.0, 6.0, 8.0], o.n(100_000), &mut rng)?;
    let gaps: Vec<f64> = r.iter().map(|x| (x.rate - 1.5).abs()).collect();
    checks.push(check(
        "rao_rates_approach_d_star",
        gaps.windows(2).all(|w| w[1] < w[0]),
        &[("rate_t4", r[0].rate), ("rate_t6", r[1].rate), ("rate_t8", r[2].rate)],
    ));
    Ok(checks)
}

fn bounds(o: VerifyOptions) -> Result<Vec<Check>, ExperimentError> {
    let mut checks = Vec::new();
    let mut worst_tele = 0.0f64;
    let mut dtail_ok = true;
    for (_, m) in fixtures::all() {
        let seqs = DerivedSequences::new(m);
        let dist = OffspringDistribution::new(&seqs);
        let mut acc = 0.0;
        for k in 0..=1000 {
            worst_tele = worst_tele.max((acc + dist.tail(k) - 1.0).abs());
            acc += dist.pmf(k);
        }
        dtail_ok &= dist.dtail_bound_check(10_000).is_ok();
    }
    checks.push(check(
        "telescoping_mass",
        worst_tele <= 1e-12,
        &[("max_error", worst_tele)],
    ));
    checks.push(check("dtail_upper_bound", dtail_ok, &[]));

    for (name, m) in [
        ("constant_2_1", RateModel::constant(2.0, 1.0)?),
        ("rich_are_old", fixtures::rich_are_old()),
    ] {
        let seqs = DerivedSequences::new(m.clone());
        let dist = OffspringDistribution::new(&seqs);
        let sampler = OffspringSampler::new(&seqs);
        let n = o.n(100_000);
        let counts = par::map_batches(n, o.seed ^ 0xD, |n, rng| {
            let mut c = [0u64; 11];
            for _ in 0..n {
                let d = sample_offspring_process(&sampler, 0, rng).children.unwrap_or(u64::MAX);
                c[d.min(10) as usize] += 1;
            }
            c
        })
        .into_iter()
        .fold([0u64; 11], |mut a, c| {
            a.iter_mut().zip(c).for_each(|(x, y)| *x += y);
            a
        });
        let mut expected: Vec<f64> = (0..10).map(|k| dist.pmf(k)).collect();
        expected.push(dist.tail(10));
        let chi = stats::chi_square_test(&counts, &expected)?;
        checks.push(check(
            &format!("offspring_tail_chi2_{name}"),
            chi.p_value > 0.01,
            &[("statistic", chi.statistic), ("p_value", chi.p_value)],
        ));
    }

    let rao = fixtures::rich_are_old();
    let seqs = DerivedSequences::new(rao.clone());
    let analytic = mu_hat(&seqs, 2.0, 1e-12).finite().unwrap_or(f64::NAN);
    let sampler = OffspringSampler::new(&seqs);
    let n = o.n(100_000);
    let draws: Vec<f64> = par::map_batches(n, o.seed ^ 0xA, |n, rng| {
        (0..n)
            .map(|_| {
                sample_offspring_process(&sampler, usize::MAX, rng)
                    .birth_times
                    .iter()
                    .map(|s| (-2.0 * s).exp())
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let (mean, se) = stats::mean_se(&draws).unwrap_or((f64::NAN, f64::NAN));
    checks.push(check(
        "mu_hat_monte_carlo_identity",
        (mean - analytic).abs() <= 3.0 * se,
        &[("analytic", analytic), ("monte_carlo", mean), ("se", se)],
    ));

    let mut rng = par::stream_rng(o.seed, 2);
    for (name, m, k, t, tp) in [
        ("survdeg_constant_2_1", RateModel::constant(2.0, 1.0)?, 3, 2.0, 3.0),
        ("survdeg_no_death", RateModel::constant(2.0, 0.0)?, 3, 1.0, 4.0),
        ("survdeg_rich_are_old", fixtures::rich_are_old(), 2, 1.5, 2.5),
    ] {
        let e = analysis::survdeg_probability(&m, k, t, tp, o.n(1_000_000), &mut rng)?;
        checks.push(check(
            name,
            e.consistent,
            &[
                ("estimate", e.estimate),
                ("se", e.std_error),
                ("upper", e.upper.unwrap_or(f64::NAN)),
                ("lower", e.lower.unwrap_or(f64::NAN)),
            ],
        ));
    }
    Ok(checks)
}

/// Grows one surviving tree to `n` and returns its degree counts.
fn surviving_tree(model: &RateModel, n: u64, seed: u64) -> Option<TreeState> {
    (0..64).find_map(|attempt| {
        let mut rng = par::stream_rng(seed, attempt);
        let mut s = TreeState::with_capacity(model.clone(), n);
        s.advance_to(n, &mut rng);
        (!s.is_extinct()).then_some(s)
    })
}

fn degree_dist(o: VerifyOptions) -> Result<Vec<Check>, ExperimentError> {
    let mut checks = Vec::new();
    let n = o.n(400_000) as u64;
    for (name, m) in [
        ("constant_2_1", RateModel::constant(2.0, 1.0)?),
        ("rich_are_old", fixtures::rich_are_old()),
    ] {
        let seqs = DerivedSequences::new(m.clone());
        let sol = solve_malthusian(&seqs, 1e-12)?;
        let dist = OffspringDistribution::new(&seqs);
        let Some(tree) = surviving_tree(&m, n, o.seed) else {
            checks.push(check(&format!("degree_{name}"), false, &[]));
            continue;
        };
        let (alive, born) = tree.degree_counts();
        for (kind, counts) in [(DegreeKind::Alive, alive), (DegreeKind::Born, born)] {
            let law = limiting_degree_distribution(&sol, &dist, kind, 10, 1e-12)?;
            let total: u64 = counts.iter().sum();
            let worst = (0..=10)
                .map(|k| (counts.get(k).copied().unwrap_or(0) as f64 / total as f64 - law.probs[k]).abs())
                .fold(0.0, f64::max);
            let label = match kind {
                DegreeKind::Alive => "alive",
                DegreeKind::Born => "born",
            };
            checks.push(check(
                &format!("degree_{label}_{name}"),
                worst < 0.01,
                &[("max_abs_error", worst), ("vertices", total as f64)],
            ));
        }
    }
    Ok(checks)
}
