use pavd_core::cmj::{sample_offspring_process, OffspringSampler};
use pavd_core::malthus::{
    lambda_underline, limiting_degree_distribution, mu_hat, predicted_constants, solve_malthusian, DegreeKind, MuHat,
    OffspringDistribution,
};
use pavd_core::par;
use pavd_core::rates::{assumption_report, fixtures, DerivedSequences, Family, RateModel};
use proptest::prelude::*;

fn seqs(m: RateModel) -> DerivedSequences {
    DerivedSequences::new(m)
}

// sum_k prod_{i<k} b(i)/(lambda+b(i)+d(i)) over k = 1..=terms
fn direct_mu(m: &RateModel, lambda: f64, terms: usize) -> f64 {
    let mut log_p = 0.0;
    let mut sum = 0.0;
    for i in 0..terms {
        let b = m.birth(i);
        log_p += (b / (lambda + b + m.death(i))).ln();
        sum += log_p.exp();
    }
    sum
}

#[test]
fn mu_hat_examples() {
    let c = seqs(RateModel::constant(2.0, 1.0).unwrap());
    assert!((mu_hat(&c, 2.0, 1e-13).finite().unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let none = seqs(RateModel::constant(2.0, 0.0).unwrap());
    assert_eq!(mu_hat(&none, 0.0, 1e-12), MuHat::DivergesCertified);

    let lin = seqs(fixtures::linear_no_death());
    let v = mu_hat(&lin, 2.0, 1e-10).finite().unwrap();
    // terms are 2/((k+1)(k+2)) for k >= 1: the direct sum misses ~2/N
    let oracle = direct_mu(lin.model(), 2.0, 1_000_000) + 2.0 / 1_000_001.0;
    assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
}

#[test]
fn underline_examples() {
    assert_eq!(
        lambda_underline(&seqs(RateModel::constant(3.0, 1.0).unwrap())),
        Some(0.0)
    );
    assert_eq!(lambda_underline(&seqs(fixtures::linear_no_death())), Some(1.0));
    assert_eq!(lambda_underline(&seqs(fixtures::power_no_death(0.5))), Some(0.0));

    let lin = fixtures::linear_no_death();
    assert!(mu_hat(&seqs(lin.clone()), 1.2, 1e-9).finite().is_some());
    let partial = |n| direct_mu(&lin, 0.9, n);
    assert!(partial(100_000) > 2.0 * partial(100));

    let sqrt = fixtures::power_no_death(0.5);
    let (a, b) = (direct_mu(&sqrt, 0.05, 200_000), direct_mu(&sqrt, 0.05, 400_000));
    assert!((b - a).abs() < 1e-9 * b);
}

#[test]
fn malthusian_examples() {
    for c in [2.0, 5.0] {
        let s = solve_malthusian(&seqs(RateModel::constant(c, 1.0).unwrap()), 1e-12).unwrap();
        assert!((s.lambda_star - (c - 1.0)).abs() < 1e-9);
        assert_eq!(s.lambda_underline, Some(0.0));
    }
}

// Terms decay like k^{-(lambda + 3/2)} once d is constant 3/2 and b(i) = i+1;
// the tail past N is about N T_N / (lambda + 1/2).
fn direct_mu_with_tail(m: &RateModel, lambda: f64, terms: usize) -> f64 {
    let last: f64 = (0..terms)
        .map(|i| (m.birth(i) / (lambda + m.total(i))).ln())
        .sum::<f64>()
        .exp();
    direct_mu(m, lambda, terms) + terms as f64 * last / (lambda + 0.5)
}

#[test]
fn rich_die_young_lambda_against_bisection() {
    let m = fixtures::rich_die_young_1();
    let (mut lo, mut hi) = (0.5, 2.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if direct_mu_with_tail(&m, mid, 100_000) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = solve_malthusian(&seqs(m), 1e-12).unwrap();
    assert!(
        (s.lambda_star - 0.5 * (lo + hi)).abs() < 1e-9,
        "{} vs {lo}",
        s.lambda_star
    );
}

#[test]
fn offspring_examples() {
    let c = seqs(RateModel::constant(2.0, 1.0).unwrap());
    let d = OffspringDistribution::new(&c);
    assert!((d.tail(3) - 8.0 / 27.0).abs() < 1e-15);

    let z = seqs(RateModel::constant(2.0, 0.0).unwrap());
    let d = OffspringDistribution::new(&z);
    assert_eq!(d.p_infinite(), 1.0);
    assert!((0..50).all(|k| d.tail(k) == 1.0));

    let rao = seqs(fixtures::rich_are_old());
    let d = OffspringDistribution::new(&rao);
    assert!((d.pmf(1) - 0.25).abs() < 1e-15);
    let sampler = OffspringSampler::new(&rao);
    let n = 1_000_000;
    let ones: u64 = par::map_batches(n, 9, |m, rng| {
        (0..m)
            .filter(|_| sample_offspring_process(&sampler, 0, rng).children == Some(1))
            .count() as u64
    })
    .into_iter()
    .sum();
    let p = ones as f64 / n as f64;
    assert!((p - 0.25).abs() < 3.0 * (0.25 * 0.75 / n as f64).sqrt(), "{p}");
}

#[test]
fn tail_bound_examples() {
    let c = seqs(RateModel::constant(2.0, 1.0).unwrap());
    let r = OffspringDistribution::new(&c).dtail_bound_check(100).unwrap();
    assert!(r.min_slack >= 0.0);
    let lhs = (2.0f64 / 3.0).ln();
    let rhs = -1.0 / 3.0 - 1.0 / 18.0;
    assert!(lhs <= rhs);
    assert!((OffspringDistribution::new(&c).log_tail(1) - lhs).abs() < 1e-15);

    let z = seqs(RateModel::constant(2.0, 0.0).unwrap());
    let r = OffspringDistribution::new(&z).dtail_bound_check(100).unwrap();
    assert_eq!((r.min_slack, r.max_slack), (0.0, 0.0));

    let p = seqs(
        RateModel::from_families(
            Family::Power {
                scale: 1.0,
                exponent: 0.4,
            },
            Family::Constant { value: 0.1 },
        )
        .unwrap(),
    );
    assert!(OffspringDistribution::new(&p).dtail_bound_check(10_000).is_ok());
}

#[test]
fn degree_laws() {
    for (name, m) in fixtures::all() {
        let s = seqs(m);
        let Ok(sol) = solve_malthusian(&s, 1e-12) else {
            continue;
        };
        let d = OffspringDistribution::new(&s);
        for kind in [DegreeKind::Alive, DegreeKind::Born] {
            let law = limiting_degree_distribution(&sol, &d, kind, 200, 1e-10)
                .unwrap_or_else(|e| panic!("{name} {kind:?}: {e}"));
            let total: f64 = law.probs.iter().sum::<f64>() + law.tail_mass;
            assert!((total - 1.0).abs() < 1e-9 + law.error_bound, "{name} {kind:?}: {total}");
        }
    }
    let s = seqs(fixtures::linear_no_death());
    let sol = solve_malthusian(&s, 1e-12).unwrap();
    let d = OffspringDistribution::new(&s);
    let a = limiting_degree_distribution(&sol, &d, DegreeKind::Alive, 50, 1e-12).unwrap();
    let b = limiting_degree_distribution(&sol, &d, DegreeKind::Born, 50, 1e-12).unwrap();
    for (x, y) in a.probs.iter().zip(&b.probs) {
        assert!(
            (x - y).abs() <= a.error_bound + b.error_bound + 1e-15,
            "{x} {y} {} {} {}",
            a.error_bound,
            b.error_bound,
            sol.lambda_star
        );
    }
}

#[test]
fn predicted_constants_examples() {
    let m = RateModel::constant(2.0, 1.0).unwrap();
    let s = seqs(m.clone());
    let sol = solve_malthusian(&s, 1e-12).unwrap();
    let p = predicted_constants(&sol, &s, &assumption_report(&m), 1e6, None).unwrap();
    let ln2 = 2.0f64.ln();
    assert!((p.maxdeg_over_log_n.unwrap() - 1.0 / ln2).abs() < 1e-9);
    assert!((p.i_exponent.unwrap() - (1.0 - 1.0 / (4.0 * ln2))).abs() < 1e-9);
    assert!((p.o_exponent.unwrap() - 0.5).abs() < 1e-9);

    let m = fixtures::rich_die_young_1();
    let s = seqs(m.clone());
    let sol = solve_malthusian(&s, 1e-12).unwrap();
    let p = predicted_constants(&sol, &s, &assumption_report(&m), 1e6, None).unwrap();
    assert!((p.o_exponent.unwrap() - 1.25 / (sol.lambda_star + 1.25)).abs() < 1e-12);

    let m = fixtures::power_no_death(0.4);
    let s = seqs(m.clone());
    let sol = solve_malthusian(&s, 1e-12).unwrap();
    let p = predicted_constants(&sol, &s, &assumption_report(&m), 1e6, None).unwrap();
    let so = p.second_order.unwrap();
    assert!((so.i_coefficient - sol.lambda_star.powi(2) / 2.0).abs() < 1e-12);
}

#[test]
fn mu_hat_monte_carlo_identity() {
    let rao = seqs(fixtures::rich_are_old());
    let analytic = mu_hat(&rao, 2.0, 1e-12).finite().unwrap();
    let sampler = OffspringSampler::new(&rao);
    let xs: Vec<f64> = par::map_batches(100_000, 4, |n, rng| {
        (0..n)
            .map(|_| {
                let o = sample_offspring_process(&sampler, usize::MAX, rng);
                o.birth_times.iter().map(|s| (-2.0 * s).exp()).sum::<f64>()
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - analytic).abs() < 3.0 * sd / n.sqrt(), "{mean} vs {analytic}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mu_hat_decreasing(c in 0.5f64..6.0, d in 0.1f64..3.0, slope in 0.0f64..2.0, l1 in 0.05f64..5.0, gap in 0.01f64..5.0) {
        let m = RateModel::from_families(
            Family::Affine { slope, intercept: c },
            Family::Constant { value: d },
        ).unwrap();
        let s = seqs(m);
        if let (Some(a), Some(b)) = (mu_hat(&s, l1, 1e-10).finite(), mu_hat(&s, l1 + gap, 1e-10).finite()) {
            prop_assert!(a >= b - 1e-9);
        }
    }

    #[test]
    fn constant_rates_identity(c in 0.2f64..8.0, i in 0usize..4) {
        let lambda = [0.5, 1.0, 2.0, 5.0][i];
        let s = seqs(RateModel::constant(c, 1.0).unwrap());
        let v = mu_hat(&s, lambda, 1e-12).finite().unwrap();
        prop_assert!((v - c / (lambda + 1.0)).abs() < 1e-10);
    }

    #[test]
    fn telescoping(idx in 0usize..9, k_max in 0usize..2000) {
        let (_, m) = fixtures::all().swap_remove(idx);
        let s = seqs(m);
        let d = OffspringDistribution::new(&s);
        let mass: f64 = (0..=k_max).map(|k| d.pmf(k)).sum::<f64>() + d.tail(k_max + 1);
        prop_assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_children_respect_the_tail(seed in any::<u64>()) {
        let s = seqs(RateModel::constant(2.0, 1.0).unwrap());
        let sampler = OffspringSampler::new(&s);
        let mut rng = par::stream_rng(seed, 0);
        let o = sample_offspring_process(&sampler, 5, &mut rng);
        let d = o.children.unwrap() as usize;
        prop_assert_eq!(o.birth_times.len(), d.min(5));
        prop_assert!(o.birth_times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(o.birth_times.last().is_none_or(|&s| s < o.lifetime.unwrap()));
    }
}
