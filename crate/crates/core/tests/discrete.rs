use std::collections::BTreeMap;

use pavd_core::analysis::{chi_square_law, chi_square_test, enumerate_small_chain};
use pavd_core::discrete::{Observables, Outcome, TreeState};
use pavd_core::par::{self, stream_rng};
use pavd_core::rates::{fixtures, RateModel};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn b2d1() -> RateModel {
    RateModel::constant(2.0, 1.0).unwrap()
}

// A state reached by the given first outcomes, found by trying seeds.
fn reach(model: &RateModel, prefix: &[Outcome]) -> (TreeState, ChaCha8Rng) {
    for seed in 0.. {
        let mut rng = stream_rng(seed, 0);
        let mut s = TreeState::new(model.clone());
        if prefix.iter().all(|o| s.step(&mut rng) == *o) {
            return (s, rng);
        }
    }
    unreachable!()
}

fn selection_counts(s: &TreeState, draws: usize, seed: u64) -> BTreeMap<u32, u64> {
    let mut rng = stream_rng(seed, 1);
    let mut c = BTreeMap::new();
    for _ in 0..draws {
        *c.entry(s.select_vertex(&mut rng).unwrap()).or_insert(0u64) += 1;
    }
    c
}

// Selection probabilities straight from the definition.
fn selection_law(s: &TreeState) -> BTreeMap<u32, f64> {
    let m = s.model();
    let w: Vec<(u32, f64)> = s
        .alive_labels()
        .into_iter()
        .map(|v| (v, m.total(s.degree(v) as usize)))
        .collect();
    let total: f64 = w.iter().map(|x| x.1).sum();
    w.into_iter().map(|(v, x)| (v, x / total)).collect()
}

fn birth(parent: u32, child: u32) -> Outcome {
    Outcome::Birth { parent, child }
}

#[test]
fn initial_state() {
    for (_, m) in fixtures::all() {
        let s = TreeState::new(m);
        assert_eq!(s.alive_labels(), vec![1]);
        let o = s.observe();
        assert_eq!((o.n, o.oldest, o.richest, o.max_deg_all), (1, Some(1), Some(1), 0));
    }
    assert_eq!(TreeState::new(b2d1()).total_weight(), 3.0);
    assert_eq!(TreeState::new(fixtures::rich_die_young_1()).total_weight(), 1.25);
    let mut rng = stream_rng(0, 0);
    assert!((0..100).all(|_| TreeState::new(b2d1()).select_vertex(&mut rng) == Some(1)));
}

#[test]
fn small_state_selection() {
    let (s, _) = reach(&b2d1(), &[birth(1, 2)]);
    let c = selection_counts(&s, 100_000, 1);
    let chi = chi_square_test(&[c[&1], c[&2]], &[0.5, 0.5]).unwrap();
    assert!(chi.p_value > 0.001, "{chi:?}");

    // path 1-2-3: weights 2, 2, 1
    let lin = fixtures::linear_no_death();
    let (s, _) = reach(&lin, &[birth(1, 2), birth(2, 3)]);
    assert_eq!(selection_law(&s)[&3], 0.2);
    let c = selection_counts(&s, 100_000, 2);
    let chi = chi_square_test(&[c[&1], c[&2], c[&3]], &[0.4, 0.4, 0.2]).unwrap();
    assert!(chi.p_value > 0.001, "{chi:?}");

    // star at 1: weights 3, 1, 1
    let (s, _) = reach(&lin, &[birth(1, 2), birth(1, 3)]);
    assert_eq!(selection_law(&s)[&1], 0.6);
}

#[test]
fn selection_law_on_a_frozen_state() {
    let m = fixtures::rich_are_old();
    let mut s = TreeState::new(m);
    let mut seed = 0;
    while s.alive_count() < 100 {
        s = TreeState::new(s.model().clone());
        let mut rng = stream_rng(seed, 0);
        seed += 1;
        while !s.is_extinct() && s.alive_count() < 100 {
            s.step(&mut rng);
        }
    }
    let law = selection_law(&s);
    let mut rng = stream_rng(99, 0);
    let chi = chi_square_law(&law, (0..1_000_000).map(|_| s.select_vertex(&mut rng).unwrap()), 5.0).unwrap();
    assert!(chi.p_value > 0.001, "{chi:?}");
}

#[test]
fn first_step() {
    let mut rng = stream_rng(5, 0);
    let n = 300_000;
    let deaths = (0..n)
        .filter(|_| TreeState::new(b2d1()).step(&mut rng) == Outcome::Death(1))
        .count();
    let p = deaths as f64 / n as f64;
    assert!((p - 1.0 / 3.0).abs() < 4.0 * (2.0 / 9.0 / n as f64).sqrt(), "{p}");

    let mut s = TreeState::new(RateModel::constant(1.0, 0.0).unwrap());
    let mut rng = stream_rng(6, 0);
    assert!((0..10_000).all(|_| matches!(s.step(&mut rng), Outcome::Birth { .. })));
}

fn outcome_sequence(model: &RateModel, steps: usize, rng: &mut ChaCha8Rng) -> Vec<Outcome> {
    let mut s = TreeState::new(model.clone());
    let mut out = Vec::new();
    for _ in 0..steps {
        match s.step(rng) {
            Outcome::AlreadyExtinct => break,
            o => out.push(o),
        }
    }
    out
}

#[test]
fn two_step_sequence_probability() {
    let law = enumerate_small_chain(&b2d1(), 2).unwrap();
    let target = vec![birth(1, 2), birth(2, 3)];
    let p = law.get(&target);
    assert!((p - 2.0 / 3.0 * 0.5 * 2.0 / 3.0).abs() < 1e-15);
    let n = 200_000;
    let mut rng = stream_rng(7, 0);
    let hits = (0..n)
        .filter(|_| outcome_sequence(&b2d1(), 2, &mut rng) == target)
        .count();
    let f = hits as f64 / n as f64;
    assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{f} vs {p}");
}

#[test]
fn outcome_laws_match_enumeration() {
    for (model, seed) in [(b2d1(), 11), (fixtures::rich_die_young_1(), 12)] {
        let law = enumerate_small_chain(&model, 5).unwrap();
        for m in 1..=5 {
            let marginal = law.marginal(m);
            let samples: Vec<Vec<Outcome>> = par::map_batches(100_000, seed + m as u64, |k, rng| {
                (0..k).map(|_| outcome_sequence(&model, m, rng)).collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect();
            let chi = chi_square_law(&marginal, samples, 5.0).unwrap();
            assert!(chi.p_value > 0.001, "n = {}: {chi:?}", m + 1);
        }
    }
}

#[test]
fn no_death_keeps_every_label() {
    let mut s = TreeState::new(fixtures::linear_no_death());
    s.advance_to(10, &mut stream_rng(0, 0));
    assert_eq!(s.alive_labels(), (1..=10).collect::<Vec<_>>());
    assert_eq!(s.observe().oldest, Some(1));
}

#[test]
fn alive_fraction_for_constant_rates() {
    // alive grows at rate b - d, events at rate b + d
    let n = 200_000;
    let mut fracs = Vec::new();
    for seed in 0.. {
        let mut s = TreeState::with_capacity(b2d1(), n);
        s.advance_to(n, &mut stream_rng(seed, 0));
        if !s.is_extinct() {
            fracs.push(s.alive_count() as f64 / n as f64);
        }
        if fracs.len() == 5 {
            break;
        }
    }
    for f in fracs {
        assert!((f - 1.0 / 3.0).abs() < 0.01, "{f}");
    }
}

#[test]
fn deterministic_given_seed() {
    let run = || TreeState::new(fixtures::rich_die_young_1()).run(20_000, 500, &mut stream_rng(42, 3));
    assert_eq!(run(), run());
}

// Brute-force observables from the label arrays.
fn brute(s: &TreeState) -> Observables {
    let alive = s.alive_labels();
    let max_deg = alive.iter().map(|&v| s.degree(v)).max();
    let all = (1..=s.max_label()).map(|v| s.degree(v)).max().unwrap_or(0);
    Observables {
        n: s.n_steps(),
        survived: !alive.is_empty(),
        alive_count: alive.len() as u64,
        oldest: alive.first().copied(),
        richest: max_deg.and_then(|m| alive.iter().copied().find(|&v| s.degree(v) == m)),
        max_deg_alive: max_deg,
        max_deg_all: all,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_invariants(idx in 0usize..9, seed in any::<u64>(), steps in 1u64..400) {
        let (_, m) = fixtures::all().swap_remove(idx);
        let mut s = TreeState::new(m);
        let mut rng = stream_rng(seed, 0);
        let mut born = vec![1u32];
        for _ in 0..steps {
            if let Outcome::Birth { parent, child } = s.step(&mut rng) {
                prop_assert!(parent < child);
                prop_assert_eq!(child as u64, s.n_steps());
                born.push(child);
            }
            prop_assert_eq!(s.observe(), brute(&s));
        }
        for &v in &born[1..] {
            prop_assert!(s.parent(v) < v && s.parent(v) >= 1);
        }
        for &v in &born {
            let kids = born.iter().filter(|&&c| c != 1 && s.parent(c) == v).count() as u32;
            prop_assert_eq!(s.degree(v), kids);
        }
        let w = s.recomputed_weight();
        prop_assert!((s.total_weight() - w).abs() <= 1e-9 * w.max(1.0));
    }

    #[test]
    fn extinct_state_is_frozen(seed in any::<u64>()) {
        let m = RateModel::constant(1.0, 3.0).unwrap();
        let mut s = TreeState::new(m);
        let mut rng = stream_rng(seed, 0);
        while !s.is_extinct() {
            s.step(&mut rng);
        }
        let before = s.observe();
        for _ in 0..10 {
            prop_assert_eq!(s.step(&mut rng), Outcome::AlreadyExtinct);
        }
        prop_assert_eq!(s.observe(), before);
        prop_assert_eq!(s.n_steps(), before.n);
    }
}
