//! Continuous-time branching process: each individual with `i` children
//! waits `Exp(b(i) + d(i))`, then has a child with probability
//! `b(i)/(b(i)+d(i))` or dies.

mod sampler;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrete::{Observables, Outcome};
use crate::rates::RateModel;

pub use sampler::{sample_offspring_process, sample_remaining_lifetime, OffspringSample, OffspringSampler};

pub const DEFAULT_ALIVE_CAP: u64 = 100_000_000;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmjError {
    #[error("alive population {alive} exceeded the cap {cap}")]
    PopulationExplosion { alive: u64, cap: u64 },
    #[error("population is extinct")]
    Extinct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    id: u32,
}

impl Eq for Pending {}

impl Ord for Pending {
    // reversed for a min-heap on time
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
struct Rate {
    total: f64,
    birth: f64,
}

/// Continuous observables at the current clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousObservables {
    pub oldest_birth_time: f64,
    pub richest_birth_time: f64,
    pub max_children: u32,
    pub alive_count: u64,
    pub w_hat: f64,
}

/// One trajectory row: the discrete observables of the embedded tree plus
/// the clock and continuous observables. `cont` is `None` once extinct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmjObservables {
    pub discrete: Observables,
    pub t: f64,
    pub tau_n: f64,
    pub cont: Option<ContinuousObservables>,
}

#[derive(Debug, Clone)]
pub struct BPState {
    model: RateModel,
    rates: Vec<Rate>,
    // per individual, indexed by creation-ordered id
    parent: Vec<u32>,
    label: Vec<u32>,
    birth_time: Vec<f64>,
    degree: Vec<u32>,
    death_time: Vec<f64>,
    slot: Vec<u32>,
    classes: Vec<Vec<u32>>,
    queue: BinaryHeap<Pending>,
    t: f64,
    last_event: f64,
    births: u64,
    deaths: u64,
    alive: u64,
    oldest: u32,
    max_class: usize,
    max_deg_all: u32,
    tau: Vec<f64>,
    history: Option<Vec<Outcome>>,
    alive_cap: u64,
}

impl BPState {
    /// The root alone at time 0 with its first event scheduled.
    pub fn new<R: Rng + ?Sized>(model: RateModel, rng: &mut R) -> Self {
        let mut s = BPState {
            model,
            rates: Vec::new(),
            parent: Vec::new(),
            label: Vec::new(),
            birth_time: Vec::new(),
            degree: Vec::new(),
            death_time: Vec::new(),
            slot: Vec::new(),
            classes: Vec::new(),
            queue: BinaryHeap::new(),
            t: 0.0,
            last_event: 0.0,
            births: 0,
            deaths: 0,
            alive: 0,
            oldest: 0,
            max_class: 0,
            max_deg_all: 0,
            tau: Vec::new(),
            history: None,
            alive_cap: DEFAULT_ALIVE_CAP,
        };
        s.spawn(NONE, 1, 0.0, rng);
        s
    }

    pub fn with_alive_cap(mut self, cap: u64) -> Self {
        self.alive_cap = cap;
        self
    }

    /// Records the outcome of every event from now on.
    pub fn with_history(mut self) -> Self {
        self.history = Some(Vec::new());
        self
    }

    pub fn history(&self) -> Option<&[Outcome]> {
        self.history.as_deref()
    }

    pub fn model(&self) -> &RateModel {
        &self.model
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `N(t)`: births plus deaths so far.
    pub fn events(&self) -> u64 {
        self.births + self.deaths
    }

    pub fn births(&self) -> u64 {
        self.births
    }

    pub fn deaths(&self) -> u64 {
        self.deaths
    }

    pub fn alive_count(&self) -> u64 {
        self.alive
    }

    pub fn is_extinct(&self) -> bool {
        self.alive == 0
    }

    /// `tau[n-1]` is the time of the `n`-th event.
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn individuals(&self) -> usize {
        self.parent.len()
    }

    pub fn birth_time(&self, id: usize) -> f64 {
        self.birth_time[id]
    }

    pub fn death_time(&self, id: usize) -> Option<f64> {
        let d = self.death_time[id];
        d.is_finite().then_some(d)
    }

    pub fn degree(&self, id: usize) -> u32 {
        self.degree[id]
    }

    /// Parent id, `None` for the root.
    pub fn parent(&self, id: usize) -> Option<usize> {
        let p = self.parent[id];
        (p != NONE).then_some(p as usize)
    }

    /// Label of the matching vertex in the discrete chain.
    pub fn label(&self, id: usize) -> u32 {
        self.label[id]
    }

    pub fn is_alive(&self, id: usize) -> bool {
        self.slot[id] != NONE
    }

    fn rate(&mut self, c: usize) -> Rate {
        while self.rates.len() <= c {
            let i = self.rates.len();
            let (b, d) = (self.model.birth(i), self.model.death(i));
            self.rates.push(Rate {
                total: b + d,
                birth: b / (b + d),
            });
        }
        self.rates[c]
    }

    fn schedule<R: Rng + ?Sized>(&mut self, id: u32, rng: &mut R) {
        let c = self.degree[id as usize] as usize;
        let rate = self.rate(c).total;
        let e: f64 = Exp1.sample(rng);
        self.queue.push(Pending {
            time: self.t + e / rate,
            id,
        });
    }

    fn enter_class(&mut self, id: u32, c: usize) {
        if self.classes.len() <= c {
            self.classes.resize_with(c + 1, Vec::new);
        }
        self.slot[id as usize] = self.classes[c].len() as u32;
        self.classes[c].push(id);
        self.max_class = self.max_class.max(c);
    }

    fn leave_class(&mut self, id: u32, c: usize) {
        let pos = self.slot[id as usize] as usize;
        let class = &mut self.classes[c];
        class.swap_remove(pos);
        if pos < class.len() {
            let moved = class[pos];
            self.slot[moved as usize] = pos as u32;
        }
        self.slot[id as usize] = NONE;
        while self.max_class > 0 && self.classes[self.max_class].is_empty() {
            self.max_class -= 1;
        }
    }

    fn spawn<R: Rng + ?Sized>(&mut self, parent: u32, label: u32, time: f64, rng: &mut R) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(parent);
        self.label.push(label);
        self.birth_time.push(time);
        self.degree.push(0);
        self.death_time.push(f64::INFINITY);
        self.slot.push(NONE);
        self.enter_class(id, 0);
        self.alive += 1;
        self.schedule(id, rng);
        id
    }

    /// Pops and resolves the next event. Returns `None` when extinct.
    fn pop<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Outcome> {
        let Pending { time, id } = self.queue.pop()?;
        assert!(
            time > self.last_event || self.events() == 0,
            "event times must strictly increase"
        );
        self.t = time;
        self.last_event = time;
        let c = self.degree[id as usize] as usize;
        let p_birth = self.rate(c).birth;
        let n = self.events() + 1;
        self.tau.push(time);
        let outcome = if p_birth >= 1.0 || rng.random::<f64>() < p_birth {
            self.births += 1;
            self.leave_class(id, c);
            self.degree[id as usize] += 1;
            self.enter_class(id, c + 1);
            self.max_deg_all = self.max_deg_all.max(c as u32 + 1);
            self.schedule(id, rng);
            let child_label = (n + 1) as u32;
            self.spawn(id, child_label, time, rng);
            Outcome::Birth {
                parent: self.label[id as usize],
                child: child_label,
            }
        } else {
            self.deaths += 1;
            self.leave_class(id, c);
            self.death_time[id as usize] = time;
            self.alive -= 1;
            if id == self.oldest && self.alive > 0 {
                while !self.is_alive(self.oldest as usize) {
                    self.oldest += 1;
                }
            }
            Outcome::Death(self.label[id as usize])
        };
        if let Some(h) = self.history.as_mut() {
            h.push(outcome);
        }
        Some(outcome)
    }

    /// Pops events until `N = n` or extinction; returns whether the
    /// population is still alive.
    pub fn run_until_events<R: Rng + ?Sized>(&mut self, n: u64, rng: &mut R) -> bool {
        while self.events() < n {
            if self.pop(rng).is_none() {
                break;
            }
        }
        self.alive > 0
    }

    /// Pops all events with time `<= t_end` and sets the clock to `t_end`.
    pub fn run_until_time<R: Rng + ?Sized>(&mut self, t_end: f64, rng: &mut R) -> Result<(), CmjError> {
        assert!(t_end >= self.t, "t_end is behind the clock");
        while self.queue.peek().is_some_and(|p| p.time <= t_end) {
            self.pop(rng);
            if self.alive > self.alive_cap {
                return Err(CmjError::PopulationExplosion {
                    alive: self.alive,
                    cap: self.alive_cap,
                });
            }
        }
        self.t = t_end;
        Ok(())
    }

    fn richest(&self) -> Option<u32> {
        self.classes.get(self.max_class)?.iter().copied().min()
    }

    /// Birth times of the oldest and richest alive individuals, with
    /// `W_hat = alive * exp(-lambda_star * t)`.
    pub fn continuous_observables(&self, lambda_star: f64) -> Result<ContinuousObservables, CmjError> {
        if self.alive == 0 {
            return Err(CmjError::Extinct);
        }
        let richest = self.richest().ok_or(CmjError::Extinct)?;
        Ok(ContinuousObservables {
            oldest_birth_time: self.birth_time[self.oldest as usize],
            richest_birth_time: self.birth_time[richest as usize],
            max_children: self.max_class as u32,
            alive_count: self.alive,
            w_hat: self.alive as f64 * (-lambda_star * self.t).exp(),
        })
    }

    /// Observables of the embedded tree `T_{N+1}`, in discrete labels.
    pub fn observe(&self) -> Observables {
        let n = self.events() + 1;
        if self.alive == 0 {
            return Observables {
                n,
                survived: false,
                alive_count: 0,
                oldest: None,
                richest: None,
                max_deg_alive: None,
                max_deg_all: self.max_deg_all,
            };
        }
        Observables {
            n,
            survived: true,
            alive_count: self.alive,
            oldest: Some(self.label[self.oldest as usize]),
            richest: self.richest().map(|id| self.label[id as usize]),
            max_deg_alive: Some(self.max_class as u32),
            max_deg_all: self.max_deg_all,
        }
    }

    pub fn observe_all(&self, lambda_star: f64) -> CmjObservables {
        CmjObservables {
            discrete: self.observe(),
            t: self.t,
            tau_n: self.tau.last().copied().unwrap_or(0.0),
            cont: self.continuous_observables(lambda_star).ok(),
        }
    }

    /// Observables when the embedded tree reaches each size `n` (ascending),
    /// i.e. after `n - 1` events; stops after the first extinct row.
    pub fn observe_at_sizes<R: Rng + ?Sized>(
        &mut self,
        sizes: &[u64],
        lambda_star: f64,
        rng: &mut R,
    ) -> Vec<CmjObservables> {
        let mut out = Vec::with_capacity(sizes.len());
        for &n in sizes {
            self.run_until_events(n.saturating_sub(1), rng);
            out.push(self.observe_all(lambda_star));
            if self.alive == 0 {
                break;
            }
        }
        out
    }

    /// Observables at each time in `times` (ascending); stops after the
    /// first extinct row.
    pub fn observe_at_times<R: Rng + ?Sized>(
        &mut self,
        times: &[f64],
        lambda_star: f64,
        rng: &mut R,
    ) -> Result<Vec<CmjObservables>, CmjError> {
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            self.run_until_time(t, rng)?;
            out.push(self.observe_all(lambda_star));
            if self.alive == 0 {
                break;
            }
        }
        Ok(out)
    }

    /// Runs to `N = n_events`, recording every `stride` events and at the end.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        n_events: u64,
        stride: u64,
        lambda_star: f64,
        rng: &mut R,
    ) -> Vec<CmjObservables> {
        let stride = stride.max(1);
        let mut out = Vec::new();
        loop {
            let next = (self.events() / stride + 1) * stride;
            self.run_until_events(next.min(n_events), rng);
            let done = self.events() >= n_events || self.alive == 0;
            if self.events().is_multiple_of(stride) || done {
                out.push(self.observe_all(lambda_star));
            }
            if done {
                return out;
            }
        }
    }
}
