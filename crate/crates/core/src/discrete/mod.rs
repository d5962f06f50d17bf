//! The discrete chain: at each step an alive vertex is chosen with
//! probability proportional to `b(deg) + d(deg)`, then killed with
//! probability `d/(b+d)` or given a new child.

mod sumtree;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rates::RateModel;

pub use sumtree::SumTree;

const NONE: u32 = u32::MAX;

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Birth { parent: u32, child: u32 },
    Death(u32),
    AlreadyExtinct,
}

/// Observables of `T_n`. Label fields are `None` once the tree is extinct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub n: u64,
    pub survived: bool,
    pub alive_count: u64,
    pub oldest: Option<u32>,
    pub richest: Option<u32>,
    pub max_deg_alive: Option<u32>,
    pub max_deg_all: u32,
}

#[derive(Debug, Clone, Copy)]
struct Rate {
    weight: f64,
    kill: f64,
}

#[derive(Debug, Clone)]
pub struct TreeState {
    model: RateModel,
    rates: Vec<Rate>,
    // indexed by label; label 0 is unused
    parent: Vec<u32>,
    degree: Vec<u32>,
    // position within `classes[degree]`, NONE when dead or never created
    slot: Vec<u32>,
    classes: Vec<Vec<u32>>,
    weights: SumTree,
    alive: u64,
    n_steps: u64,
    oldest: u32,
    max_class: usize,
    max_deg_all: u32,
}

impl TreeState {
    /// `T_1`: a single alive root labelled 1.
    pub fn new(model: RateModel) -> Self {
        let mut s = TreeState {
            model,
            rates: Vec::new(),
            parent: vec![0, 0],
            degree: vec![0, 0],
            slot: vec![NONE, NONE],
            classes: Vec::new(),
            weights: SumTree::new(16),
            alive: 0,
            n_steps: 1,
            oldest: 1,
            max_class: 0,
            max_deg_all: 0,
        };
        s.insert(1, 0);
        s
    }

    /// Pre-allocates label storage for a run to `n_target`.
    pub fn with_capacity(model: RateModel, n_target: u64) -> Self {
        let mut s = TreeState::new(model);
        let extra = (n_target as usize + 2).saturating_sub(s.parent.len());
        s.parent.reserve(extra);
        s.degree.reserve(extra);
        s.slot.reserve(extra);
        s
    }

    pub fn model(&self) -> &RateModel {
        &self.model
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn is_extinct(&self) -> bool {
        self.alive == 0
    }

    pub fn alive_count(&self) -> u64 {
        self.alive
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.total()
    }

    /// Highest label ever created (labels of killed steps are skipped).
    pub fn max_label(&self) -> u32 {
        (self.parent.len() - 1) as u32
    }

    /// Parent label, `0` for the root and for labels never created.
    pub fn parent(&self, v: u32) -> u32 {
        self.parent.get(v as usize).copied().unwrap_or(0)
    }

    pub fn degree(&self, v: u32) -> u32 {
        self.degree.get(v as usize).copied().unwrap_or(0)
    }

    pub fn is_alive(&self, v: u32) -> bool {
        self.slot.get(v as usize).is_some_and(|&s| s != NONE)
    }

    /// Alive labels in increasing order.
    pub fn alive_labels(&self) -> Vec<u32> {
        (1..self.slot.len() as u32).filter(|&v| self.is_alive(v)).collect()
    }

    fn rate(&mut self, c: usize) -> Rate {
        while self.rates.len() <= c {
            let i = self.rates.len();
            let (b, d) = (self.model.birth(i), self.model.death(i));
            self.rates.push(Rate {
                weight: b + d,
                kill: d / (b + d),
            });
        }
        self.rates[c]
    }

    fn refresh_class(&mut self, c: usize) {
        let w = self.rate(c).weight * self.classes[c].len() as f64;
        self.weights.set(c, w);
    }

    fn insert(&mut self, v: u32, c: usize) {
        if self.classes.len() <= c {
            self.classes.resize_with(c + 1, Vec::new);
        }
        self.slot[v as usize] = self.classes[c].len() as u32;
        self.classes[c].push(v);
        self.refresh_class(c);
        self.max_class = self.max_class.max(c);
        self.alive += 1;
    }

    fn remove(&mut self, v: u32, c: usize) {
        let pos = self.slot[v as usize] as usize;
        let class = &mut self.classes[c];
        class.swap_remove(pos);
        if pos < class.len() {
            let moved = class[pos];
            self.slot[moved as usize] = pos as u32;
        }
        self.slot[v as usize] = NONE;
        self.refresh_class(c);
        self.alive -= 1;
        while self.max_class > 0 && self.classes[self.max_class].is_empty() {
            self.max_class -= 1;
        }
    }

    /// Vertex counts by degree: `(alive, ever born)`. Dead vertices keep
    /// their final degree.
    pub fn degree_counts(&self) -> (Vec<u64>, Vec<u64>) {
        let mut alive = vec![0u64; self.classes.len()];
        let mut born = vec![0u64; self.classes.len()];
        for v in 1..self.parent.len() {
            if v > 1 && self.parent[v] == 0 {
                continue;
            }
            let k = self.degree[v] as usize;
            if born.len() <= k {
                born.resize(k + 1, 0);
                alive.resize(k + 1, 0);
            }
            born[k] += 1;
            if self.slot[v] != NONE {
                alive[k] += 1;
            }
        }
        (alive, born)
    }

    /// Draws an alive vertex with probability proportional to
    /// `b(deg) + d(deg)`: a degree class by weight, then a uniform member.
    pub fn select_vertex<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        if self.alive == 0 {
            return None;
        }
        let u = rng.random::<f64>() * self.weights.total();
        let c = self.weights.find(u);
        let class = &self.classes[c];
        Some(class[rng.random_range(0..class.len())])
    }

    /// Advances `T_n -> T_{n+1}`. A no-op once extinct.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Outcome {
        let Some(v) = self.select_vertex(rng) else {
            return Outcome::AlreadyExtinct;
        };
        let c = self.degree[v as usize] as usize;
        let kill = self.rate(c).kill;
        let n = self.n_steps;
        self.n_steps += 1;
        self.parent.push(0);
        self.degree.push(0);
        self.slot.push(NONE);
        if kill > 0.0 && rng.random::<f64>() < kill {
            self.remove(v, c);
            if v == self.oldest && self.alive > 0 {
                while !self.is_alive(self.oldest) {
                    self.oldest += 1;
                }
            }
            Outcome::Death(v)
        } else {
            let child = (n + 1) as u32;
            self.remove(v, c);
            self.degree[v as usize] += 1;
            self.insert(v, c + 1);
            self.max_deg_all = self.max_deg_all.max(c as u32 + 1);
            self.parent[child as usize] = v;
            self.insert(child, 0);
            Outcome::Birth { parent: v, child }
        }
    }

    /// Steps until `n_steps == n_target` or extinction.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, n_target: u64, rng: &mut R) {
        while self.n_steps < n_target && self.alive > 0 {
            self.step(rng);
            #[cfg(debug_assertions)]
            if self.n_steps.is_multiple_of(1 << 16) {
                self.check_weights();
            }
        }
    }

    /// Recomputes the total selection weight from scratch.
    pub fn recomputed_weight(&self) -> f64 {
        self.classes
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let (b, d) = (self.model.birth(c), self.model.death(c));
                (b + d) * m.len() as f64
            })
            .sum()
    }

    #[cfg(debug_assertions)]
    fn check_weights(&self) {
        let exact = self.recomputed_weight();
        let tree = self.weights.total();
        assert!(
            (exact - tree).abs() <= 1e-9 * exact.max(1.0),
            "weight tree drifted: {tree} vs {exact}"
        );
    }

    pub fn observe(&self) -> Observables {
        if self.alive == 0 {
            return Observables {
                n: self.n_steps,
                survived: false,
                alive_count: 0,
                oldest: None,
                richest: None,
                max_deg_alive: None,
                max_deg_all: self.max_deg_all,
            };
        }
        let top = &self.classes[self.max_class];
        Observables {
            n: self.n_steps,
            survived: true,
            alive_count: self.alive,
            oldest: Some(self.oldest),
            richest: top.iter().copied().min(),
            max_deg_alive: Some(self.max_class as u32),
            max_deg_all: self.max_deg_all,
        }
    }

    /// Observables at each checkpoint `n` (ascending), stopping after the
    /// first extinct row.
    pub fn observe_at<R: Rng + ?Sized>(&mut self, checkpoints: &[u64], rng: &mut R) -> Vec<Observables> {
        let mut out = Vec::with_capacity(checkpoints.len());
        for &c in checkpoints {
            self.advance_to(c, rng);
            out.push(self.observe());
            if self.alive == 0 {
                break;
            }
        }
        out
    }

    /// Runs to `n_target`, recording observables every `stride` steps and
    /// at the final step.
    pub fn run<R: Rng + ?Sized>(&mut self, n_target: u64, stride: u64, rng: &mut R) -> Vec<Observables> {
        assert!(n_target >= self.n_steps, "n_target is behind the current step");
        let stride = stride.max(1);
        let mut out = Vec::new();
        loop {
            let next = ((self.n_steps / stride) + 1) * stride;
            self.advance_to(next.min(n_target), rng);
            let done = self.n_steps >= n_target || self.alive == 0;
            if self.n_steps.is_multiple_of(stride) || done {
                out.push(self.observe());
            }
            if done {
                return out;
            }
        }
    }
}
