/// Complete binary sum tree over a growable set of non-negative leaf
/// weights. Internal nodes are recomputed from their children on every
/// update, so the root never drifts from the sum of the leaves.
#[derive(Debug, Clone)]
pub struct SumTree {
    cap: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(leaves: usize) -> Self {
        let cap = leaves.max(1).next_power_of_two();
        SumTree {
            cap,
            nodes: vec![0.0; 2 * cap],
        }
    }

    pub fn len(&self) -> usize {
        self.cap
    }

    pub fn is_empty(&self) -> bool {
        self.total() <= 0.0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        if leaf < self.cap {
            self.nodes[self.cap + leaf]
        } else {
            0.0
        }
    }

    fn grow(&mut self, leaf: usize) {
        let cap = (leaf + 1).next_power_of_two();
        let mut nodes = vec![0.0; 2 * cap];
        nodes[cap..cap + self.cap].copy_from_slice(&self.nodes[self.cap..]);
        for i in (1..cap).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        self.cap = cap;
        self.nodes = nodes;
    }

    pub fn set(&mut self, leaf: usize, w: f64) {
        debug_assert!(w >= 0.0);
        if leaf >= self.cap {
            self.grow(leaf);
        }
        let mut i = self.cap + leaf;
        self.nodes[i] = w;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf `c` with `prefix(c) <= u < prefix(c + 1)` for `u` in `[0, total)`.
    /// Never returns a zero-weight leaf.
    pub fn find(&self, mut u: f64) -> usize {
        let mut i = 1;
        while i < self.cap {
            let left = self.nodes[2 * i];
            let right = self.nodes[2 * i + 1];
            if (u < left || right <= 0.0) && left > 0.0 {
                i *= 2;
            } else {
                u -= left;
                i = 2 * i + 1;
            }
        }
        i - self.cap
    }
}
