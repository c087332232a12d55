//! Exploration of the branching random walk of birth positions.
//!
//! Every particle's displacement is a function of its Ulam–Harris label (via
//! its [`RngStream`] key), not of the visiting order, so runs that differ only
//! in caps or pruning barrier are coupled realizations of the same tree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{child_key, first_output, open_unit, RngStream};
use crate::sampler::{DisplacementLaw, ModelParams};
use crate::Real;

pub const DEFAULT_BARRIER: f64 = 12.0;
pub const DEFAULT_COUNT_CAP: u64 = 100_000;
pub const DEFAULT_NODE_CAP: u64 = 400_000_000;
pub const DEFAULT_FRONTIER_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("pruning barrier must be positive, got {0}")]
    Barrier(f64),
    #[error("{0} must be at least 1")]
    Cap(&'static str),
    #[error("window [{a}, {b}) with height factor {lambda} is malformed")]
    Window { a: f64, b: f64, lambda: f64 },
}

/// Generation window `a x² ≤ |u| < b x²` restricted to ancestral lines whose
/// maximum stays at most `lambda · x`. `b` and `lambda` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub a: T,
    pub b: T,
    pub lambda: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig<T> {
    /// Births at positions `≤ level_x` are counted.
    pub level_x: T,
    /// Particles born above `level_x + barrier_b` are discarded with their
    /// whole subtree.
    pub barrier_b: T,
    pub node_cap: u64,
    pub count_cap: u64,
    /// Largest pending-particle stack before the sample is declared work-capped.
    pub frontier_cap: usize,
    pub windows: Vec<Window<T>>,
}

impl<T: Real> ExploreConfig<T> {
    pub fn new(level_x: T) -> Self {
        Self {
            level_x,
            barrier_b: T::lit(DEFAULT_BARRIER),
            node_cap: DEFAULT_NODE_CAP,
            count_cap: DEFAULT_COUNT_CAP,
            frontier_cap: DEFAULT_FRONTIER_CAP,
            windows: Vec::new(),
        }
    }

    pub fn with_barrier(mut self, barrier_b: T) -> Self {
        self.barrier_b = barrier_b;
        self
    }

    pub fn with_count_cap(mut self, cap: u64) -> Self {
        self.count_cap = cap;
        self
    }

    pub fn with_node_cap(mut self, cap: u64) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn with_windows(mut self, windows: Vec<Window<T>>) -> Self {
        self.windows = windows;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.barrier_b > T::zero()) {
            return Err(ConfigError::Barrier(self.barrier_b.as_f64()));
        }
        if self.node_cap == 0 {
            return Err(ConfigError::Cap("node_cap"));
        }
        if self.count_cap == 0 {
            return Err(ConfigError::Cap("count_cap"));
        }
        if self.frontier_cap == 0 {
            return Err(ConfigError::Cap("frontier_cap"));
        }
        for w in &self.windows {
            if !(w.a >= T::zero() && w.b >= w.a && w.lambda >= T::zero()) {
                return Err(ConfigError::Window {
                    a: w.a.as_f64(),
                    b: w.b.as_f64(),
                    lambda: w.lambda.as_f64(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountStatus {
    Exact,
    /// The count reached `count_cap`; the true value is at least that.
    CountCapped,
    /// Exploration hit the node or frontier cap; the value is unusable.
    WorkCapped,
}

impl CountStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountStatus::Exact => "exact",
            CountStatus::CountCapped => "count_capped",
            CountStatus::WorkCapped => "work_capped",
        }
    }

    /// Combines the statuses of summands: work caps dominate count caps.
    pub fn combine(self, other: CountStatus) -> CountStatus {
        use CountStatus::*;
        match (self, other) {
            (WorkCapped, _) | (_, WorkCapped) => WorkCapped,
            (CountCapped, _) | (_, CountCapped) => CountCapped,
            _ => Exact,
        }
    }
}

impl std::str::FromStr for CountStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(CountStatus::Exact),
            "count_capped" => Ok(CountStatus::CountCapped),
            "work_capped" => Ok(CountStatus::WorkCapped),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

/// One sampled count with its censoring status and work accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredCount {
    pub value: u64,
    pub status: CountStatus,
    /// Particles discarded above the pruning barrier.
    pub pruned_count: u64,
    /// Particles whose birth position was drawn.
    pub work: u64,
    /// `pruned_count · e^{-B}`: bound on the expected number of discarded
    /// subtrees that would have produced a counted birth.
    pub bias_bound: f64,
    /// One entry per configured window, same order.
    pub window_counts: Vec<u64>,
}

pub fn pruning_bias_bound(pruned_count: u64, barrier_b: f64) -> f64 {
    if pruned_count == 0 {
        return 0.0;
    }
    pruned_count as f64 * (-barrier_b).exp()
}

#[derive(Clone, Copy)]
struct Node<T> {
    /// Birth position.
    position: T,
    /// Maximum birth position along the ancestral line, this node included.
    path_max: T,
    key: u64,
    depth: u32,
}

/// What the visitor sees for each particle that survives pruning.
struct Visit<T> {
    position: T,
    path_max: T,
    depth: u32,
}

enum Stop {
    Exhausted,
    Visitor,
    NodeCap,
    FrontierCap,
}

struct Walk {
    stop: Stop,
    work: u64,
    pruned: u64,
}

/// Reusable exploration state; keeping one per worker avoids reallocating the
/// frontier for every sample.
pub struct TreeExplorer<T> {
    law: DisplacementLaw<T>,
    config: ExploreConfig<T>,
    stack: Vec<Node<T>>,
}

impl<T: Real> TreeExplorer<T> {
    pub fn new(params: &ModelParams<T>, config: &ExploreConfig<T>) -> Self {
        Self {
            law: DisplacementLaw::new(params),
            config: config.clone(),
            stack: Vec::with_capacity(256),
        }
    }

    pub fn config(&self) -> &ExploreConfig<T> {
        &self.config
    }

    /// Depth-first exploration of the tree rooted at a particle started at
    /// `start`. The visitor returns `false` to stop early.
    fn walk<F: FnMut(&Visit<T>) -> bool>(&mut self, start: T, root_key: u64, mut visit: F) -> Walk {
        let prune_above = self.config.level_x + self.config.barrier_b;
        let node_cap = self.config.node_cap;
        let frontier_cap = self.config.frontier_cap;
        self.stack.clear();
        let mut walk = Walk { stop: Stop::Exhausted, work: 0, pruned: 0 };
        let mut pending = [(start, T::neg_infinity(), root_key, 0u32); 2];
        let mut n_pending = 1;
        loop {
            for &(from, parent_max, key, depth) in &pending[..n_pending] {
                if walk.work >= node_cap {
                    walk.stop = Stop::NodeCap;
                    return walk;
                }
                walk.work += 1;
                let position = from + self.law.quantile(open_unit(first_output(key)));
                if position > prune_above {
                    walk.pruned += 1;
                    continue;
                }
                let path_max = parent_max.max(position);
                if !visit(&Visit { position, path_max, depth }) {
                    walk.stop = Stop::Visitor;
                    return walk;
                }
                if self.stack.len() >= frontier_cap {
                    walk.stop = Stop::FrontierCap;
                    return walk;
                }
                self.stack.push(Node { position, path_max, key, depth });
            }
            let Some(parent) = self.stack.pop() else {
                return walk;
            };
            for (i, slot) in pending.iter_mut().enumerate() {
                *slot = (parent.position, parent.path_max, child_key(parent.key, i as u64), parent.depth + 1);
            }
            n_pending = 2;
        }
    }

    /// Samples `N_x` for a root started at `start`; the pruning barrier stays
    /// at `level_x + barrier_b`.
    pub fn sample_from(&mut self, start: T, rng: &RngStream) -> CensoredCount {
        let level = self.config.level_x;
        let x2 = level * level;
        let windows: Vec<(f64, f64, T)> = self
            .config
            .windows
            .iter()
            .map(|w| ((w.a * x2).as_f64(), (w.b * x2).as_f64(), w.lambda * level))
            .collect();
        let mut window_counts = vec![0u64; windows.len()];
        let mut count = 0u64;
        let cap = self.config.count_cap;
        let walk = self.walk(start, rng.key(), |v| {
            if v.position <= level {
                count += 1;
                let g = v.depth as f64;
                for (c, (lo, hi, top)) in window_counts.iter_mut().zip(&windows) {
                    if *lo <= g && g < *hi && v.path_max <= *top {
                        *c += 1;
                    }
                }
                if count >= cap {
                    return false;
                }
            }
            true
        });
        let status = match walk.stop {
            Stop::Exhausted => CountStatus::Exact,
            Stop::Visitor => CountStatus::CountCapped,
            Stop::NodeCap | Stop::FrontierCap => CountStatus::WorkCapped,
        };
        CensoredCount {
            value: count,
            status,
            pruned_count: walk.pruned,
            work: walk.work,
            bias_bound: pruning_bias_bound(walk.pruned, self.config.barrier_b.as_f64()),
            window_counts,
        }
    }

    pub fn sample(&mut self, rng: &RngStream) -> CensoredCount {
        self.sample_from(T::zero(), rng)
    }

    pub fn sample_min(&mut self, rng: &RngStream) -> MinSample<T> {
        let mut min = T::infinity();
        let walk = self.walk(T::zero(), rng.key(), |v| {
            min = min.min(v.position);
            true
        });
        let status = match walk.stop {
            Stop::Exhausted | Stop::Visitor => CountStatus::Exact,
            Stop::NodeCap | Stop::FrontierCap => CountStatus::WorkCapped,
        };
        MinSample { value: min, status, work: walk.work }
    }
}

/// Samples `N_x`, the number of births at or below `config.level_x`, for a
/// tree rooted at 0.
pub fn explore_tree<T: Real>(params: &ModelParams<T>, config: &ExploreConfig<T>, rng: &RngStream) -> CensoredCount {
    TreeExplorer::new(params, config).sample(rng)
}

/// [`explore_tree`] for a root started at `start`.
pub fn explore_tree_from<T: Real>(
    params: &ModelParams<T>,
    start: T,
    config: &ExploreConfig<T>,
    rng: &RngStream,
) -> CensoredCount {
    TreeExplorer::new(params, config).sample_from(start, rng)
}

/// Minimum birth position over the explored (pruned, capped) tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSample<T> {
    pub value: T,
    pub status: CountStatus,
    pub work: u64,
}

/// All-time minimal birth position of a tree rooted at 0. Nothing is
/// counted; pruning uses `level_x + barrier_b` as usual.
pub fn sample_alltime_min<T: Real>(params: &ModelParams<T>, config: &ExploreConfig<T>, rng: &RngStream) -> MinSample<T> {
    TreeExplorer::new(params, config).sample_min(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boundary() -> ModelParams<f64> {
        ModelParams::boundary()
    }

    #[test]
    fn bias_bound_arithmetic() {
        assert_eq!(pruning_bias_bound(0, 12.0), 0.0);
        let b = pruning_bias_bound(100, 12.0);
        assert!((b - 100.0 * (-12.0_f64).exp()).abs() < 1e-18);
        assert!((b - 6.1e-4).abs() < 1e-5);
    }

    #[test]
    fn config_validation() {
        let ok = ExploreConfig::new(0.0_f64);
        assert!(ok.validate().is_ok());
        assert!(ok.clone().with_barrier(0.0).validate().is_err());
        assert!(ok.clone().with_count_cap(0).validate().is_err());
        assert!(ok.clone().with_node_cap(0).validate().is_err());
        let bad = ok.with_windows(vec![Window { a: 2.0, b: 1.0, lambda: 1.0 }]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn status_combination() {
        use CountStatus::*;
        assert_eq!(Exact.combine(Exact), Exact);
        assert_eq!(Exact.combine(CountCapped), CountCapped);
        assert_eq!(CountCapped.combine(WorkCapped), WorkCapped);
        for s in [Exact, CountCapped, WorkCapped] {
            assert_eq!(s.as_str().parse::<CountStatus>().unwrap(), s);
        }
    }

    #[test]
    fn deterministic_per_stream() {
        let cfg = ExploreConfig::new(0.0).with_barrier(6.0);
        for id in 0..20 {
            let a = explore_tree(&boundary(), &cfg, &RngStream::new(5, id));
            let b = explore_tree(&boundary(), &cfg, &RngStream::new(5, id));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn caps_and_status_invariants() {
        let params = boundary();
        let base = ExploreConfig::new(0.0).with_barrier(6.0);
        for id in 0..300 {
            let rng = RngStream::new(11, id);
            let full = explore_tree(&params, &base, &rng);
            assert!(full.value <= full.work);
            if full.status == CountStatus::Exact {
                assert!(full.value < base.count_cap && full.work < base.node_cap);
            }
            let capped = explore_tree(&params, &base.clone().with_count_cap(3), &rng);
            assert!(capped.value <= 3 && capped.value <= full.value);
            if full.value >= 3 {
                assert_eq!(capped.status, CountStatus::CountCapped);
                assert_eq!(capped.value, 3);
            } else {
                assert_eq!(capped, full);
            }
            let small = explore_tree(&params, &base.clone().with_node_cap(10), &rng);
            assert!(small.work <= 10 && small.value <= full.value);
            if full.work > 10 {
                assert_eq!(small.status, CountStatus::WorkCapped);
            }
            assert!((full.bias_bound - pruning_bias_bound(full.pruned_count, 6.0)).abs() < 1e-300);
        }
    }

    #[test]
    fn full_window_reproduces_count_and_empty_window_is_zero() {
        let params = boundary();
        let cfg = ExploreConfig::new(2.0).with_barrier(6.0).with_windows(vec![
            Window { a: 0.0, b: f64::INFINITY, lambda: f64::INFINITY },
            Window { a: 0.5, b: 0.5, lambda: 4.0 },
            Window { a: 0.25, b: 4.0, lambda: 4.0 },
        ]);
        for id in 0..100 {
            let s = explore_tree(&params, &cfg, &RngStream::new(2, id));
            assert_eq!(s.window_counts[0], s.value);
            assert_eq!(s.window_counts[1], 0);
            assert!(s.window_counts[2] <= s.value);
        }
    }

    #[test]
    fn shifting_root_and_level_together_is_invariant() {
        let params = boundary();
        for id in 0..100 {
            let rng = RngStream::new(8, id);
            let a = explore_tree(&params, &ExploreConfig::new(0.0).with_barrier(5.0), &rng);
            let b = explore_tree_from(&params, -1.5, &ExploreConfig::new(-1.5).with_barrier(5.0), &rng);
            assert_eq!(a.value, b.value);
            assert_eq!(a.work, b.work);
        }
    }

    #[test]
    fn larger_barrier_never_decreases_exact_counts() {
        let params = boundary();
        for id in 0..200 {
            let rng = RngStream::new(4, id);
            let lo = explore_tree(&params, &ExploreConfig::new(0.0).with_barrier(3.0), &rng);
            let hi = explore_tree(&params, &ExploreConfig::new(0.0).with_barrier(5.0), &rng);
            assert!(hi.work >= lo.work);
            if lo.status == CountStatus::Exact && hi.status == CountStatus::Exact {
                assert!(hi.value >= lo.value);
            }
            let m_lo = sample_alltime_min(&params, &ExploreConfig::new(0.0).with_barrier(3.0), &rng);
            let m_hi = sample_alltime_min(&params, &ExploreConfig::new(0.0).with_barrier(5.0), &rng);
            assert!(m_hi.value <= m_lo.value);
        }
    }

    #[test]
    fn single_precision_explores() {
        let params = ModelParams::<f32>::boundary();
        let s = explore_tree(&params, &ExploreConfig::new(0.0_f32).with_barrier(4.0), &RngStream::new(1, 1));
        assert_eq!(s.status, CountStatus::Exact);
    }
}
