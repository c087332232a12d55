//! Continuous-time branching Brownian motion: populations at fixed times and
//! stopping lines.
//!
//! Each particle draws its lifetime and displacement from a stream keyed by
//! its label, as in [`crate::brw`]. A particle that reaches the stopping
//! level is retired there: its future is an independent copy started at the
//! level (branching property at the line, memoryless lifetimes), so times
//! are never tracked.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::brw::{CensoredCount, CountStatus, TreeExplorer};
use crate::rng::{child_key, RngStream};
use crate::sampler::{edge_unchecked, sample_increment, sample_lifetime, Direction, EdgeOutcome, ModelParams};
use crate::Real;

pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;
pub const DEFAULT_LINE_NODE_CAP: u64 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PopulationError {
    #[error("time must be finite and nonnegative, got {0}")]
    Time(f64),
    #[error("population exceeded {cap} particles before time {t}; lower t")]
    Cap { cap: usize, t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSnapshot<T> {
    pub time_t: T,
    /// Positions of the particles alive at `time_t`, in exploration order.
    pub positions: Vec<T>,
}

/// Positions at time `t` of a population started from one particle at 0.
pub fn simulate_population<T: Real>(
    params: &ModelParams<T>,
    t: T,
    cap: usize,
    rng: &RngStream,
) -> Result<PopulationSnapshot<T>, PopulationError> {
    let horizon = t.as_f64();
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(PopulationError::Time(horizon));
    }
    let mut positions = Vec::new();
    let mut stack = vec![(0.0f64, T::zero(), rng.key())];
    while let Some((born, pos, key)) = stack.pop() {
        let mut s = RngStream::from_key(key);
        let life = sample_lifetime(&mut s);
        if born + life >= horizon {
            if positions.len() >= cap {
                return Err(PopulationError::Cap { cap, t: horizon });
            }
            let dt = horizon - born;
            positions.push(if dt > 0.0 { pos + sample_increment(params, dt, &mut s) } else { pos });
            continue;
        }
        let split = pos + sample_increment(params, life, &mut s);
        let at = born + life;
        stack.push((at, split, child_key(key, 1)));
        stack.push((at, split, child_key(key, 0)));
        if stack.len() + positions.len() > cap {
            return Err(PopulationError::Cap { cap, t: horizon });
        }
    }
    Ok(PopulationSnapshot { time_t: t, positions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    /// Derivative martingale `Σ X e^{-X}`.
    pub d: f64,
    /// Additive martingale `Σ e^{-X}`.
    pub w: f64,
    /// Minimal position.
    pub m: f64,
    pub size: u64,
}

pub fn snapshot_functionals<T: Real>(snapshot: &PopulationSnapshot<T>) -> Functionals {
    let (mut d, mut w, mut m) = (0.0, 0.0, f64::INFINITY);
    for &x in &snapshot.positions {
        let x = x.as_f64();
        let e = (-x).exp();
        d += x * e;
        w += e;
        m = m.min(x);
    }
    Functionals { d, w, m, size: snapshot.positions.len() as u64 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinPosition {
    pub value: f64,
    /// Sum over discarded particles of their expected number of time-`t`
    /// descendants below the final minimum: bounds the probability that
    /// discarding changed the result.
    pub pruned_mass: f64,
    pub work: u64,
}

/// Minimal position at time `t` without building the population: a particle
/// at `(s, y)` is dropped once `e^{t-s} P(y + X_{t-s} ≤ m)` falls below `eps`,
/// `m` being the best minimum so far (or a trial level while none is known).
/// The tree is the one [`simulate_population`] builds for the same stream.
pub fn sample_min_position<T: Real>(params: &ModelParams<T>, t: f64, eps: f64, rng: &RngStream) -> MinPosition {
    let mu = params.mu().as_f64();
    let s2 = params.sigma2().as_f64();
    // P(N(mean, var) ≤ z) · e^{rem}
    let mass = |rem: f64, y: f64, thr: f64| {
        if rem <= 0.0 {
            return if y <= thr { 1.0 } else { 0.0 };
        }
        let z = (thr - y - mu * rem) / (s2 * rem).sqrt();
        rem.exp() * 0.5 * erfc(-z / std::f64::consts::SQRT_2)
    };
    let mut trial = 1.5 * t.max(1.0).ln() + 3.0;
    loop {
        let mut best = f64::INFINITY;
        let mut pruned_mass = 0.0;
        let mut work = 0u64;
        let mut stack = vec![(0.0f64, 0.0f64, rng.key())];
        while let Some((born, pos, key)) = stack.pop() {
            work += 1;
            let thr = best.min(trial);
            let m = mass(t - born, pos, thr);
            if m < eps {
                pruned_mass += m;
                continue;
            }
            let mut s = RngStream::from_key(key);
            let life = sample_lifetime(&mut s);
            if born + life >= t {
                let dt = t - born;
                let end = if dt > 0.0 { pos + sample_increment(params, dt, &mut s).as_f64() } else { pos };
                best = best.min(end);
                continue;
            }
            let split = pos + sample_increment(params, life, &mut s).as_f64();
            stack.push((born + life, split, child_key(key, 1)));
            stack.push((born + life, split, child_key(key, 0)));
        }
        if best <= trial {
            return MinPosition { value: best, pruned_mass, work };
        }
        trial += 2.0;
    }
}

/// Stopping-line sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConfig<T> {
    pub level_x: T,
    /// For `level_x < 0`, particles dying above `level_x + barrier_b` are
    /// discarded with their subtree. Unused for `level_x > 0`, where every
    /// particle stays below the level.
    pub barrier_b: T,
    pub node_cap: u64,
    /// Stop once births reach this many.
    pub count_cap: u64,
}

impl<T: Real> LineConfig<T> {
    pub fn new(level_x: T) -> Self {
        Self {
            level_x,
            barrier_b: T::lit(crate::brw::DEFAULT_BARRIER),
            node_cap: DEFAULT_LINE_NODE_CAP,
            count_cap: u64::MAX,
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
}

/// One realization of the stopping line at `level_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSample<T> {
    pub level_x: T,
    /// Particles reaching the level.
    pub z_count: u64,
    /// Births before absorption at the level.
    pub births: u64,
    pub status: CountStatus,
    pub pruned_count: u64,
    /// Edges sampled.
    pub work: u64,
}

/// Samples the stopping line from a root at 0: up to the level when it is
/// positive, down to it otherwise. A root already at the level is on the line.
pub fn sample_line<T: Real>(params: &ModelParams<T>, config: &LineConfig<T>, rng: &RngStream) -> LineSample<T> {
    let x = config.level_x;
    let (direction, prune_above) = if x > T::zero() {
        (Direction::Up, T::infinity())
    } else {
        (Direction::Down, x + config.barrier_b)
    };
    let mut out = LineSample {
        level_x: x,
        z_count: 0,
        births: 0,
        status: CountStatus::Exact,
        pruned_count: 0,
        work: 0,
    };
    let mut stack = vec![(T::zero(), rng.key())];
    while let Some((start, key)) = stack.pop() {
        if out.work >= config.node_cap {
            out.status = CountStatus::WorkCapped;
            break;
        }
        out.work += 1;
        let gap = match direction {
            Direction::Up => x - start,
            Direction::Down => start - x,
        };
        let mut s = RngStream::from_key(key);
        match edge_unchecked(start, Some(gap.max(T::zero())), direction, params, &mut s) {
            EdgeOutcome::Crossed => out.z_count += 1,
            EdgeOutcome::Died(pos) => {
                out.births += 1;
                if out.births >= config.count_cap {
                    out.status = CountStatus::CountCapped;
                    break;
                }
                if pos > prune_above {
                    out.pruned_count += 1;
                    continue;
                }
                stack.push((pos, child_key(key, 1)));
                stack.push((pos, child_key(key, 0)));
            }
        }
    }
    out
}

/// `N_x` assembled from a stopping line and independent copies of `N`
/// started at the level, together with the line's `Z_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedSample<T> {
    pub count: CensoredCount,
    pub line: LineSample<T>,
}

/// Draws the line at `explorer.config().level_x` from stream split 0, then
/// copy `j` of `N` from split `j + 1`, each rooted at the level with the
/// explorer's barrier and caps, and returns
/// `(Z_x − 1) 1{x > 0} + Σ_{j < Z_x} N^{(j)}`.
pub fn sample_n_x_composed<T: Real>(
    params: &ModelParams<T>,
    explorer: &mut TreeExplorer<T>,
    line_config: &LineConfig<T>,
    rng: &RngStream,
) -> ComposedSample<T> {
    let x = explorer.config().level_x;
    let cap = explorer.config().count_cap;
    let barrier = explorer.config().barrier_b.as_f64();
    let mut lc = line_config.clone();
    lc.level_x = x;
    lc.count_cap = u64::MAX;
    let line = sample_line(params, &lc, &rng.split(0));
    let mut count = CensoredCount {
        value: 0,
        status: line.status,
        pruned_count: line.pruned_count,
        work: line.work,
        bias_bound: 0.0,
        window_counts: Vec::new(),
    };
    if line.status == CountStatus::Exact {
        if x > T::zero() {
            count.value = line.z_count - 1;
        }
        for j in 0..line.z_count {
            if count.value >= cap {
                count.value = cap;
                count.status = CountStatus::CountCapped;
                break;
            }
            let c = explorer.sample_from(x, &rng.split(j + 1));
            count.value += c.value;
            count.status = count.status.combine(c.status);
            count.pruned_count += c.pruned_count;
            count.work += c.work;
            if c.status == CountStatus::WorkCapped {
                break;
            }
        }
        if count.value >= cap && count.status != CountStatus::WorkCapped {
            count.value = cap;
            count.status = CountStatus::CountCapped;
        }
    }
    count.bias_bound = crate::brw::pruning_bias_bound(count.pruned_count, barrier);
    ComposedSample { count, line }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brw::ExploreConfig;

    fn params() -> ModelParams<f64> {
        ModelParams::boundary()
    }

    #[test]
    fn time_zero_is_single_particle() {
        let snap = simulate_population(&params(), 0.0, 10, &RngStream::new(1, 0)).unwrap();
        assert_eq!(snap.positions, vec![0.0]);
        let f = snapshot_functionals(&snap);
        assert_eq!((f.d, f.w, f.m, f.size), (0.0, 1.0, 0.0, 1));
    }

    #[test]
    fn population_cap_and_bad_time() {
        let r = RngStream::new(1, 0);
        assert!(matches!(simulate_population(&params(), 12.0, 100, &r), Err(PopulationError::Cap { .. })));
        assert!(simulate_population(&params(), -1.0, 100, &r).is_err());
        assert!(simulate_population(&params(), f64::NAN, 100, &r).is_err());
    }

    #[test]
    fn population_is_reproducible() {
        let r = RngStream::new(4, 2);
        let a = simulate_population(&params(), 3.0, 1000, &r).unwrap();
        let b = simulate_population(&params(), 3.0, 1000, &r).unwrap();
        assert_eq!(a, b);
        assert!(!a.positions.is_empty());
    }

    #[test]
    fn pruned_minimum_matches_full_population() {
        for id in 0..20 {
            let r = RngStream::new(8, id);
            let full = snapshot_functionals(&simulate_population(&params(), 4.0, 1 << 20, &r).unwrap()).m;
            let fast = sample_min_position(&params(), 4.0, 1e-9, &r);
            assert_eq!(full, fast.value, "sample {id}");
            assert!(fast.pruned_mass < 1e-3);
        }
    }

    #[test]
    fn line_at_zero_is_the_root() {
        let s = sample_line(&params(), &LineConfig::new(0.0), &RngStream::new(1, 1));
        assert_eq!((s.z_count, s.births, s.status), (1, 0, CountStatus::Exact));
    }

    #[test]
    fn positive_line_has_one_more_particle_than_births() {
        for id in 0..300 {
            let s = sample_line(&params(), &LineConfig::new(2.0), &RngStream::new(2, id));
            assert_eq!(s.status, CountStatus::Exact);
            assert_eq!(s.z_count, s.births + 1);
            assert_eq!(s.pruned_count, 0);
        }
    }

    #[test]
    fn negative_line_can_be_empty_and_respects_barrier() {
        let mut empty = 0;
        for id in 0..300 {
            let s = sample_line(&params(), &LineConfig::new(-1.0).with_barrier(3.0), &RngStream::new(3, id));
            assert_eq!(s.status, CountStatus::Exact);
            if s.z_count == 0 {
                empty += 1;
            }
        }
        assert!(empty > 0);
    }

    #[test]
    fn line_caps() {
        let s = sample_line(&params(), &LineConfig::new(5.0).with_node_cap(3), &RngStream::new(1, 0));
        assert!(s.work <= 3);
        let s = sample_line(&params(), &LineConfig::new(8.0).with_count_cap(2), &RngStream::new(1, 0));
        assert!(s.births <= 2);
    }

    #[test]
    fn composed_sample_structure() {
        let p = params();
        for x in [-1.0, 1.0] {
            let cfg = ExploreConfig::new(x).with_barrier(6.0);
            let mut ex = TreeExplorer::new(&p, &cfg);
            for id in 0..100 {
                let c = sample_n_x_composed(&p, &mut ex, &LineConfig::new(x), &RngStream::new(5, id));
                assert_eq!(c.count.status, CountStatus::Exact);
                if x > 0.0 {
                    assert!(c.count.value >= c.line.z_count - 1);
                }
                if c.line.z_count == 0 {
                    assert_eq!(c.count.value, 0);
                }
            }
        }
    }

    #[test]
    fn composed_count_cap() {
        let p = params();
        let cfg = ExploreConfig::new(3.0).with_barrier(6.0).with_count_cap(2);
        let mut ex = TreeExplorer::new(&p, &cfg);
        for id in 0..50 {
            let c = sample_n_x_composed(&p, &mut ex, &LineConfig::new(3.0), &RngStream::new(6, id));
            assert!(c.count.value <= 2);
            assert_eq!(c.count.status == CountStatus::CountCapped, c.count.value == 2);
        }
    }
}
