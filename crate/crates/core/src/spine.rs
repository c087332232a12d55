//! The spine random walk: Laplace steps with rate `sqrt(2)`.
//!
//! Many-to-one: for a functional `f` of the first `n` positions,
//! `E[Σ_{|u|=n} f(V(u_1), …, V(u_n))] = E[e^{S_n} f(S_1, …, S_n)]`.
//! The left side is estimated as `2ⁿ · Ê[f(W)]` with `W` a walk of
//! displacement-law steps: each of the `2ⁿ` ancestral lines of generation
//! `n` is such a walk, so linearity of expectation gives the factor `2ⁿ`
//! without any independence between lines.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{run_chunked, BatchError, SampleRange};
use crate::quad::{integrate_half_line, QuadError};
use crate::rng::RngStream;
use crate::sampler::{DisplacementLaw, ModelParams, SpineStepLaw};
use crate::stats::{tree_merge, EstimateCI, MeanAccumulator};
use crate::Real;

const CHUNK: u64 = 4096;

#[derive(Debug, Error)]
pub enum SpineError {
    #[error("functional is unbounded above; its spine-side estimator has infinite variance")]
    UnboundedAbove,
    #[error("upper cutoff {0} exceeds {MAX_UPPER}")]
    UpperTooHigh(f64),
    #[error("at most {MAX_STEPS} steps supported for many-to-one checks, got {0}")]
    TooManySteps(usize),
    #[error("the spine walk exists only in the boundary case")]
    NotBoundary,
    #[error("invalid probe parameters: {0}")]
    Parameters(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Batch(#[from] BatchError),
}

pub const MAX_UPPER: f64 = 2.0;
pub const MAX_STEPS: usize = 10;
/// Probes with fewer hits are flagged as sample-starved.
pub const MIN_HITS: u64 = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinePath<T> {
    /// `S_0, …, S_n`.
    pub values: Vec<T>,
    pub running_min: T,
    pub running_max: T,
}

impl<T: Real> SpinePath<T> {
    pub fn end(&self) -> T {
        *self.values.last().expect("path holds S_0")
    }
}

pub fn simulate_spine<T: Real, R: Rng + ?Sized>(n: usize, start: T, rng: &mut R) -> SpinePath<T> {
    let law = SpineStepLaw::<T>::boundary();
    let mut values = Vec::with_capacity(n + 1);
    let (mut s, mut lo, mut hi) = (start, start, start);
    values.push(s);
    for _ in 0..n {
        s = s + rng.sample(law);
        lo = lo.min(s);
        hi = hi.max(s);
        values.push(s);
    }
    SpinePath { values, running_min: lo, running_max: hi }
}

/// End point and running minimum (over `k ≤ n`, `S_0` included) of a walk
/// from 0 with steps drawn by `step`.
#[inline]
fn walk_end_min<F: FnMut() -> f64>(n: usize, mut step: F) -> (f64, f64) {
    let (mut s, mut lo) = (0.0f64, 0.0f64);
    for _ in 0..n {
        s += step();
        lo = lo.min(s);
    }
    (s, lo)
}

/// `1{S_n ≤ upper, min_{k≤n} S_k ≥ −floor}`; a missing bound is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathIndicator {
    pub upper: Option<f64>,
    pub floor: Option<f64>,
}

impl PathIndicator {
    pub fn one() -> Self {
        Self { upper: None, floor: None }
    }

    pub fn below(upper: f64) -> Self {
        Self { upper: Some(upper), floor: None }
    }

    pub fn below_above(upper: f64, floor: f64) -> Self {
        Self { upper: Some(upper), floor: Some(floor) }
    }

    pub fn is_one(&self) -> bool {
        self.upper.is_none() && self.floor.is_none()
    }

    #[inline]
    pub fn eval(&self, end: f64, min: f64) -> bool {
        self.upper.is_none_or(|k| end <= k) && self.floor.is_none_or(|a| min >= -a)
    }

    fn validate(&self) -> Result<(), SpineError> {
        match self.upper {
            None if !self.is_one() => Err(SpineError::UnboundedAbove),
            Some(k) if k > MAX_UPPER => Err(SpineError::UpperTooHigh(k)),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match (self.upper, self.floor) {
            (None, None) => "1".into(),
            (Some(k), None) => format!("S_n<={k}"),
            (Some(k), Some(a)) => format!("S_n<={k},min>=-{a}"),
            (None, Some(a)) => format!("min>=-{a}"),
        }
    }
}

/// The functionals checked by default.
pub fn default_battery() -> Vec<PathIndicator> {
    vec![
        PathIndicator::below(0.0),
        PathIndicator::below(2.0),
        PathIndicator::below_above(1.0, 5.0),
        PathIndicator::below_above(0.0, 1.0),
        PathIndicator::below_above(2.0, 0.5),
        PathIndicator::one(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManyToOne {
    pub functional: PathIndicator,
    pub n: usize,
    /// `2ⁿ · Ê[f(W)]` over displacement-law walks.
    pub lhs: EstimateCI,
    /// `Ê[e^{S_n} f(S)]` over spine walks.
    pub rhs: EstimateCI,
}

impl ManyToOne {
    /// `|lhs − rhs|` in combined standard errors.
    pub fn z(&self) -> f64 {
        self.lhs.z_distance(&self.rhs)
    }
}

/// Both sides of the many-to-one identity for every functional in `battery`,
/// from shared path samples (`samples` walks per side).
///
/// `f ≡ 1` is evaluated in closed form (`2ⁿ` on both sides): its spine-side
/// estimator `e^{S_n}` has infinite variance.
pub fn many_to_one_battery(
    battery: &[PathIndicator],
    n: usize,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<ManyToOne>, SpineError> {
    if n > MAX_STEPS {
        return Err(SpineError::TooManySteps(n));
    }
    for f in battery {
        f.validate()?;
    }
    let params = ModelParams::<f64>::boundary();
    let disp = DisplacementLaw::new(&params);
    let spine = SpineStepLaw::<f64>::boundary();
    let k = battery.len();
    let scale = 2f64.powi(n as i32);
    let chunks = run_chunked(
        SampleRange::new(seed, samples),
        CHUNK,
        workers,
        || (),
        |_, r| {
            let mut acc = vec![(MeanAccumulator::default(), MeanAccumulator::default()); k];
            for i in r.start..r.end {
                let base = RngStream::new(r.seed, i);
                let mut a = base.split(0);
                let (end, min) = walk_end_min(n, || disp.quantile_f64(a.next_open01()));
                let mut b = base.split(1);
                let (s_end, s_min) = walk_end_min(n, || spine.quantile(b.next_open01()));
                let weight = s_end.exp();
                for (f, (l, rr)) in battery.iter().zip(acc.iter_mut()) {
                    l.push(if f.eval(end, min) { scale } else { 0.0 });
                    rr.push(if f.eval(s_end, s_min) { weight } else { 0.0 });
                }
            }
            acc
        },
    )?;
    let merge = |x: &MeanAccumulator, y: &MeanAccumulator| x.merge(y);
    Ok(battery
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if f.is_one() {
                let exact = EstimateCI::exact(scale, samples);
                return ManyToOne { functional: *f, n, lhs: exact, rhs: exact };
            }
            let l: Vec<_> = chunks.iter().map(|c| c[j].0).collect();
            let r: Vec<_> = chunks.iter().map(|c| c[j].1).collect();
            ManyToOne {
                functional: *f,
                n,
                lhs: tree_merge(&l, &merge).estimate(),
                rhs: tree_merge(&r, &merge).estimate(),
            }
        })
        .collect())
}

pub fn many_to_one_check(f: &PathIndicator, n: usize, samples: u64, seed: u64) -> Result<ManyToOne, SpineError> {
    Ok(many_to_one_battery(std::slice::from_ref(f), n, samples, seed, 1)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallotKind {
    /// `P(S_n ∈ [a, a+h])`, bounded by `C₀ n^{-1/2}` for `h = 1`.
    LocalLimit,
    /// `P(min S ≥ −α) ≤ C₁ (1+α) n^{-1/2}`.
    Ballot,
    /// `P(min S ≥ −α, S_n ∈ [h−α, h−α+1]) ≤ C₂ (1+h) n^{-1}`.
    BallotBackward,
    /// `P(min S ≥ −α, S_n ∈ [a, a+h]) ≤ C₃ (1+α)(1+a+h+α)(1+h) n^{-3/2}`.
    ThreeFactor,
}

impl BallotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BallotKind::LocalLimit => "local_limit",
            BallotKind::Ballot => "ballot",
            BallotKind::BallotBackward => "ballot_backward",
            BallotKind::ThreeFactor => "three_factor",
        }
    }

    pub const ALL: [BallotKind; 4] =
        [BallotKind::LocalLimit, BallotKind::Ballot, BallotKind::BallotBackward, BallotKind::ThreeFactor];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallotProbe {
    pub kind: BallotKind,
    pub n: usize,
    pub alpha: f64,
    pub h: f64,
    pub a: f64,
    pub estimate: EstimateCI,
    pub hits: u64,
    /// Fewer than [`MIN_HITS`] hits.
    pub starved: bool,
}

impl BallotProbe {
    /// Estimate divided by the bound's shape: a lower estimate of the constant.
    pub fn fitted_constant(&self) -> f64 {
        self.estimate.value / bound_shape(self.kind, self.n, self.alpha, self.h, self.a)
    }
}

/// The bound with its constant set to 1.
pub fn bound_shape(kind: BallotKind, n: usize, alpha: f64, h: f64, a: f64) -> f64 {
    let n = n as f64;
    match kind {
        BallotKind::LocalLimit => n.powf(-0.5),
        BallotKind::Ballot => (1.0 + alpha) * n.powf(-0.5),
        BallotKind::BallotBackward => (1.0 + h) / n,
        BallotKind::ThreeFactor => (1.0 + alpha) * (1.0 + a + h + alpha) * (1.0 + h) * n.powf(-1.5),
    }
}

fn check_probe(kind: BallotKind, n: usize, alpha: f64, h: f64, a: f64) -> Result<(), SpineError> {
    let bad = |m: &str| Err(SpineError::Parameters(m.into()));
    if n == 0 {
        return bad("n must be positive");
    }
    match kind {
        BallotKind::LocalLimit if !(h > 0.0) => bad("h must be positive"),
        BallotKind::Ballot if !(alpha > 0.0) => bad("alpha must be positive"),
        BallotKind::BallotBackward if !(alpha > 0.0 && h > 0.0) => bad("alpha and h must be positive"),
        BallotKind::ThreeFactor if n > 400 => bad("three_factor needs n ≤ 400"),
        BallotKind::ThreeFactor if !(alpha > 0.0 && h > 0.0 && a > -alpha) => {
            bad("three_factor needs alpha > 0, h > 0, a > -alpha")
        }
        _ => Ok(()),
    }
}

/// `(S_n, min_{k≤n} S_k)` for `samples` spine walks from 0.
pub fn spine_endpoints(n: usize, samples: u64, seed: u64, workers: usize) -> Result<Vec<(f64, f64)>, SpineError> {
    let law = SpineStepLaw::<f64>::boundary();
    let chunks = run_chunked(SampleRange::new(seed, samples), CHUNK, workers, || (), |_, r| {
        (r.start..r.end)
            .map(|i| {
                let mut s = RngStream::new(r.seed, i);
                walk_end_min(n, || law.quantile(s.next_open01()))
            })
            .collect::<Vec<_>>()
    })?;
    Ok(chunks.concat())
}

/// Evaluates one probe on precomputed endpoints of `n`-step walks.
pub fn probe_from_endpoints(
    kind: BallotKind,
    n: usize,
    alpha: f64,
    h: f64,
    a: f64,
    endpoints: &[(f64, f64)],
) -> Result<BallotProbe, SpineError> {
    check_probe(kind, n, alpha, h, a)?;
    let hit = |&(end, min): &(f64, f64)| match kind {
        BallotKind::LocalLimit => a <= end && end <= a + h,
        BallotKind::Ballot => min >= -alpha,
        BallotKind::BallotBackward => min >= -alpha && h - alpha <= end && end <= h - alpha + 1.0,
        BallotKind::ThreeFactor => min >= -alpha && a <= end && end <= a + h,
    };
    let hits = endpoints.iter().filter(|e| hit(e)).count() as u64;
    let total = endpoints.len() as u64;
    let p = hits as f64 / total as f64;
    let (lower, upper) = crate::stats::clopper_pearson(hits, total, 0.95);
    Ok(BallotProbe {
        kind,
        n,
        alpha,
        h,
        a,
        estimate: EstimateCI {
            value: p,
            stderr: (p * (1.0 - p) / total as f64).sqrt(),
            lower,
            upper,
            level: 0.95,
            n_samples: total,
        },
        hits,
        starved: hits < MIN_HITS,
    })
}

pub fn ballot_probe(
    kind: BallotKind,
    n: usize,
    alpha: f64,
    h: f64,
    a: f64,
    samples: u64,
    seed: u64,
) -> Result<BallotProbe, SpineError> {
    check_probe(kind, n, alpha, h, a)?;
    probe_from_endpoints(kind, n, alpha, h, a, &spine_endpoints(n, samples, seed, 1)?)
}

/// `sup_z P̂(S_n ∈ [z, z+1])` over a grid of spacing `step`; the maximizing
/// `z` is stored in `a`.
pub fn local_limit_sup(n: usize, endpoints: &[(f64, f64)], step: f64) -> Result<BallotProbe, SpineError> {
    let mut ends: Vec<f64> = endpoints.iter().map(|e| e.0).collect();
    ends.sort_by(f64::total_cmp);
    let (lo, hi) = (ends[0], ends[ends.len() - 1]);
    let mut best = (f64::NAN, 0usize);
    let mut z = lo.floor();
    while z <= hi {
        let c = ends.partition_point(|&v| v <= z + 1.0) - ends.partition_point(|&v| v < z);
        if c > best.1 {
            best = (z, c);
        }
        z += step;
    }
    probe_from_endpoints(BallotKind::LocalLimit, n, 0.0, 1.0, best.0, endpoints)
}

/// `max/min − 1` over fitted constants.
pub fn constant_variation(constants: &[f64]) -> f64 {
    let hi = constants.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo - 1.0
}

/// `2 ∫ w(v) ρ(v) dv` for `w(v) = v^k e^{-v}`, `k = 0, 1, 2`, against the
/// displacement density `ρ`. Boundary normalization makes these `(1, 0, 1)`.
pub fn boundary_identities<T: Real>(params: &ModelParams<T>) -> Result<(T, T, T), SpineError> {
    if !params.is_boundary() {
        return Err(SpineError::NotBoundary);
    }
    let law = DisplacementLaw::new(params);
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
    let two = T::lit(2.0);
    let moment = |k: i32| -> Result<T, SpineError> {
        let w = |v: T| v.powi(k) * (-v).exp() * law.pdf(v);
        let pos = integrate_half_line(w, tol)?;
        let neg = integrate_half_line(|t: T| w(-t), tol)?;
        Ok(two * (pos + neg))
    };
    Ok((moment(0)?, moment(1)?, moment(2)?))
}
