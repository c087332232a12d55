//! Estimators and tests for censored heavy-tailed counts.
//!
//! Only threshold and truncated statistics are exposed: the sampled counts
//! have an infinite mean, so there is deliberately no plain sample mean of
//! counts here.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::brw::{CensoredCount, CountStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("threshold {n} lies beyond the censoring cap {cap}")]
    BeyondCensoring { n: u64, cap: u64 },
    #[error("no usable samples")]
    Empty,
    #[error("lambda·cap = {product} is below 30; censored mass would bias the transform")]
    CensoringTooCoarse { product: f64 },
    #[error("samples use different censoring caps ({0:?} vs {1:?})")]
    MismatchedCensoring(Option<u64>, Option<u64>),
    #[error("grid point n={n} has only {hits} hits (need {need})")]
    Starved { n: u64, hits: u64, need: u64 },
    #[error("need at least {need} grid points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("lambda must be positive")]
    Lambda,
}

/// Point estimate with standard error and a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub value: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub n_samples: u64,
}

impl EstimateCI {
    /// Normal-approximation interval at 95%.
    pub fn normal(value: f64, stderr: f64, n_samples: u64) -> Self {
        Self::normal_at(value, stderr, n_samples, 0.95)
    }

    pub fn normal_at(value: f64, stderr: f64, n_samples: u64, level: f64) -> Self {
        let z = z_quantile(0.5 + level / 2.0);
        Self { value, stderr, lower: value - z * stderr, upper: value + z * stderr, level, n_samples }
    }

    pub fn exact(value: f64, n_samples: u64) -> Self {
        Self { value, stderr: 0.0, lower: value, upper: value, level: 1.0, n_samples }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// `|a − b| / sqrt(se_a² + se_b²)`.
    pub fn z_distance(&self, other: &EstimateCI) -> f64 {
        let se = self.stderr.hypot(other.stderr);
        if se == 0.0 {
            return if self.value == other.value { 0.0 } else { f64::INFINITY };
        }
        (self.value - other.value).abs() / se
    }
}

pub fn z_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

/// Exact binomial interval for a proportion.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// One-sided upper confidence bound for a proportion.
pub fn binomial_upper(k: u64, n: u64, level: f64) -> f64 {
    if k == n {
        return 1.0;
    }
    Beta::new((k + 1) as f64, (n - k) as f64).unwrap().inverse_cdf(level)
}

/// Sum, sum of squares and count; merges are exact up to float addition,
/// which [`tree_merge`] fixes in order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut acc = Self::default();
        for &x in xs {
            acc.push(x);
        }
        acc
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self { count: self.count + other.count, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> EstimateCI {
        EstimateCI::normal(self.mean(), (self.variance() / self.count as f64).sqrt(), self.count)
    }
}

/// Pairwise reduction in index order: `((a0 a1)(a2 a3))…`.
pub fn tree_merge<A: Clone + Default, F: Fn(&A, &A) -> A>(parts: &[A], merge: &F) -> A {
    match parts.len() {
        0 => A::default(),
        1 => parts[0].clone(),
        n => {
            // largest power of two below n
            let mid = 1usize << (usize::BITS - 1 - (n - 1).leading_zeros());
            merge(&tree_merge(&parts[..mid], merge), &tree_merge(&parts[mid..], merge))
        }
    }
}

/// Mean over `xs` accumulated in fixed batches and merged pairwise.
pub fn batched_mean(xs: &[f64], batch: usize) -> MeanAccumulator {
    let parts: Vec<MeanAccumulator> = xs.chunks(batch.max(1)).map(MeanAccumulator::from_slice).collect();
    tree_merge(&parts, &|a: &MeanAccumulator, b: &MeanAccumulator| a.merge(b))
}

/// Sorted count samples with censored entries recorded at the cap.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    sorted_values: Vec<u64>,
    censor_threshold: Option<u64>,
    excluded: u64,
}

impl EmpiricalTail {
    /// Builds a tail from `(value, status)` pairs. Work-capped samples are
    /// excluded and counted; count-capped ones are stored at `censor_threshold`.
    pub fn new<I: IntoIterator<Item = (u64, CountStatus)>>(samples: I, censor_threshold: Option<u64>) -> Self {
        let mut excluded = 0;
        let mut sorted_values = Vec::new();
        for (v, s) in samples {
            match s {
                CountStatus::WorkCapped => excluded += 1,
                CountStatus::CountCapped => sorted_values.push(censor_threshold.unwrap_or(v).max(v)),
                CountStatus::Exact => sorted_values.push(match censor_threshold {
                    Some(c) => v.min(c),
                    None => v,
                }),
            }
        }
        sorted_values.sort_unstable();
        Self { sorted_values, censor_threshold, excluded }
    }

    pub fn from_counts(samples: &[CensoredCount], censor_threshold: Option<u64>) -> Self {
        Self::new(samples.iter().map(|s| (s.value, s.status)), censor_threshold)
    }

    pub fn from_exact(values: &[u64]) -> Self {
        Self::new(values.iter().map(|&v| (v, CountStatus::Exact)), None)
    }

    pub fn total(&self) -> u64 {
        self.sorted_values.len() as u64
    }

    pub fn excluded(&self) -> u64 {
        self.excluded
    }

    /// Fraction of all samples, excluded ones included, that were work-capped.
    pub fn excluded_fraction(&self) -> f64 {
        let all = self.total() + self.excluded;
        if all == 0 {
            0.0
        } else {
            self.excluded as f64 / all as f64
        }
    }

    pub fn censor_threshold(&self) -> Option<u64> {
        self.censor_threshold
    }

    pub fn sorted_values(&self) -> &[u64] {
        &self.sorted_values
    }

    fn check_tail(&self, n: u64) -> Result<(), StatsError> {
        match self.censor_threshold {
            Some(cap) if n > cap => Err(StatsError::BeyondCensoring { n, cap }),
            _ if self.sorted_values.is_empty() => Err(StatsError::Empty),
            _ => Ok(()),
        }
    }

    fn check_truncation(&self, n: u64) -> Result<(), StatsError> {
        match self.censor_threshold {
            Some(cap) if n >= cap => Err(StatsError::BeyondCensoring { n, cap }),
            _ if self.sorted_values.is_empty() => Err(StatsError::Empty),
            _ => Ok(()),
        }
    }

    /// Number of samples with value `≥ n`.
    pub fn count_at_least(&self, n: u64) -> Result<u64, StatsError> {
        self.check_tail(n)?;
        Ok(self.total() - self.sorted_values.partition_point(|&v| v < n) as u64)
    }

    /// Values `≤ n`, valid only strictly below the cap.
    fn truncated(&self, n: u64) -> Result<&[u64], StatsError> {
        self.check_truncation(n)?;
        Ok(&self.sorted_values[..self.sorted_values.partition_point(|&v| v <= n)])
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        let xs: Vec<f64> = self.sorted_values.iter().map(|&v| v as f64).collect();
        quantile_sorted(&xs, q)
    }
}

/// `n · P̂(N ≥ n)` with an exact binomial interval.
pub fn tail_ratio(tail: &EmpiricalTail, n: u64) -> Result<EstimateCI, StatsError> {
    let k = tail.count_at_least(n)?;
    let total = tail.total();
    let p = k as f64 / total as f64;
    let scale = n as f64;
    let (lo, hi) = clopper_pearson(k, total, 0.95);
    Ok(EstimateCI {
        value: scale * p,
        stderr: scale * (p * (1.0 - p) / total as f64).sqrt(),
        lower: scale * lo,
        upper: scale * hi,
        level: 0.95,
        n_samples: total,
    })
}

/// `Ê[N 1{N ≤ n}] − log n`. Requires `n` strictly below the censoring cap,
/// where `N 1{N ≤ n}` is determined for every sample.
pub fn truncated_mean_offset(tail: &EmpiricalTail, n: u64) -> Result<EstimateCI, StatsError> {
    let kept = tail.truncated(n)?;
    let total = tail.total();
    let mut acc = MeanAccumulator::default();
    for &v in kept {
        acc.push(v as f64);
    }
    acc.count = total;
    let est = acc.estimate();
    Ok(EstimateCI::normal(est.value - (n as f64).ln(), est.stderr, total))
}

fn check_lambda(tail: &EmpiricalTail, lambda: f64) -> Result<(), StatsError> {
    if !(lambda > 0.0) {
        return Err(StatsError::Lambda);
    }
    if let Some(cap) = tail.censor_threshold {
        let product = lambda * cap as f64;
        if product < 30.0 {
            return Err(StatsError::CensoringTooCoarse { product });
        }
    }
    if tail.sorted_values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(())
}

/// Sample mean of `e^{a X}` with its standard error.
fn exp_moment<I: IntoIterator<Item = f64>>(a: f64, xs: I) -> MeanAccumulator {
    let mut acc = MeanAccumulator::default();
    for x in xs {
        acc.push((a * x).exp());
    }
    acc
}

/// `φ̂(λ) = log Ê[e^{−λN}]` and its delta-method standard error.
pub fn log_laplace(tail: &EmpiricalTail, lambda: f64) -> Result<EstimateCI, StatsError> {
    check_lambda(tail, lambda)?;
    let acc = exp_moment(-lambda, tail.sorted_values.iter().map(|&v| v as f64));
    let m = acc.mean();
    let se = (acc.variance() / acc.count as f64).sqrt() / m;
    Ok(EstimateCI::normal(m.ln(), se, acc.count))
}

/// Linear coefficient `(φ̂(λ) − λ log λ) / λ` of the small-λ expansion.
pub fn laplace_expansion_check(tail: &EmpiricalTail, lambda: f64) -> Result<EstimateCI, StatsError> {
    let phi = log_laplace(tail, lambda)?;
    Ok(EstimateCI::normal((phi.value - lambda * lambda.ln()) / lambda, phi.stderr / lambda, phi.n_samples))
}

/// Both sides of the Laplace functional equation at level `x`:
/// `φ(λ,x) = λ + log E[e^{(φ(λ,0)−λ) Z_x}]` for `x > 0` and
/// `φ(λ,x) = log E[e^{φ(λ,0) Z_x}]` for `x ≤ 0`.
///
/// `direct` holds `N_x` samples, `base` holds `N` samples and `z` the
/// independent `Z_x` samples.
pub fn functional_equation_check(
    direct: &EmpiricalTail,
    base: &EmpiricalTail,
    z: &[u64],
    lambda: f64,
    x: f64,
) -> Result<(EstimateCI, EstimateCI), StatsError> {
    let lhs = log_laplace(direct, lambda)?;
    let phi0 = log_laplace(base, lambda)?;
    if z.is_empty() {
        return Err(StatsError::Empty);
    }
    let shift = if x > 0.0 { lambda } else { 0.0 };
    let a = phi0.value - shift;
    let zs = || z.iter().map(|&v| v as f64);
    let acc = exp_moment(a, zs());
    let m = acc.mean();
    // d/da log E[e^{aZ}] = E[Z e^{aZ}] / E[e^{aZ}]
    let slope = zs().map(|v| v * (a * v).exp()).sum::<f64>() / z.len() as f64 / m;
    let var_z = acc.variance() / acc.count as f64 / (m * m);
    let var_phi = (slope * phi0.stderr).powi(2);
    let rhs = EstimateCI::normal(shift + m.ln(), (var_z + var_phi).sqrt(), acc.count);
    Ok((lhs, rhs))
}

/// Weighted least-squares fit of `log P̂(X ≥ n)` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: EstimateCI,
    pub intercept: f64,
    /// Coefficient of `(log n)²` in a weighted quadratic fit; a curvature
    /// diagnostic, zero for an exact power law.
    pub curvature: f64,
    pub points: Vec<(u64, u64)>,
}

pub const MIN_SLOPE_HITS: u64 = 50;

/// Tail-index fit over `grid`. Every point needs at least
/// [`MIN_SLOPE_HITS`] exceedances and the grid at least three points.
pub fn loglog_slope(tail: &EmpiricalTail, grid: &[u64]) -> Result<SlopeFit, StatsError> {
    if grid.len() < 3 {
        return Err(StatsError::TooFewPoints { need: 3, got: grid.len() });
    }
    let total = tail.total() as f64;
    let mut pts = Vec::new();
    let mut rows = Vec::new();
    for &n in grid {
        let k = tail.count_at_least(n)?;
        if k < MIN_SLOPE_HITS {
            return Err(StatsError::Starved { n, hits: k, need: MIN_SLOPE_HITS });
        }
        let p = k as f64 / total;
        // Var(log p̂) ≈ (1 − p) / k
        let w = k as f64 / (1.0 - p).max(1e-12);
        rows.push(((n as f64).ln(), p.ln(), w));
        pts.push((n, k));
    }
    let (slope, intercept, se) = weighted_line(&rows);
    let curvature = weighted_quadratic(&rows);
    Ok(SlopeFit { slope: EstimateCI::normal(slope, se, tail.total()), intercept, curvature, points: pts })
}

/// Returns `(slope, intercept, stderr of slope)`.
pub fn weighted_line(rows: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let mx = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let my = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - mx) * (r.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, (1.0 / sxx).sqrt())
}

fn weighted_quadratic(rows: &[(f64, f64, f64)]) -> f64 {
    if rows.len() < 3 {
        return 0.0;
    }
    // normal equations for y = c0 + c1 x + c2 x², solved by Cramer's rule
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for &(x, y, w) in rows {
        let mut p = 1.0;
        for sk in s.iter_mut() {
            *sk += w * p;
            p *= x;
        }
        t[0] += w * y;
        t[1] += w * y * x;
        t[2] += w * y * x * x;
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d == 0.0 {
        return 0.0;
    }
    let mut m2 = m;
    for (row, &ti) in m2.iter_mut().zip(&t) {
        row[2] = ti;
    }
    det(m2) / d
}

/// Result of [`two_sample_rank_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTest {
    pub p_value: f64,
    pub rank_p: f64,
    /// `None` when neither sample has censored entries.
    pub censored_p: Option<f64>,
    pub u_statistic: f64,
}

/// Mann–Whitney test on the uncensored values (normal approximation with tie
/// correction) plus a two-proportion test on the censored fractions,
/// combined by Fisher's method when censoring is present.
pub fn two_sample_rank_test(a: &EmpiricalTail, b: &EmpiricalTail) -> Result<RankTest, StatsError> {
    if a.censor_threshold != b.censor_threshold {
        return Err(StatsError::MismatchedCensoring(a.censor_threshold, b.censor_threshold));
    }
    let split = |t: &EmpiricalTail| -> (Vec<u64>, u64) {
        match t.censor_threshold {
            Some(c) => {
                let cut = t.sorted_values.partition_point(|&v| v < c);
                (t.sorted_values[..cut].to_vec(), (t.sorted_values.len() - cut) as u64)
            }
            None => (t.sorted_values.clone(), 0),
        }
    };
    let (xa, ca) = split(a);
    let (xb, cb) = split(b);
    if xa.is_empty() || xb.is_empty() {
        return Err(StatsError::Empty);
    }
    let (u, rank_p) = mann_whitney(&xa, &xb);
    let censored_p = if ca + cb > 0 { Some(two_proportion_p(ca, a.total(), cb, b.total())) } else { None };
    let p_value = match censored_p {
        Some(pc) => fisher_combine(&[rank_p, pc]),
        None => rank_p,
    };
    Ok(RankTest { p_value, rank_p, censored_p, u_statistic: u })
}

/// Two-sided Mann–Whitney p-value for sorted samples; returns `(U_a, p)`.
fn mann_whitney(a: &[u64], b: &[u64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut rank_sum_a = 0.0;
    let mut ties = 0.0;
    let mut rank = 0.0;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let ka = a[i..].partition_point(|&x| x == v);
        let kb = b[j..].partition_point(|&y| y == v);
        let t = (ka + kb) as f64;
        let mid = rank + (t + 1.0) / 2.0;
        rank_sum_a += ka as f64 * mid;
        ties += t * t * t - t;
        rank += t;
        i += ka;
        j += kb;
    }
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let n = na + nb;
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return (u, 1.0);
    }
    let z = (u - na * nb / 2.0).abs() / var.sqrt();
    (u, (2.0 * normal_sf(z)).min(1.0))
}

fn two_proportion_p(ka: u64, na: u64, kb: u64, nb: u64) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let pool = (ka + kb) as f64 / (na + nb);
    let se = (pool * (1.0 - pool) * (1.0 / na + 1.0 / nb)).sqrt();
    if se == 0.0 {
        return 1.0;
    }
    let z = (ka as f64 / na - kb as f64 / nb).abs() / se;
    (2.0 * normal_sf(z)).min(1.0)
}

/// Fisher's method for independent p-values.
pub fn fisher_combine(ps: &[f64]) -> f64 {
    let stat: f64 = ps.iter().map(|p| -2.0 * p.max(1e-300).ln()).sum();
    if stat == 0.0 {
        return 1.0;
    }
    ChiSquared::new(2.0 * ps.len() as f64).unwrap().sf(stat)
}

/// Pearson chi-square p-value for observed counts against expected counts.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    ChiSquared::new((observed.len() - 1) as f64).unwrap().sf(stat)
}

/// One-sample Kolmogorov–Smirnov p-value against Uniform(0,1).
pub fn ks_uniform_p(values: &[f64]) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

fn kolmogorov_sf(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// Type-7 quantile of sorted data.
pub fn quantile_sorted(xs: &[f64], q: f64) -> Option<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let h = (xs.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo]))
}

pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub n: u64,
    /// Pairs dropped because `Z_x = 0`.
    pub dropped: u64,
}

/// Distribution summary of `N_x / (x Z_x)` over coupled pairs `(N_x, Z_x)`.
pub fn ratio_convergence(pairs: &[(u64, u64)], x: f64) -> Result<RatioSummary, StatsError> {
    let mut r: Vec<f64> = pairs.iter().filter(|p| p.1 > 0).map(|&(n, z)| n as f64 / (x * z as f64)).collect();
    let dropped = (pairs.len() - r.len()) as u64;
    if r.is_empty() {
        return Err(StatsError::Empty);
    }
    r.sort_by(f64::total_cmp);
    Ok(RatioSummary {
        median: quantile_sorted(&r, 0.5).unwrap(),
        q1: quantile_sorted(&r, 0.25).unwrap(),
        q3: quantile_sorted(&r, 0.75).unwrap(),
        n: r.len() as u64,
        dropped,
    })
}

/// Bootstrap standard error of the mean with `reps` resamples drawn from `rng`.
pub fn bootstrap_mean_se<R: rand::Rng + ?Sized>(xs: &[f64], reps: usize, rng: &mut R) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = MeanAccumulator::default();
    for _ in 0..reps {
        let mut s = 0.0;
        for _ in 0..n {
            s += xs[rng.random_range(0..n)];
        }
        acc.push(s / n as f64);
    }
    acc.variance().sqrt()
}
