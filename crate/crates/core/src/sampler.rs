//! Elementary laws of the model: the displacement of the embedded branching
//! random walk, the spine step of the many-to-one lemma, and barrier crossing
//! along a single Brownian edge.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use thiserror::Error;

use crate::rng::open_unit;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("drift {0} is below the boundary value 2: the count of births below 0 is not a.s. finite")]
    DriftBelowBoundary(f64),
    #[error("the spine step law only exists in the boundary case (drift 2), got drift {0}")]
    NotBoundary(f64),
    #[error("lifetime must be positive, got {0}")]
    NonPositiveLifetime(f64),
    #[error("barrier gap must be non-negative, got {0}")]
    NegativeGap(f64),
    #[error("barrier {barrier} lies on the wrong side of start {start} for an {direction:?} crossing")]
    BarrierOnWrongSide {
        start: f64,
        barrier: f64,
        direction: Direction,
    },
}

/// Drift, diffusion and branching parameters plus the derived mixture rates
/// of the displacement law.
///
/// The displacement has moment generating function `1 / (1 - mu λ - λ²)`,
/// whose poles `r_plus` and `-r_minus` are the roots of `λ² + mu λ - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    mu: T,
    sigma2: T,
    branch_rate: T,
    r_plus: T,
    r_minus: T,
    p: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(mu: T) -> Result<Self, SamplerError> {
        // NaN fails this comparison too.
        if !(mu >= T::lit(2.0)) {
            return Err(SamplerError::DriftBelowBoundary(mu.as_f64()));
        }
        let two = T::lit(2.0);
        let disc = (mu * mu + T::lit(4.0)).sqrt();
        let r_plus = (disc - mu) / two;
        let r_minus = (disc + mu) / two;
        Ok(Self {
            mu,
            sigma2: two,
            branch_rate: T::one(),
            r_plus,
            r_minus,
            p: r_minus / (r_plus + r_minus),
        })
    }

    /// The boundary case `mu = 2`.
    pub fn boundary() -> Self {
        Self::new(T::lit(2.0)).expect("mu = 2 is valid")
    }

    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn sigma2(&self) -> T {
        self.sigma2
    }
    pub fn branch_rate(&self) -> T {
        self.branch_rate
    }
    /// Rate of the positive exponential branch of the displacement law.
    pub fn r_plus(&self) -> T {
        self.r_plus
    }
    /// Rate of the negative exponential branch of the displacement law.
    pub fn r_minus(&self) -> T {
        self.r_minus
    }
    /// Weight of the positive branch.
    pub fn p(&self) -> T {
        self.p
    }

    pub fn is_boundary(&self) -> bool {
        self.mu == T::lit(2.0)
    }
}

/// Shorthand for [`ModelParams::new`].
pub fn make_params<T: Real>(mu: T) -> Result<ModelParams<T>, SamplerError> {
    ModelParams::new(mu)
}

/// Law of `sqrt(2) B_T + mu T` with `T ~ Exp(1)`: a two-sided exponential
/// mixture with weight `1 - p` on `(-∞, 0)` (rate `r_minus`) and `p` on
/// `(0, ∞)` (rate `r_plus`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementLaw<T> {
    params: ModelParams<T>,
    q: T,
    q_f64: f64,
    inv_p: f64,
    inv_q: f64,
    inv_r_plus: f64,
    inv_r_minus: f64,
}

impl<T: Real> DisplacementLaw<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let q = T::one() - params.p;
        Self {
            params: *params,
            q,
            q_f64: q.as_f64(),
            inv_p: 1.0 / params.p.as_f64(),
            inv_q: 1.0 / q.as_f64(),
            inv_r_plus: 1.0 / params.r_plus.as_f64(),
            inv_r_minus: 1.0 / params.r_minus.as_f64(),
        }
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn pdf(&self, x: T) -> T {
        let ModelParams { r_plus, r_minus, p, .. } = self.params;
        if x < T::zero() {
            self.q * r_minus * (r_minus * x).exp()
        } else {
            // Both one-sided limits at 0 equal 1 / (r_plus + r_minus).
            p * r_plus * (-r_plus * x).exp()
        }
    }

    pub fn cdf(&self, x: T) -> T {
        let ModelParams { r_plus, r_minus, p, .. } = self.params;
        if x < T::zero() {
            self.q * (r_minus * x).exp()
        } else {
            T::one() - p * (-r_plus * x).exp()
        }
    }

    pub fn mean(&self) -> T {
        self.params.mu
    }

    pub fn variance(&self) -> T {
        self.params.mu * self.params.mu + self.params.sigma2
    }

    /// `E[e^{λ X}] = 1 / (1 - mu λ - λ²)`, defined for `-r_minus < λ < r_plus`.
    pub fn mgf(&self, lambda: T) -> Option<T> {
        if lambda <= -self.params.r_minus || lambda >= self.params.r_plus {
            return None;
        }
        Some(T::one() / (T::one() - self.params.mu * lambda - lambda * lambda))
    }

    /// Inverse CDF evaluated at `u ∈ (0, 1)`: the negative branch below
    /// `1 - p`, the positive branch above, one logarithm either way.
    #[inline(always)]
    pub fn quantile_f64(&self, u: f64) -> f64 {
        let neg = u < self.q_f64;
        let arg = if neg { u * self.inv_q } else { (1.0 - u) * self.inv_p };
        let scale = if neg { self.inv_r_minus } else { -self.inv_r_plus };
        arg.ln() * scale
    }

    #[inline(always)]
    pub fn quantile(&self, u: f64) -> T {
        T::lit(self.quantile_f64(u))
    }
}

impl<T: Real> Distribution<T> for DisplacementLaw<T> {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(open_unit(rng.next_u64()))
    }
}

/// Step law of the spine walk: symmetric Laplace with rate `sqrt(2)`, i.e. the
/// displacement law tilted by `2 e^{-x}`. Boundary case only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpineStepLaw<T> {
    rate: T,
}

impl<T: Real> SpineStepLaw<T> {
    pub fn new(params: &ModelParams<T>) -> Result<Self, SamplerError> {
        if !params.is_boundary() {
            return Err(SamplerError::NotBoundary(params.mu.as_f64()));
        }
        Ok(Self { rate: T::SQRT_2() })
    }

    pub fn boundary() -> Self {
        Self { rate: T::SQRT_2() }
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn pdf(&self, x: T) -> T {
        self.rate / T::lit(2.0) * (-self.rate * x.abs()).exp()
    }

    pub fn cdf(&self, x: T) -> T {
        let half = T::lit(0.5);
        if x < T::zero() {
            half * (self.rate * x).exp()
        } else {
            T::one() - half * (-self.rate * x).exp()
        }
    }

    pub fn mean(&self) -> T {
        T::zero()
    }

    pub fn variance(&self) -> T {
        T::lit(2.0) / (self.rate * self.rate)
    }

    #[inline]
    pub fn quantile(&self, u: f64) -> T {
        let rate = self.rate.as_f64();
        let x = if u < 0.5 {
            (2.0 * u).ln() / rate
        } else {
            -(2.0 * (1.0 - u)).ln() / rate
        };
        T::lit(x)
    }
}

impl<T: Real> Distribution<T> for SpineStepLaw<T> {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(open_unit(rng.next_u64()))
    }
}

/// Probability that a Brownian bridge with diffusion coefficient 2 reaches
/// height `gap` above its start within time `lifetime`, given that it ends
/// `endpoint_shift` above its start.
pub fn edge_crossing_prob<T: Real>(gap: T, endpoint_shift: T, lifetime: T) -> Result<T, SamplerError> {
    if !(lifetime > T::zero()) {
        return Err(SamplerError::NonPositiveLifetime(lifetime.as_f64()));
    }
    if !(gap >= T::zero()) {
        return Err(SamplerError::NegativeGap(gap.as_f64()));
    }
    Ok(crossing_prob_unchecked(gap, endpoint_shift, lifetime))
}

#[inline]
pub(crate) fn crossing_prob_unchecked<T: Real>(gap: T, endpoint_shift: T, lifetime: T) -> T {
    if gap <= endpoint_shift.max(T::zero()) {
        return T::one();
    }
    // Clamped at 0 against rounding when gap ≈ max(0, shift).
    let exponent = (gap * (gap - endpoint_shift) / lifetime).max(T::zero());
    (-exponent).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeOutcome<T> {
    /// The path reached the barrier before the particle's death.
    Crossed,
    /// The particle died at this position without touching the barrier.
    Died(T),
}

/// Exponential lifetime with the model's branching rate (1).
#[inline]
pub fn sample_lifetime<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let t: f64 = Exp1.sample(rng);
    t.max(f64::MIN_POSITIVE)
}

/// Brownian increment with drift `mu` and diffusion `sigma2` over `dt`.
#[inline]
pub fn sample_increment<T: Real, R: Rng + ?Sized>(params: &ModelParams<T>, dt: f64, rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    let mu = params.mu.as_f64();
    let s2 = params.sigma2.as_f64();
    T::lit(mu * dt + (s2 * dt).sqrt() * z)
}

/// Runs one particle from `start` until its death or its first contact with
/// `barrier`.
///
/// Draws the lifetime, then the endpoint, then decides barrier contact with
/// the bridge crossing probability, so a `Died` position has the right law
/// conditional on no contact.
pub fn sample_edge<T: Real, R: Rng + ?Sized>(
    start: T,
    barrier: Option<T>,
    direction: Direction,
    params: &ModelParams<T>,
    rng: &mut R,
) -> Result<EdgeOutcome<T>, SamplerError> {
    let gap = match barrier {
        None => None,
        Some(b) => {
            let gap = match direction {
                Direction::Up => b - start,
                Direction::Down => start - b,
            };
            if !(gap >= T::zero()) {
                return Err(SamplerError::BarrierOnWrongSide {
                    start: start.as_f64(),
                    barrier: b.as_f64(),
                    direction,
                });
            }
            Some(gap)
        }
    };
    Ok(edge_unchecked(start, gap, direction, params, rng))
}

/// [`sample_edge`] with the gap precomputed and validated by the caller.
#[inline]
pub(crate) fn edge_unchecked<T: Real, R: Rng + ?Sized>(
    start: T,
    gap: Option<T>,
    direction: Direction,
    params: &ModelParams<T>,
    rng: &mut R,
) -> EdgeOutcome<T> {
    let lifetime = sample_lifetime(rng);
    let w = sample_increment(params, lifetime, rng);
    let Some(gap) = gap else {
        return EdgeOutcome::Died(start + w);
    };
    let shift = match direction {
        Direction::Up => w,
        Direction::Down => -w,
    };
    let p = crossing_prob_unchecked(gap, shift, T::lit(lifetime));
    if p >= T::one() || T::lit(open_unit(rng.next_u64())) < p {
        EdgeOutcome::Crossed
    } else {
        EdgeOutcome::Died(start + w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_half_line;
    use crate::rng::RngStream;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn boundary_params() {
        let p = make_params(2.0_f64).unwrap();
        assert!((p.r_plus() - (SQRT2 - 1.0)).abs() < 1e-12);
        assert!((p.r_minus() - (SQRT2 + 1.0)).abs() < 1e-12);
        assert!((p.p() - (2.0 + SQRT2) / 4.0).abs() < 1e-12);
        assert!((p.p() - 0.853553).abs() < 1e-6);
        assert!((p.r_plus() * p.r_minus() - 1.0).abs() < 1e-15);
        assert!(p.is_boundary());
    }

    #[test]
    fn drift_three_matches_quadratic_roots() {
        // Oracle: roots of λ² + 3λ - 1 by the quadratic formula.
        let disc = (9.0_f64 + 4.0).sqrt();
        let p = make_params(3.0_f64).unwrap();
        assert!((p.r_plus() - (disc - 3.0) / 2.0).abs() < 1e-14);
        assert!((p.r_plus() - 0.302776).abs() < 1e-6);
        assert!((p.r_minus() - 3.302776).abs() < 1e-6);
        assert!((p.r_minus() - p.r_plus() - 3.0).abs() < 1e-14);
        assert!(!p.is_boundary());
    }

    #[test]
    fn rejects_subcritical_drift() {
        assert!(matches!(make_params(1.9_f64), Err(SamplerError::DriftBelowBoundary(_))));
        assert!(make_params(f64::NAN).is_err());
    }

    #[test]
    fn single_precision_params() {
        let p = make_params(2.0_f32).unwrap();
        assert!((p.p() - 0.853_553_4).abs() < 1e-6);
    }

    #[test]
    fn displacement_spot_values() {
        let law = DisplacementLaw::new(&ModelParams::<f64>::boundary());
        assert!((law.pdf(-1e-300) - SQRT2 / 4.0).abs() < 1e-12);
        assert!((law.pdf(0.0) - SQRT2 / 4.0).abs() < 1e-12);
        assert!((law.cdf(0.0) - (2.0 - SQRT2) / 4.0).abs() < 1e-12);
        assert!((law.cdf(-1e-300) - (2.0 - SQRT2) / 4.0).abs() < 1e-12);
        assert_eq!(law.mean(), 2.0);
        assert_eq!(law.variance(), 6.0);
    }

    #[test]
    fn displacement_density_integrates_to_one() {
        for mu in [2.0, 2.1, 3.0] {
            let law = DisplacementLaw::new(&make_params(mu).unwrap());
            let pos = integrate_half_line(|x: f64| law.pdf(x), 1e-11).unwrap();
            let neg = integrate_half_line(|x: f64| law.pdf(-x), 1e-11).unwrap();
            assert!((pos + neg - 1.0).abs() < 1e-10, "mu={mu}");
            // Mean and variance by quadrature against the closed forms.
            let m1 = integrate_half_line(|x: f64| x * law.pdf(x), 1e-11).unwrap()
                - integrate_half_line(|x: f64| x * law.pdf(-x), 1e-11).unwrap();
            let m2 = integrate_half_line(|x: f64| x * x * law.pdf(x), 1e-11).unwrap()
                + integrate_half_line(|x: f64| x * x * law.pdf(-x), 1e-11).unwrap();
            assert!((m1 - mu).abs() < 1e-9);
            assert!((m2 - m1 * m1 - (mu * mu + 2.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn mgf_taylor_coefficients() {
        // 1/(1 - 2λ - λ²) = 1 + 2λ + 5λ² + ...: mean 2, second moment 10.
        let law = DisplacementLaw::new(&ModelParams::<f64>::boundary());
        let h = 1e-4;
        let m0 = law.mgf(0.0).unwrap();
        let d1 = (law.mgf(h).unwrap() - law.mgf(-h).unwrap()) / (2.0 * h);
        let d2 = (law.mgf(h).unwrap() - 2.0 * m0 + law.mgf(-h).unwrap()) / (h * h);
        assert!((d1 - 2.0).abs() < 1e-6);
        assert!((d2 - 10.0).abs() < 1e-4);
        assert!(law.mgf(SQRT2 - 1.0).is_none());
        assert!(law.mgf(-SQRT2 - 1.0).is_none());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = DisplacementLaw::new(&make_params(2.4_f64).unwrap());
        for u in [1e-9, 0.01, 0.1, 0.14, 0.3, 0.5, 0.9, 0.999_999] {
            let x = law.quantile(u);
            assert!((law.cdf(x) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn spine_law_values() {
        let law = SpineStepLaw::<f64>::new(&ModelParams::boundary()).unwrap();
        assert_eq!(law.cdf(0.0), 0.5);
        assert!((law.variance() - 1.0).abs() < 1e-15);
        // Quadrature of the density over [0, 1].
        let mass = crate::quad::integrate(|x: f64| law.pdf(x), 0.0, 1.0, 1e-13).unwrap();
        assert!((mass - (1.0 - (-SQRT2).exp()) / 2.0).abs() < 1e-12);
        assert!((mass - 0.378441).abs() < 1e-6);
        assert!((law.cdf(1.0) - 0.5 - mass).abs() < 1e-12);
        assert!(SpineStepLaw::new(&make_params(2.5_f64).unwrap()).is_err());
    }

    #[test]
    fn spine_law_is_tilted_displacement() {
        let d = DisplacementLaw::new(&ModelParams::<f64>::boundary());
        let s = SpineStepLaw::<f64>::boundary();
        for x in [-3.0_f64, -0.5, 0.2, 1.0, 4.0] {
            assert!((2.0 * (-x).exp() * d.pdf(x) - s.pdf(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn crossing_prob_cases() {
        assert_eq!(edge_crossing_prob(1.5, 1.5, 0.3).unwrap(), 1.0);
        assert_eq!(edge_crossing_prob(0.0, -2.0, 0.3).unwrap(), 1.0);
        let p = edge_crossing_prob(2.0, 0.0, 1.0).unwrap();
        assert!((p - (-4.0_f64).exp()).abs() < 1e-15);
        assert!((p - 0.018316).abs() < 1e-6);
        assert!(edge_crossing_prob(1.0, 0.0, 0.0).is_err());
        assert!(edge_crossing_prob(1.0, 0.0, -1.0).is_err());
        assert!(edge_crossing_prob(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn crossing_prob_against_discretized_bridge() {
        // Oracle: fine-grid Brownian bridge (diffusion 2) from 0 to w in time T,
        // counting grid maxima above m. The grid misses excursions between
        // points, so the oracle is biased low by O(sqrt(dt)).
        let (m, w, t) = (2.0_f64, 0.0, 1.0);
        let steps = 2000;
        let runs = 20_000;
        let dt = t / steps as f64;
        let mut rng = RngStream::new(3, 0);
        let mut hits = 0;
        let mut path = vec![0.0; steps + 1];
        for _ in 0..runs {
            for k in 1..=steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                path[k] = path[k - 1] + (2.0 * dt).sqrt() * z;
            }
            let end = path[steps];
            let hit = (0..=steps).any(|k| path[k] + (k as f64 / steps as f64) * (w - end) >= m);
            hits += hit as u32;
        }
        let est = hits as f64 / runs as f64;
        let exact = edge_crossing_prob(m, w, t).unwrap();
        let se = (exact * (1.0 - exact) / runs as f64).sqrt();
        // Discretization bias for this grid is roughly 10% relative.
        assert!(est <= exact + 3.0 * se, "{est} vs {exact}");
        assert!(est >= 0.8 * exact - 3.0 * se, "{est} vs {exact}");
    }

    #[test]
    fn sample_edge_preconditions() {
        let params = ModelParams::<f64>::boundary();
        let mut rng = RngStream::new(1, 1);
        assert!(sample_edge(0.0, Some(-1.0), Direction::Up, &params, &mut rng).is_err());
        assert!(sample_edge(0.0, Some(1.0), Direction::Down, &params, &mut rng).is_err());
        for _ in 0..100 {
            let out = sample_edge(0.7, Some(0.7), Direction::Up, &params, &mut rng).unwrap();
            assert_eq!(out, EdgeOutcome::Crossed);
            let out = sample_edge(0.7, Some(0.7), Direction::Down, &params, &mut rng).unwrap();
            assert_eq!(out, EdgeOutcome::Crossed);
        }
    }

    #[test]
    fn edge_never_dies_beyond_barrier() {
        let params = ModelParams::<f64>::boundary();
        let mut rng = RngStream::new(2, 2);
        for _ in 0..10_000 {
            if let EdgeOutcome::Died(x) = sample_edge(0.0, Some(0.5), Direction::Up, &params, &mut rng).unwrap() {
                assert!(x < 0.5);
            }
            if let EdgeOutcome::Died(x) = sample_edge(0.0, Some(-0.5), Direction::Down, &params, &mut rng).unwrap() {
                assert!(x > -0.5);
            }
        }
    }
}
