use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use bbmlab::rng::RngStream;
use bbmlab::sampler::{sample_edge, sample_increment, sample_lifetime, Direction, DisplacementLaw, EdgeOutcome, ModelParams};
use bbmlab::stats::{chi_square_p, ks_uniform_p, MeanAccumulator};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Closed-form CDF of the boundary displacement law, written out separately
/// from the library.
fn cdf(x: f64) -> f64 {
    let p = (2.0 + SQRT2) / 4.0;
    if x < 0.0 {
        (1.0 - p) * ((SQRT2 + 1.0) * x).exp()
    } else {
        1.0 - p * (-(SQRT2 - 1.0) * x).exp()
    }
}

/// Brownian motion with drift 2 and variance 2 run for an Exp(1) time.
fn physical<R: Rng>(rng: &mut R) -> f64 {
    let t: f64 = Exp1.sample(rng);
    let z: f64 = StandardNormal.sample(rng);
    2.0 * t + (2.0 * t).sqrt() * z
}

const EDGES: [f64; 17] = [-3.0, -2.0, -1.5, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0];

fn histogram(xs: impl Iterator<Item = f64>) -> Vec<u64> {
    let mut h = vec![0u64; EDGES.len() + 1];
    for x in xs {
        h[EDGES.partition_point(|&e| e <= x)] += 1;
    }
    h
}

fn expected(n: u64) -> Vec<f64> {
    let mut cuts = vec![0.0];
    cuts.extend(EDGES.iter().map(|&e| cdf(e)));
    cuts.push(1.0);
    cuts.windows(2).map(|w| (w[1] - w[0]) * n as f64).collect()
}

#[test]
fn displacement_histogram_matches_closed_form() {
    let n = 1_000_000;
    let law = DisplacementLaw::new(&ModelParams::<f64>::boundary());
    let mut rng = RngStream::new(11, 0);
    let h = histogram((0..n).map(|_| law.sample(&mut rng)));
    let p = chi_square_p(&h, &expected(n));
    assert!(p > 1e-3, "chi-square p = {p}");
}

#[test]
fn brownian_motion_at_exponential_time_matches_closed_form() {
    let n = 1_000_000;
    let mut rng = RngStream::new(12, 0);
    let h = histogram((0..n).map(|_| physical(&mut rng)));
    let p = chi_square_p(&h, &expected(n));
    assert!(p > 1e-3, "chi-square p = {p}");
}

#[test]
fn engine_increments_reproduce_the_law() {
    let params = ModelParams::<f64>::boundary();
    let mut rng = RngStream::new(13, 0);
    let u: Vec<f64> = (0..200_000)
        .map(|_| {
            let t = sample_lifetime(&mut rng);
            cdf(sample_increment(&params, t, &mut rng))
        })
        .collect();
    assert!(ks_uniform_p(&u) > 1e-3);
}

#[test]
fn moment_generating_function() {
    let law = DisplacementLaw::new(&ModelParams::<f64>::boundary());
    let mut rng = RngStream::new(14, 0);
    let xs: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
    for lambda in [-0.3, -0.1, 0.1, 0.3] {
        let w: Vec<f64> = xs.iter().map(|x| (lambda * x).exp()).collect();
        let est = MeanAccumulator::from_slice(&w).estimate();
        // E exp(λ B_τ) = E exp(τ(2λ + λ²))
        let truth = 1.0 / (1.0 - 2.0 * lambda - lambda * lambda);
        assert!((law.mgf(lambda).unwrap() - truth).abs() < 1e-12);
        assert!((est.value - truth).abs() < 3.0 * est.stderr, "λ={lambda}: {} vs {truth}", est.value);
    }
}

#[test]
fn barrier_crossing_frequency() {
    let params = ModelParams::<f64>::boundary();
    let n = 200_000;
    for d in [0.5, 1.0, 2.0, 4.0] {
        for (dir, rate, barrier) in [(Direction::Up, SQRT2 - 1.0, d), (Direction::Down, SQRT2 + 1.0, -d)] {
            let mut rng = RngStream::new(15, (d * 10.0) as u64);
            let hits = (0..n)
                .filter(|_| matches!(sample_edge(0.0, Some(barrier), dir, &params, &mut rng).unwrap(), EdgeOutcome::Crossed))
                .count() as f64;
            let truth = (-rate * d).exp();
            let se = (truth * (1.0 - truth) / n as f64).sqrt();
            assert!((hits / n as f64 - truth).abs() < 4.0 * se + 1e-9, "d={d} {dir:?}: {} vs {truth}", hits / n as f64);
        }
    }
}

#[test]
fn unbarred_edge_dies_with_displacement_law() {
    let params = ModelParams::<f64>::boundary();
    let mut rng = RngStream::new(16, 0);
    let u: Vec<f64> = (0..200_000)
        .map(|_| match sample_edge(0.0, None, Direction::Up, &params, &mut rng).unwrap() {
            EdgeOutcome::Died(x) => cdf(x),
            EdgeOutcome::Crossed => panic!("no barrier"),
        })
        .collect();
    assert!(ks_uniform_p(&u) > 1e-3);
}

#[test]
fn streams_are_deterministic_and_distinct() {
    let law = DisplacementLaw::new(&ModelParams::<f64>::boundary());
    let draw = |seed, id| {
        let mut r = RngStream::new(seed, id);
        (0..8).map(|_| law.sample(&mut r)).collect::<Vec<f64>>()
    };
    assert_eq!(draw(1, 2), draw(1, 2));
    assert_ne!(draw(1, 2), draw(1, 3));
    assert_ne!(draw(1, 2), draw(2, 2));
    let s = RngStream::new(1, 2);
    assert_eq!(s.split(5).key(), RngStream::new(1, 2).split(5).key());
    assert_ne!(s.split(5).key(), s.split(6).key());
}
