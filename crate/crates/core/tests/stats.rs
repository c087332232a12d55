use proptest::prelude::*;

use bbmlab::brw::CountStatus;
use bbmlab::rng::RngStream;
use bbmlab::stats::{
    ks_uniform_p, log_laplace, loglog_slope, tail_ratio, tree_merge, truncated_mean_offset, two_sample_rank_test,
    EmpiricalTail, MeanAccumulator,
};

/// `⌊1/U⌋`: `P(N ≥ n) = 1/n` exactly.
fn pareto(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = RngStream::new(seed, 0);
    (0..count).map(|_| (1.0 / rng.next_open01()).floor().min(1e18) as u64).collect()
}

fn censored(values: &[u64], cap: u64) -> EmpiricalTail {
    EmpiricalTail::new(
        values.iter().map(|&v| if v >= cap { (cap, CountStatus::CountCapped) } else { (v, CountStatus::Exact) }),
        Some(cap),
    )
}

#[test]
fn tail_ratio_recovers_exact_power_law() {
    let tail = censored(&pareto(1, 1_000_000), 10_000);
    for n in [1u64, 10, 100, 1000, 10_000] {
        let e = tail_ratio(&tail, n).unwrap();
        assert!(e.contains(1.0) || (e.value - 1.0).abs() < 3.0 * e.stderr, "n={n}: {e:?}");
    }
    let fit = loglog_slope(&tail, &[10, 32, 100, 316, 1000]).unwrap();
    assert!((fit.slope.value + 1.0).abs() < 3.0 * fit.slope.stderr + 0.02, "{:?}", fit.slope);
}

#[test]
fn truncated_mean_offset_against_harmonic_numbers() {
    let tail = censored(&pareto(2, 1_000_000), 10_000);
    for n in [100u64, 1000] {
        // E[N 1{N ≤ n}] = Σ_{k ≤ n} 1/(k+1)
        let truth = (2..=n + 1).map(|k| 1.0 / k as f64).sum::<f64>() - (n as f64).ln();
        let e = truncated_mean_offset(&tail, n).unwrap();
        assert!((e.value - truth).abs() < 3.0 * e.stderr, "n={n}: {} vs {truth}", e.value);
    }
    assert!(truncated_mean_offset(&tail, 10_000).is_err());
}

#[test]
fn log_laplace_against_series() {
    let tail = censored(&pareto(3, 1_000_000), 100_000);
    for lambda in [1e-3, 1e-2] {
        let series: f64 = (1..2_000_000u64).map(|k| (-lambda * k as f64).exp() / (k as f64 * (k + 1) as f64)).sum();
        let e = log_laplace(&tail, lambda).unwrap();
        assert!((e.value - series.ln()).abs() < 3.0 * e.stderr, "λ={lambda}: {} vs {}", e.value, series.ln());
    }
}

#[test]
fn rank_test_p_values_are_uniform_under_the_null() {
    let mut ps = Vec::new();
    for rep in 0..300 {
        let a = pareto(100 + 2 * rep, 400);
        let b = pareto(101 + 2 * rep, 400);
        ps.push(two_sample_rank_test(&censored(&a, 50), &censored(&b, 50)).unwrap().p_value);
    }
    let p = ks_uniform_p(&ps);
    assert!(p > 1e-3, "KS p = {p}");
}

#[test]
fn rank_test_has_power() {
    let a = pareto(7, 2_000);
    let b: Vec<u64> = pareto(8, 2_000).iter().map(|v| v * 2).collect();
    assert!(two_sample_rank_test(&censored(&a, 1000), &censored(&b, 1000)).unwrap().p_value < 1e-6);
}

proptest! {
    #[test]
    fn merges_are_order_free_for_integer_data(xs in prop::collection::vec(0u32..1000, 1..200), cut in 1usize..16) {
        let parts: Vec<MeanAccumulator> = xs
            .chunks(cut)
            .map(|c| MeanAccumulator::from_slice(&c.iter().map(|&v| v as f64).collect::<Vec<_>>()))
            .collect();
        let merge = |a: &MeanAccumulator, b: &MeanAccumulator| a.merge(b);
        let tree = tree_merge(&parts, &merge);
        let flat = MeanAccumulator::from_slice(&xs.iter().map(|&v| v as f64).collect::<Vec<_>>());
        prop_assert_eq!(tree, flat);
        let rev: Vec<MeanAccumulator> = parts.iter().rev().copied().collect();
        prop_assert_eq!(tree_merge(&rev, &merge), flat);
    }
}
