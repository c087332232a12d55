use bbmlab::batch::{run_indexed, SampleRange};
use bbmlab::spine::{default_battery, many_to_one_battery, simulate_spine, PathIndicator};
use bbmlab::stats::{weighted_line, EstimateCI, MeanAccumulator};

#[test]
fn spine_walk_is_centered_with_unit_variance() {
    let n = 100;
    let ends = run_indexed(SampleRange::new(31, 50_000), 1, || (), |_, _, r| simulate_spine(n, 0.0f64, &mut r.clone()).end())
        .unwrap();
    let acc = MeanAccumulator::from_slice(&ends);
    let est = acc.estimate();
    assert!(est.value.abs() < 3.0 * est.stderr, "{est:?}");
    // Var of the endpoint is n within a few percent
    assert!((acc.variance() / n as f64 - 1.0).abs() < 0.03, "{}", acc.variance());
}

#[test]
fn staying_nonnegative_decays_like_inverse_square_root() {
    let mut rows = Vec::new();
    for n in [16usize, 64, 256] {
        let samples = 200_000u64;
        let stay = run_indexed(SampleRange::new(32, samples), 1, || (), |_, _, r| {
            simulate_spine(n, 0.0f64, &mut r.clone()).running_min >= 0.0
        })
        .unwrap();
        let k = stay.iter().filter(|&&b| b).count() as f64;
        let p = k / samples as f64;
        rows.push(((n as f64).ln(), p.ln(), k));
    }
    let (slope, _, se) = weighted_line(&rows);
    assert!((slope + 0.5).abs() < 0.1, "slope {slope} ± {se}");
}

#[test]
fn many_to_one_battery_at_three_steps() {
    let rows = many_to_one_battery(&default_battery(), 3, 200_000, 33, 1).unwrap();
    for r in &rows {
        assert!(r.z().abs() < 4.0, "{}: {:?} vs {:?}", r.functional.label(), r.lhs, r.rhs);
    }
}

#[test]
fn one_step_many_to_one_equals_closed_form() {
    let rows = many_to_one_battery(&[PathIndicator::below(0.0)], 1, 400_000, 34, 1).unwrap();
    let exact = EstimateCI::exact((2.0 - 2f64.sqrt()) / 2.0, 1);
    assert!(rows[0].lhs.z_distance(&exact) < 3.0);
    assert!(rows[0].rhs.z_distance(&exact) < 3.0);
}
