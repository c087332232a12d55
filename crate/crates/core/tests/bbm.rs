use bbmlab::batch::{run_indexed, SampleRange};
use bbmlab::bbm::{sample_line, simulate_population, snapshot_functionals, LineConfig, DEFAULT_POPULATION_CAP};
use bbmlab::brw::CountStatus;
use bbmlab::sampler::ModelParams;
use bbmlab::stats::MeanAccumulator;

fn boundary() -> ModelParams<f64> {
    ModelParams::boundary()
}

fn functionals(t: f64, n: u64, seed: u64) -> Vec<bbmlab::bbm::Functionals> {
    let params = boundary();
    run_indexed(SampleRange::new(seed, n), 1, || (), |_, _, r| {
        snapshot_functionals(&simulate_population(&params, t, DEFAULT_POPULATION_CAP, r).unwrap())
    })
    .unwrap()
}

#[test]
fn population_size_has_yule_mean() {
    let f = functionals(5.0, 10_000, 41);
    let est = MeanAccumulator::from_slice(&f.iter().map(|s| s.size as f64).collect::<Vec<_>>()).estimate();
    let truth = 5f64.exp();
    assert!((est.value - truth).abs() < 3.0 * est.stderr, "{} vs {truth}", est.value);
}

#[test]
fn additive_and_derivative_martingales_keep_their_means() {
    for t in [2.0, 5.0] {
        let f = functionals(t, 10_000, 42);
        let w = MeanAccumulator::from_slice(&f.iter().map(|s| s.w).collect::<Vec<_>>()).estimate();
        let d = MeanAccumulator::from_slice(&f.iter().map(|s| s.d).collect::<Vec<_>>()).estimate();
        assert!((w.value - 1.0).abs() < 3.0 * w.stderr, "t={t}: W {w:?}");
        assert!(d.value.abs() < 3.0 * d.stderr, "t={t}: D {d:?}");
    }
}

#[test]
fn minimum_drifts_upward() {
    let (m2, m8) = (functionals(2.0, 2_000, 43), functionals(8.0, 2_000, 44));
    let med = |f: &[bbmlab::bbm::Functionals]| {
        let mut m: Vec<f64> = f.iter().map(|s| s.m).collect();
        m.sort_by(f64::total_cmp);
        m[m.len() / 2]
    };
    assert!(med(&m8) > med(&m2));
}

#[test]
fn root_alone_on_the_line() {
    // Z_x = 1 exactly when the root reaches x before its first split.
    let params = boundary();
    let n = 100_000u64;
    for x in [0.5, 1.0, 2.0] {
        let cfg = LineConfig::new(x);
        let lines = run_indexed(SampleRange::new(45, n), 1, || (), |_, _, r| sample_line(&params, &cfg, r)).unwrap();
        assert!(lines.iter().all(|l| l.status == CountStatus::Exact && l.z_count == l.births + 1));
        let p = lines.iter().filter(|l| l.z_count == 1).count() as f64 / n as f64;
        let truth = (-(2f64.sqrt() - 1.0) * x).exp();
        let se = (truth * (1.0 - truth) / n as f64).sqrt();
        assert!((p - truth).abs() < 4.0 * se, "x={x}: {p} vs {truth}");
    }
}

#[test]
fn line_below_the_start_is_empty_when_the_root_stays_above() {
    // Z_x = 0 for x < 0 requires every birth to stay above x; the root's own
    // birth falls below x with probability (1-p) e^{r_minus x}.
    let params = boundary();
    let n = 50_000u64;
    let x = -1.0;
    let cfg = LineConfig::new(x);
    let lines = run_indexed(SampleRange::new(46, n), 1, || (), |_, _, r| sample_line(&params, &cfg, r)).unwrap();
    let empty = lines.iter().filter(|l| l.z_count == 0).count() as f64 / n as f64;
    let root_below = (2.0 - 2f64.sqrt()) / 4.0 * ((2f64.sqrt() + 1.0) * x).exp();
    assert!(empty > 0.0 && empty < 1.0 - root_below);
}
