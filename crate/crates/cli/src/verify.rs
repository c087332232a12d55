//! Acceptance criteria as executable checks.
//!
//! Every criterion returns a [`Criterion`] with one [`Check`] per measured
//! quantity; a criterion passes when all its checks do. Tolerances and sample
//! sizes are fixed here and are not configurable.

use std::sync::OnceLock;

use serde::Serialize;

use bbmlab::batch::{derive_seed, run_chunked, run_indexed, SampleRange};
use bbmlab::bbm::{sample_line, sample_min_position, sample_n_x_composed, simulate_population, snapshot_functionals};
use bbmlab::bbm::{LineConfig, DEFAULT_POPULATION_CAP};
use bbmlab::brw::{CountStatus, ExploreConfig, TreeExplorer};
use bbmlab::rng::RngStream;
use bbmlab::sampler::{make_params, DisplacementLaw, ModelParams};
use bbmlab::spine::{
    boundary_identities, constant_variation, default_battery, local_limit_sup, many_to_one_battery, probe_from_endpoints,
    spine_endpoints, BallotKind, BallotProbe,
};
use bbmlab::stats::{
    bootstrap_mean_se, functional_equation_check, laplace_expansion_check, loglog_slope, median, ratio_convergence,
    tail_ratio, tree_merge, truncated_mean_offset, two_sample_rank_test, EmpiricalTail, EstimateCI, MeanAccumulator,
};

use crate::cache::{ComposedRecord, CountRecord, SampleCache};

pub const DEFAULT_SEED: u64 = 20_240_601;
const CACHE_REVISION: u32 = 1;

pub const COUNT_CAP: u64 = 100_000;
pub const N_SAMPLES: u64 = 1_000_000;
pub const B14_SAMPLES: u64 = 20_000;
pub const C_TARGET: f64 = 1.270_362_845_461_478; // log 2 + γ
pub const LINEAR_TARGET: f64 = 1.693_147_180_559_945; // 1 + log 2
pub const MAX_WORK_CAPPED: f64 = 1e-3;
/// Node budget for count runs: about 3e5 explored nodes per birth at B=14,
/// so `COUNT_CAP` binds first.
pub const NODE_CAP: u64 = 50_000_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub target: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Measured but not asserted.
    pub notes: Vec<String>,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Self { id, title, pass: true, checks: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, value: f64, stderr: Option<f64>, target: impl Into<String>, pass: bool) {
        self.pass &= pass;
        self.checks.push(Check { name: name.into(), value, stderr, target: target.into(), pass });
    }

    fn within(&mut self, name: impl Into<String>, e: &EstimateCI, lo: f64, hi: f64) {
        let pass = lo <= e.value && e.value <= hi;
        self.check(name, e.value, Some(e.stderr), format!("[{lo}, {hi}]"), pass);
    }

    fn close(&mut self, name: impl Into<String>, value: f64, target: f64, tol: f64) {
        let pass = (value - target).abs() <= tol;
        self.check(name, value, None, format!("{target} ± {tol:e}"), pass);
    }

    fn agree(&mut self, name: impl Into<String>, a: &EstimateCI, b: &EstimateCI, k: f64) {
        let z = a.z_distance(b);
        self.check(name, a.value - b.value, Some(a.stderr.hypot(b.stderr)), format!("|z| ≤ {k}"), z <= k);
    }

    fn fail(&mut self, name: impl Into<String>, why: impl Into<String>) {
        self.check(name, f64::NAN, None, why, false);
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// One line: id, title, verdict, then every check.
    pub fn line(&self) -> String {
        let checks: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let se = c.stderr.map(|s| format!(" (se {s:.3e})")).unwrap_or_default();
                format!("{}={:.6}{se} vs {} {}", c.name, c.value, c.target, if c.pass { "ok" } else { "MISS" })
            })
            .collect();
        format!(
            "criterion {:02} {} {}: {}",
            self.id,
            self.title,
            if self.pass { "PASS" } else { "FAIL" },
            checks.join("; ")
        )
    }
}

/// Shared state for a verification run: seed, worker count, sample cache,
/// and the sample sets reused across criteria.
pub struct Lab {
    pub seed: u64,
    pub workers: usize,
    pub cache: SampleCache,
    n_b12: OnceLock<Vec<CountRecord>>,
}

impl Lab {
    pub fn new(seed: u64, workers: usize, cache: SampleCache) -> Self {
        Self { seed, workers: workers.max(1), cache, n_b12: OnceLock::new() }
    }

    fn sub_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    /// `N_x` (or `N`) samples from a root at 0.
    pub fn counts(&self, mu: f64, config: &ExploreConfig<f64>, seed: u64, count: u64) -> Vec<CountRecord> {
        let tag = format!("r{CACHE_REVISION}-mu{mu}-{config:?}-seed{seed}");
        let params = make_params(mu).expect("valid drift");
        self.cache
            .load_or_run(
                &tag,
                SampleRange::new(seed, count),
                self.workers,
                || TreeExplorer::new(&params, config),
                |ex, _, rng| CountRecord::from(&ex.sample(rng)),
            )
            .expect("worker pool")
    }

    pub fn composed(&self, config: &ExploreConfig<f64>, line: &LineConfig<f64>, seed: u64, count: u64) -> Vec<ComposedRecord> {
        let tag = format!("r{CACHE_REVISION}-composed-{config:?}-{line:?}-seed{seed}");
        let params = ModelParams::boundary();
        self.cache
            .load_or_run(
                &tag,
                SampleRange::new(seed, count),
                self.workers,
                || TreeExplorer::new(&params, config),
                |ex, _, rng| {
                    let c = sample_n_x_composed(&params, ex, line, rng);
                    ComposedRecord { count: CountRecord::from(&c.count), z: c.line.z_count }
                },
            )
            .expect("worker pool")
    }

    /// The main sample of `N`: boundary drift, barrier 12, cap 10⁵.
    pub fn n_b12(&self) -> &[CountRecord] {
        self.n_b12.get_or_init(|| self.counts(2.0, &n_config(12.0), self.sub_seed("n"), N_SAMPLES))
    }
}

pub fn n_config(barrier: f64) -> ExploreConfig<f64> {
    ExploreConfig::new(0.0).with_barrier(barrier).with_count_cap(COUNT_CAP).with_node_cap(NODE_CAP)
}

pub fn tail_of(records: &[CountRecord], cap: u64) -> EmpiricalTail {
    EmpiricalTail::new(records.iter().map(|r| (r.value, r.status)), Some(cap))
}

fn work_capped_check(c: &mut Criterion, name: &str, tail: &EmpiricalTail) {
    let f = tail.excluded_fraction();
    c.check(format!("{name} work-capped fraction"), f, None, format!("< {MAX_WORK_CAPPED}"), f < MAX_WORK_CAPPED);
}

/// Excluded samples already had this many births when the budget ran out;
/// tail points above the smallest such count are biased low.
fn work_capped_note(c: &mut Criterion, name: &str, records: &[CountRecord]) {
    let partial: Vec<u64> =
        records.iter().filter(|r| r.status == CountStatus::WorkCapped).map(|r| r.value).collect();
    if let Some(lo) = partial.iter().min() {
        c.note(format!("{name}: {} work-capped samples, partial counts ≥ {lo}", partial.len()));
    }
}

pub fn criterion_01() -> Criterion {
    let mut c = Criterion::new(1, "closed-form identities");
    let p = ModelParams::<f64>::boundary();
    match boundary_identities(&p) {
        Ok((m0, m1, m2)) => {
            c.close("m0", m0, 1.0, 1e-8);
            c.close("m1", m1, 0.0, 1e-8);
            c.close("m2", m2, 1.0, 1e-8);
        }
        Err(e) => c.fail("boundary identities", e.to_string()),
    }
    let s2 = 2f64.sqrt();
    c.close("r_plus", p.r_plus(), s2 - 1.0, 1e-12);
    c.close("r_minus", p.r_minus(), s2 + 1.0, 1e-12);
    c.close("p", p.p(), (2.0 + s2) / 4.0, 1e-12);
    let law = DisplacementLaw::new(&p);
    c.close("pdf(0-)", law.pdf(-1e-300), s2 / 4.0, 1e-12);
    c.close("pdf(0+)", law.pdf(1e-300), s2 / 4.0, 1e-12);
    c.close("cdf(0)", law.cdf(0.0), (2.0 - s2) / 4.0, 1e-12);
    c
}

/// Many-to-one over the default battery for each `n` in `ns`.
pub fn criterion_02(lab: &Lab, ns: &[usize], samples: u64) -> Criterion {
    let mut c = Criterion::new(2, "many-to-one");
    let battery = default_battery();
    for &n in ns {
        match many_to_one_battery(&battery, n, samples, lab.sub_seed(&format!("m2o-{n}")), lab.workers) {
            Ok(rows) => {
                for r in rows {
                    let label = format!("n={n} {}", r.functional.label());
                    c.agree(label, &r.lhs, &r.rhs, 3.0);
                    if n == 1 && r.functional.upper == Some(0.0) && r.functional.floor.is_none() {
                        let exact = EstimateCI::exact((2.0 - 2f64.sqrt()) / 2.0, 1);
                        c.agree("n=1 lhs vs (2-√2)/2", &r.lhs, &exact, 3.0);
                        c.agree("n=1 rhs vs (2-√2)/2", &r.rhs, &exact, 3.0);
                    }
                }
            }
            Err(e) => c.fail(format!("n={n}"), e.to_string()),
        }
    }
    c
}

pub fn criterion_03(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(3, "tail n·P(N≥n)");
    let t12 = tail_of(lab.n_b12(), COUNT_CAP);
    let b14 = lab.counts(2.0, &n_config(14.0), lab.sub_seed("n"), B14_SAMPLES);
    let t14 = tail_of(&b14, COUNT_CAP);
    work_capped_check(&mut c, "B=12", &t12);
    work_capped_check(&mut c, "B=14", &t14);
    work_capped_note(&mut c, "B=12", lab.n_b12());
    work_capped_note(&mut c, "B=14", &b14);
    for (n, lo, hi) in [(100, 0.85, 1.15), (1000, 0.85, 1.15), (10_000, 0.7, 1.3)] {
        match tail_ratio(&t12, n) {
            Ok(e) => c.within(format!("n={n}"), &e, lo, hi),
            Err(e) => c.fail(format!("n={n}"), e.to_string()),
        }
    }
    for n in [1u64, 10, 100, 1000] {
        let (a, b) = (tail_ratio(&t12, n).unwrap(), tail_ratio(&t14, n).unwrap());
        c.agree(format!("B12-B14 at n={n}"), &a, &b, 2.0);
    }
    let (a, b) = (truncated_mean_offset(&t12, 300).unwrap(), truncated_mean_offset(&t14, 300).unwrap());
    c.agree("B12-B14 offset n=300", &a, &b, 2.0);
    let bias: f64 = lab.n_b12().iter().map(|r| r.pruned as f64).sum::<f64>() * (-12f64).exp() / t12.total() as f64;
    c.note(format!("mean pruning bias bound at B=12: {bias:.4}"));
    c
}

pub fn criterion_04(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(4, "truncated-mean constant");
    let t = tail_of(lab.n_b12(), COUNT_CAP);
    for n in [300, 1000, 3000] {
        match truncated_mean_offset(&t, n) {
            Ok(e) => c.within(format!("offset n={n}"), &e, 1.12, 1.42),
            Err(e) => c.fail(format!("offset n={n}"), e.to_string()),
        }
    }
    c.note(format!("target {C_TARGET:.6}"));
    c
}

pub fn criterion_05(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(5, "Laplace expansion coefficient");
    let t = tail_of(lab.n_b12(), COUNT_CAP);
    match (laplace_expansion_check(&t, 3e-3), laplace_expansion_check(&t, 1e-2)) {
        (Ok(small), Ok(large)) => {
            c.within("coef λ=3e-3", &small, 1.54, 1.84);
            let (ds, dl) = ((small.value - LINEAR_TARGET).abs(), (large.value - LINEAR_TARGET).abs());
            c.check(
                "|coef−target| λ=3e-3 minus λ=1e-2",
                ds - dl,
                None,
                "< 0 (approach as λ↓)",
                ds < dl,
            );
            c.note(format!("coef λ=1e-2: {:.4} ± {:.4}", large.value, large.stderr));
        }
        (Err(e), _) | (_, Err(e)) => c.fail("laplace", e.to_string()),
    }
    c
}

pub const NX_BARRIER: f64 = 10.0;
pub const NX_SAMPLES: u64 = 10_000;
pub const NX_BASE_SAMPLES: u64 = 100_000;
pub const NX_LINE_SAMPLES: u64 = 100_000;

pub fn nx_config(x: f64) -> ExploreConfig<f64> {
    ExploreConfig::new(x).with_barrier(NX_BARRIER).with_count_cap(COUNT_CAP).with_node_cap(NODE_CAP)
}

pub fn line_samples(lab: &Lab, config: &LineConfig<f64>, seed: u64, count: u64) -> Vec<bbmlab::bbm::LineSample<f64>> {
    let params = ModelParams::boundary();
    run_indexed(SampleRange::new(seed, count), lab.workers, || (), |_, _, rng| sample_line(&params, config, rng))
        .expect("worker pool")
}

pub fn criterion_06(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(6, "stopping-line decomposition");
    let mut direct_tails = Vec::new();
    for x in [-2.0, -1.0, 1.0, 2.0] {
        let cfg = nx_config(x);
        let direct = lab.counts(2.0, &cfg, lab.sub_seed(&format!("nx-direct-{x}")), NX_SAMPLES);
        let line = LineConfig::new(x).with_barrier(NX_BARRIER);
        let composed = lab.composed(&cfg, &line, lab.sub_seed(&format!("nx-composed-{x}")), NX_SAMPLES);
        let td = tail_of(&direct, COUNT_CAP);
        let comp: Vec<CountRecord> = composed.iter().map(|r| r.count).collect();
        let tc = tail_of(&comp, COUNT_CAP);
        match two_sample_rank_test(&td, &tc) {
            Ok(r) => c.check(format!("rank p x={x}"), r.p_value, None, "> 0.01", r.p_value > 0.01),
            Err(e) => c.fail(format!("rank x={x}"), e.to_string()),
        }
        direct_tails.push((x, td));
    }
    let base = tail_of(&lab.counts(2.0, &n_config(NX_BARRIER), lab.sub_seed("n-b10"), NX_BASE_SAMPLES), COUNT_CAP);
    for (x, td) in direct_tails.iter().filter(|(x, _)| *x > 0.0) {
        let lines = line_samples(lab, &LineConfig::new(*x), lab.sub_seed(&format!("z-{x}")), NX_LINE_SAMPLES);
        let z: Vec<u64> = lines.iter().filter(|l| l.status == CountStatus::Exact).map(|l| l.z_count).collect();
        for lambda in [0.01, 0.03] {
            match functional_equation_check(td, &base, &z, lambda, *x) {
                Ok((l, r)) => c.agree(format!("eq x={x} λ={lambda}"), &l, &r, 3.0),
                Err(e) => c.fail(format!("eq x={x} λ={lambda}"), e.to_string()),
            }
        }
    }
    c
}

pub const POP_SAMPLES: u64 = 10_000;
pub const MIN_SAMPLES: u64 = 1_000;
pub const MIN_EPS: f64 = 1e-6;

pub fn criterion_07(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(7, "martingales and minimum");
    let params = ModelParams::<f64>::boundary();
    for t in [2.0, 5.0, 8.0] {
        let f = run_indexed(
            SampleRange::new(lab.sub_seed(&format!("pop-{t}")), POP_SAMPLES),
            lab.workers,
            || (),
            |_, _, rng| simulate_population(&params, t, DEFAULT_POPULATION_CAP, rng).map(|s| snapshot_functionals(&s)),
        )
        .expect("worker pool");
        let Ok(f): Result<Vec<_>, _> = f.into_iter().collect() else {
            c.fail(format!("t={t}"), "population cap reached");
            continue;
        };
        let w: Vec<f64> = f.iter().map(|s| s.w).collect();
        let d: Vec<f64> = f.iter().map(|s| s.d).collect();
        let mut boot = RngStream::new(lab.sub_seed("bootstrap"), t as u64);
        for (name, xs, target) in [("W", &w, 1.0), ("D", &d, 0.0)] {
            let mean = MeanAccumulator::from_slice(xs).mean();
            let se = bootstrap_mean_se(xs, 200, &mut boot);
            let pass = (mean - target).abs() <= 3.0 * se;
            c.check(format!("E[{name}_{t}]"), mean, Some(se), format!("{target} ± 3 se"), pass);
        }
    }
    let mins = |t: f64| -> (f64, f64) {
        let r = run_indexed(
            SampleRange::new(lab.sub_seed(&format!("min-{t}")), MIN_SAMPLES),
            lab.workers,
            || (),
            |_, _, rng| sample_min_position(&params, t, MIN_EPS, rng),
        )
        .expect("worker pool");
        let v: Vec<f64> = r.iter().map(|m| m.value).collect();
        (median(&v).unwrap(), r.iter().map(|m| m.pruned_mass).fold(0.0, f64::max))
    };
    let (m4, p4) = mins(4.0);
    let (m16, p16) = mins(16.0);
    c.check("med M16 − med M4", m16 - m4, None, "[1.1, 3.1]", (1.1..=3.1).contains(&(m16 - m4)));
    c.note(format!("med M4 {m4:.4}, med M16 {m16:.4}, max pruned mass {:.2e}", p4.max(p16)));
    c
}

pub const RATIO_SAMPLES: u64 = 200;

pub fn ratio_at(lab: &Lab, x: f64) -> Result<bbmlab::stats::RatioSummary, bbmlab::stats::StatsError> {
    let cfg = ExploreConfig::new(x).with_barrier(NX_BARRIER).with_count_cap(10_000_000);
    let recs = lab.composed(&cfg, &LineConfig::new(x), lab.sub_seed(&format!("ratio-{x}")), RATIO_SAMPLES);
    let pairs: Vec<(u64, u64)> =
        recs.iter().filter(|r| r.count.status != CountStatus::WorkCapped).map(|r| (r.count.value, r.z)).collect();
    ratio_convergence(&pairs, x)
}

pub fn criterion_08(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(8, "norming ratio N_x/(x Z_x)");
    match (ratio_at(lab, 3.0), ratio_at(lab, 6.0)) {
        (Ok(r3), Ok(r6)) => {
            c.check("median x=6", r6.median, None, "[1.4, 2.6]", (1.4..=2.6).contains(&r6.median));
            let (d3, d6) = ((r3.median - 2.0).abs(), (r6.median - 2.0).abs());
            c.check("|med6−2| − |med3−2|", d6 - d3, None, "< 0", d6 < d3);
            c.note(format!("x=3: median {:.4} [{:.4}, {:.4}]", r3.median, r3.q1, r3.q3));
            c.note(format!("x=6: median {:.4} [{:.4}, {:.4}]", r6.median, r6.q1, r6.q3));
        }
        (Err(e), _) | (_, Err(e)) => c.fail("ratio", e.to_string()),
    }
    c
}

pub const LINE_TAIL_SAMPLES: u64 = 1_000_000;
pub const LINE_COUNT_CAP: u64 = 100_000;

/// Log-spaced grid between `lo` and `hi`, four points per decade.
pub fn log_grid(lo: u64, hi: u64) -> Vec<u64> {
    let mut g = Vec::new();
    let mut k = 0;
    loop {
        let v = (lo as f64 * 10f64.powf(k as f64 / 4.0)).round() as u64;
        if v > hi {
            break;
        }
        g.push(v);
        k += 1;
    }
    g
}

/// Grid points with enough exceedances for the slope fit.
fn usable(tail: &EmpiricalTail, grid: &[u64]) -> Vec<u64> {
    grid.iter()
        .copied()
        .filter(|&n| tail.count_at_least(n).is_ok_and(|k| k >= bbmlab::stats::MIN_SLOPE_HITS))
        .collect()
}

pub fn criterion_09(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(9, "absorbed-count tail slope");
    let cfg = LineConfig::new(1.0).with_count_cap(LINE_COUNT_CAP);
    let lines = line_samples(lab, &cfg, lab.sub_seed("line-1"), LINE_TAIL_SAMPLES);
    let tail = EmpiricalTail::new(lines.iter().map(|l| (l.births, l.status)), Some(LINE_COUNT_CAP));
    let grid = usable(&tail, &log_grid(100, 10_000));
    match loglog_slope(&tail, &grid) {
        Ok(fit) => {
            c.within("slope", &fit.slope, -1.15, -0.85);
            c.note(format!(
                "grid {:?}, curvature {:.4} (a log² correction bends the plot)",
                fit.points, fit.curvature
            ));
        }
        Err(e) => c.fail("slope", e.to_string()),
    }
    c
}

pub fn criterion_10(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(10, "lighter tail off the boundary");
    let off = lab.counts(2.1, &n_config(12.0), lab.sub_seed("n-mu2.1"), N_SAMPLES);
    let t21 = tail_of(&off, COUNT_CAP);
    let t2 = tail_of(lab.n_b12(), COUNT_CAP);
    work_capped_check(&mut c, "mu=2.1", &t21);
    work_capped_note(&mut c, "mu=2.1", &off);
    let grid = usable(&t21, &log_grid(10, 100_000));
    match loglog_slope(&t21, &grid) {
        Ok(fit) => {
            c.check("slope mu=2.1", fit.slope.value, Some(fit.slope.stderr), "≤ -3", fit.slope.value <= -3.0);
            c.note(format!("grid {:?}", fit.points));
        }
        Err(e) => c.fail("slope mu=2.1", e.to_string()),
    }
    match (t2.quantile(0.999), t21.quantile(0.999)) {
        (Some(q2), Some(q21)) => {
            let ratio = q2 / q21.max(1.0);
            c.check("q0.999(mu=2)/q0.999(mu=2.1)", ratio, None, "≥ 10", ratio >= 10.0);
            c.note(format!("q0.999: mu=2 {q2}, mu=2.1 {q21}"));
        }
        _ => c.fail("quantiles", "empty sample"),
    }
    c
}

pub const BALLOT_SAMPLES: u64 = 1_000_000;
pub const BALLOT_NS: [usize; 3] = [25, 100, 400];

/// Probes evaluated for each ballot-type bound on walks of `n` steps.
pub fn ballot_probes(n: usize, ends: &[(f64, f64)]) -> Vec<BallotProbe> {
    let mut out = vec![local_limit_sup(n, ends, 0.25).expect("valid probe")];
    let mut push = |kind, a, h, lo| out.push(probe_from_endpoints(kind, n, a, h, lo, ends).expect("valid probe"));
    for a in [0.5, 2.0, 8.0] {
        push(BallotKind::Ballot, a, 1.0, 0.0);
    }
    for a in [0.5, 2.0, 5.0, 10.0, 20.0] {
        for h in [0.5, 2.0, 5.0] {
            push(BallotKind::BallotBackward, a, h, 0.0);
        }
    }
    for a in [0.5, 2.0] {
        for lo in [0.0, 2.0] {
            for h in [1.0, 3.0] {
                push(BallotKind::ThreeFactor, a, h, lo);
            }
        }
    }
    out
}

/// Fitted constant per kind and `n`: the largest estimate/shape ratio over
/// the kind's parameter grid, skipping sample-starved probes.
pub fn ballot_constants(lab: &Lab, samples: u64) -> Vec<(BallotKind, Vec<(usize, f64)>)> {
    let mut out: Vec<(BallotKind, Vec<(usize, f64)>)> = BallotKind::ALL.iter().map(|k| (*k, Vec::new())).collect();
    for &n in &BALLOT_NS {
        let ends = spine_endpoints(n, samples, lab.sub_seed(&format!("spine-{n}")), lab.workers).expect("worker pool");
        let probes = ballot_probes(n, &ends);
        for (kind, consts) in out.iter_mut() {
            let c = probes
                .iter()
                .filter(|p| p.kind == *kind && !p.starved)
                .map(|p| p.fitted_constant())
                .fold(0.0, f64::max);
            consts.push((n, c));
        }
    }
    out
}

pub fn criterion_11(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(11, "ballot constants");
    for (kind, consts) in ballot_constants(lab, BALLOT_SAMPLES) {
        let values: Vec<f64> = consts.iter().map(|p| p.1).collect();
        let finite = values.iter().all(|v| v.is_finite() && *v > 0.0);
        let var = constant_variation(&values);
        c.check(format!("{} variation", kind.as_str()), var, None, "≤ 0.5", finite && var <= 0.5);
        c.note(format!("{}: {:?}", kind.as_str(), consts));
    }
    c
}

pub fn criterion_12(lab: &Lab) -> Criterion {
    let mut c = Criterion::new(12, "determinism and merges");
    let params = ModelParams::<f64>::boundary();
    let cfg = n_config(6.0);
    let range = SampleRange::new(lab.sub_seed("determinism"), 2_000);
    let run = |workers: usize| {
        run_chunked(range, 128, workers, || TreeExplorer::new(&params, &cfg), |ex, r| {
            let recs: Vec<CountRecord> =
                (r.start..r.end).map(|i| CountRecord::from(&ex.sample(&RngStream::new(r.seed, i)))).collect();
            let acc = MeanAccumulator::from_slice(&recs.iter().map(|x| (-0.1 * x.value as f64).exp()).collect::<Vec<_>>());
            (recs, acc)
        })
        .expect("worker pool")
    };
    let (one, eight) = (run(1), run(8));
    let same_records = one.iter().zip(&eight).all(|(a, b)| a.0 == b.0);
    c.check("records workers 1 vs 8", same_records as u8 as f64, None, "identical", same_records);
    let merge = |a: &MeanAccumulator, b: &MeanAccumulator| a.merge(b);
    let p1 = tree_merge(&one.iter().map(|x| x.1).collect::<Vec<_>>(), &merge);
    let p8 = tree_merge(&eight.iter().map(|x| x.1).collect::<Vec<_>>(), &merge);
    c.check("pooled mean bits", p1.mean() - p8.mean(), None, "bit-identical", p1 == p8);
    // integer-valued sums are exact, so any grouping must agree bit for bit
    let ints: Vec<MeanAccumulator> = one
        .iter()
        .map(|x| MeanAccumulator::from_slice(&x.0.iter().map(|r| r.value as f64).collect::<Vec<_>>()))
        .collect();
    let left = ints.iter().fold(MeanAccumulator::default(), |a, b| a.merge(b));
    let right = ints.iter().rev().fold(MeanAccumulator::default(), |a, b| b.merge(&a));
    let tree = tree_merge(&ints, &merge);
    let assoc = left == right && left == tree;
    c.check("merge associativity", assoc as u8 as f64, None, "identical", assoc);
    c
}

/// Criteria of the quick suite: closed forms and small many-to-one.
pub fn quick_suite(lab: &Lab) -> Vec<Criterion> {
    vec![criterion_01(), criterion_02(lab, &[1, 2, 3], 200_000), criterion_12(lab)]
}

pub fn full_suite(lab: &Lab) -> Vec<Criterion> {
    vec![
        criterion_01(),
        criterion_02(lab, &[1, 2, 3, 5, 8], 1_000_000),
        criterion_03(lab),
        criterion_04(lab),
        criterion_05(lab),
        criterion_06(lab),
        criterion_07(lab),
        criterion_08(lab),
        criterion_09(lab),
        criterion_10(lab),
        criterion_11(lab),
        criterion_12(lab),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_log_spaced() {
        assert_eq!(log_grid(100, 1000), vec![100, 178, 316, 562, 1000]);
    }

    #[test]
    fn line_format() {
        let mut c = Criterion::new(7, "x");
        c.close("a", 1.0, 1.0, 1e-9);
        assert!(c.line().starts_with("criterion 07 x PASS: a=1.000000"));
        c.fail("b", "why");
        assert!(!c.pass);
        assert!(c.line().contains("FAIL"));
    }

    #[test]
    fn closed_forms_pass() {
        let c = criterion_01();
        assert!(c.pass, "{}", c.line());
    }
}
