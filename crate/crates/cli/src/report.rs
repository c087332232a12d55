//! `report`: markdown tables and plot-ready series from summary files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::output::{fmt_f64, Estimate, OutputError, Summary, SUMMARY_FILE};

pub const C_CONSTANT: f64 = 1.270_362_845_461_478;
pub const P_CONSTANT: f64 = 0.853_553_390_593_273_8;
pub const LINEAR_COEF: f64 = 1.693_147_180_559_945;

pub const SENSITIVITY_BARRIERS: [f64; 3] = [10.0, 12.0, 14.0];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("input {0} does not exist")]
    Missing(PathBuf),
    #[error("no summary.json or verify.json found under {0:?}")]
    Empty(Vec<PathBuf>),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: OutputError },
    #[error("{path} is not a verify report: {source}")]
    Verify { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Output(#[from] OutputError),
}

struct Source {
    label: String,
    summary: Summary,
}

#[derive(Default)]
struct Inputs {
    summaries: Vec<Source>,
    verify: Vec<(String, serde_json::Value)>,
}

fn label(path: &Path) -> String {
    path.parent().map(|p| p.display().to_string()).filter(|s| !s.is_empty()).unwrap_or_else(|| ".".into())
}

impl Inputs {
    fn add_file(&mut self, path: &Path) -> Result<(), ReportError> {
        if path.file_name().is_some_and(|n| n == "verify.json") {
            let text = fs::read_to_string(path)
                .map_err(|e| ReportError::Read { path: path.into(), source: OutputError::Io { path: path.into(), source: e } })?;
            let v = serde_json::from_str(&text).map_err(|source| ReportError::Verify { path: path.into(), source })?;
            self.verify.push((label(path), v));
        } else {
            let summary = Summary::read(path).map_err(|source| ReportError::Read { path: path.into(), source })?;
            self.summaries.push(Source { label: label(path), summary });
        }
        Ok(())
    }

    fn add_dir(&mut self, dir: &Path) -> Result<(), ReportError> {
        let mut dirs = vec![dir.to_path_buf()];
        if let Ok(entries) = fs::read_dir(dir) {
            let mut subs: Vec<PathBuf> = entries.flatten().map(|e| e.path()).filter(|p| p.is_dir()).collect();
            subs.sort();
            dirs.extend(subs);
        }
        for d in dirs {
            for name in [SUMMARY_FILE, "verify.json"] {
                let p = d.join(name);
                if p.is_file() {
                    self.add_file(&p)?;
                }
            }
        }
        Ok(())
    }

    fn collect(paths: &[PathBuf]) -> Result<Self, ReportError> {
        let mut inputs = Inputs::default();
        for p in paths {
            if p.is_dir() {
                inputs.add_dir(p)?;
            } else if p.is_file() {
                inputs.add_file(p)?;
            } else {
                return Err(ReportError::Missing(p.clone()));
            }
        }
        if inputs.summaries.is_empty() && inputs.verify.is_empty() {
            return Err(ReportError::Empty(paths.to_vec()));
        }
        Ok(inputs)
    }

    fn of(&self, command: &str) -> impl Iterator<Item = &Source> + '_ {
        let command = command.to_string();
        self.summaries.iter().filter(move |s| s.summary.command == command)
    }
}

fn csv_bytes(name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, OutputError> {
    let mut w = csv::Writer::from_writer(format!("# schema=bbmlab/{name}/1\n").into_bytes());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| OutputError::Csv(e.into_error().into()))
}

fn f4(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        "-".into()
    }
}

fn ci(e: &Estimate) -> String {
    format!("{} [{}, {}]", f4(e.value), f4(e.lower), f4(e.upper))
}

fn cfg(s: &Summary, key: &str) -> f64 {
    s.config_f64(key).unwrap_or(f64::NAN)
}

/// Rows of one estimate series across every summary of `command`.
fn series_rows(inputs: &Inputs, command: &str, kind: &str, keys: &[&str]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in inputs.of(command) {
        for e in s.summary.series(kind) {
            let mut r = vec![s.label.clone()];
            r.extend(keys.iter().map(|k| fmt_f64(cfg(&s.summary, k))));
            r.extend([fmt_f64(e.at), fmt_f64(e.value), fmt_f64(e.stderr), fmt_f64(e.lower), fmt_f64(e.upper)]);
            rows.push(r);
        }
    }
    rows
}

fn estimate_table(out: &mut String, title: &str, at: &str, inputs: &Inputs, command: &str, kind: &str) {
    let _ = writeln!(out, "## {title}\n\n| source | mu | B | {at} | estimate [95% CI] |\n|---|---|---|---|---|");
    let mut any = false;
    for s in inputs.of(command) {
        for e in s.summary.series(kind) {
            any = true;
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                s.label,
                cfg(&s.summary, "mu"),
                cfg(&s.summary, "barrier"),
                e.at,
                ci(e)
            );
        }
    }
    if !any {
        let _ = writeln!(out, "| - | | | | no data |");
    }
    out.push('\n');
}

/// Tail estimates of boundary-drift runs keyed by barrier.
/// Barriers found, and per `n` one estimate slot per barrier.
type Pivot = (Vec<f64>, Vec<(f64, Vec<Option<Estimate>>)>);

fn sensitivity(inputs: &Inputs) -> Pivot {
    let runs: Vec<&Summary> =
        inputs.of("sim-n").map(|s| &s.summary).filter(|s| s.config_f64("mu") == Some(2.0)).collect();
    let mut barriers: Vec<f64> = SENSITIVITY_BARRIERS.to_vec();
    for s in &runs {
        let b = cfg(s, "barrier");
        if !barriers.contains(&b) {
            barriers.push(b);
        }
    }
    barriers.sort_by(f64::total_cmp);
    let ns: BTreeSet<u64> = runs.iter().flat_map(|s| s.series("tail").map(|e| e.at as u64)).collect();
    let rows = ns
        .into_iter()
        .map(|n| {
            let cells = barriers
                .iter()
                .map(|&b| {
                    runs.iter()
                        .filter(|s| cfg(s, "barrier") == b)
                        .flat_map(|s| s.series("tail"))
                        .find(|e| e.at as u64 == n)
                        .cloned()
                })
                .collect();
            (n as f64, cells)
        })
        .collect();
    (barriers, rows)
}

fn measured(inputs: &Inputs, kind: &str, pick_largest: bool) -> Option<Estimate> {
    let all = inputs
        .of("sim-n")
        .filter(|s| s.summary.config_f64("mu") == Some(2.0))
        .flat_map(|s| s.summary.series(kind).cloned());
    if pick_largest {
        all.max_by(|a, b| a.at.total_cmp(&b.at))
    } else {
        all.min_by(|a, b| a.at.total_cmp(&b.at))
    }
}

/// Writes `report.md` and the series CSVs into `out`; nothing is written
/// unless every input parses.
pub fn write_report(inputs: &[PathBuf], out: &Path) -> Result<PathBuf, ReportError> {
    let inputs = Inputs::collect(inputs)?;
    let mut md = String::from("# bbmlab report\n\n");

    md.push_str("## Constants\n\n| constant | value | measured |\n|---|---|---|\n");
    let offset = measured(&inputs, "offset", true);
    let coef = measured(&inputs, "laplace_coef", false);
    let show = |e: Option<Estimate>, what: &str| {
        e.map(|e| format!("{} ({what} {})", ci(&e), e.at)).unwrap_or_else(|| "-".into())
    };
    let _ = writeln!(md, "| c = log 2 + γ | {C_CONSTANT:.6} | {} |", show(offset, "offset at n ="));
    let _ = writeln!(md, "| p = (2+√2)/4 | {P_CONSTANT:.6} | - |");
    let _ = writeln!(md, "| 1 + log 2 | {LINEAR_COEF:.6} | {} |\n", show(coef, "coefficient at λ ="));

    estimate_table(&mut md, "Tail n·P(N ≥ n)", "n", &inputs, "sim-n", "tail");
    estimate_table(&mut md, "Truncated-mean offset", "n", &inputs, "sim-n", "offset");

    let (barriers, sens) = sensitivity(&inputs);
    md.push_str("## Barrier sensitivity of n·P(N ≥ n)\n\n| n |");
    for b in &barriers {
        let _ = write!(md, " B={b} |");
    }
    md.push_str("\n|---|");
    md.push_str(&"---|".repeat(barriers.len()));
    md.push('\n');
    let mut sens_rows = Vec::new();
    for (n, cells) in &sens {
        let _ = write!(md, "| {n} |");
        for (b, c) in barriers.iter().zip(cells) {
            match c {
                Some(e) => {
                    let _ = write!(md, " {} ± {} |", f4(e.value), f4(e.stderr));
                    sens_rows.push(vec![fmt_f64(*b), fmt_f64(*n), fmt_f64(e.value), fmt_f64(e.stderr)]);
                }
                None => md.push_str(" - |"),
            }
        }
        md.push('\n');
    }
    md.push('\n');

    md.push_str("## Ratio N_x / (x Z_x)\n\n| source | x | median | quartiles | n |\n|---|---|---|---|---|\n");
    let mut ratio_rows = Vec::new();
    for s in inputs.of("sim-composed") {
        for e in s.summary.series("ratio_median") {
            let _ = writeln!(md, "| {} | {} | {} | {} – {} | {} |", s.label, e.at, f4(e.value), f4(e.lower), f4(e.upper), e.n);
            ratio_rows.push(vec![s.label.clone(), fmt_f64(e.at), fmt_f64(e.value), fmt_f64(e.lower), fmt_f64(e.upper)]);
        }
    }
    md.push('\n');

    if !inputs.verify.is_empty() {
        md.push_str("## Acceptance\n\n| source | criterion | title | result |\n|---|---|---|---|\n");
        for (src, v) in &inputs.verify {
            for c in v.get("criteria").and_then(|c| c.as_array()).into_iter().flatten() {
                let _ = writeln!(
                    md,
                    "| {src} | {} | {} | {} |",
                    c.get("id").and_then(|x| x.as_u64()).unwrap_or(0),
                    c.get("title").and_then(|x| x.as_str()).unwrap_or(""),
                    if c.get("pass").and_then(|x| x.as_bool()).unwrap_or(false) { "PASS" } else { "FAIL" }
                );
            }
        }
        md.push('\n');
    }

    let head = ["source", "mu", "barrier", "n", "value", "stderr", "lower", "upper"];
    let files = [
        ("series_tail.csv", csv_bytes("series_tail", &head, &series_rows(&inputs, "sim-n", "tail", &["mu", "barrier"]))?),
        ("series_offset.csv", csv_bytes("series_offset", &head, &series_rows(&inputs, "sim-n", "offset", &["mu", "barrier"]))?),
        ("series_ratio.csv", csv_bytes("series_ratio", &["source", "x", "median", "q1", "q3"], &ratio_rows)?),
        ("b_sensitivity.csv", csv_bytes("b_sensitivity", &["barrier", "n", "value", "stderr"], &sens_rows)?),
        ("report.md", md.into_bytes()),
    ];
    fs::create_dir_all(out).map_err(|source| OutputError::Io { path: out.into(), source })?;
    for (name, bytes) in &files {
        let p = out.join(name);
        fs::write(&p, bytes).map_err(|source| OutputError::Io { path: p.clone(), source })?;
    }
    Ok(out.join("report.md"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dir_is_an_error_and_writes_nothing() {
        let inp = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let err = write_report(&[inp.path().to_path_buf()], out.path()).unwrap_err();
        assert!(matches!(err, ReportError::Empty(_)));
        assert_eq!(fs::read_dir(out.path()).unwrap().count(), 0);
    }

    #[test]
    fn constants_are_exact() {
        assert!((C_CONSTANT - (2f64.ln() + 0.577_215_664_901_532_9)).abs() < 1e-15);
        assert!((P_CONSTANT - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((LINEAR_COEF - (1.0 + 2f64.ln())).abs() < 1e-15);
    }
}
