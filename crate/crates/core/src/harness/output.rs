//! Result files: per-run metrics, learning curves and text summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::{rolling_std, MetricsReport};

use super::assets::REFERENCE_CSV;
use super::batch::{AggregateRow, ComparisonReport, CurveTrace, Learner, RunRow, Stat};

/// Written in place of indicators that never converged.
pub const NOT_CONVERGED: &str = "NC";

pub const RESULTS_HEADER: [&str; 9] = [
    "map",
    "variant",
    "metric",
    "seed",
    "eta",
    "d",
    "e",
    "steps_total",
    "agg",
];

pub const CURVES_HEADER: [&str; 7] = [
    "variant",
    "metric",
    "seed",
    "episode",
    "return",
    "rolling_std",
    "train_return",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}, record {record}: {message}")]
    Parse {
        path: PathBuf,
        record: usize,
        message: String,
    },
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| NOT_CONVERGED.to_string(), |x| x.to_string())
}

fn stat(s: Option<Stat>) -> String {
    s.map_or_else(|| NOT_CONVERGED.to_string(), |s| format!("{:.4}", s.mean))
}

fn raw_record(r: &RunRow) -> [String; 9] {
    [
        r.map.clone(),
        r.learner.variant.to_string(),
        r.learner.metric.to_string(),
        r.seed.to_string(),
        opt(r.report.eta),
        opt(r.report.d),
        opt(r.report.e),
        r.steps_total.to_string(),
        String::new(),
    ]
}

fn aggregate_record(a: &AggregateRow) -> [String; 9] {
    [
        a.map.clone(),
        a.learner.variant.to_string(),
        a.learner.metric.to_string(),
        String::new(),
        stat(a.eta),
        stat(a.d),
        stat(a.e),
        format!("{:.1}", a.steps_total),
        "mean".to_string(),
    ]
}

/// Writes the results table: each learner's per-seed rows in seed order
/// followed by its aggregate row (empty seed, `agg = mean`).
pub fn write_results<W: std::io::Write>(
    report: &ComparisonReport,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for agg in &report.aggregates {
        for row in report.rows_for(agg.learner) {
            w.write_record(raw_record(row))?;
        }
        w.write_record(aggregate_record(agg))?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, OutputError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// [`write_results`] into a file.
pub fn emit_csv(report: &ComparisonReport, path: &Path) -> Result<(), OutputError> {
    write_results(report, create(path)?).map_err(csv_err(path))
}

fn float_cell(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

/// Writes learning curves in long format, one row per episode of every
/// trace. `return` is the greedy rollout's return (empty if the rollout
/// failed), `rolling_std` the trailing-window deviation of that series
/// (empty until a full window of finite values exists).
pub fn write_curves<W: std::io::Write>(
    traces: &[CurveTrace],
    window: usize,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVES_HEADER)?;
    for t in traces {
        let stds = rolling_std(&t.returns, window);
        for (i, (&ret, sd)) in t.returns.iter().zip(&stds).enumerate() {
            let train = t.training_returns.get(i).copied().unwrap_or(f64::NAN);
            w.write_record([
                t.learner.variant.to_string(),
                t.learner.metric.to_string(),
                t.seed.to_string(),
                i.to_string(),
                float_cell(ret),
                sd.map(float_cell).unwrap_or_default(),
                float_cell(train),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// [`write_curves`] into a file.
pub fn emit_learning_curves(
    traces: &[CurveTrace],
    window: usize,
    path: &Path,
) -> Result<(), OutputError> {
    write_curves(traces, window, create(path)?).map_err(csv_err(path))
}

pub fn write_reference(dir: &Path) -> Result<PathBuf, OutputError> {
    let path = dir.join("paper_reference.csv");
    std::fs::write(&path, REFERENCE_CSV).map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Reads the per-seed rows back from a `results.csv`; aggregate rows are
/// skipped.
pub fn read_results(path: &Path) -> Result<Vec<RunRow>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(OutputError::Parse {
            path: path.to_path_buf(),
            record: 0,
            message: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |message: String| OutputError::Parse {
            path: path.to_path_buf(),
            record: i + 1,
            message,
        };
        if !rec[8].is_empty() {
            continue;
        }
        fn cell<T: std::str::FromStr>(s: &str) -> Result<Option<T>, String>
        where
            T::Err: std::fmt::Display,
        {
            if s == NOT_CONVERGED {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|e| format!("{s:?}: {e}"))
        }
        let learner = Learner {
            variant: rec[1].parse().map_err(bad)?,
            metric: rec[2].parse().map_err(bad)?,
        };
        rows.push(RunRow {
            map: rec[0].to_string(),
            learner,
            seed: rec[3].parse().map_err(|e| bad(format!("seed: {e}")))?,
            report: MetricsReport {
                eta: cell(&rec[4]).map_err(bad)?,
                d: cell(&rec[5]).map_err(bad)?,
                e: cell(&rec[6]).map_err(bad)?,
            },
            steps_total: rec[7]
                .parse()
                .map_err(|e| bad(format!("steps_total: {e}")))?,
        });
    }
    Ok(rows)
}

/// Rebuilds a report from per-seed rows read from disk. Learners keep the
/// order of their first appearance.
pub fn reassemble(rows: Vec<RunRow>) -> ComparisonReport {
    let mut learners: Vec<Learner> = Vec::new();
    let mut seeds: Vec<u64> = Vec::new();
    for r in &rows {
        if !learners.contains(&r.learner) {
            learners.push(r.learner);
        }
        if !seeds.contains(&r.seed) {
            seeds.push(r.seed);
        }
    }
    seeds.sort_unstable();
    let map = rows.first().map(|r| r.map.clone()).unwrap_or_default();
    ComparisonReport::assemble(&map, &seeds, &learners, rows)
}

fn fmt_stat(s: Option<Stat>, digits: usize) -> String {
    match s {
        None => NOT_CONVERGED.to_string(),
        Some(Stat {
            mean,
            std: Some(sd),
        }) => format!("{mean:.digits$} ± {sd:.digits$}"),
        Some(Stat { mean, std: None }) => format!("{mean:.digits$}"),
    }
}

/// Plain-text table of aggregates and J indices.
pub fn summary_text(report: &ComparisonReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "map {} | {} seed(s)", report.map, report.seeds.len());
    let _ = writeln!(
        s,
        "{:<4} {:<10} {:>9} {:>20} {:>20} {:>26}",
        "var", "metric", "conv", "eta", "d", "e"
    );
    for a in &report.aggregates {
        let _ = writeln!(
            s,
            "{:<4} {:<10} {:>9} {:>20} {:>20} {:>26}",
            a.learner.variant.to_string(),
            a.learner.metric.to_string(),
            format!("{}/{}", a.converged, a.runs),
            fmt_stat(a.eta, 1),
            fmt_stat(a.d, 1),
            fmt_stat(a.e, 4),
        );
    }
    if !report.j_rows.is_empty() {
        let _ = writeln!(
            s,
            "J vs {} ({}):",
            report.j_rows[0].baseline.variant, report.j_rows[0].baseline.metric
        );
        for j in &report.j_rows {
            match j.index {
                Some(ix) => {
                    let _ = writeln!(
                        s,
                        "  {} {:<10} eta {:>7.2}%  d {:>7.2}%  e {:>9.2}%  J {:>8.2}%",
                        j.learner.variant,
                        j.learner.metric.to_string(),
                        ix.eta_pct,
                        ix.d_pct,
                        ix.e_pct,
                        ix.j
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "  {} {:<10} {}",
                        j.learner.variant,
                        j.learner.metric.to_string(),
                        NOT_CONVERGED
                    );
                }
            }
        }
    }
    s
}

/// Writes every result file of a batch into `dir`, creating it if needed.
pub fn write_outputs(
    report: &ComparisonReport,
    traces: &[CurveTrace],
    window: usize,
    dir: &Path,
) -> Result<(), OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    emit_csv(report, &dir.join("results.csv"))?;
    emit_learning_curves(traces, window, &dir.join("curves.csv"))?;
    write_reference(dir)?;
    Ok(())
}
