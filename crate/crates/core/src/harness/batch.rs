//! Multi-seed runs and their aggregation.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Metric;
use crate::grid::GridMap;
use crate::metrics::{j_index, sample_std, JIndex, MetricSummary, MetricsError, MetricsReport};
use crate::qlearn::{train, LearnError, Variant};

use super::assets::{load_map_source, MapLoadError};
use super::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Map(#[from] MapLoadError),
    #[error("variant {variant} ({metric}), seed {seed}: {source}")]
    Run {
        variant: Variant,
        metric: Metric,
        seed: u64,
        source: LearnError,
    },
    #[error("variant {variant} ({metric}), seed {seed}: {source}")]
    Metrics {
        variant: Variant,
        metric: Metric,
        seed: u64,
        source: MetricsError,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// One learner configuration: a variant and the metric its reward uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Learner {
    pub variant: Variant,
    pub metric: Metric,
}

impl Learner {
    pub const BASELINE: Learner = Learner {
        variant: Variant::A,
        metric: Metric::Euclidean,
    };
}

/// The learners a config asks for, ordered by variant and then by the
/// metric order of the config. Variants a and b always use Euclidean.
pub fn requested_learners(cfg: &ExperimentConfig) -> Vec<Learner> {
    let mut variants = cfg.variants.clone();
    variants.sort();
    variants.dedup();
    let mut out = Vec::new();
    for variant in variants {
        if variant.shapes_reward() {
            for &metric in &cfg.metrics {
                let learner = Learner { variant, metric };
                if !out.contains(&learner) {
                    out.push(learner);
                }
            }
        } else {
            out.push(Learner {
                variant,
                metric: Metric::Euclidean,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub map: String,
    pub learner: Learner,
    pub seed: u64,
    pub report: MetricsReport,
    pub steps_total: usize,
}

/// Mean and sample standard deviation over the converged runs of a group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: Option<f64>,
}

impl Stat {
    fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        Some(Stat {
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            std: sample_std(xs),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub map: String,
    pub learner: Learner,
    pub runs: usize,
    /// Runs whose eta, d and e are all defined; the statistics use only these.
    pub converged: usize,
    pub eta: Option<Stat>,
    pub d: Option<Stat>,
    pub e: Option<Stat>,
    pub steps_total: f64,
}

impl AggregateRow {
    pub fn summary(&self) -> Option<MetricSummary> {
        Some(MetricSummary {
            eta: self.eta?.mean,
            d: self.d?.mean,
            e: self.e?.mean,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JRow {
    pub map: String,
    pub baseline: Learner,
    pub learner: Learner,
    pub seeds: Vec<u64>,
    /// `None` when either side has no converged run.
    pub index: Option<JIndex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub map: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
    pub j_rows: Vec<JRow>,
}

impl ComparisonReport {
    /// Groups raw rows per learner (in the given order), averages them and
    /// scores every learner other than the baseline against it.
    pub fn assemble(map: &str, seeds: &[u64], learners: &[Learner], mut rows: Vec<RunRow>) -> Self {
        rows.sort_by_key(|r| {
            let pos = learners
                .iter()
                .position(|s| *s == r.learner)
                .unwrap_or(usize::MAX);
            (pos, r.seed)
        });
        let mut aggregates = Vec::new();
        for &learner in learners {
            let group: Vec<&RunRow> = rows.iter().filter(|r| r.learner == learner).collect();
            if group.is_empty() {
                continue;
            }
            let summaries: Vec<MetricSummary> =
                group.iter().filter_map(|r| r.report.summary()).collect();
            let pick =
                |f: fn(&MetricSummary) -> f64| -> Vec<f64> { summaries.iter().map(f).collect() };
            aggregates.push(AggregateRow {
                map: map.to_string(),
                learner,
                runs: group.len(),
                converged: summaries.len(),
                eta: Stat::of(&pick(|s| s.eta)),
                d: Stat::of(&pick(|s| s.d)),
                e: Stat::of(&pick(|s| s.e)),
                steps_total: group.iter().map(|r| r.steps_total as f64).sum::<f64>()
                    / group.len() as f64,
            });
        }
        let mut j_rows = Vec::new();
        if let Some(base) = aggregates.iter().find(|a| a.learner == Learner::BASELINE) {
            for agg in aggregates.iter().filter(|a| a.learner != Learner::BASELINE) {
                let index = match (base.summary(), agg.summary()) {
                    (Some(b), Some(i)) => j_index(&b, &i).ok(),
                    _ => None,
                };
                j_rows.push(JRow {
                    map: map.to_string(),
                    baseline: base.learner,
                    learner: agg.learner,
                    seeds: seeds.to_vec(),
                    index,
                });
            }
        }
        ComparisonReport {
            map: map.to_string(),
            seeds: seeds.to_vec(),
            rows,
            aggregates,
            j_rows,
        }
    }

    pub fn aggregate(&self, learner: Learner) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.learner == learner)
    }

    pub fn rows_for(&self, learner: Learner) -> impl Iterator<Item = &RunRow> + '_ {
        self.rows.iter().filter(move |r| r.learner == learner)
    }
}

/// Per-episode series of one run, kept for the learning-curve file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTrace {
    pub learner: Learner,
    pub seed: u64,
    /// Greedy-rollout return per episode, NaN when the rollout failed.
    pub returns: Vec<f64>,
    pub training_returns: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub report: ComparisonReport,
    pub traces: Vec<CurveTrace>,
}

fn run_one(
    cfg: &ExperimentConfig,
    map: &GridMap,
    label: &str,
    learner: Learner,
    seed: u64,
) -> Result<(RunRow, CurveTrace), BatchError> {
    let mut reward = cfg.reward;
    reward.metric = learner.metric;
    let out =
        train(map, learner.variant, &reward, &cfg.learn, &cfg.init, seed).map_err(|source| {
            BatchError::Run {
                variant: learner.variant,
                metric: learner.metric,
                seed,
                source,
            }
        })?;
    let returns = out.trace.returns();
    let report = MetricsReport::evaluate(&returns, &cfg.convergence).map_err(|source| {
        BatchError::Metrics {
            variant: learner.variant,
            metric: learner.metric,
            seed,
            source,
        }
    })?;
    let row = RunRow {
        map: label.to_string(),
        learner,
        seed,
        report,
        steps_total: out.trace.total_steps(),
    };
    let trace = CurveTrace {
        learner,
        seed,
        returns,
        training_returns: out.trace.training_returns(),
    };
    Ok((row, trace))
}

/// Runs every requested learner on every seed of `cfg` against `map`.
/// Runs are independent and execute on `jobs` threads (all cores when
/// `None`); the result does not depend on the thread count.
pub fn run_batch_on(
    cfg: &ExperimentConfig,
    map: &GridMap,
    label: &str,
    jobs: Option<usize>,
) -> Result<BatchOutput, BatchError> {
    let learners = requested_learners(cfg);
    let work: Vec<(Learner, u64)> = learners
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let results: Vec<(RunRow, CurveTrace)> = pool.install(|| {
        work.par_iter()
            .map(|&(learner, seed)| run_one(cfg, map, label, learner, seed))
            .collect::<Result<_, _>>()
    })?;
    let (rows, mut traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    traces.sort_by_key(|t| {
        let pos = learners
            .iter()
            .position(|s| *s == t.learner)
            .unwrap_or(usize::MAX);
        (pos, t.seed)
    });
    Ok(BatchOutput {
        report: ComparisonReport::assemble(label, &cfg.seeds, &learners, rows),
        traces,
    })
}

/// Loads the configured map and runs the batch on it.
pub fn run_batch(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<BatchOutput, BatchError> {
    let map = load_map_source(&cfg.map)?;
    run_batch_on(cfg, &map, &cfg.map.label(), jobs)
}
