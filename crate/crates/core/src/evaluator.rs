//! Benchmark orchestration: plan, mask, impute, score, pool, rank.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gap_protocol::{apply_mask, plan_gaps, GapError, GapWindow, MaskedSeries};
use crate::imputers::{
    impute_windows, ImputeError, ImputerConfig, Method, DEFAULT_KNN_EPSILON, DEFAULT_KNN_K,
};
use crate::ingest::{HeartRateSeries, DEFAULT_DT_SECONDS};
use crate::metrics::{self, score_gap, GapScore, PairedSegment, DEFAULT_BINS};

pub const DEFAULT_GAP_SIZES_MINUTES: [u32; 2] = [5, 15];
pub const DEFAULT_SPACING_MINUTES: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("at least one gap size is required")]
    NoGapSizes,
    #[error("at least one method is required")]
    NoMethods,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gap(#[from] GapError),
    #[error(transparent)]
    Impute(#[from] ImputeError),
    #[error("no input series")]
    NoInputs,
    #[error("every input series failed: {0}")]
    AllSeriesFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkConfig {
    pub gap_sizes_minutes: Vec<u32>,
    pub spacing_minutes: u32,
    pub methods: Vec<Method>,
    pub n_bins: usize,
    pub dt_seconds: u32,
    pub knn_k: usize,
    pub knn_epsilon: f64,
    /// Also compute CDT and JSD once over all gaps of a table cell pooled
    /// together, reported separately from the per-gap means.
    pub concatenated: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            gap_sizes_minutes: DEFAULT_GAP_SIZES_MINUTES.to_vec(),
            spacing_minutes: DEFAULT_SPACING_MINUTES,
            methods: Method::ALL.to_vec(),
            n_bins: DEFAULT_BINS,
            dt_seconds: DEFAULT_DT_SECONDS,
            knn_k: DEFAULT_KNN_K,
            knn_epsilon: DEFAULT_KNN_EPSILON,
            concatenated: false,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.gap_sizes_minutes.is_empty() {
            return Err(ConfigError::NoGapSizes);
        }
        if self.methods.is_empty() {
            return Err(ConfigError::NoMethods);
        }
        if self.gap_sizes_minutes.contains(&0) {
            return Err(ConfigError::NonPositive("gap size"));
        }
        let checks = [
            (self.spacing_minutes == 0, "spacing"),
            (self.n_bins == 0, "bins"),
            (self.dt_seconds == 0, "dt"),
            (self.knn_k == 0, "knn k"),
            (
                self.knn_epsilon.is_nan() || self.knn_epsilon <= 0.0,
                "knn epsilon",
            ),
        ];
        match checks.iter().find(|(bad, _)| *bad) {
            Some((_, name)) => Err(ConfigError::NonPositive(name)),
            None => Ok(()),
        }
    }

    pub fn imputer(&self, method: Method) -> ImputerConfig {
        ImputerConfig {
            method,
            knn_k: self.knn_k,
            knn_epsilon: self.knn_epsilon,
        }
    }

    /// Gap sizes in ascending order without repeats.
    pub fn sorted_gap_sizes(&self) -> Vec<u32> {
        let mut g = self.gap_sizes_minutes.clone();
        g.sort_unstable();
        g.dedup();
        g
    }
}

/// Settings for scoring one method at one gap size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodConfig {
    pub imputer: ImputerConfig,
    pub spacing_minutes: u32,
    pub n_bins: usize,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            imputer: ImputerConfig::new(method),
            spacing_minutes: DEFAULT_SPACING_MINUTES,
            n_bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rmse,
    Mae,
    Mape,
    Cdt,
    Jsd,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Rmse,
        Metric::Mae,
        Metric::Mape,
        Metric::Cdt,
        Metric::Jsd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Mae => "mae",
            Metric::Mape => "mape",
            Metric::Cdt => "cdt",
            Metric::Jsd => "jsd",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Metric::Rmse => "RMSE",
            Metric::Mae => "MAE",
            Metric::Mape => "MAPE",
            Metric::Cdt => "CDT",
            Metric::Jsd => "JS distance",
        }
    }

    pub fn of(self, score: &GapScore) -> Option<f64> {
        match self {
            Metric::Rmse => Some(score.rmse),
            Metric::Mae => Some(score.mae),
            Metric::Mape => Some(score.mape),
            Metric::Cdt => score.cdt,
            Metric::Jsd => Some(score.jsd),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What happened to one planned window for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum GapOutcome {
    Scored {
        start_index: usize,
        length: usize,
        real: Vec<f64>,
        imputed: Vec<f64>,
        score: GapScore,
        cdt_degenerate: bool,
    },
    Skipped {
        start_index: usize,
        length: usize,
        reason: String,
    },
}

impl GapOutcome {
    pub fn score(&self) -> Option<&GapScore> {
        match self {
            GapOutcome::Scored { score, .. } => Some(score),
            GapOutcome::Skipped { .. } => None,
        }
    }

    pub fn start_index(&self) -> usize {
        match self {
            GapOutcome::Scored { start_index, .. } | GapOutcome::Skipped { start_index, .. } => {
                *start_index
            }
        }
    }
}

/// Per-gap scores of one method averaged over every scored gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub gap_minutes: u32,
    pub n_gaps_scored: usize,
    pub n_gaps_skipped: usize,
    /// Scored gaps whose CDT was absent (too short or zero spread).
    pub n_cdt_absent: usize,
    pub mean_rmse: f64,
    pub mean_mae: f64,
    pub mean_mape: f64,
    pub mean_cdt: Option<f64>,
    pub mean_jsd: f64,
    /// CDT over all gaps' values pooled into one segment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concatenated_cdt: Option<f64>,
    /// JS distance over all gaps' values pooled into one segment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concatenated_jsd: Option<f64>,
}

impl MethodSummary {
    pub fn mean(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Rmse => Some(self.mean_rmse),
            Metric::Mae => Some(self.mean_mae),
            Metric::Mape => Some(self.mean_mape),
            Metric::Cdt => self.mean_cdt,
            Metric::Jsd => Some(self.mean_jsd),
        }
    }

    /// Number of gaps that contributed to the mean of `metric`.
    pub fn count(&self, metric: Metric) -> usize {
        match metric {
            Metric::Cdt => self.n_gaps_scored - self.n_cdt_absent,
            _ => self.n_gaps_scored,
        }
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Averages the scored outcomes. `None` when nothing was scored.
pub fn summarize(
    method: Method,
    gap_minutes: u32,
    outcomes: &[GapOutcome],
    n_bins: usize,
    concatenated: bool,
) -> Option<MethodSummary> {
    let scores: Vec<&GapScore> = outcomes.iter().filter_map(GapOutcome::score).collect();
    if scores.is_empty() {
        return None;
    }
    let mean = |m: Metric| mean_of(scores.iter().filter_map(|s| m.of(s)));

    let (concatenated_cdt, concatenated_jsd) = if concatenated {
        let (mut real, mut imputed) = (Vec::new(), Vec::new());
        for o in outcomes {
            if let GapOutcome::Scored {
                real: r,
                imputed: i,
                ..
            } = o
            {
                real.extend_from_slice(r);
                imputed.extend_from_slice(i);
            }
        }
        let seg = PairedSegment::new(real, imputed).expect("scored gaps hold valid segments");
        let cdt = metrics::cohens_distance(&seg).ok().flatten();
        let jsd = metrics::build_histogram_pair(&seg, n_bins)
            .ok()
            .map(|h| metrics::js_distance(&h));
        (cdt, jsd)
    } else {
        (None, None)
    };

    Some(MethodSummary {
        method,
        gap_minutes,
        n_gaps_scored: scores.len(),
        n_gaps_skipped: outcomes.len() - scores.len(),
        n_cdt_absent: scores.iter().filter(|s| s.cdt.is_none()).count(),
        mean_rmse: mean(Metric::Rmse)?,
        mean_mae: mean(Metric::Mae)?,
        mean_mape: mean(Metric::Mape)?,
        mean_cdt: mean(Metric::Cdt),
        mean_jsd: mean(Metric::Jsd)?,
        concatenated_cdt,
        concatenated_jsd,
    })
}

/// Imputes every window of `masked` with one method and scores each gap.
pub fn score_masked(
    masked: &MaskedSeries,
    imputer: &ImputerConfig,
    n_bins: usize,
) -> Result<Vec<GapOutcome>, ImputeError> {
    let per_window = impute_windows(masked, imputer)?;
    Ok(masked
        .plan()
        .windows
        .iter()
        .zip(per_window)
        .map(|(w, imputed)| score_window(masked, w, imputed, n_bins))
        .collect())
}

fn score_window(
    masked: &MaskedSeries,
    window: &GapWindow,
    imputed: Result<Vec<f64>, ImputeError>,
    n_bins: usize,
) -> GapOutcome {
    let skipped = |reason: String| GapOutcome::Skipped {
        start_index: window.start_index,
        length: window.length,
        reason,
    };
    let imputed = match imputed {
        Ok(v) => v,
        Err(e) => return skipped(e.to_string()),
    };
    let real = masked.window_truth(window);
    let scored = PairedSegment::new(real.clone(), imputed.clone())
        .and_then(|seg| Ok((score_gap(&seg, n_bins)?, GapScore::cdt_degenerate(&seg))));
    match scored {
        Ok((score, cdt_degenerate)) => GapOutcome::Scored {
            start_index: window.start_index,
            length: window.length,
            real,
            imputed,
            score,
            cdt_degenerate,
        },
        Err(e) => skipped(e.to_string()),
    }
}

/// Per-gap outcomes of one method on one series, plus their average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRun {
    pub outcomes: Vec<GapOutcome>,
    pub summary: Option<MethodSummary>,
}

pub fn evaluate_method(
    series: &HeartRateSeries,
    gap_minutes: u32,
    config: &MethodConfig,
) -> Result<MethodRun, EvalError> {
    let plan = plan_gaps(series, gap_minutes, config.spacing_minutes)?;
    let masked = apply_mask(series, &plan)?;
    let outcomes = score_masked(&masked, &config.imputer, config.n_bins)?;
    let summary = summarize(
        config.imputer.method,
        gap_minutes,
        &outcomes,
        config.n_bins,
        false,
    );
    Ok(MethodRun { outcomes, summary })
}

/// One dataset × gap size result table: metrics down, methods across.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTable {
    pub dataset_label: String,
    pub gap_minutes: u32,
    pub n_series: usize,
    pub methods: Vec<Method>,
    /// One entry per method, `None` if the method scored no gap.
    pub columns: Vec<Option<MethodSummary>>,
}

impl ReportTable {
    pub fn cell(&self, metric: Metric, method: Method) -> Option<f64> {
        let col = self.methods.iter().position(|&m| m == method)?;
        self.columns[col].as_ref()?.mean(metric)
    }

    /// Methods attaining the smallest value of `metric` in this table.
    pub fn best(&self, metric: Metric) -> Vec<Method> {
        let cells: Vec<(Method, f64)> = self
            .methods
            .iter()
            .filter_map(|&m| self.cell(metric, m).map(|v| (m, v)))
            .collect();
        let Some(min) = cells.iter().map(|c| c.1).reduce(f64::min) else {
            return Vec::new();
        };
        cells
            .into_iter()
            .filter(|c| c.1 == min)
            .map(|c| c.0)
            .collect()
    }
}

/// A per-gap record for audit output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub dataset: String,
    pub series_index: usize,
    pub gap_minutes: u32,
    pub method: Method,
    #[serde(flatten)]
    pub outcome: GapOutcome,
}

/// A series that could not be evaluated at one gap size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesFailure {
    pub dataset: String,
    pub series_index: usize,
    pub gap_minutes: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkResult {
    pub tables: Vec<ReportTable>,
    pub gaps: Vec<GapRecord>,
    pub failures: Vec<SeriesFailure>,
}

struct SeriesGapRun {
    series_index: usize,
    gap_minutes: u32,
    result: Result<Vec<(Method, Vec<GapOutcome>)>, EvalError>,
}

fn run_series_gap(
    series: &HeartRateSeries,
    gap_minutes: u32,
    config: &BenchmarkConfig,
) -> Result<Vec<(Method, Vec<GapOutcome>)>, EvalError> {
    let plan = plan_gaps(series, gap_minutes, config.spacing_minutes)?;
    let masked = apply_mask(series, &plan)?;
    config
        .methods
        .iter()
        .map(|&m| Ok((m, score_masked(&masked, &config.imputer(m), config.n_bins)?)))
        .collect()
}

/// Runs every configured (gap size, method) over every series and pools the
/// per-gap scores by dataset label (`HeartRateSeries::source_label`).
///
/// Tables come out ordered by dataset label, then ascending gap size; columns
/// follow the configured method order.
pub fn run_benchmark(
    inputs: &[HeartRateSeries],
    config: &BenchmarkConfig,
) -> Result<BenchmarkResult, EvalError> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(EvalError::NoInputs);
    }
    let gap_sizes = config.sorted_gap_sizes();
    let work: Vec<(usize, u32)> = (0..inputs.len())
        .flat_map(|i| gap_sizes.iter().map(move |&g| (i, g)))
        .collect();
    let runs: Vec<SeriesGapRun> = work
        .par_iter()
        .map(|&(series_index, gap_minutes)| SeriesGapRun {
            series_index,
            gap_minutes,
            result: run_series_gap(&inputs[series_index], gap_minutes, config),
        })
        .collect();

    if runs.iter().all(|r| r.result.is_err()) {
        let first = runs
            .iter()
            .find_map(|r| r.result.as_ref().err())
            .map(ToString::to_string)
            .unwrap_or_default();
        return Err(EvalError::AllSeriesFailed(first));
    }

    // (dataset, gap) -> method -> pooled outcomes, in input order
    let mut pooled: BTreeMap<(&str, u32), BTreeMap<Method, Vec<GapOutcome>>> = BTreeMap::new();
    let mut n_series: BTreeMap<(&str, u32), usize> = BTreeMap::new();
    let mut gaps = Vec::new();
    let mut failures = Vec::new();
    for run in &runs {
        let dataset = inputs[run.series_index].source_label();
        match &run.result {
            Ok(per_method) => {
                *n_series.entry((dataset, run.gap_minutes)).or_default() += 1;
                let cell = pooled.entry((dataset, run.gap_minutes)).or_default();
                for (method, outcomes) in per_method {
                    cell.entry(*method)
                        .or_default()
                        .extend(outcomes.iter().cloned());
                    gaps.extend(outcomes.iter().map(|o| GapRecord {
                        dataset: dataset.to_string(),
                        series_index: run.series_index,
                        gap_minutes: run.gap_minutes,
                        method: *method,
                        outcome: o.clone(),
                    }));
                }
            }
            Err(e) => failures.push(SeriesFailure {
                dataset: dataset.to_string(),
                series_index: run.series_index,
                gap_minutes: run.gap_minutes,
                error: e.to_string(),
            }),
        }
    }
    gaps.sort_by(|a, b| {
        (
            &a.dataset,
            a.gap_minutes,
            method_rank(config, a.method),
            a.series_index,
            a.outcome.start_index(),
        )
            .cmp(&(
                &b.dataset,
                b.gap_minutes,
                method_rank(config, b.method),
                b.series_index,
                b.outcome.start_index(),
            ))
    });

    let tables = pooled
        .iter()
        .map(|(&(dataset, gap_minutes), by_method)| ReportTable {
            dataset_label: dataset.to_string(),
            gap_minutes,
            n_series: n_series[&(dataset, gap_minutes)],
            methods: config.methods.clone(),
            columns: config
                .methods
                .iter()
                .map(|m| {
                    by_method.get(m).and_then(|o| {
                        summarize(*m, gap_minutes, o, config.n_bins, config.concatenated)
                    })
                })
                .collect(),
        })
        .collect();

    Ok(BenchmarkResult {
        tables,
        gaps,
        failures,
    })
}

fn method_rank(config: &BenchmarkConfig, m: Method) -> usize {
    config
        .methods
        .iter()
        .position(|&x| x == m)
        .unwrap_or(usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRank {
    pub method: Method,
    pub rank: usize,
    pub value: f64,
}

/// Methods ordered best-first for one metric of one table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRanking {
    pub dataset_label: String,
    pub gap_minutes: u32,
    pub metric: Metric,
    pub ranks: Vec<MethodRank>,
}

/// Ranks methods per (dataset, gap size, metric), lower means better. Equal
/// values share a rank and the next distinct value skips ahead (1, 1, 3).
/// Methods without a value for a metric are left out.
pub fn rank_methods(tables: &[ReportTable]) -> Vec<MetricRanking> {
    let mut out = Vec::new();
    for table in tables {
        for metric in Metric::ALL {
            let mut cells: Vec<(Method, f64)> = table
                .methods
                .iter()
                .filter_map(|&m| table.cell(metric, m).map(|v| (m, v)))
                .collect();
            cells.sort_by(|a, b| a.1.total_cmp(&b.1));
            let mut ranks: Vec<MethodRank> = Vec::with_capacity(cells.len());
            for (pos, &(method, value)) in cells.iter().enumerate() {
                let rank = match ranks.last() {
                    Some(prev) if prev.value == value => prev.rank,
                    _ => pos + 1,
                };
                ranks.push(MethodRank {
                    method,
                    rank,
                    value,
                });
            }
            out.push(MetricRanking {
                dataset_label: table.dataset_label.clone(),
                gap_minutes: table.gap_minutes,
                metric,
                ranks,
            });
        }
    }
    out
}
