//! Rendering of benchmark results as Markdown, long-form CSV, or JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::evaluator::{
    rank_methods, BenchmarkConfig, BenchmarkResult, GapRecord, Metric, MetricRanking, ReportTable,
    SeriesFailure,
};
use crate::ingest::IngestReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!(
                "unknown format `{other}` (expected markdown, csv or json)"
            )),
        }
    }
}

/// Ingestion bookkeeping for one input file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSummary {
    pub path: String,
    pub dataset: String,
    pub series_len: usize,
    pub ingest: IngestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub inputs: Vec<InputSummary>,
    pub tables: Vec<ReportTable>,
    pub rankings: Vec<MetricRanking>,
    pub failures: Vec<SeriesFailure>,
    pub gaps: Vec<GapRecord>,
}

impl BenchmarkReport {
    pub fn new(
        config: BenchmarkConfig,
        result: BenchmarkResult,
        inputs: Vec<InputSummary>,
    ) -> Self {
        Self {
            rankings: rank_methods(&result.tables),
            config,
            inputs,
            tables: result.tables,
            failures: result.failures,
            gaps: result.gaps,
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Markdown => self.to_markdown(),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Long form: one row per (dataset, gap, method, metric).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,gap_minutes,method,metric,value,n_gaps\n");
        for table in &self.tables {
            for summary in table.columns.iter().flatten() {
                let mut row = |metric: &str, value: Option<f64>, n: usize| {
                    let value = value.map(|v| v.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        csv_field(&table.dataset_label),
                        table.gap_minutes,
                        summary.method,
                        metric,
                        value,
                        n
                    );
                };
                for metric in Metric::ALL {
                    row(metric.as_str(), summary.mean(metric), summary.count(metric));
                }
                if self.config.concatenated {
                    row(
                        "cdt_concatenated",
                        summary.concatenated_cdt,
                        summary.n_gaps_scored,
                    );
                    row(
                        "jsd_concatenated",
                        summary.concatenated_jsd,
                        summary.n_gaps_scored,
                    );
                }
            }
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Heart-rate gap imputation benchmark\n\n");
        let _ = writeln!(
            out,
            "Per-gap scores are pooled across every series of a dataset and then averaged, so each gap \
             carries equal weight. Gaps are placed every {} min with all gaps masked at once. Lower is \
             better for every metric; the best value in each row is bold. CDT is the absolute Cohen's \
             distance with sample standard deviations; JS distance uses {} equal-width bins and base-2 \
             logarithms.",
            self.config.spacing_minutes, self.config.n_bins
        );
        for table in &self.tables {
            out.push('\n');
            out.push_str(&markdown_table(table));
            if self.config.concatenated {
                out.push('\n');
                out.push_str(&concatenated_table(table));
            }
        }
        if !self.failures.is_empty() {
            out.push_str("\n## Skipped inputs\n\n");
            for f in &self.failures {
                let _ = writeln!(
                    out,
                    "- {} (series {}), {} min gaps: {}",
                    f.dataset, f.series_index, f.gap_minutes, f.error
                );
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn format_cell(metric: Metric, v: f64) -> String {
    match metric {
        Metric::Rmse | Metric::Mae | Metric::Mape => format!("{v:.2}"),
        Metric::Cdt | Metric::Jsd => format!("{v:.3}"),
    }
}

fn markdown_table(table: &ReportTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "## {}, {} min gaps\n",
        table.dataset_label, table.gap_minutes
    );
    out.push('|');
    for m in &table.methods {
        let _ = write!(out, " | {}", m.display_name());
    }
    out.push_str(" |\n|---");
    out.push_str(&"|---:".repeat(table.methods.len()));
    out.push_str("|\n");
    for metric in Metric::ALL {
        let best = table.best(metric);
        let _ = write!(out, "| {}", metric.display_name());
        for &m in &table.methods {
            let cell = match table.cell(metric, m) {
                Some(v) if best.contains(&m) => format!("**{}**", format_cell(metric, v)),
                Some(v) => format_cell(metric, v),
                None => "n/a".to_string(),
            };
            let _ = write!(out, " | {cell}");
        }
        out.push_str(" |\n");
    }

    out.push('\n');
    let _ = write!(out, "Series: {}. Gaps scored:", table.n_series);
    for (m, col) in table.methods.iter().zip(&table.columns) {
        let scored = col.as_ref().map_or(0, |s| s.n_gaps_scored);
        let _ = write!(out, " {} {scored}", m.display_name());
        if let Some(s) = col.as_ref().filter(|s| s.n_gaps_skipped > 0) {
            let _ = write!(out, " ({} skipped)", s.n_gaps_skipped);
        }
        out.push(';');
    }
    out.pop();
    out.push_str(".\n");
    let absent: Vec<String> = table
        .methods
        .iter()
        .zip(&table.columns)
        .filter_map(|(m, c)| {
            c.as_ref()
                .filter(|s| s.n_cdt_absent > 0)
                .map(|s| format!("{} {}", m.display_name(), s.n_cdt_absent))
        })
        .collect();
    if !absent.is_empty() {
        let _ = writeln!(
            out,
            "CDT undefined (zero spread or single-sample gap) and excluded from its mean: {}.",
            absent.join(", ")
        );
    }
    out
}

fn concatenated_table(table: &ReportTable) -> String {
    let mut out = String::from(
        "Concatenated-gap statistics (all gaps pooled into one segment, not per-gap means):\n\n|",
    );
    for m in &table.methods {
        let _ = write!(out, " | {}", m.display_name());
    }
    out.push_str(" |\n|---");
    out.push_str(&"|---:".repeat(table.methods.len()));
    out.push_str("|\n");
    type Getter = fn(&crate::evaluator::MethodSummary) -> Option<f64>;
    let rows: [(&str, Getter); 2] = [
        ("CDT (concatenated)", |s| s.concatenated_cdt),
        ("JS distance (concatenated)", |s| s.concatenated_jsd),
    ];
    for (name, get) in rows {
        let _ = write!(out, "| {name}");
        for col in &table.columns {
            let cell = col
                .as_ref()
                .and_then(get)
                .map_or("n/a".to_string(), |v| format!("{v:.3}"));
            let _ = write!(out, " | {cell}");
        }
        out.push_str(" |\n");
    }
    out
}
