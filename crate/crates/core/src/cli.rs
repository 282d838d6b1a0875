//! Command-line driver. Everything here is a thin layer over the library:
//! ingest each input, run the benchmark, write the report.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use thiserror::Error;

use crate::evaluator::{run_benchmark, BenchmarkConfig, ConfigError, EvalError};
use crate::gap_protocol::{plan_gaps, GapPlan};
use crate::imputers::{Method, UnknownMethod};
use crate::ingest::{ingest_file, HeartRateSeries, IngestError};
use crate::report::{BenchmarkReport, InputSummary, ReportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hr-gap-bench",
    version,
    about = "Benchmark statistical gap imputation on heart-rate series",
    long_about = "Cleans heart-rate CSV files onto a uniform grid, masks fixed-length artificial gaps, \
                  imputes them with linear, PCHIP, B-spline and KNN interpolation, and reports RMSE, MAE, \
                  MAPE, Cohen's distance and Jensen-Shannon distance per dataset and gap size."
)]
pub struct CliOptions {
    /// Input CSV, optionally tagged with a dataset label as PATH:LABEL (repeatable).
    /// Inputs sharing a label are pooled; untagged inputs use the file stem.
    #[arg(
        long = "input",
        short = 'i',
        required = true,
        value_name = "PATH[:LABEL]"
    )]
    pub inputs: Vec<String>,

    /// Name of the timestamp column (ISO-8601 or Unix seconds).
    #[arg(long, default_value = "time")]
    pub time_col: String,

    /// Name of the heart-rate column (beats per minute).
    #[arg(long, default_value = "hr")]
    pub hr_col: String,

    /// Gap sizes in minutes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,15")]
    pub gap_sizes: Vec<u32>,

    /// Retained minutes between consecutive gaps.
    #[arg(long, default_value_t = 1)]
    pub spacing: u32,

    /// Imputation methods, comma separated: linear, pchip, bspline, knn.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "linear,pchip,bspline,knn"
    )]
    pub methods: Vec<String>,

    /// Number of neighbours for KNN imputation.
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,

    /// Equal-width histogram bins for the Jensen-Shannon distance.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,

    /// Grid step in seconds.
    #[arg(long, default_value_t = 60)]
    pub dt: u32,

    /// Report file; the report goes to standard output when omitted.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,

    /// Report format: markdown, csv or json.
    #[arg(long, default_value = "markdown")]
    pub format: String,

    /// Also report CDT and JS distance over all gaps concatenated.
    #[arg(long)]
    pub concatenated: bool,

    /// Write the gap plan of every (input, gap size) as JSON.
    #[arg(long)]
    pub emit_plan: bool,

    /// Directory for plan files (defaults to the report's directory, or the
    /// working directory).
    #[arg(long)]
    pub plan_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    UnknownMethod(#[from] UnknownMethod),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Ingest {
        path: String,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("could not write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownMethod(_) | CliError::Config(_) => EXIT_CONFIG,
            CliError::Eval(EvalError::Config(_)) => EXIT_CONFIG,
            _ => EXIT_DATA,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// An input path with its dataset label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledInput {
    pub path: PathBuf,
    pub label: String,
}

/// Splits `PATH:LABEL`. A suffix containing a path separator is part of the
/// path, not a label.
pub fn parse_input(spec: &str) -> LabeledInput {
    if let Some((path, label)) = spec.rsplit_once(':') {
        if !path.is_empty() && !label.is_empty() && !label.contains(['/', '\\']) {
            return LabeledInput {
                path: PathBuf::from(path),
                label: label.to_string(),
            };
        }
    }
    let path = PathBuf::from(spec);
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    LabeledInput { path, label }
}

impl CliOptions {
    pub fn benchmark_config(&self) -> Result<BenchmarkConfig, CliError> {
        let methods = self
            .methods
            .iter()
            .map(|m| m.trim().parse::<Method>())
            .collect::<Result<Vec<_>, _>>()?;
        let config = BenchmarkConfig {
            gap_sizes_minutes: self.gap_sizes.clone(),
            spacing_minutes: self.spacing,
            methods,
            n_bins: self.bins,
            dt_seconds: self.dt,
            knn_k: self.knn_k,
            concatenated: self.concatenated,
            ..BenchmarkConfig::default()
        };
        config.validate()?;
        for &g in config
            .gap_sizes_minutes
            .iter()
            .chain([&config.spacing_minutes])
        {
            if (u64::from(g) * 60) % u64::from(config.dt_seconds) != 0 {
                return Err(CliError::Config(format!(
                    "{g} min is not a whole number of {} s grid steps",
                    config.dt_seconds
                )));
            }
        }
        Ok(config)
    }

    pub fn report_format(&self) -> Result<ReportFormat, CliError> {
        self.format.parse().map_err(CliError::Config)
    }
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = std::fs::write(&tmp, contents).and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn plan_file_name(label: &str, index: usize, path: &Path, gap: u32) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let clean = |s: &str| {
        s.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect::<String>()
    };
    format!(
        "plan_{}_{:03}_{}_{gap}min.json",
        clean(label),
        index,
        clean(&stem)
    )
}

/// What a successful run produced, for callers and tests.
#[derive(Debug)]
pub struct RunOutput {
    pub report: BenchmarkReport,
    pub rendered: String,
    pub plans: Vec<(PathBuf, GapPlan)>,
}

/// Parses nothing: runs an already parsed set of options.
pub fn execute(opts: &CliOptions) -> Result<RunOutput, CliError> {
    let config = opts.benchmark_config()?;
    let format = opts.report_format()?;

    let mut series: Vec<HeartRateSeries> = Vec::new();
    let mut inputs = Vec::new();
    let labeled: Vec<LabeledInput> = opts.inputs.iter().map(|s| parse_input(s)).collect();
    for input in &labeled {
        let (s, ingest) = ingest_file(
            &input.path,
            &opts.time_col,
            &opts.hr_col,
            config.dt_seconds,
            &input.label,
        )
        .map_err(|source| CliError::Ingest {
            path: input.path.display().to_string(),
            source,
        })?;
        inputs.push(InputSummary {
            path: input.path.display().to_string(),
            dataset: input.label.clone(),
            series_len: s.len(),
            ingest,
        });
        series.push(s);
    }

    let result = run_benchmark(&series, &config)?;
    let report = BenchmarkReport::new(config.clone(), result, inputs);
    let rendered = report.render(format);

    let mut plans = Vec::new();
    if opts.emit_plan {
        let dir = opts
            .plan_dir
            .clone()
            .or_else(|| {
                opts.output
                    .as_ref()
                    .and_then(|o| o.parent())
                    .map(Path::to_path_buf)
            })
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        for (i, (s, input)) in series.iter().zip(&labeled).enumerate() {
            for gap in config.sorted_gap_sizes() {
                if let Ok(plan) = plan_gaps(s, gap, config.spacing_minutes) {
                    plans.push((
                        dir.join(plan_file_name(&input.label, i, &input.path, gap)),
                        plan,
                    ));
                }
            }
        }
    }
    Ok(RunOutput {
        report,
        rendered,
        plans,
    })
}

fn summary_line(table: &crate::evaluator::ReportTable) -> String {
    let scored: usize = table
        .columns
        .iter()
        .flatten()
        .map(|s| s.n_gaps_scored)
        .max()
        .unwrap_or(0);
    let best = |m| {
        table
            .best(m)
            .iter()
            .map(|x| x.display_name())
            .collect::<Vec<_>>()
            .join("/")
    };
    format!(
        "{} {} min: {} series, {} gaps; best RMSE {}, best MAE {}, best MAPE {}, best CDT {}, best JSD {}",
        table.dataset_label,
        table.gap_minutes,
        table.n_series,
        scored,
        best(crate::evaluator::Metric::Rmse),
        best(crate::evaluator::Metric::Mae),
        best(crate::evaluator::Metric::Mape),
        best(crate::evaluator::Metric::Cdt),
        best(crate::evaluator::Metric::Jsd),
    )
}

/// Full entry point: parse `argv`, run, write outputs, return the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let opts = match CliOptions::try_parse_from(argv) {
        Ok(o) => o,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };

    let out = match execute(&opts) {
        Ok(out) => out,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };

    for (path, plan) in &out.plans {
        if let Err(source) = write_atomic(path, &plan.to_json()) {
            let e = CliError::Write {
                path: path.clone(),
                source,
            };
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    }
    for f in &out.report.failures {
        let _ = writeln!(
            stderr,
            "warning: {} (series {}) skipped at {} min: {}",
            f.dataset, f.series_index, f.gap_minutes, f.error
        );
    }

    // summaries go to stderr when stdout carries the report itself
    match &opts.output {
        Some(path) => {
            if let Err(source) = write_atomic(path, &out.rendered) {
                let e = CliError::Write {
                    path: path.clone(),
                    source,
                };
                let _ = writeln!(stderr, "error: {e}");
                return e.exit_code();
            }
            for t in &out.report.tables {
                let _ = writeln!(stdout, "{}", summary_line(t));
            }
        }
        None => {
            let _ = write!(stdout, "{}", out.rendered);
            for t in &out.report.tables {
                let _ = writeln!(stderr, "{}", summary_line(t));
            }
        }
    }
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn input_labels() {
        assert_eq!(
            parse_input("d.csv:CohortA"),
            LabeledInput {
                path: "d.csv".into(),
                label: "CohortA".into()
            }
        );
        assert_eq!(
            parse_input("data/subject_01.csv"),
            LabeledInput {
                path: "data/subject_01.csv".into(),
                label: "subject_01".into()
            }
        );
        assert_eq!(parse_input("/a/b.csv:X").label, "X");
    }

    #[test]
    fn defaults_mirror_benchmark_config() {
        let opts = CliOptions::try_parse_from(["hr-gap-bench", "--input", "x.csv"]).unwrap();
        assert_eq!(opts.benchmark_config().unwrap(), BenchmarkConfig::default());
        assert_eq!(opts.report_format().unwrap(), ReportFormat::Markdown);
    }

    #[test]
    fn help_lists_defaults() {
        let help = CliOptions::command().render_long_help().to_string();
        for needle in [
            "[default: 5,15]",
            "[default: 1]",
            "[default: 5]",
            "[default: 10]",
            "[default: 60]",
            "[default: linear,pchip,bspline,knn]",
        ] {
            assert!(help.contains(needle), "help is missing {needle}\n{help}");
        }
    }

    #[test]
    fn config_errors() {
        let parse = |args: &[&str]| {
            let mut argv = vec!["hr-gap-bench", "--input", "x.csv"];
            argv.extend_from_slice(args);
            CliOptions::try_parse_from(argv).unwrap().benchmark_config()
        };
        let e = parse(&["--methods", "cubic"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert!(e.to_string().contains("linear, pchip, bspline, knn"));
        assert_eq!(
            parse(&["--bins", "0"]).unwrap_err().exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(
            parse(&["--gap-sizes", "0"]).unwrap_err().exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(
            parse(&["--dt", "120", "--gap-sizes", "5"])
                .unwrap_err()
                .exit_code(),
            EXIT_CONFIG
        );
        assert!(parse(&["--methods", "knn,linear", "--gap-sizes", "10"]).is_ok());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.md");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
