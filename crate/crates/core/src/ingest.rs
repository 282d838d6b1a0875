//! CSV ingestion: timestamp normalization, cleaning, and uniform gridding of
//! heart-rate samples.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::Serialize;
use thiserror::Error;

/// Default grid step in seconds (one sample per minute).
pub const DEFAULT_DT_SECONDS: u32 = 60;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("could not read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: column `{0}` not present")]
    MalformedHeader(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("grid step must be positive")]
    InvalidStep,
    #[error("no valid heart-rate records survived cleaning")]
    EmptySeries,
}

/// One data row, verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub timestamp_text: String,
    pub hr_text: String,
}

impl RawRecord {
    pub fn new(timestamp_text: impl Into<String>, hr_text: impl Into<String>) -> Self {
        Self {
            timestamp_text: timestamp_text.into(),
            hr_text: hr_text.into(),
        }
    }
}

/// Output of [`parse_csv`]: the readable rows plus a count of rows whose
/// arity did not match the header.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCsv {
    pub records: Vec<RawRecord>,
    pub unreadable_rows: usize,
}

/// A timestamp already converted to Unix seconds, paired with the raw HR text.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedRecord {
    pub unix_seconds: f64,
    pub hr_text: String,
}

impl TimedRecord {
    pub fn new(unix_seconds: f64, hr_text: impl Into<String>) -> Self {
        Self {
            unix_seconds,
            hr_text: hr_text.into(),
        }
    }
}

/// Heart-rate samples on a uniform grid: `values[i]` belongs to time
/// `t0 + i * dt`. Absent entries are pre-existing missing data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeartRateSeries {
    t0: i64,
    dt: u32,
    values: Vec<Option<f64>>,
    source_label: String,
}

impl HeartRateSeries {
    /// Builds a series directly from gridded values.
    ///
    /// Present values that are non-finite or not strictly positive are
    /// rejected with `None`, as is a zero step.
    pub fn from_grid(
        t0: i64,
        dt: u32,
        values: Vec<Option<f64>>,
        source_label: impl Into<String>,
    ) -> Option<Self> {
        if dt == 0 || values.iter().flatten().any(|v| !is_valid_hr(*v)) {
            return None;
        }
        Some(Self {
            t0,
            dt,
            values,
            source_label: source_label.into(),
        })
    }

    /// Convenience constructor for a fully observed series.
    pub fn fully_observed(
        t0: i64,
        dt: u32,
        values: &[f64],
        source_label: impl Into<String>,
    ) -> Option<Self> {
        Self::from_grid(
            t0,
            dt,
            values.iter().copied().map(Some).collect(),
            source_label,
        )
    }

    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn dt(&self) -> u32 {
        self.dt
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn set_source_label(&mut self, label: impl Into<String>) {
        self.source_label = label.into();
    }

    /// Unix time of grid index `i`.
    pub fn time_at(&self, i: usize) -> i64 {
        self.t0 + i as i64 * i64::from(self.dt)
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

/// Per-file accounting of what ingestion kept and dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped_missing: usize,
    pub rows_dropped_duplicate: usize,
    pub rows_dropped_invalid: usize,
    pub buckets_empty: usize,
}

impl IngestReport {
    /// `rows_read == kept + every dropped category`.
    pub fn is_conserved(&self) -> bool {
        self.rows_read
            == self.rows_kept
                + self.rows_dropped_missing
                + self.rows_dropped_duplicate
                + self.rows_dropped_invalid
    }
}

/// Reads `path`, returning one [`RawRecord`] per data row in file order.
///
/// Rows whose field count differs from the header are not fatal; they are
/// counted in [`ParsedCsv::unreadable_rows`].
pub fn parse_csv(path: &Path, time_col: &str, hr_col: &str) -> Result<ParsedCsv, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::FileNotFound(path.to_path_buf()),
        _ => IngestError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    parse_csv_reader(file, time_col, hr_col)
}

/// Same as [`parse_csv`] over any reader.
pub fn parse_csv_reader<R: std::io::Read>(
    reader: R,
    time_col: &str,
    hr_col: &str,
) -> Result<ParsedCsv, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MalformedHeader(name.to_string()))
    };
    let time_idx = find(time_col)?;
    let hr_idx = find(hr_col)?;
    let arity = headers.len();

    let mut out = ParsedCsv::default();
    for row in rdr.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) if is_row_level(&e) => {
                out.unreadable_rows += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if row.len() != arity {
            out.unreadable_rows += 1;
            continue;
        }
        out.records
            .push(RawRecord::new(&row[time_idx], &row[hr_idx]));
    }
    Ok(out)
}

fn is_row_level(e: &csv::Error) -> bool {
    matches!(
        e.kind(),
        csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. }
    )
}

/// Converts timestamps to Unix seconds. Returns the converted records and the
/// number of rows dropped for an unparseable timestamp.
pub fn normalize_timestamps(records: &[RawRecord]) -> (Vec<TimedRecord>, usize) {
    let mut dropped = 0;
    let out = records
        .iter()
        .filter_map(|r| match parse_timestamp(&r.timestamp_text) {
            Some(t) => Some(TimedRecord::new(t, r.hr_text.clone())),
            None => {
                dropped += 1;
                None
            }
        })
        .collect();
    (out, dropped)
}

const NAIVE_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

/// Parses an ISO-8601 timestamp or a plain number of Unix seconds.
/// Timestamps without an offset are taken as UTC.
pub fn parse_timestamp(text: &str) -> Option<f64> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Ok(secs) = text.parse::<f64>() {
        return secs.is_finite().then_some(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(datetime_seconds(
            dt.timestamp(),
            dt.timestamp_subsec_nanos(),
        ));
    }
    for fmt in NAIVE_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
            let utc = dt.and_utc();
            return Some(datetime_seconds(
                utc.timestamp(),
                utc.timestamp_subsec_nanos(),
            ));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp() as f64);
    }
    None
}

fn datetime_seconds(secs: i64, nanos: u32) -> f64 {
    secs as f64 + f64::from(nanos) * 1e-9
}

enum HrValue {
    Valid(f64),
    Missing,
    Invalid,
}

fn classify_hr(text: &str) -> HrValue {
    let text = text.trim();
    if text.is_empty()
        || ["na", "nan", "null", "none"]
            .iter()
            .any(|m| text.eq_ignore_ascii_case(m))
    {
        return HrValue::Missing;
    }
    match text.parse::<f64>() {
        Ok(v) if is_valid_hr(v) => HrValue::Valid(v),
        _ => HrValue::Invalid,
    }
}

fn is_valid_hr(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Drops missing/invalid heart rates, averages records that share a grid
/// bucket, and lays the result out on a uniform grid of step `dt`.
///
/// The grid origin is the earliest surviving timestamp floored to a multiple
/// of `dt`. The returned report counts `records.len()` rows.
pub fn clean_and_grid(
    records: &[TimedRecord],
    dt: u32,
) -> Result<(HeartRateSeries, IngestReport), IngestError> {
    if dt == 0 {
        return Err(IngestError::InvalidStep);
    }
    let mut report = IngestReport {
        rows_read: records.len(),
        ..Default::default()
    };

    let mut survivors = Vec::with_capacity(records.len());
    for rec in records {
        match classify_hr(&rec.hr_text) {
            HrValue::Valid(v) if rec.unix_seconds.is_finite() => {
                survivors.push((rec.unix_seconds, v))
            }
            HrValue::Valid(_) | HrValue::Invalid => report.rows_dropped_invalid += 1,
            HrValue::Missing => report.rows_dropped_missing += 1,
        }
    }

    let step = f64::from(dt);
    let first = survivors
        .iter()
        .map(|&(t, _)| t)
        .fold(f64::INFINITY, f64::min);
    if !first.is_finite() {
        return Err(IngestError::EmptySeries);
    }
    let t0 = (first / step).floor() * step;

    // bucket index -> (sum, count), summed in file order
    let mut buckets: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &(t, v) in &survivors {
        let idx = ((t - t0) / step).floor() as usize;
        let entry = buckets.entry(idx).or_insert((0.0, 0));
        entry.0 += v;
        entry.1 += 1;
    }

    // records dropped for their HR value still mark their bucket as observed
    // time (absent), so the grid spans them when they follow the origin
    let last_dropped = records
        .iter()
        .filter(|r| r.unix_seconds.is_finite() && r.unix_seconds >= t0)
        .map(|r| ((r.unix_seconds - t0) / step).floor() as usize)
        .max();
    let last_kept = buckets.keys().next_back().copied();
    let len = last_kept.max(last_dropped).map_or(0, |k| k + 1);
    let mut values = vec![None; len];
    for (&idx, &(sum, count)) in &buckets {
        values[idx] = Some(sum / count as f64);
        report.rows_kept += 1;
        report.rows_dropped_duplicate += count - 1;
    }
    report.buckets_empty = len - buckets.len();

    let series = HeartRateSeries {
        t0: t0 as i64,
        dt,
        values,
        source_label: String::new(),
    };
    Ok((series, report))
}

/// Full ingestion of one CSV file: parse, normalize timestamps, clean, grid.
/// Rows with wrong arity or unparseable timestamps are counted as invalid.
pub fn ingest_file(
    path: &Path,
    time_col: &str,
    hr_col: &str,
    dt: u32,
    source_label: &str,
) -> Result<(HeartRateSeries, IngestReport), IngestError> {
    let parsed = parse_csv(path, time_col, hr_col)?;
    let (timed, bad_times) = normalize_timestamps(&parsed.records);
    let (mut series, mut report) = clean_and_grid(&timed, dt)?;
    report.rows_read += parsed.unreadable_rows + bad_times;
    report.rows_dropped_invalid += parsed.unreadable_rows + bad_times;
    series.source_label = source_label.to_string();
    Ok((series, report))
}
