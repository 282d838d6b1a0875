//! Deterministic placement of artificial gaps.
//!
//! Gaps of a fixed length are tiled through the series starting after a
//! retained prefix of `spacing` steps, with `spacing` retained steps between
//! consecutive gaps. Every gap in a plan is masked at the same time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imputers::ObservedPoints;
use crate::ingest::HeartRateSeries;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GapError {
    #[error("gap and spacing must be positive, got gap={gap_minutes} min, spacing={spacing_minutes} min")]
    NonPositive {
        gap_minutes: u32,
        spacing_minutes: u32,
    },
    #[error("{minutes} min is not a whole number of {dt} s grid steps")]
    NotGridMultiple { minutes: u32, dt: u32 },
    #[error("series of {len} steps is too short for a {gap_len}-step gap")]
    SeriesTooShort { len: usize, gap_len: usize },
    #[error(
        "plan window [{start}, {end}) does not fit a series of {len} steps with observed values"
    )]
    PlanMismatch {
        start: usize,
        end: usize,
        len: usize,
    },
}

/// A contiguous run of artificially masked grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct GapWindow {
    pub start_index: usize,
    pub length: usize,
}

impl GapWindow {
    pub fn new(start_index: usize, length: usize) -> Self {
        Self {
            start_index,
            length,
        }
    }

    /// One past the last masked index.
    pub fn end(&self) -> usize {
        self.start_index + self.length
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start_index..self.end()
    }
}

impl From<[usize; 2]> for GapWindow {
    fn from([start_index, length]: [usize; 2]) -> Self {
        Self {
            start_index,
            length,
        }
    }
}

impl From<GapWindow> for [usize; 2] {
    fn from(w: GapWindow) -> Self {
        [w.start_index, w.length]
    }
}

/// How the windows of a plan are exposed to the imputers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskingMode {
    /// All windows are masked together before any imputation.
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapPlan {
    pub gap_len: usize,
    pub spacing: usize,
    pub windows: Vec<GapWindow>,
    pub skipped_windows: usize,
    pub masking: MaskingMode,
}

impl GapPlan {
    pub fn masked_count(&self) -> usize {
        self.windows.iter().map(|w| w.length).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// Converts a duration in minutes to a whole number of grid steps.
pub fn minutes_to_steps(minutes: u32, dt: u32) -> Result<usize, GapError> {
    let secs = u64::from(minutes) * 60;
    if dt == 0 || secs % u64::from(dt) != 0 {
        return Err(GapError::NotGridMultiple { minutes, dt });
    }
    Ok((secs / u64::from(dt)) as usize)
}

/// Plans the artificial gaps for `series`.
///
/// Candidates start at index `spacing` and advance by `gap_len + spacing`.
/// A candidate covering any absent value is skipped and counted; tiling stops
/// at the first candidate that would leave no observed value after it.
pub fn plan_gaps(
    series: &HeartRateSeries,
    gap_minutes: u32,
    spacing_minutes: u32,
) -> Result<GapPlan, GapError> {
    if gap_minutes == 0 || spacing_minutes == 0 {
        return Err(GapError::NonPositive {
            gap_minutes,
            spacing_minutes,
        });
    }
    let gap_len = minutes_to_steps(gap_minutes, series.dt())?;
    let spacing = minutes_to_steps(spacing_minutes, series.dt())?;
    let values = series.values();

    let too_short = GapError::SeriesTooShort {
        len: values.len(),
        gap_len,
    };
    let first_present = values
        .iter()
        .position(Option::is_some)
        .ok_or(too_short.clone())?;
    let last_present = values
        .iter()
        .rposition(Option::is_some)
        .ok_or(too_short.clone())?;

    let mut start = spacing.max(first_present + 1);
    if start + gap_len > last_present {
        return Err(too_short);
    }

    let mut windows = Vec::new();
    let mut skipped_windows = 0;
    while start + gap_len <= last_present {
        let window = GapWindow::new(start, gap_len);
        if values[window.indices()].iter().all(Option::is_some) {
            windows.push(window);
        } else {
            skipped_windows += 1;
        }
        start += gap_len + spacing;
    }

    Ok(GapPlan {
        gap_len,
        spacing,
        windows,
        skipped_windows,
        masking: MaskingMode::Simultaneous,
    })
}

/// A ground-truth series together with the artificial missing-mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSeries {
    truth: HeartRateSeries,
    mask: Vec<bool>,
    plan: GapPlan,
}

/// Masks every window of `plan` on a copy of `series`.
pub fn apply_mask(series: &HeartRateSeries, plan: &GapPlan) -> Result<MaskedSeries, GapError> {
    let len = series.len();
    let mut mask = vec![false; len];
    for w in &plan.windows {
        let mismatch = GapError::PlanMismatch {
            start: w.start_index,
            end: w.end(),
            len,
        };
        if w.length == 0 || w.end() > len {
            return Err(mismatch);
        }
        if series.values()[w.indices()].iter().any(Option::is_none) {
            return Err(mismatch);
        }
        mask[w.indices()].iter_mut().for_each(|m| *m = true);
    }
    Ok(MaskedSeries {
        truth: series.clone(),
        mask,
        plan: plan.clone(),
    })
}

impl MaskedSeries {
    pub fn truth(&self) -> &HeartRateSeries {
        &self.truth
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn plan(&self) -> &GapPlan {
        &self.plan
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// The series as an imputer sees it: truth where unmasked, absent where
    /// masked or missing to begin with.
    pub fn observed_values(&self) -> Vec<Option<f64>> {
        self.truth
            .values()
            .iter()
            .zip(&self.mask)
            .map(|(v, &m)| if m { None } else { *v })
            .collect()
    }

    /// Observed samples as (seconds since grid origin, value) pairs.
    pub fn observed_points(&self) -> ObservedPoints {
        let dt = f64::from(self.truth.dt());
        let (xs, ys) = self
            .observed_values()
            .into_iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|y| (i as f64 * dt, y)))
            .unzip();
        ObservedPoints::new_unchecked(xs, ys)
    }

    /// Time (seconds since grid origin) of every index in `window`.
    pub fn window_times(&self, window: &GapWindow) -> Vec<f64> {
        let dt = f64::from(self.truth.dt());
        window.indices().map(|i| i as f64 * dt).collect()
    }

    /// Ground truth at the indices of `window`. Only meant for scoring.
    pub fn window_truth(&self, window: &GapWindow) -> Vec<f64> {
        self.truth.values()[window.indices()]
            .iter()
            .map(|v| v.expect("plan windows cover observed values"))
            .collect()
    }
}
