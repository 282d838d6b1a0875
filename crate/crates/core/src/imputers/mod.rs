//! The four gap-filling methods behind one interface.
//!
//! Every imputer works on [`ObservedPoints`], the unmasked samples of a
//! [`MaskedSeries`], so none of them can see the ground truth it is scored
//! against.

mod bspline;
mod knn;
mod linear;
mod pchip;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gap_protocol::{GapWindow, MaskedSeries};

pub use bspline::{impute_bspline, BsplineBasisSet, BSPLINE_DEGREE, BSPLINE_SIDE_WINDOW};
pub use knn::{impute_knn, DEFAULT_KNN_EPSILON, DEFAULT_KNN_K};
pub use linear::impute_linear;
pub use pchip::{impute_pchip, Pchip, PchipSegment};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImputeError {
    #[error("{method} needs at least {needed} observed points, found {available}")]
    InsufficientContext {
        method: Method,
        needed: usize,
        available: usize,
    },
    #[error("target {target} lies outside the observed range [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("invalid imputer configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Pchip,
    Bspline,
    Knn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Linear, Method::Pchip, Method::Bspline, Method::Knn];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::Pchip => "pchip",
            Method::Bspline => "bspline",
            Method::Knn => "knn",
        }
    }

    /// Column heading used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Linear => "Linear",
            Method::Pchip => "PCHIP",
            Method::Bspline => "B-spline",
            Method::Knn => "KNN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method `{0}` (expected one of: linear, pchip, bspline, knn)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImputerConfig {
    pub method: Method,
    pub knn_k: usize,
    pub knn_epsilon: f64,
}

impl ImputerConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            knn_k: DEFAULT_KNN_K,
            knn_epsilon: DEFAULT_KNN_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<(), ImputeError> {
        if self.knn_k == 0 {
            return Err(ImputeError::InvalidConfig(
                "knn_k must be at least 1".into(),
            ));
        }
        if self.knn_epsilon.is_nan() || self.knn_epsilon <= 0.0 {
            return Err(ImputeError::InvalidConfig(
                "knn_epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Known samples: strictly increasing times (seconds) with their values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservedPoints {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ObservedPoints {
    /// Returns `None` unless lengths match, `xs` is strictly increasing and
    /// every value is finite.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Option<Self> {
        let ok = xs.len() == ys.len()
            && xs.iter().chain(&ys).all(|v| v.is_finite())
            && xs.windows(2).all(|w| w[0] < w[1]);
        ok.then_some(Self { xs, ys })
    }

    pub(crate) fn new_unchecked(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        debug_assert!(Self::new(xs.clone(), ys.clone()).is_some());
        Self { xs, ys }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Index `l` such that `xs[l] <= t <= xs[l + 1]`, or `OutOfRange`.
    /// Requires at least two points.
    pub(crate) fn bracket(&self, t: f64) -> Result<usize, ImputeError> {
        let n = self.xs.len();
        let (lo, hi) = (self.xs[0], self.xs[n - 1]);
        if !(t >= lo && t <= hi) {
            return Err(ImputeError::OutOfRange { target: t, lo, hi });
        }
        let right = self.xs.partition_point(|&x| x <= t);
        Ok(right.clamp(1, n - 1) - 1)
    }

    pub(crate) fn require(&self, method: Method, needed: usize) -> Result<(), ImputeError> {
        if self.len() < needed {
            return Err(ImputeError::InsufficientContext {
                method,
                needed,
                available: self.len(),
            });
        }
        Ok(())
    }
}

/// Fills every masked index of `masked`, in ascending index order.
pub fn impute(masked: &MaskedSeries, config: &ImputerConfig) -> Result<Vec<f64>, ImputeError> {
    let mut out = Vec::with_capacity(masked.masked_count());
    for window in impute_windows(masked, config)? {
        out.extend(window?);
    }
    Ok(out)
}

/// Imputes each plan window separately. The outer error is a configuration
/// problem; a window the method cannot support yields its own inner error.
pub fn impute_windows(
    masked: &MaskedSeries,
    config: &ImputerConfig,
) -> Result<Vec<Result<Vec<f64>, ImputeError>>, ImputeError> {
    config.validate()?;
    let points = masked.observed_points();
    let windows = &masked.plan().windows;
    let targets = |w: &GapWindow| masked.window_times(w);

    let results = match config.method {
        Method::Linear => windows
            .iter()
            .map(|w| impute_linear(&points, &targets(w)))
            .collect(),
        Method::Pchip => match Pchip::new(&points) {
            Ok(pchip) => windows
                .iter()
                .map(|w| pchip.evaluate_all(&targets(w)))
                .collect(),
            Err(e) => vec![Err(e); windows.len()],
        },
        Method::Bspline => windows
            .iter()
            .map(|w| impute_bspline(&points, &targets(w)))
            .collect(),
        Method::Knn => windows
            .iter()
            .map(|w| impute_knn(&points, &targets(w), config.knn_k, config.knn_epsilon))
            .collect(),
    };
    Ok(results)
}
