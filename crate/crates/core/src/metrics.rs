//! Per-gap evaluation metrics.
//!
//! Predictive accuracy: RMSE, MAE, MAPE. Distributional distance: Cohen's
//! distance (absolute standardized mean difference over the pooled sample
//! standard deviation) and the Jensen–Shannon distance between binned value
//! distributions, with base-2 logarithms so it lies in `[0, 1]`.

use serde::Serialize;
use thiserror::Error;

/// Default number of equal-width histogram bins for the JS distance.
pub const DEFAULT_BINS: usize = 10;

/// Pooled standard deviations below this are treated as zero.
const DEGENERATE_SD: f64 = 1e-12;

/// Relative tolerance used when binning: narrower value ranges are treated as
/// zero width, and values this close below an edge are placed on the edge.
pub const BIN_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("real and imputed segments differ in length ({real} vs {imputed})")]
    LengthMismatch { real: usize, imputed: usize },
    #[error("segment is empty")]
    Empty,
    #[error("segment contains a non-finite value")]
    NonFinite,
    #[error("real value of zero makes the percentage error undefined")]
    ZeroDenominator,
    #[error("segment of length {0} is too short (need at least 2)")]
    SegmentTooShort(usize),
    #[error("histogram needs at least one bin")]
    NoBins,
}

/// Ground truth and imputed values over the same indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSegment {
    real: Vec<f64>,
    imputed: Vec<f64>,
}

impl PairedSegment {
    pub fn new(real: Vec<f64>, imputed: Vec<f64>) -> Result<Self, MetricError> {
        if real.len() != imputed.len() {
            return Err(MetricError::LengthMismatch {
                real: real.len(),
                imputed: imputed.len(),
            });
        }
        if real.is_empty() {
            return Err(MetricError::Empty);
        }
        if real.iter().chain(&imputed).any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(Self { real, imputed })
    }

    pub fn real(&self) -> &[f64] {
        &self.real
    }

    pub fn imputed(&self) -> &[f64] {
        &self.imputed
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    fn errors(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.real.iter().copied().zip(self.imputed.iter().copied())
    }
}

pub fn rmse(seg: &PairedSegment) -> f64 {
    let sq: f64 = seg.errors().map(|(r, i)| (r - i) * (r - i)).sum();
    (sq / seg.len() as f64).sqrt()
}

pub fn mae(seg: &PairedSegment) -> f64 {
    let abs: f64 = seg.errors().map(|(r, i)| (r - i).abs()).sum();
    abs / seg.len() as f64
}

/// Mean absolute percentage error, in percent.
pub fn mape(seg: &PairedSegment) -> Result<f64, MetricError> {
    if seg.real.contains(&0.0) {
        return Err(MetricError::ZeroDenominator);
    }
    let rel: f64 = seg.errors().map(|(r, i)| ((r - i) / r).abs()).sum();
    Ok(100.0 * rel / seg.len() as f64)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `|mean_R - mean_I| / sqrt((SD_R² + SD_I²) / 2)` with sample (n − 1)
/// standard deviations.
///
/// `Ok(None)` marks a degenerate segment: zero pooled spread but different
/// means.
pub fn cohens_distance(seg: &PairedSegment) -> Result<Option<f64>, MetricError> {
    let n = seg.len();
    if n < 2 {
        return Err(MetricError::SegmentTooShort(n));
    }
    let (mr, mi) = (mean(&seg.real), mean(&seg.imputed));
    let pooled =
        ((sample_variance(&seg.real, mr) + sample_variance(&seg.imputed, mi)) / 2.0).sqrt();
    let diff = (mr - mi).abs();
    if pooled < DEGENERATE_SD {
        return Ok((diff < DEGENERATE_SD).then_some(0.0));
    }
    Ok(Some(diff / pooled))
}

/// Effect-size band for a Cohen's distance value. Values above 0.8 are left
/// unclassified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectBand {
    Small,
    Medium,
    Significant,
}

pub fn effect_band(cdt: f64) -> Option<EffectBand> {
    match cdt {
        c if c <= 0.2 => Some(EffectBand::Small),
        c if c <= 0.5 => Some(EffectBand::Medium),
        c if c <= 0.8 => Some(EffectBand::Significant),
        _ => None,
    }
}

/// Real (`p`) and imputed (`q`) probability masses over shared bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPair {
    pub edges: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Equal-width histogram over `[min, max]` of both series together; each bin
/// is half-open except the last, which includes the top edge. A zero-width
/// range (up to [`BIN_RTOL`]) collapses to one bin holding all mass.
/// A value within the same relative tolerance below an interior edge counts
/// as sitting on it, so last-ulp rounding cannot move it to the lower bin.
pub fn build_histogram_pair(
    seg: &PairedSegment,
    n_bins: usize,
) -> Result<HistogramPair, MetricError> {
    if n_bins == 0 {
        return Err(MetricError::NoBins);
    }
    let all = seg.real.iter().chain(&seg.imputed);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = BIN_RTOL * lo.abs().max(hi.abs()).max(1.0);
    if hi - lo <= tol {
        return Ok(HistogramPair {
            edges: vec![lo, hi],
            p: vec![1.0],
            q: vec![1.0],
        });
    }

    let width = (hi - lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..n_bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);

    let interior = &edges[1..n_bins];
    let masses = |values: &[f64]| {
        let mut counts = vec![0usize; n_bins];
        for &v in values {
            counts[interior.partition_point(|&e| e <= v + tol)] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / values.len() as f64)
            .collect::<Vec<f64>>()
    };
    Ok(HistogramPair {
        p: masses(&seg.real),
        q: masses(&seg.imputed),
        edges,
    })
}

/// Σ a_i log2(a_i / b_i), with 0·log(0/·) = 0.
fn kl_divergence_bits(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(&ai, _)| ai > 0.0)
        .map(|(&ai, &bi)| ai * (ai / bi).log2())
        .sum()
}

/// Jensen–Shannon distance, clamped to `[0, 1]`.
pub fn js_distance(hist: &HistogramPair) -> f64 {
    let r: Vec<f64> = hist
        .p
        .iter()
        .zip(&hist.q)
        .map(|(p, q)| (p + q) / 2.0)
        .collect();
    let divergence = kl_divergence_bits(&hist.p, &r) / 2.0 + kl_divergence_bits(&hist.q, &r) / 2.0;
    divergence.max(0.0).sqrt().min(1.0)
}

/// The five metrics for one imputed gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapScore {
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
    pub cdt: Option<f64>,
    pub jsd: f64,
}

impl GapScore {
    /// True when the Cohen's distance was undefined for a reason other than
    /// segment length (zero spread with differing means).
    pub fn cdt_degenerate(seg: &PairedSegment) -> bool {
        matches!(cohens_distance(seg), Ok(None))
    }
}

pub fn score_gap(seg: &PairedSegment, n_bins: usize) -> Result<GapScore, MetricError> {
    let cdt = match cohens_distance(seg) {
        Ok(c) => c,
        Err(MetricError::SegmentTooShort(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(GapScore {
        rmse: rmse(seg),
        mae: mae(seg),
        mape: mape(seg)?,
        cdt,
        jsd: js_distance(&build_histogram_pair(seg, n_bins)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(r: &[f64], i: &[f64]) -> PairedSegment {
        PairedSegment::new(r.to_vec(), i.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn segment_validation() {
        assert_eq!(
            PairedSegment::new(vec![1.0], vec![]),
            Err(MetricError::LengthMismatch {
                real: 1,
                imputed: 0
            })
        );
        assert_eq!(PairedSegment::new(vec![], vec![]), Err(MetricError::Empty));
        assert_eq!(
            PairedSegment::new(vec![1.0], vec![f64::NAN]),
            Err(MetricError::NonFinite)
        );
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&seg(&[80., 82., 84.], &[80., 82., 84.])), 0.0);
        assert!(close(
            rmse(&seg(&[80., 82., 84.], &[81., 81., 86.])),
            2f64.sqrt(),
            1e-12
        ));
        assert_eq!(rmse(&seg(&[100.], &[97.])), 3.0);
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&seg(&[80., 82.], &[80., 82.])), 0.0);
        let s = seg(&[80., 82., 84.], &[81., 81., 86.]);
        assert!(close(mae(&s), 4.0 / 3.0, 1e-12));
        assert!(mae(&s) <= rmse(&s));
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&seg(&[80., 82.], &[80., 82.])).unwrap(), 0.0);
        assert!(close(
            mape(&seg(&[100., 50.], &[110., 45.])).unwrap(),
            10.0,
            1e-12
        ));
        assert_eq!(
            mape(&seg(&[0., 50.], &[1., 50.])),
            Err(MetricError::ZeroDenominator)
        );
    }

    #[test]
    fn cohens_distance_examples() {
        assert_eq!(
            cohens_distance(&seg(&[80., 85., 70.], &[80., 85., 70.])).unwrap(),
            Some(0.0)
        );
        let d = cohens_distance(&seg(&[80., 82., 84.], &[84., 86., 88.]))
            .unwrap()
            .unwrap();
        assert!(close(d, 2.0, 1e-12));
        assert_eq!(
            cohens_distance(&seg(&[80., 80.], &[90., 90.])).unwrap(),
            None
        );
        assert_eq!(
            cohens_distance(&seg(&[80., 80.], &[80., 80.])).unwrap(),
            Some(0.0)
        );
        assert_eq!(
            cohens_distance(&seg(&[80.], &[81.])),
            Err(MetricError::SegmentTooShort(1))
        );
        assert!(GapScore::cdt_degenerate(&seg(&[80., 80.], &[90., 90.])));
    }

    #[test]
    fn effect_bands() {
        assert_eq!(effect_band(0.2), Some(EffectBand::Small));
        assert_eq!(effect_band(0.21), Some(EffectBand::Medium));
        assert_eq!(effect_band(0.8), Some(EffectBand::Significant));
        assert_eq!(effect_band(0.81), None);
    }

    #[test]
    fn histogram_examples() {
        let h = build_histogram_pair(&seg(&[1., 2.], &[3., 4.]), 2).unwrap();
        assert_eq!(h.edges, vec![1.0, 2.5, 4.0]);
        assert_eq!(h.p, vec![1.0, 0.0]);
        assert_eq!(h.q, vec![0.0, 1.0]);

        let h = build_histogram_pair(&seg(&[70., 70.], &[70., 70.]), 10).unwrap();
        assert_eq!((h.p.clone(), h.q.clone()), (vec![1.0], vec![1.0]));
        assert_eq!(js_distance(&h), 0.0);

        let below_edge = 2.5 - 2.5 * f64::EPSILON;
        let h = build_histogram_pair(&seg(&[1., below_edge], &[2.5, 4.]), 2).unwrap();
        assert_eq!(h.p, vec![0.5, 0.5]);
        assert_eq!(h.q, vec![0.0, 1.0]);

        // rounding-level spread counts as a single value
        let wobble = 70.0 + 4.0 * f64::EPSILON * 70.0;
        let h = build_histogram_pair(&seg(&[70., 70.], &[wobble, 70.]), 10).unwrap();
        assert_eq!(h.p, vec![1.0]);

        assert_eq!(
            build_histogram_pair(&seg(&[1.], &[2.]), 0),
            Err(MetricError::NoBins)
        );
    }

    #[test]
    fn js_examples() {
        let same = HistogramPair {
            edges: vec![0., 1., 2.],
            p: vec![0.3, 0.7],
            q: vec![0.3, 0.7],
        };
        assert_eq!(js_distance(&same), 0.0);
        let disjoint = HistogramPair {
            edges: vec![0., 1., 2.],
            p: vec![1., 0.],
            q: vec![0., 1.],
        };
        assert!(close(js_distance(&disjoint), 1.0, 1e-12));
        // high-precision reference evaluated independently (mpmath, 30 digits)
        let h = HistogramPair {
            edges: vec![0., 1., 2.],
            p: vec![0.5, 0.5],
            q: vec![0.25, 0.75],
        };
        assert!(close(js_distance(&h), 0.220_895_768_849_017_4, 1e-12));
    }

    #[test]
    fn score_examples() {
        let s = score_gap(&seg(&[80., 82., 84.], &[80., 82., 84.]), 10).unwrap();
        assert_eq!(
            s,
            GapScore {
                rmse: 0.0,
                mae: 0.0,
                mape: 0.0,
                cdt: Some(0.0),
                jsd: 0.0
            }
        );
        let s = score_gap(&seg(&[80., 82., 84.], &[81., 81., 86.]), 10).unwrap();
        assert!(close(s.rmse, std::f64::consts::SQRT_2, 1e-12) && close(s.mae, 1.333333, 1e-6));
        let s = score_gap(&seg(&[100.], &[97.]), 10).unwrap();
        assert_eq!(s.cdt, None);
        assert_eq!(s.rmse, 3.0);
    }
}
