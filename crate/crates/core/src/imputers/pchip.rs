//! Shape-preserving piecewise cubic Hermite interpolation.
//!
//! Knot slopes follow Fritsch–Carlson: a weighted harmonic mean of the
//! adjacent secants at interior knots (zero at local extrema and flats) and a
//! sign-clamped one-sided three-point estimate at the two ends. On each
//! interval the cubic is stored in power form around its left knot,
//! `a·dx³ + b·dx² + c·dx + d` with `dx = x − x_i`.

use super::{ImputeError, Method, ObservedPoints};

/// Power-form coefficients for one interval `[x_i, x_{i+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PchipSegment {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PchipSegment {
    fn eval(&self, dx: f64) -> f64 {
        ((self.a * dx + self.b) * dx + self.c) * dx + self.d
    }
}

#[derive(Debug, Clone)]
pub struct Pchip {
    points: ObservedPoints,
    slopes: Vec<f64>,
    segments: Vec<PchipSegment>,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// One-sided slope at an end knot. `h0`/`m0` belong to the interval touching
/// the end, `h1`/`m1` to its neighbour.
fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if sign(d) != sign(m0) {
        0.0
    } else if sign(m0) != sign(m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Fritsch–Carlson knot slopes. Requires `xs` strictly increasing, `len >= 2`.
pub(crate) fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let secant: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    if n == 2 {
        return vec![secant[0]; 2];
    }

    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (prev, next) = (secant[k - 1], secant[k]);
        if sign(prev) * sign(next) <= 0 {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        let whmean = (w1 / prev + w2 / next) / (w1 + w2);
        m[k] = 1.0 / whmean;
    }
    m[0] = end_slope(h[0], h[1], secant[0], secant[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], secant[n - 2], secant[n - 3]);
    m
}

impl Pchip {
    pub fn new(points: &ObservedPoints) -> Result<Self, ImputeError> {
        points.require(Method::Pchip, 2)?;
        let (xs, ys) = (points.xs(), points.ys());
        let slopes = fritsch_carlson_slopes(xs, ys);
        let segments = (0..xs.len() - 1)
            .map(|i| {
                let h = xs[i + 1] - xs[i];
                let delta = (ys[i + 1] - ys[i]) / h;
                let (m0, m1) = (slopes[i], slopes[i + 1]);
                PchipSegment {
                    a: (m0 + m1 - 2.0 * delta) / (h * h),
                    b: (3.0 * delta - 2.0 * m0 - m1) / h,
                    c: m0,
                    d: ys[i],
                }
            })
            .collect();
        Ok(Self {
            points: points.clone(),
            slopes,
            segments,
        })
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn segments(&self) -> &[PchipSegment] {
        &self.segments
    }

    pub fn evaluate(&self, t: f64) -> Result<f64, ImputeError> {
        let i = self.points.bracket(t)?;
        let xs = self.points.xs();
        // land exactly on the right knot rather than relying on cubic cancellation
        if t == xs[i + 1] {
            return Ok(self.points.ys()[i + 1]);
        }
        Ok(self.segments[i].eval(t - xs[i]))
    }

    pub fn evaluate_all(&self, targets: &[f64]) -> Result<Vec<f64>, ImputeError> {
        targets.iter().map(|&t| self.evaluate(t)).collect()
    }
}

pub fn impute_pchip(points: &ObservedPoints, targets: &[f64]) -> Result<Vec<f64>, ImputeError> {
    Pchip::new(points)?.evaluate_all(targets)
}
