//! Local cubic B-spline interpolation.
//!
//! For each gap the spline is fitted to at most [`BSPLINE_SIDE_WINDOW`]
//! observed samples on either side. The fit is the not-a-knot cubic
//! interpolant: with data sites `x_0 < … < x_{n-1}` the knot vector is
//! `[x_0; 4] ++ x_2..=x_{n-3} ++ [x_{n-1}; 4]`, giving `n` basis functions and
//! a square collocation system. Basis values come from the Cox–de Boor
//! recurrence and the spline itself is evaluated with de Boor's algorithm.

use nalgebra::{DMatrix, DVector};

use super::{ImputeError, Method, ObservedPoints};

pub const BSPLINE_DEGREE: usize = 3;

/// Observed samples taken on each side of a gap.
pub const BSPLINE_SIDE_WINDOW: usize = 6;

const ORDER: usize = BSPLINE_DEGREE + 1;

/// A cubic spline `Σ c_i B_{i,3}(x)` over a clamped knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BsplineBasisSet {
    knots: Vec<f64>,
    coefficients: Vec<f64>,
}

impl BsplineBasisSet {
    /// Requires a non-decreasing knot vector with `coefficients.len() + 4`
    /// entries and a non-empty domain `[t_3, t_n]`.
    pub fn from_parts(knots: Vec<f64>, coefficients: Vec<f64>) -> Option<Self> {
        let n = coefficients.len();
        let ok = n >= ORDER
            && knots.len() == n + ORDER
            && knots.iter().all(|t| t.is_finite())
            && knots.windows(2).all(|w| w[0] <= w[1])
            && knots[BSPLINE_DEGREE] < knots[n];
        ok.then_some(Self {
            knots,
            coefficients,
        })
    }

    /// Not-a-knot cubic interpolant through `(xs, ys)`; `xs` strictly
    /// increasing with at least four sites.
    pub fn interpolate_not_a_knot(xs: &[f64], ys: &[f64]) -> Result<Self, ImputeError> {
        let n = xs.len();
        if n < ORDER || ys.len() != n {
            return Err(ImputeError::InsufficientContext {
                method: Method::Bspline,
                needed: ORDER,
                available: n,
            });
        }
        let mut knots = Vec::with_capacity(n + ORDER);
        knots.extend([xs[0]; ORDER]);
        knots.extend_from_slice(&xs[2..n - 2]);
        knots.extend([xs[n - 1]; ORDER]);

        let mut shell = Self {
            knots,
            coefficients: vec![0.0; n],
        };
        let mut collocation = DMatrix::<f64>::zeros(n, n);
        for (row, &x) in xs.iter().enumerate() {
            let (span, basis) = shell.basis_values(x);
            for (k, b) in basis.iter().enumerate() {
                collocation[(row, span - BSPLINE_DEGREE + k)] = *b;
            }
        }
        let rhs = DVector::from_column_slice(ys);
        let coefficients = collocation.lu().solve(&rhs).ok_or_else(|| {
            ImputeError::InvalidConfig("singular B-spline collocation system".into())
        })?;
        shell.coefficients = coefficients.iter().copied().collect();
        Ok(shell)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `[t_3, t_n]`, where `n` is the number of basis functions.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.knots[BSPLINE_DEGREE],
            self.knots[self.coefficients.len()],
        )
    }

    /// Knot span `μ` with `t_μ <= x < t_{μ+1}`, clamped to the domain so the
    /// right end point maps to the last non-empty span.
    pub fn find_span(&self, x: f64) -> usize {
        let n = self.coefficients.len();
        let upper = self.knots[..=n].partition_point(|&t| t <= x);
        let mut span = upper.saturating_sub(1).clamp(BSPLINE_DEGREE, n - 1);
        while span > BSPLINE_DEGREE && self.knots[span] == self.knots[span + 1] {
            span -= 1;
        }
        span
    }

    /// The four possibly non-zero basis values at `x`, i.e.
    /// `B_{μ-3}(x) ..= B_μ(x)`, together with the span `μ`.
    pub fn basis_values(&self, x: f64) -> (usize, [f64; ORDER]) {
        let t = &self.knots;
        let span = self.find_span(x);
        let mut values = [0.0; ORDER];
        let mut left = [0.0; ORDER];
        let mut right = [0.0; ORDER];
        values[0] = 1.0;
        for j in 1..=BSPLINE_DEGREE {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        (span, values)
    }

    /// De Boor's algorithm.
    pub fn evaluate(&self, x: f64) -> f64 {
        let t = &self.knots;
        let span = self.find_span(x);
        let base = span - BSPLINE_DEGREE;
        let mut d: [f64; ORDER] = std::array::from_fn(|j| self.coefficients[base + j]);
        for r in 1..=BSPLINE_DEGREE {
            for j in (r..=BSPLINE_DEGREE).rev() {
                let lo = t[base + j];
                let hi = t[base + j + 1 + BSPLINE_DEGREE - r];
                let alpha = (x - lo) / (hi - lo);
                d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
            }
        }
        d[BSPLINE_DEGREE]
    }
}

/// Imputes each target from a spline fitted to the observed samples around
/// its gap. Targets sharing a bracketing pair of observed samples share one
/// fit.
pub fn impute_bspline(points: &ObservedPoints, targets: &[f64]) -> Result<Vec<f64>, ImputeError> {
    points.require(Method::Bspline, ORDER)?;
    let (xs, ys) = (points.xs(), points.ys());
    let n = xs.len();

    let mut out = Vec::with_capacity(targets.len());
    let mut fitted: Option<(usize, f64, BsplineBasisSet)> = None;
    for &target in targets {
        let l = points.bracket(target)?;
        let reuse = matches!(&fitted, Some((bracket, _, _)) if *bracket == l);
        if !reuse {
            let lo = (l + 1).saturating_sub(BSPLINE_SIDE_WINDOW);
            let hi = (l + BSPLINE_SIDE_WINDOW).min(n - 1);
            let origin = xs[lo];
            let local_x: Vec<f64> = xs[lo..=hi].iter().map(|x| x - origin).collect();
            let spline = BsplineBasisSet::interpolate_not_a_knot(&local_x, &ys[lo..=hi])?;
            fitted = Some((l, origin, spline));
        }
        let (_, origin, spline) = fitted.as_ref().expect("fitted above");
        out.push(spline.evaluate(target - origin));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cubic(t: f64) -> f64 {
        3.0 * t * t * t - 2.0 * t + 5.0
    }

    #[test]
    fn reproduces_a_cubic() {
        let xs = [0.0, 0.4, 1.1, 1.5, 2.3, 2.9, 3.2, 4.0];
        let ys: Vec<f64> = xs.iter().map(|&x| cubic(x)).collect();
        let spline = BsplineBasisSet::interpolate_not_a_knot(&xs, &ys).unwrap();
        for k in 0..=400 {
            let x = 4.0 * k as f64 / 400.0;
            let want = cubic(x);
            assert!((spline.evaluate(x) - want).abs() <= 1e-8 * want.abs().max(1.0));
        }
    }

    #[test]
    fn reproduces_a_cubic_through_imputation() {
        let xs = vec![0.0, 0.4, 1.1, 1.5, 2.3, 2.9, 3.2, 4.0];
        let ys: Vec<f64> = xs.iter().map(|&x| cubic(x)).collect();
        let p = ObservedPoints::new(xs, ys).unwrap();
        let targets = [0.2, 0.7, 1.3, 2.0, 2.5, 3.1, 3.9];
        let out = impute_bspline(&p, &targets).unwrap();
        for (t, v) in targets.iter().zip(out) {
            assert!((v - cubic(*t)).abs() <= 1e-8 * cubic(*t).abs());
        }
    }

    #[test]
    fn four_points_give_the_interpolating_cubic() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 2.0, 0.0, 5.0];
        let s = BsplineBasisSet::interpolate_not_a_knot(&xs, &ys).unwrap();
        assert_eq!(s.knots(), &[0.0, 0.0, 0.0, 0.0, 3.0, 3.0, 3.0, 3.0]);
        for (x, y) in xs.iter().zip(ys) {
            assert!((s.evaluate(*x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn knot_vector_layout() {
        let xs: Vec<f64> = (0..7).map(f64::from).collect();
        let s = BsplineBasisSet::interpolate_not_a_knot(&xs, &[1.0; 7]).unwrap();
        assert_eq!(
            s.knots(),
            &[0.0, 0.0, 0.0, 0.0, 2.0, 3.0, 4.0, 6.0, 6.0, 6.0, 6.0]
        );
        assert_eq!(s.domain(), (0.0, 6.0));
        assert_eq!(s.find_span(6.0), 6);
        assert_eq!(s.find_span(0.0), 3);
        assert_eq!(s.find_span(2.0), 4);
    }

    #[test]
    fn constant_points() {
        let xs: Vec<f64> = (0..12).map(|i| 60.0 * f64::from(i)).collect();
        let p = ObservedPoints::new(xs, vec![70.0; 12]).unwrap();
        for v in impute_bspline(&p, &[30.0, 90.0, 400.0, 659.0]).unwrap() {
            assert!((v - 70.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_points() {
        let p = ObservedPoints::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            impute_bspline(&p, &[0.5]),
            Err(ImputeError::InsufficientContext {
                needed: 4,
                available: 3,
                ..
            })
        ));
    }

    #[test]
    fn local_window_ignores_far_samples() {
        // a spike far away from the gap must not change the local fit
        let xs: Vec<f64> = (0..40).map(f64::from).collect();
        let base: Vec<f64> = xs.iter().map(|x| 70.0 + x).collect();
        let mut spiked = base.clone();
        spiked[39] = 500.0;
        let a = impute_bspline(&ObservedPoints::new(xs.clone(), base).unwrap(), &[10.5]).unwrap();
        let b = impute_bspline(&ObservedPoints::new(xs, spiked).unwrap(), &[10.5]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_of_unity_and_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(4..15);
            let mut x = 0.0;
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    x += rng.gen_range(0.1..5.0);
                    x
                })
                .collect();
            let s = BsplineBasisSet::interpolate_not_a_knot(&xs, &vec![1.0; n]).unwrap();
            let (lo, hi) = s.domain();
            for _ in 0..200 {
                let x = rng.gen_range(lo..=hi);
                let (span, vals) = s.basis_values(x);
                assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (k, v) in vals.iter().enumerate() {
                    let i = span - 3 + k;
                    assert!(*v >= -1e-15);
                    assert!(s.knots()[i] <= x && x <= s.knots()[i + 4]);
                }
            }
        }
    }

    #[test]
    fn from_parts_validation() {
        assert!(BsplineBasisSet::from_parts(vec![0.0; 8], vec![1.0; 4]).is_none());
        assert!(
            BsplineBasisSet::from_parts(vec![0., 0., 0., 0., 1., 1., 1., 1.], vec![1.0; 4])
                .is_some()
        );
        assert!(
            BsplineBasisSet::from_parts(vec![0., 0., 0., 0., 1., 1., 1.], vec![1.0; 4]).is_none()
        );
    }
}
