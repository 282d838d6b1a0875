use super::{ImputeError, Method, ObservedPoints};

/// Straight line between the two observed samples bracketing each target.
pub fn impute_linear(points: &ObservedPoints, targets: &[f64]) -> Result<Vec<f64>, ImputeError> {
    points.require(Method::Linear, 2)?;
    let (xs, ys) = (points.xs(), points.ys());
    targets
        .iter()
        .map(|&t| {
            let l = points.bracket(t)?;
            let (xl, xr, yl, yr) = (xs[l], xs[l + 1], ys[l], ys[l + 1]);
            Ok(yl + (t - xl) * (yr - yl) / (xr - xl))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(p: &[(f64, f64)]) -> ObservedPoints {
        ObservedPoints::new(
            p.iter().map(|v| v.0).collect(),
            p.iter().map(|v| v.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let p = pts(&[(0.0, 80.0), (360.0, 92.0)]);
        let targets: Vec<f64> = (1..=5).map(|k| 60.0 * k as f64).collect();
        let out = impute_linear(&p, &targets).unwrap();
        for (got, want) in out.iter().zip([82.0, 84.0, 86.0, 88.0, 90.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant() {
        let p = pts(&[(0.0, 80.0), (60.0, 80.0)]);
        assert_eq!(impute_linear(&p, &[30.0]).unwrap(), vec![80.0]);
    }

    #[test]
    fn outside_hull() {
        let p = pts(&[(0.0, 80.0), (360.0, 92.0)]);
        assert!(matches!(
            impute_linear(&p, &[-60.0]),
            Err(ImputeError::OutOfRange { target, .. }) if target == -60.0
        ));
        assert!(impute_linear(&p, &[361.0]).is_err());
    }

    #[test]
    fn picks_the_bracketing_pair() {
        let p = pts(&[(0.0, 60.0), (60.0, 90.0), (300.0, 70.0)]);
        let out = impute_linear(&p, &[30.0, 60.0, 180.0]).unwrap();
        assert_eq!(out, vec![75.0, 90.0, 80.0]);
    }
}
