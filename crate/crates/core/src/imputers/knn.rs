use super::{ImputeError, Method, ObservedPoints};

pub const DEFAULT_KNN_K: usize = 5;

/// Floor on neighbour distance (seconds) in the inverse-distance weights.
pub const DEFAULT_KNN_EPSILON: f64 = 1e-9;

/// Inverse-distance weighted mean of the `k` temporally nearest observed
/// samples.
///
/// Neighbours are ranked by `|x_j - t|`, ties going to the earlier sample,
/// and accumulated in that rank order with weight `1 / max(d, epsilon)`.
pub fn impute_knn(
    points: &ObservedPoints,
    targets: &[f64],
    k: usize,
    epsilon: f64,
) -> Result<Vec<f64>, ImputeError> {
    points.require(Method::Knn, 1)?;
    if k == 0 || epsilon.is_nan() || epsilon <= 0.0 {
        return Err(ImputeError::InvalidConfig(format!(
            "knn needs k >= 1 and epsilon > 0, got k={k}, epsilon={epsilon}"
        )));
    }
    let (xs, ys) = (points.xs(), points.ys());
    let k = k.min(xs.len());

    Ok(targets
        .iter()
        .map(|&t| {
            // expand outwards from the insertion point: every sample left of
            // `right` is earlier than every sample from `right` on
            let mut right = xs.partition_point(|&x| x < t);
            let mut left = right;
            let (mut num, mut den) = (0.0, 0.0);
            for _ in 0..k {
                let take_left = match (left.checked_sub(1), xs.get(right)) {
                    (Some(l), Some(&xr)) => (xs[l] - t).abs() <= (xr - t).abs(),
                    (Some(_), None) => true,
                    (None, _) => false,
                };
                let j = if take_left {
                    left -= 1;
                    left
                } else {
                    right += 1;
                    right - 1
                };
                let w = 1.0 / (xs[j] - t).abs().max(epsilon);
                num += w * ys[j];
                den += w;
            }
            num / den
        })
        .collect())
}
