//! Pose-error metrics and AUC of the cumulative error curve.

use alloc::vec::Vec;
use nalgebra::{Matrix3, Vector3};

use super::{GeometryError, RelativePose};

/// Angle in degrees of the relative rotation between two rotation
/// matrices, in `[0, 180]`.
///
/// Computed from the chordal distance `||R_est - R_gt||_F = 2*sqrt(2)*sin(theta/2)`,
/// which keeps full precision near zero where the arccos-of-trace form of
/// the same angle collapses into rounding noise.
pub fn rotation_error_deg(r_est: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> f64 {
    let d = (r_est - r_gt).norm();
    let theta = 2.0 * d.atan2((8.0 - d * d).max(0.0).sqrt());
    theta.to_degrees()
}

/// Angle in degrees between two unit translation directions, folded to
/// `[0, 90]` (an essential matrix fixes `t` only up to sign).
pub fn translation_error_deg(t_est: &Vector3<f64>, t_gt: &Vector3<f64>) -> f64 {
    let cross = t_est.cross(t_gt).norm();
    let dot = t_est.dot(t_gt).abs();
    cross.atan2(dot).to_degrees()
}

/// Combined pose error: `max(rotation error, translation error)`.
/// Estimation failures are encoded as 180 by callers.
pub fn pose_error_deg(est: &RelativePose, gt: &RelativePose) -> f64 {
    rotation_error_deg(&est.rotation, &gt.rotation)
        .max(translation_error_deg(&est.translation, &gt.translation))
}

/// Failure sentinel used wherever an estimate could not be produced.
pub const FAILURE_POSE_ERROR_DEG: f64 = 180.0;

/// AUC of the cumulative recall curve `recall(e) = |{errors <= e}| / N`
/// over `[0, tau]`, normalized by `tau`, for each threshold.
///
/// The step function is integrated exactly (piecewise), so the result is
/// independent of any sampling resolution. Errors must be finite and
/// nonnegative; an empty list has no defined AUC.
pub fn pose_auc(errors: &[f64], thresholds_deg: &[f64]) -> Result<Vec<f64>, GeometryError> {
    if errors.is_empty() {
        return Err(GeometryError::UndefinedMetric);
    }
    debug_assert!(errors.iter().all(|e| e.is_finite() && *e >= 0.0));
    debug_assert!(thresholds_deg.iter().all(|t| *t > 0.0));

    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;

    Ok(thresholds_deg
        .iter()
        .map(|&tau| {
            let mut area = 0.0;
            let mut prev = 0.0;
            let mut count = 0usize;
            let mut i = 0;
            while i < sorted.len() && sorted[i] <= tau {
                let v = sorted[i];
                area += (v - prev) * (count as f64 / n);
                while i < sorted.len() && sorted[i] == v {
                    count += 1;
                    i += 1;
                }
                prev = v;
            }
            area += (tau - prev) * (count as f64 / n);
            area / tau
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};

    fn rot(axis: [f64; 3], deg: f64) -> Matrix3<f64> {
        Rotation3::from_axis_angle(
            &Unit::new_normalize(Vector3::new(axis[0], axis[1], axis[2])),
            deg.to_radians(),
        )
        .into_inner()
    }

    #[test]
    fn rotation_error_cases() {
        let r = rot([0.3, -0.5, 0.8], 33.0);
        assert_eq!(rotation_error_deg(&r, &r), 0.0);

        let r10 = r * rot([1.0, 2.0, -1.0], 10.0);
        assert!((rotation_error_deg(&r10, &r) - 10.0).abs() < 1e-9);

        let r180 = rot([0.0, 0.0, 1.0], 180.0);
        assert!((rotation_error_deg(&r180, &Matrix3::identity()) - 180.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_error_is_symmetric() {
        let a = rot([1.0, 0.2, 0.0], 17.0);
        let b = rot([0.0, 1.0, 0.4], 55.0);
        assert_eq!(rotation_error_deg(&a, &b), rotation_error_deg(&b, &a));
    }

    #[test]
    fn translation_error_cases() {
        let t = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(translation_error_deg(&t, &t), 0.0);
        assert_eq!(translation_error_deg(&(-t), &t), 0.0);
        let orth = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(translation_error_deg(&orth, &t), 90.0);
    }

    #[test]
    fn translation_error_sign_invariant() {
        let a = Vector3::new(0.6, -0.64, 0.48).normalize();
        let b = Vector3::new(-0.1, 0.9, 0.42).normalize();
        let e = translation_error_deg(&a, &b);
        assert_eq!(translation_error_deg(&(-a), &b), e);
        assert_eq!(translation_error_deg(&a, &(-b)), e);
    }

    #[test]
    fn pose_error_takes_max() {
        let gt = RelativePose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let est = RelativePose::new(
            rot([0.0, 1.0, 0.0], 3.0),
            (Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), 7.0f64.to_radians())
                * Vector3::new(0.0, 0.0, 1.0))
            .normalize(),
        )
        .unwrap();
        assert!((pose_error_deg(&est, &gt) - 7.0).abs() < 1e-9);
        assert_eq!(pose_error_deg(&gt, &gt), 0.0);
    }

    #[test]
    fn auc_trivial_cases() {
        let aucs = pose_auc(&[0.0, 0.0, 0.0], &[5.0, 10.0, 20.0]).unwrap();
        assert_eq!(aucs, alloc::vec![1.0, 1.0, 1.0]);

        let aucs = pose_auc(&[25.0, 90.0, 180.0], &[5.0, 10.0, 20.0]).unwrap();
        assert_eq!(aucs, alloc::vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn auc_two_point_example() {
        let aucs = pose_auc(&[0.0, 10.0], &[20.0]).unwrap();
        assert_eq!(aucs[0], 0.75);
    }

    #[test]
    fn auc_empty_is_undefined() {
        assert_eq!(pose_auc(&[], &[5.0]), Err(GeometryError::UndefinedMetric));
    }

    #[test]
    fn auc_counts_error_exactly_at_threshold() {
        // A jump exactly at tau has zero width but the error still counts
        // as recalled below tau for every larger segment.
        let aucs = pose_auc(&[20.0], &[20.0]).unwrap();
        assert_eq!(aucs[0], 0.0);
        let aucs = pose_auc(&[10.0], &[20.0]).unwrap();
        assert_eq!(aucs[0], 0.5);
    }

    /// Dense left-rule integration of the recall step curve. Exact when
    /// every error value lies on the grid, since jumps then happen at
    /// evaluation nodes of the right-continuous recall.
    fn dense_auc(errors: &[f64], tau: f64, step: f64) -> f64 {
        let n = errors.len() as f64;
        let cells = (tau / step).round() as usize;
        let mut area = 0.0;
        for k in 0..cells {
            let e = k as f64 * step;
            let recall = errors.iter().filter(|&&x| x <= e).count() as f64 / n;
            area += recall * step;
        }
        area / tau
    }

    #[test]
    fn auc_matches_dense_oracle() {
        let mut rng = crate::rng::DetRng::new(2024);
        for _ in 0..100 {
            let len = 1 + rng.uniform_index(100) as usize;
            // Grid-aligned random errors so the dense oracle is exact.
            let errors: Vec<f64> = (0..len)
                .map(|_| (rng.uniform(0.0, 25.0) / 1e-4).round() * 1e-4)
                .collect();
            let aucs = pose_auc(&errors, &[5.0, 10.0, 20.0]).unwrap();
            for (auc, tau) in aucs.iter().zip([5.0, 10.0, 20.0]) {
                let oracle = dense_auc(&errors, tau, 1e-4);
                assert!(
                    (auc - oracle).abs() < 1e-6,
                    "auc {auc} oracle {oracle} tau {tau}"
                );
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Pointwise-smaller error lists never lose AUC.
            #[test]
            fn auc_monotone_under_pointwise_decrease(
                mut errors in proptest::collection::vec(0.0..180.0f64, 1..40),
                idx in any::<prop::sample::Index>(),
                shrink in 0.0..1.0f64,
            ) {
                let before = pose_auc(&errors, &[5.0, 10.0, 20.0]).unwrap();
                let i = idx.index(errors.len());
                errors[i] *= shrink;
                let after = pose_auc(&errors, &[5.0, 10.0, 20.0]).unwrap();
                for (a, b) in after.iter().zip(before.iter()) {
                    prop_assert!(a >= b);
                }
            }

            // Appending a new best-case error never loses AUC either.
            #[test]
            fn auc_monotone_under_adding_minimum(
                errors in proptest::collection::vec(0.0..180.0f64, 1..40),
            ) {
                let before = pose_auc(&errors, &[5.0, 10.0, 20.0]).unwrap();
                let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut extended = errors.clone();
                extended.push(min);
                let after = pose_auc(&extended, &[5.0, 10.0, 20.0]).unwrap();
                for (a, b) in after.iter().zip(before.iter()) {
                    prop_assert!(*a >= *b - 1e-12);
                }
            }
        }
    }
}
