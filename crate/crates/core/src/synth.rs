//! Synthetic two-view scenes with exact ground-truth correspondences and
//! parametric "matcher style" corruptions.
//!
//! A scene is two pinhole cameras related by a random pose and a cloud of
//! 3D points visible in both views; the projections give exact matches.
//! Styles then mimic distinct correspondence generators: localization
//! jitter, gross outlier injection, and grid quantization.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{Rotation3, Unit, Vector3};
use thiserror::Error;

use crate::geometry::{
    essential_from_pose, normalize_match, sampson_distance, Camera, RelativePose,
};
use crate::matchset::{Correspondence, MatchSet};
use crate::rng::DetRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid matcher style: {0}")]
    InvalidStyle(&'static str),
    #[error("view frustum intersection stayed empty; scene infeasible")]
    SceneInfeasible,
    #[error("style density {need} exceeds available ground-truth matches {got}")]
    InsufficientData { need: usize, got: usize },
}

/// Parameters of one synthetic scene draw.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub n_points: usize,
    /// `[z_min, z_max]` in scene units.
    pub depth_range: [f64; 2],
    pub rotation_max_deg: f64,
    /// `[b_min, b_max]` camera-center separation in scene units.
    pub baseline_range: [f64; 2],
    pub camera: Camera,
    pub seed: u64,
}

impl SceneConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.n_points < 8 {
            return Err(SynthError::InvalidConfig("n_points must be at least 8"));
        }
        if !(self.depth_range[0] > 0.0 && self.depth_range[0] < self.depth_range[1]) {
            return Err(SynthError::InvalidConfig("need 0 < z_min < z_max"));
        }
        if !(0.0..=60.0).contains(&self.rotation_max_deg) {
            return Err(SynthError::InvalidConfig("rotation_max_deg must be in [0, 60]"));
        }
        if !(self.baseline_range[0] > 0.0 && self.baseline_range[0] <= self.baseline_range[1]) {
            return Err(SynthError::InvalidConfig("need 0 < b_min <= b_max"));
        }
        Ok(())
    }
}

/// A generated scene: both cameras, the relative pose (unit-norm
/// translation direction), and exact correspondences.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenePair {
    pub cam1: Camera,
    pub cam2: Camera,
    pub pose: RelativePose,
    pub gt_matches: MatchSet,
}

/// A simulated correspondence generator.
#[derive(Clone, Debug, PartialEq)]
pub struct MatcherStyle {
    pub name: String,
    /// Std of isotropic Gaussian localization noise, pixels.
    pub keypoint_jitter_px: f64,
    /// Fraction of matches replaced by uniform random ones.
    pub outlier_ratio: f64,
    /// 0 disables; otherwise coordinates snap to this pitch, pixels.
    pub grid_snap_px: f64,
    /// Number of matches emitted.
    pub density: usize,
}

impl MatcherStyle {
    /// Handcrafted-detector-like: sloppy keypoints, mostly outliers,
    /// sparse.
    pub fn style_h() -> Self {
        Self {
            name: String::from("style-H"),
            keypoint_jitter_px: 1.5,
            outlier_ratio: 0.7,
            grid_snap_px: 0.0,
            density: 500,
        }
    }

    /// Detector-free-like: precise but grid-quantized keypoints, few
    /// outliers, dense.
    pub fn style_d() -> Self {
        Self {
            name: String::from("style-D"),
            keypoint_jitter_px: 0.5,
            outlier_ratio: 0.15,
            grid_snap_px: 8.0,
            density: 1000,
        }
    }

    /// Pass-through subsampling: no jitter, no outliers, no snapping.
    pub fn clean(density: usize) -> Self {
        Self {
            name: String::from("none"),
            keypoint_jitter_px: 0.0,
            outlier_ratio: 0.0,
            grid_snap_px: 0.0,
            density,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=0.95).contains(&self.outlier_ratio) {
            return Err(SynthError::InvalidStyle("outlier_ratio must be in [0, 0.95]"));
        }
        if !(self.keypoint_jitter_px >= 0.0) {
            return Err(SynthError::InvalidStyle("keypoint_jitter_px must be >= 0"));
        }
        if !(self.grid_snap_px >= 0.0) {
            return Err(SynthError::InvalidStyle("grid_snap_px must be >= 0"));
        }
        if self.density == 0 {
            return Err(SynthError::InvalidStyle("density must be positive"));
        }
        Ok(())
    }
}

/// Random unit vector, isotropic.
fn random_unit(rng: &mut DetRng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.normal(), rng.normal(), rng.normal());
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Generate a scene: pose with rotation angle `<= rotation_max_deg` and
/// camera-center distance in `baseline_range`, then 3D points rejection-
/// sampled from camera 1's frustum until both projections are in bounds
/// and in front of both cameras. Deterministic in the config (seed
/// included). Fails if the frustum intersection stays empty within the
/// attempt budget.
pub fn generate_scene(cfg: &SceneConfig) -> Result<ScenePair, SynthError> {
    cfg.validate()?;
    let mut rng = DetRng::new(cfg.seed);
    let cam1 = cfg.camera;
    let cam2 = cfg.camera;

    let axis = Unit::new_normalize(random_unit(&mut rng));
    let angle = rng.uniform(0.0, cfg.rotation_max_deg.to_radians());
    let rotation = Rotation3::from_axis_angle(&axis, angle).into_inner();
    let baseline = rng.uniform(cfg.baseline_range[0], cfg.baseline_range[1]);
    // Camera-2 center drifts mostly sideways; a forward-dominant baseline
    // puts the epipole mid-image and the geometry near-degenerate.
    let dir = {
        let v = random_unit(&mut rng);
        Vector3::new(v.x, v.y, 0.25 * v.z).normalize()
    };
    // X2 = R X1 + t with camera-2 center at `dir * baseline` in camera-1
    // coordinates, so t = -R * center.
    let t_metric = -rotation * (dir * baseline);
    let pose = RelativePose::new(rotation, t_metric / t_metric.norm())
        .expect("constructed from a rotation and unit vector");

    let mut matches = Vec::with_capacity(cfg.n_points);
    let budget = cfg.n_points.saturating_mul(1000);
    let mut attempts = 0usize;
    while matches.len() < cfg.n_points {
        if attempts >= budget {
            return Err(SynthError::SceneInfeasible);
        }
        attempts += 1;

        let u = rng.uniform(0.0, cam1.width);
        let v = rng.uniform(0.0, cam1.height);
        let z = rng.uniform(cfg.depth_range[0], cfg.depth_range[1]);
        let (xn, yn) = cam1.normalize(u, v);
        let x1 = Vector3::new(xn * z, yn * z, z);
        let x2 = rotation * x1 + t_metric;
        if x2.z <= 1e-6 {
            continue;
        }
        let (u2, v2) = cam2.denormalize(x2.x / x2.z, x2.y / x2.z);
        if !cam2.contains(u2, v2) {
            continue;
        }
        matches.push(Correspondence::new(u, v, u2, v2));
    }

    Ok(ScenePair {
        cam1,
        cam2,
        pose,
        gt_matches: MatchSet::all_inliers(matches),
    })
}

/// Apply a matcher style to a scene's ground truth: subsample to
/// `density`, jitter kept matches (clamped to bounds), replace
/// `floor(outlier_ratio * density)` random ones with uniform in-bounds
/// matches, snap to the grid when enabled. Labels are geometric: a match
/// is an inlier iff its first-order epipolar distance under the
/// ground-truth pose is below `label_threshold` (normalized units, same
/// convention as the estimator threshold: squared Sampson against
/// `label_threshold^2`).
pub fn apply_style(
    scene: &ScenePair,
    style: &MatcherStyle,
    seed: u64,
    label_threshold: f64,
) -> Result<MatchSet, SynthError> {
    style.validate()?;
    let n_gt = scene.gt_matches.len();
    if style.density > n_gt {
        return Err(SynthError::InsufficientData { need: style.density, got: n_gt });
    }
    let mut rng = DetRng::new(seed);
    let (cam1, cam2) = (&scene.cam1, &scene.cam2);

    let mut picked: Vec<usize> = (0..n_gt).collect();
    rng.partial_shuffle(&mut picked, style.density);
    picked.truncate(style.density);
    picked.sort_unstable();

    let mut out: Vec<Correspondence> =
        picked.iter().map(|&i| scene.gt_matches.matches[i]).collect();

    let n_replace = (style.outlier_ratio * style.density as f64).floor() as usize;
    let mut replace_order: Vec<usize> = (0..style.density).collect();
    rng.partial_shuffle(&mut replace_order, n_replace);
    let mut replaced = alloc::vec![false; style.density];
    for &p in replace_order.iter().take(n_replace) {
        replaced[p] = true;
    }

    for (pos, c) in out.iter_mut().enumerate() {
        if replaced[pos] {
            c.x = rng.uniform(0.0, cam1.width);
            c.y = rng.uniform(0.0, cam1.height);
            c.xp = rng.uniform(0.0, cam2.width);
            c.yp = rng.uniform(0.0, cam2.height);
        } else if style.keypoint_jitter_px > 0.0 {
            let s = style.keypoint_jitter_px;
            c.x = (c.x + s * rng.normal()).clamp(0.0, cam1.width);
            c.y = (c.y + s * rng.normal()).clamp(0.0, cam1.height);
            c.xp = (c.xp + s * rng.normal()).clamp(0.0, cam2.width);
            c.yp = (c.yp + s * rng.normal()).clamp(0.0, cam2.height);
        }
    }

    if style.grid_snap_px > 0.0 {
        let p = style.grid_snap_px;
        for c in out.iter_mut() {
            c.x = ((c.x / p).round() * p).clamp(0.0, cam1.width);
            c.y = ((c.y / p).round() * p).clamp(0.0, cam1.height);
            c.xp = ((c.xp / p).round() * p).clamp(0.0, cam2.width);
            c.yp = ((c.yp / p).round() * p).clamp(0.0, cam2.height);
        }
    }

    let e_gt = essential_from_pose(&scene.pose);
    let limit = label_threshold * label_threshold;
    let labels: Vec<bool> = out
        .iter()
        .map(|c| sampson_distance(&e_gt, &normalize_match(c, cam1, cam2)) < limit)
        .collect();

    Ok(MatchSet::new(out, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::decompose_essential;

    fn test_camera() -> Camera {
        Camera::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0).unwrap()
    }

    fn test_config(seed: u64) -> SceneConfig {
        SceneConfig {
            n_points: 64,
            depth_range: [4.0, 10.0],
            rotation_max_deg: 15.0,
            baseline_range: [0.15, 0.4],
            camera: test_camera(),
            seed,
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = test_config(0);
        cfg.n_points = 7;
        assert!(matches!(generate_scene(&cfg), Err(SynthError::InvalidConfig(_))));
        let mut cfg = test_config(0);
        cfg.depth_range = [5.0, 4.0];
        assert!(generate_scene(&cfg).is_err());
        let mut cfg = test_config(0);
        cfg.baseline_range = [0.0, 0.1];
        assert!(generate_scene(&cfg).is_err());
        let mut cfg = test_config(0);
        cfg.rotation_max_deg = 61.0;
        assert!(generate_scene(&cfg).is_err());
    }

    #[test]
    fn scene_is_deterministic() {
        let cfg = test_config(11);
        let a = generate_scene(&cfg).unwrap();
        let b = generate_scene(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scene_matches_satisfy_epipolar_constraint() {
        for seed in 0..20 {
            let scene = generate_scene(&test_config(seed)).unwrap();
            let e = essential_from_pose(&scene.pose);
            for c in &scene.gt_matches.matches {
                let n = normalize_match(c, &scene.cam1, &scene.cam2);
                let x = Vector3::new(n.x, n.y, 1.0);
                let xp = Vector3::new(n.xp, n.yp, 1.0);
                assert!(xp.dot(&(e * x)).abs() < 1e-9);
                assert!(c.in_bounds(
                    scene.cam1.width,
                    scene.cam1.height,
                    scene.cam2.width,
                    scene.cam2.height
                ));
            }
        }
    }

    #[test]
    fn scene_points_in_front_of_both_cameras() {
        // The cheirality vote only recovers the generating pose when every
        // ground-truth match triangulates in front of both cameras.
        for seed in 100..110 {
            let scene = generate_scene(&test_config(seed)).unwrap();
            let e = essential_from_pose(&scene.pose);
            let normalized: Vec<Correspondence> = scene
                .gt_matches
                .matches
                .iter()
                .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
                .collect();
            let rec = decompose_essential(&e, &normalized).unwrap();
            assert!(crate::geometry::pose_error_deg(&rec, &scene.pose) < 1e-6);
        }
    }

    #[test]
    fn infeasible_scene_errors() {
        let mut cfg = test_config(0);
        // Baseline far larger than any depth pushes every projection out
        // of the second frustum.
        cfg.baseline_range = [4000.0, 5000.0];
        cfg.n_points = 8;
        assert_eq!(generate_scene(&cfg), Err(SynthError::SceneInfeasible));
    }

    #[test]
    fn identity_style_is_a_subsample() {
        let scene = generate_scene(&test_config(5)).unwrap();
        let style = MatcherStyle::clean(32);
        let out = apply_style(&scene, &style, 99, 1e-3).unwrap();
        assert_eq!(out.len(), 32);
        assert!(out.labels.iter().all(|&l| l));
        for c in &out.matches {
            assert!(scene.gt_matches.matches.contains(c));
        }
    }

    #[test]
    fn style_determinism_and_density_check() {
        let scene = generate_scene(&test_config(6)).unwrap();
        let style = MatcherStyle::style_h();
        assert_eq!(
            apply_style(&scene, &style, 1, 1e-3),
            Err(SynthError::InsufficientData { need: 500, got: 64 })
        );

        let mut cfg = test_config(6);
        cfg.n_points = 600;
        let scene = generate_scene(&cfg).unwrap();
        let a = apply_style(&scene, &style, 42, 1e-3).unwrap();
        let b = apply_style(&scene, &style, 42, 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_outlier_style_labels_about_half_inliers() {
        let mut cfg = test_config(7);
        cfg.n_points = 1200;
        let style = MatcherStyle {
            name: String::from("half"),
            keypoint_jitter_px: 0.0,
            outlier_ratio: 0.5,
            grid_snap_px: 0.0,
            density: 1000,
        };
        // Tight labeling threshold keeps the chance-inlier correction
        // small; the replaced half is inlier only by chance.
        let mut total_fraction = 0.0;
        let runs = 100;
        for seed in 0..runs {
            cfg.seed = 5000 + seed;
            let scene = generate_scene(&cfg).unwrap();
            let out = apply_style(&scene, &style, seed, 1e-4).unwrap();
            let replaced = out.labels.iter().filter(|&&l| !l).count();
            assert_eq!(out.len(), 1000);
            assert!(replaced <= 500, "replaced count {replaced}");
            total_fraction += out.inlier_fraction();
        }
        let mean_fraction = total_fraction / runs as f64;
        assert!(
            (0.45..=0.55).contains(&mean_fraction),
            "mean inlier fraction {mean_fraction}"
        );
    }

    #[test]
    fn snapped_style_lands_on_grid() {
        let mut cfg = test_config(8);
        cfg.n_points = 1200;
        let scene = generate_scene(&cfg).unwrap();
        let out = apply_style(&scene, &MatcherStyle::style_d(), 3, 1e-3).unwrap();
        for c in &out.matches {
            for v in c.to_array() {
                assert_eq!(v % 8.0, 0.0, "coordinate {v} off-grid");
                assert!(v >= 0.0);
            }
            assert!(c.in_bounds(640.0, 480.0, 640.0, 480.0));
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn generated_scenes_satisfy_invariants(seed in 0u64..1000) {
                let cfg = test_config(seed);
                let scene = generate_scene(&cfg).unwrap();
                prop_assert_eq!(scene.gt_matches.len(), cfg.n_points);
                let e = essential_from_pose(&scene.pose);
                for c in &scene.gt_matches.matches {
                    prop_assert!(c.in_bounds(640.0, 480.0, 640.0, 480.0));
                    let n = normalize_match(c, &scene.cam1, &scene.cam2);
                    prop_assert!(sampson_distance(&e, &n) < 1e-18);
                }
            }

            #[test]
            fn styled_output_is_always_in_bounds(
                seed in 0u64..200,
                jitter in 0.0..20.0f64,
                ratio in 0.0..0.95f64,
                snap in prop::sample::select(alloc::vec![0.0f64, 4.0, 8.0, 16.0]),
            ) {
                let mut cfg = test_config(seed);
                cfg.n_points = 64;
                let scene = generate_scene(&cfg).unwrap();
                let style = MatcherStyle {
                    name: String::from("fuzz"),
                    keypoint_jitter_px: jitter,
                    outlier_ratio: ratio,
                    grid_snap_px: snap,
                    density: 64,
                };
                let out = apply_style(&scene, &style, seed ^ 0xabc, 1e-3).unwrap();
                prop_assert_eq!(out.len(), 64);
                for c in &out.matches {
                    prop_assert!(c.in_bounds(640.0, 480.0, 640.0, 480.0));
                }
            }

            #[test]
            fn clean_style_preserves_epipolar_constraint(seed in 0u64..100) {
                let cfg = test_config(seed);
                let scene = generate_scene(&cfg).unwrap();
                let out = apply_style(&scene, &MatcherStyle::clean(16), seed, 1e-3).unwrap();
                let e = essential_from_pose(&scene.pose);
                for c in &out.matches {
                    let n = normalize_match(c, &scene.cam1, &scene.cam2);
                    prop_assert!(sampson_distance(&e, &n) < 1e-18);
                }
            }
        }
    }
}
