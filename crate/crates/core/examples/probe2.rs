//! Scratch probe: isolate where noisy-data pose error comes from.

use mcd_core::estimator::{count_inliers, ransac_estimate, RansacConfig};
use mcd_core::geometry::{
    decompose_essential, eight_point, essential_from_pose, normalize_match, pose_error_deg,
    rotation_error_deg, translation_error_deg, Camera,
};
use mcd_core::matchset::Correspondence;
use mcd_core::synth::{apply_style, generate_scene, MatcherStyle, SceneConfig};

fn camera() -> Camera {
    Camera::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0).unwrap()
}

fn scene_config(seed: u64, n_points: usize) -> SceneConfig {
    SceneConfig {
        n_points,
        depth_range: [4.0, 10.0],
        rotation_max_deg: 15.0,
        baseline_range: [0.5, 1.0],
        camera: camera(),
        seed,
    }
}

fn main() {
    for seed in 0..10u64 {
        let scene = generate_scene(&scene_config(2000 + seed, 600)).unwrap();
        let style = MatcherStyle {
            name: "half".into(),
            keypoint_jitter_px: 0.25,
            outlier_ratio: 0.5,
            grid_snap_px: 0.0,
            density: 500,
        };
        let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
        let normalized: Vec<Correspondence> = styled
            .matches
            .iter()
            .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
            .collect();

        // (1) GT essential over styled matches: decompose from true inliers.
        let e_gt = essential_from_pose(&scene.pose);
        let true_inliers: Vec<Correspondence> = normalized
            .iter()
            .zip(&styled.labels)
            .filter_map(|(c, &l)| l.then_some(*c))
            .collect();
        let rec = decompose_essential(&e_gt, &true_inliers).unwrap();
        println!(
            "seed {seed}: gt-E decompose err {:.2e} (n_true={})",
            pose_error_deg(&rec, &scene.pose),
            true_inliers.len()
        );

        // (2) Least-squares eight-point on all true inliers.
        let e_ls = eight_point(&true_inliers).unwrap();
        let rec = decompose_essential(&e_ls, &true_inliers).unwrap();
        println!(
            "          ls-8pt on true inliers: rot {:.3} trans {:.3}",
            rotation_error_deg(&rec.rotation, &scene.pose.rotation),
            translation_error_deg(&rec.translation, &scene.pose.translation)
        );
        let (_, score_ls) = count_inliers(&e_ls, &normalized, 1e-3);
        let (_, score_gt) = count_inliers(&e_gt, &normalized, 1e-3);
        println!("          score(ls) {score_ls} score(gt) {score_gt}");

        // (3) RANSAC pre/post refit.
        for refine in [false, true] {
            let cfg = RansacConfig {
                max_iters: 4000,
                refine,
                seed: 5,
                ..RansacConfig::default()
            };
            let res =
                ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg).unwrap();
            println!(
                "          ransac refine={refine}: rot {:.3} trans {:.3} score {}",
                rotation_error_deg(&res.pose.rotation, &scene.pose.rotation),
                translation_error_deg(&res.pose.translation, &scene.pose.translation),
                res.hypothesis.score
            );
        }
    }
}
