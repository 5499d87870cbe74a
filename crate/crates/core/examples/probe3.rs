//! Scratch probe: geometry scan for the robust-estimation operating point.

use mcd_core::estimator::{ransac_estimate, RansacConfig};
use mcd_core::geometry::{pose_error_deg, Camera};
use mcd_core::synth::{apply_style, generate_scene, MatcherStyle, SceneConfig};

fn main() {
    for &(f, b_lo, b_hi, jitter) in &[
        (600.0, 0.5, 1.0, 0.1),
        (600.0, 0.5, 1.0, 0.15),
        (600.0, 0.5, 1.0, 0.25),
        (600.0, 0.15, 0.4, 0.1),
        (600.0, 1.0, 2.0, 0.1),
    ] {
        let camera = Camera::new(f, f, 320.0, 240.0, 640.0, 480.0).unwrap();
        let style = MatcherStyle {
            name: "half".into(),
            keypoint_jitter_px: jitter,
            outlier_ratio: 0.5,
            grid_snap_px: 0.0,
            density: 500,
        };
        let mut errs: Vec<f64> = Vec::new();
        let mut infeasible = 0;
        for seed in 0..100u64 {
            let cfg_s = SceneConfig {
                n_points: 600,
                depth_range: [4.0, 10.0],
                rotation_max_deg: 15.0,
                baseline_range: [b_lo, b_hi],
                camera,
                seed: 2000 + seed,
            };
            let scene = match generate_scene(&cfg_s) {
                Ok(s) => s,
                Err(_) => {
                    infeasible += 1;
                    continue;
                }
            };
            let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
            let cfg = RansacConfig {
                max_iters: 4000,
                seed: 5,
                ..RansacConfig::default()
            };
            match ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg) {
                Ok(res) => errs.push(pose_error_deg(&res.pose, &scene.pose)),
                Err(_) => errs.push(180.0),
            }
        }
        let ok = errs.iter().filter(|&&e| e < 2.0).count();
        errs.sort_by(f64::total_cmp);
        let n = errs.len();
        println!(
            "f={f} b=[{b_lo},{b_hi}] jit={jitter}: ok {}/{} (infeasible {}), median {:.3}, p90 {:.3}, max {:.2}",
            ok, n, infeasible, errs[n / 2], errs[n * 9 / 10], errs[n - 1]
        );
    }
}
