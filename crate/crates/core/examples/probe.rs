//! Scratch probe for tuning test parameters. Not part of the deliverable.

use mcd_core::estimator::{ransac_estimate, RansacConfig};
use mcd_core::geometry::{pose_error_deg, Camera};
use mcd_core::synth::{apply_style, generate_scene, MatcherStyle, SceneConfig};

fn camera() -> Camera {
    Camera::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0).unwrap()
}

fn scene_config(seed: u64, n_points: usize) -> SceneConfig {
    SceneConfig {
        n_points,
        depth_range: [4.0, 10.0],
        rotation_max_deg: 15.0,
        baseline_range: [0.15, 0.4],
        camera: camera(),
        seed,
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "ransac" => probe_ransac(),
        "oracle" => probe_oracle(),
        "variance" => probe_variance(),
        _ => {
            probe_ransac();
            probe_oracle();
        }
    }
}

fn probe_ransac() {
    let style = MatcherStyle {
        name: "half".into(),
        keypoint_jitter_px: 0.5,
        outlier_ratio: 0.5,
        grid_snap_px: 0.0,
        density: 500,
    };
    let cfg = RansacConfig {
        max_iters: 4000,
        confidence: 0.999,
        seed: 5,
        ..RansacConfig::default()
    };
    let mut errors: Vec<f64> = Vec::new();
    for seed in 0..40u64 {
        let scene = generate_scene(&scene_config(2000 + seed, 600)).unwrap();
        let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
        let res = ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg).unwrap();
        let err = pose_error_deg(&res.pose, &scene.pose);
        errors.push(err);
        if err >= 2.0 {
            println!(
                "seed {seed}: err {err:.3} iters {} ratio {:.3}",
                res.iterations_used, res.inlier_ratio
            );
        }
    }
    let ok = errors.iter().filter(|&&e| e < 2.0).count();
    errors.sort_by(f64::total_cmp);
    println!(
        "ransac: ok {}/40, median {:.4}, p90 {:.4}, max {:.4}",
        ok,
        errors[20],
        errors[36],
        errors[39]
    );

    // refine off for comparison
    let cfg2 = RansacConfig { refine: false, ..cfg.clone() };
    let mut ok2 = 0;
    for seed in 0..40u64 {
        let scene = generate_scene(&scene_config(2000 + seed, 600)).unwrap();
        let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
        let res = ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg2).unwrap();
        if pose_error_deg(&res.pose, &scene.pose) < 2.0 {
            ok2 += 1;
        }
    }
    println!("ransac no-refine: ok {ok2}/40");

    // tighter threshold
    for thr in [1e-4, 3e-4] {
        let cfg3 = RansacConfig { threshold: thr, ..cfg.clone() };
        let mut ok3 = 0;
        for seed in 0..40u64 {
            let scene = generate_scene(&scene_config(2000 + seed, 600)).unwrap();
            let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
            let res =
                ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg3).unwrap();
            if pose_error_deg(&res.pose, &scene.pose) < 2.0 {
                ok3 += 1;
            }
        }
        println!("ransac thr={thr}: ok {ok3}/40");
    }
}

fn probe_oracle() {
    for (thr, jit) in [(1e-3, 0.5), (1e-4, 0.5), (1e-4, 0.3)] {
        let style = MatcherStyle {
            name: "half".into(),
            keypoint_jitter_px: jit,
            outlier_ratio: 0.5,
            grid_snap_px: 0.0,
            density: 400,
        };
        let mut wins = 0;
        let mut ties = 0;
        for seed in 0..40u64 {
            let scene = generate_scene(&scene_config(3000 + seed, 500)).unwrap();
            let styled = apply_style(&scene, &style, seed, thr).unwrap();
            let cfg = RansacConfig {
                max_iters: 4000,
                threshold: thr,
                seed: 100 + seed,
                ..RansacConfig::default()
            };
            let uniform =
                ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg).unwrap();
            let oracle: Vec<f64> = styled
                .labels
                .iter()
                .map(|&l| if l { 1.0 } else { 0.0 })
                .collect();
            let guided = ransac_estimate(
                &styled.matches,
                &scene.cam1,
                &scene.cam2,
                Some(&oracle),
                &cfg,
            )
            .unwrap();
            if guided.iterations_used <= uniform.iterations_used {
                wins += 1;
            }
            if guided.iterations_used == uniform.iterations_used {
                ties += 1;
            }
        }
        println!("oracle thr={thr} jит={jit}: wins {wins}/40 (ties {ties})");
    }
}

fn probe_variance() {
    use mcd_core::mcd::{mcd_stream, DiffusionSchedule, McdConfig};
    let scene = generate_scene(&scene_config(9, 8)).unwrap();
    let cfg =
        McdConfig::new(DiffusionSchedule::default(), [0.2, 0.9], [0.02, 0.7], 0).unwrap();
    let span: f64 = 0.7 - 0.02;
    let true_var = span * span / 12.0;
    let batches = 500;
    for &h in &[10usize, 100, 1000] {
        let mut batch_means = Vec::with_capacity(batches);
        for b in 0..batches {
            let scenes = std::iter::repeat_with(|| scene.clone()).take(h);
            let mean: f64 = mcd_stream(scenes, cfg.clone(), 7_000_000 + b as u64)
                .map(|(_, d)| d.sampled_s)
                .sum::<f64>()
                / h as f64;
            batch_means.push(mean);
        }
        let m = batch_means.iter().sum::<f64>() / batches as f64;
        let var =
            batch_means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (batches - 1) as f64;
        let expected = true_var / h as f64;
        println!("H={h}: var {var:.6e} expected {expected:.6e} ratio {:.3}", var / expected);
    }
}
