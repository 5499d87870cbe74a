//! Scratch probe: minimal training budget that reliably shows progress.

use mcd_core::geometry::Camera;
use mcd_core::mcd::{mcd_stream, DiffusionSchedule, McdConfig};
use mcd_core::sampler::{train, Baseline, SamplerModel, TrainConfig, TrainScene};
use mcd_core::synth::{generate_scene, SceneConfig};

fn scene_config(seed: u64, n_points: usize) -> SceneConfig {
    SceneConfig {
        n_points,
        depth_range: [4.0, 10.0],
        rotation_max_deg: 15.0,
        baseline_range: [1.0, 2.0],
        camera: Camera::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0).unwrap(),
        seed,
    }
}

fn main() {
    for &(dims, epochs, spe, k, h, lr) in &[
        (&[4usize, 16, 1] as &[usize], 10u32, 300u32, 8u32, 4u32, 0.01),
        (&[4, 16, 1], 10, 300, 8, 4, 0.03),
        (&[4, 16, 1], 16, 300, 8, 4, 0.02),
        (&[4, 32, 1], 16, 300, 8, 4, 0.02),
    ] {
        let n_total = (epochs * spe) as usize;
        let cfg_mcd =
            McdConfig::new(DiffusionSchedule::default(), [0.2, 0.9], [0.02, 0.7], 0).unwrap();
        let scenes =
            (0..n_total).map(move |i| generate_scene(&scene_config(400 + i as u64, 64)).unwrap());
        let stream = mcd_stream(scenes, cfg_mcd, 400).map(|(scene, d)| TrainScene {
            matches: d.set.matches,
            cam1: scene.cam1,
            cam2: scene.cam2,
            gt_pose: scene.pose,
        });
        let model = SamplerModel::init(dims, 1).unwrap();
        let tc = TrainConfig {
            epochs,
            scenes_per_epoch: spe,
            k_samples: k,
            mc_draws: h,
            learning_rate: lr,
            lr_decay: 1.0,
            baseline: Baseline::Mean,
            seed: 0,
        };
        let t0 = std::time::Instant::now();
        let (_, log) = train(&model, stream, &tc).unwrap();
        println!(
            "dims={dims:?} epochs={epochs} spe={spe} K={k} H={h} lr={lr}: {:.1} -> {:.1} ({} epochs, {:.1}s)",
            log[0].mean_loss,
            log.last().unwrap().mean_loss,
            log.len(),
            t0.elapsed().as_secs_f64(),
        );
        let losses: Vec<f64> = log.iter().map(|r| r.mean_loss).collect();
        println!("   curve: {losses:.1?}");
    }
}
