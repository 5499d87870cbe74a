//! Scratch probe: REINFORCE training dynamics on diffused streams.

use mcd_core::estimator::sample_minimal_set;
use mcd_core::geometry::{
    decompose_essential, eight_point, normalize_match, pose_error_deg, Camera,
};
use mcd_core::matchset::Correspondence;
use mcd_core::mcd::{mcd_sample, DiffusionSchedule, McdConfig};
use mcd_core::rng::DetRng;
use mcd_core::sampler::{
    forward, train, weights_from_logits, Baseline, SamplerModel, TrainConfig, TrainScene,
};
use mcd_core::synth::{generate_scene, SceneConfig};

fn camera() -> Camera {
    Camera::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0).unwrap()
}

fn scene_config(seed: u64, n_points: usize) -> SceneConfig {
    SceneConfig {
        n_points,
        depth_range: [4.0, 10.0],
        rotation_max_deg: 15.0,
        baseline_range: [1.0, 2.0],
        camera: camera(),
        seed,
    }
}

fn mcd_cfg() -> McdConfig {
    McdConfig::new(DiffusionSchedule::default(), [0.2, 0.9], [0.02, 0.7], 0).unwrap()
}

fn main() {
    let what = std::env::args().nth(1).unwrap_or_default();
    if what == "lossprofile" {
        loss_profile();
        return;
    }
    train_dynamics();
}

// E[pose loss | number of diffused members in the minimal set].
fn loss_profile() {
    let cfg = mcd_cfg();
    let mut sums = vec![0.0f64; 9];
    let mut counts = vec![0usize; 9];
    let mut rng = DetRng::new(1);
    for seed in 0..300u64 {
        let scene = generate_scene(&scene_config(seed, 256)).unwrap();
        let mut srng = DetRng::stream(7, seed);
        let d = mcd_sample(&scene.gt_matches, &cfg, &scene.cam1, &scene.cam2, &mut srng);
        let normalized: Vec<Correspondence> = d
            .set
            .matches
            .iter()
            .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
            .collect();
        let w = vec![1.0; normalized.len()];
        for _ in 0..40 {
            let idx = sample_minimal_set(&w, 8, &mut rng).unwrap();
            let n_out = idx.iter().filter(|&&i| !d.set.labels[i]).count();
            let subset: Vec<Correspondence> = idx.iter().map(|&i| normalized[i]).collect();
            let loss = match eight_point(&subset).and_then(|e| decompose_essential(&e, &subset))
            {
                Ok(pose) => pose_error_deg(&pose, &scene.pose),
                Err(_) => 180.0,
            };
            sums[n_out] += loss;
            counts[n_out] += 1;
        }
    }
    for k in 0..9 {
        if counts[k] > 0 {
            println!(
                "outliers {k}: mean loss {:.2} (n={})",
                sums[k] / counts[k] as f64,
                counts[k]
            );
        }
    }
}

fn train_dynamics() {
    let n_scenes = 200usize;
    let cfg_mcd = mcd_cfg();
    // Pre-generate the scene pool once; stream cycles epochs over it with
    // fresh diffusion draws per pass.
    let scenes: Vec<_> = (0..n_scenes)
        .map(|i| generate_scene(&scene_config(i as u64, 256)).unwrap())
        .collect();

    let dims_variants: [&[usize]; 2] = [&[4, 64, 64, 1], &[4, 32, 1]];
    for &(lr, k, h, epochs, dims_idx) in &[
        (0.003, 8u32, 4u32, 100u32, 0usize),
        (0.005, 8, 4, 100, 0),
        (0.005, 8, 4, 100, 1),
        (0.01, 8, 4, 100, 1),
    ] {
        let model = SamplerModel::init(dims_variants[dims_idx], 7).unwrap();
        let tc = TrainConfig {
            epochs,
            scenes_per_epoch: n_scenes as u32,
            k_samples: k,
            mc_draws: h,
            learning_rate: lr,
            lr_decay: 0.995,
            baseline: Baseline::Mean,
            seed: 3,
        };
        let scenes2 = scenes.clone();
        let cfg2 = cfg_mcd.clone();
        let stream = (0..(epochs as usize * n_scenes)).map(move |i| {
            let scene = &scenes2[i % n_scenes];
            let mut rng = DetRng::stream(1000, i as u64);
            let d = mcd_sample(&scene.gt_matches, &cfg2, &scene.cam1, &scene.cam2, &mut rng);
            TrainScene {
                matches: d.set.matches,
                cam1: scene.cam1,
                cam2: scene.cam2,
                gt_pose: scene.pose.clone(),
            }
        });
        let t0 = std::time::Instant::now();
        let (trained, log) = train(&model, stream, &tc).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        let first = &log[0];
        let mid = &log[log.len() / 2];
        let last = log.last().unwrap();
        println!(
            "lr={lr} K={k} H={h} dims#{dims_idx}: loss {:.1} -> {:.1} -> {:.1}, grad {:.2} -> {:.2}, {secs:.1}s",
            first.mean_loss, mid.mean_loss, last.mean_loss, first.grad_norm, last.grad_norm
        );

        // Label-separation diagnostic on held-out scenes.
        let (mut wi, mut wo) = (0.0, 0.0);
        let mut n_checked = 0;
        for seed in 5000..5020u64 {
            let scene = generate_scene(&scene_config(seed, 256)).unwrap();
            let mut rng = DetRng::stream(2000, seed);
            let d = mcd_sample(&scene.gt_matches, &cfg_mcd, &scene.cam1, &scene.cam2, &mut rng);
            let inputs: Vec<Correspondence> = d
                .set
                .matches
                .iter()
                .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
                .collect();
            let w = weights_from_logits(&forward(&trained, &inputs).unwrap());
            let (mut a, mut na, mut b, mut nb) = (0.0, 0, 0.0, 0);
            for (weight, &label) in w.iter().zip(&d.set.labels) {
                if label {
                    a += weight;
                    na += 1;
                } else {
                    b += weight;
                    nb += 1;
                }
            }
            if na > 0 && nb > 0 {
                wi += a / na as f64;
                wo += b / nb as f64;
                n_checked += 1;
            }
        }
        println!(
            "    held-out mean weight: inliers {:.4} outliers {:.4} (x{:.2}, scenes {n_checked})",
            wi / n_checked as f64,
            wo / n_checked as f64,
            (wi / n_checked as f64) / (wo / n_checked as f64).max(1e-12),
        );
    }
}
