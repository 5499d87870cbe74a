//! Flat key-value run configuration.
//!
//! One schema covers every command: `key = value` lines in a UTF-8 file
//! (`#` comments allowed), each key also settable by a CLI flag of the
//! same dotted name (`--mcd.r_min 0.2`). Unknown keys are rejected and
//! values are type-checked on assignment. Precedence: defaults, then the
//! config file, then CLI flags.

use std::collections::BTreeMap;
use std::path::Path;

use mcd_core::estimator::RansacConfig;
use mcd_core::geometry::Camera;
use mcd_core::mcd::{DiffusionSchedule, McdConfig};
use mcd_core::rng::DetRng;
use mcd_core::sampler::{Baseline, TrainConfig};
use mcd_core::synth::{MatcherStyle, SceneConfig};

use crate::error::{CliError, Result};

/// Every settable key, in echo order.
pub const KEYS: &[&str] = &[
    "seed",
    "scenes",
    "scene.n_points",
    "scene.depth_min",
    "scene.depth_max",
    "scene.rotation_max_deg",
    "scene.baseline_min",
    "scene.baseline_max",
    "scene.fx",
    "scene.fy",
    "scene.cx",
    "scene.cy",
    "scene.width",
    "scene.height",
    "style.name",
    "style.jitter_px",
    "style.outlier_ratio",
    "style.grid_snap_px",
    "style.density",
    "mcd.beta_start",
    "mcd.beta_end",
    "mcd.timesteps",
    "mcd.r_min",
    "mcd.r_max",
    "mcd.s_min",
    "mcd.s_max",
    "ransac.threshold",
    "ransac.max_iters",
    "ransac.confidence",
    "ransac.refine",
    "train.epochs",
    "train.scenes_per_epoch",
    "train.k",
    "train.h",
    "train.learning_rate",
    "train.lr_decay",
    "train.baseline",
    "train.hidden_dims",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Number of scenes a generating command emits.
    pub scenes: usize,

    pub scene_n_points: usize,
    pub scene_depth_min: f64,
    pub scene_depth_max: f64,
    pub scene_rotation_max_deg: f64,
    pub scene_baseline_min: f64,
    pub scene_baseline_max: f64,
    pub scene_fx: f64,
    pub scene_fy: f64,
    pub scene_cx: f64,
    pub scene_cy: f64,
    pub scene_width: f64,
    pub scene_height: f64,

    pub style_name: String,
    pub style_jitter_px: Option<f64>,
    pub style_outlier_ratio: Option<f64>,
    pub style_grid_snap_px: Option<f64>,
    pub style_density: Option<usize>,

    pub mcd_beta_start: f64,
    pub mcd_beta_end: f64,
    pub mcd_timesteps: u32,
    pub mcd_r_min: f64,
    pub mcd_r_max: f64,
    pub mcd_s_min: f64,
    pub mcd_s_max: f64,

    pub ransac_threshold: f64,
    pub ransac_max_iters: u64,
    pub ransac_confidence: f64,
    pub ransac_refine: bool,

    pub train_epochs: u32,
    pub train_scenes_per_epoch: u32,
    pub train_k: u32,
    pub train_h: u32,
    pub train_learning_rate: f64,
    pub train_lr_decay: f64,
    pub train_baseline: String,
    pub train_hidden_dims: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scenes: 200,
            scene_n_points: 512,
            scene_depth_min: 4.0,
            scene_depth_max: 10.0,
            scene_rotation_max_deg: 15.0,
            scene_baseline_min: 1.0,
            scene_baseline_max: 2.0,
            scene_fx: 600.0,
            scene_fy: 600.0,
            scene_cx: 320.0,
            scene_cy: 240.0,
            scene_width: 640.0,
            scene_height: 480.0,
            style_name: "none".to_string(),
            style_jitter_px: None,
            style_outlier_ratio: None,
            style_grid_snap_px: None,
            style_density: None,
            mcd_beta_start: 5e-4,
            mcd_beta_end: 25e-4,
            mcd_timesteps: 500,
            mcd_r_min: 0.2,
            mcd_r_max: 0.9,
            mcd_s_min: 0.02,
            mcd_s_max: 0.7,
            ransac_threshold: 1e-3,
            ransac_max_iters: 1000,
            ransac_confidence: 0.999,
            ransac_refine: true,
            train_epochs: 30,
            train_scenes_per_epoch: 200,
            train_k: 8,
            train_h: 4,
            train_learning_rate: 0.005,
            train_lr_decay: 0.995,
            train_baseline: "mean".to_string(),
            train_hidden_dims: vec![64, 64],
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("invalid value {value:?} for key {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::config(format!("invalid bool {other:?} for key {key}"))),
    }
}

impl RunConfig {
    /// Assign one key from its textual value, type-checked.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "scenes" => self.scenes = parse(key, value)?,
            "scene.n_points" => self.scene_n_points = parse(key, value)?,
            "scene.depth_min" => self.scene_depth_min = parse(key, value)?,
            "scene.depth_max" => self.scene_depth_max = parse(key, value)?,
            "scene.rotation_max_deg" => self.scene_rotation_max_deg = parse(key, value)?,
            "scene.baseline_min" => self.scene_baseline_min = parse(key, value)?,
            "scene.baseline_max" => self.scene_baseline_max = parse(key, value)?,
            "scene.fx" => self.scene_fx = parse(key, value)?,
            "scene.fy" => self.scene_fy = parse(key, value)?,
            "scene.cx" => self.scene_cx = parse(key, value)?,
            "scene.cy" => self.scene_cy = parse(key, value)?,
            "scene.width" => self.scene_width = parse(key, value)?,
            "scene.height" => self.scene_height = parse(key, value)?,
            "style.name" => self.style_name = value.trim().to_string(),
            "style.jitter_px" => self.style_jitter_px = Some(parse(key, value)?),
            "style.outlier_ratio" => self.style_outlier_ratio = Some(parse(key, value)?),
            "style.grid_snap_px" => self.style_grid_snap_px = Some(parse(key, value)?),
            "style.density" => self.style_density = Some(parse(key, value)?),
            "mcd.beta_start" => self.mcd_beta_start = parse(key, value)?,
            "mcd.beta_end" => self.mcd_beta_end = parse(key, value)?,
            "mcd.timesteps" => self.mcd_timesteps = parse(key, value)?,
            "mcd.r_min" => self.mcd_r_min = parse(key, value)?,
            "mcd.r_max" => self.mcd_r_max = parse(key, value)?,
            "mcd.s_min" => self.mcd_s_min = parse(key, value)?,
            "mcd.s_max" => self.mcd_s_max = parse(key, value)?,
            "ransac.threshold" => self.ransac_threshold = parse(key, value)?,
            "ransac.max_iters" => self.ransac_max_iters = parse(key, value)?,
            "ransac.confidence" => self.ransac_confidence = parse(key, value)?,
            "ransac.refine" => self.ransac_refine = parse_bool(key, value)?,
            "train.epochs" => self.train_epochs = parse(key, value)?,
            "train.scenes_per_epoch" => self.train_scenes_per_epoch = parse(key, value)?,
            "train.k" => self.train_k = parse(key, value)?,
            "train.h" => self.train_h = parse(key, value)?,
            "train.learning_rate" => self.train_learning_rate = parse(key, value)?,
            "train.lr_decay" => self.train_lr_decay = parse(key, value)?,
            "train.baseline" => match value.trim() {
                "mean" | "none" => self.train_baseline = value.trim().to_string(),
                other => {
                    return Err(CliError::config(format!(
                        "train.baseline must be 'mean' or 'none', got {other:?}"
                    )))
                }
            },
            "train.hidden_dims" => {
                let dims: Result<Vec<usize>> = value
                    .split(',')
                    .map(|p| parse("train.hidden_dims", p))
                    .collect();
                let dims = dims?;
                if dims.is_empty() || dims.iter().any(|&d| d == 0) {
                    return Err(CliError::config("train.hidden_dims must be positive integers"));
                }
                self.train_hidden_dims = dims;
            }
            unknown => {
                return Err(CliError::config(format!("unknown config key {unknown:?}")))
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "preset".to_string())
        }
        match key {
            "seed" => self.seed.to_string(),
            "scenes" => self.scenes.to_string(),
            "scene.n_points" => self.scene_n_points.to_string(),
            "scene.depth_min" => self.scene_depth_min.to_string(),
            "scene.depth_max" => self.scene_depth_max.to_string(),
            "scene.rotation_max_deg" => self.scene_rotation_max_deg.to_string(),
            "scene.baseline_min" => self.scene_baseline_min.to_string(),
            "scene.baseline_max" => self.scene_baseline_max.to_string(),
            "scene.fx" => self.scene_fx.to_string(),
            "scene.fy" => self.scene_fy.to_string(),
            "scene.cx" => self.scene_cx.to_string(),
            "scene.cy" => self.scene_cy.to_string(),
            "scene.width" => self.scene_width.to_string(),
            "scene.height" => self.scene_height.to_string(),
            "style.name" => self.style_name.clone(),
            "style.jitter_px" => opt(&self.style_jitter_px),
            "style.outlier_ratio" => opt(&self.style_outlier_ratio),
            "style.grid_snap_px" => opt(&self.style_grid_snap_px),
            "style.density" => opt(&self.style_density),
            "mcd.beta_start" => self.mcd_beta_start.to_string(),
            "mcd.beta_end" => self.mcd_beta_end.to_string(),
            "mcd.timesteps" => self.mcd_timesteps.to_string(),
            "mcd.r_min" => self.mcd_r_min.to_string(),
            "mcd.r_max" => self.mcd_r_max.to_string(),
            "mcd.s_min" => self.mcd_s_min.to_string(),
            "mcd.s_max" => self.mcd_s_max.to_string(),
            "ransac.threshold" => self.ransac_threshold.to_string(),
            "ransac.max_iters" => self.ransac_max_iters.to_string(),
            "ransac.confidence" => self.ransac_confidence.to_string(),
            "ransac.refine" => self.ransac_refine.to_string(),
            "train.epochs" => self.train_epochs.to_string(),
            "train.scenes_per_epoch" => self.train_scenes_per_epoch.to_string(),
            "train.k" => self.train_k.to_string(),
            "train.h" => self.train_h.to_string(),
            "train.learning_rate" => self.train_learning_rate.to_string(),
            "train.lr_decay" => self.train_lr_decay.to_string(),
            "train.baseline" => self.train_baseline.clone(),
            "train.hidden_dims" => self
                .train_hidden_dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(","),
            _ => unreachable!("get called with unknown key"),
        }
    }

    /// Full config echo for file headers: key -> canonical value.
    pub fn echo(&self) -> BTreeMap<String, String> {
        KEYS.iter().map(|&k| (k.to_string(), self.get(k))).collect()
    }

    /// Parse `key = value` lines; `#` starts a comment, blank lines skip.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {path:?}: {e}")))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "{path:?}:{}: expected 'key = value', got {raw:?}",
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (key, value) in pairs {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn camera(&self) -> Result<Camera> {
        Camera::new(
            self.scene_fx,
            self.scene_fy,
            self.scene_cx,
            self.scene_cy,
            self.scene_width,
            self.scene_height,
        )
        .map_err(|e| CliError::config(e.to_string()))
    }

    /// Scene config for scene `index`, with its derived per-scene seed.
    pub fn scene_config(&self, index: usize) -> Result<SceneConfig> {
        Ok(SceneConfig {
            n_points: self.scene_n_points,
            depth_range: [self.scene_depth_min, self.scene_depth_max],
            rotation_max_deg: self.scene_rotation_max_deg,
            baseline_range: [self.scene_baseline_min, self.scene_baseline_max],
            camera: self.camera()?,
            seed: derived_seed(self.seed, 2 * index as u64),
        })
    }

    /// Per-scene style seed (independent of the geometry stream).
    pub fn style_seed(&self, index: usize) -> u64 {
        derived_seed(self.seed, 2 * index as u64 + 1)
    }

    /// Resolve the style: presets by name, every field overridable.
    pub fn style(&self) -> Result<Option<MatcherStyle>> {
        let mut style = match self.style_name.as_str() {
            "none" => return Ok(None),
            "style-H" => MatcherStyle::style_h(),
            "style-D" => MatcherStyle::style_d(),
            "custom" => MatcherStyle {
                name: "custom".to_string(),
                keypoint_jitter_px: 0.0,
                outlier_ratio: 0.0,
                grid_snap_px: 0.0,
                density: self.scene_n_points,
            },
            other => {
                return Err(CliError::config(format!(
                    "style.name must be none, style-H, style-D, or custom; got {other:?}"
                )))
            }
        };
        if let Some(v) = self.style_jitter_px {
            style.keypoint_jitter_px = v;
        }
        if let Some(v) = self.style_outlier_ratio {
            style.outlier_ratio = v;
        }
        if let Some(v) = self.style_grid_snap_px {
            style.grid_snap_px = v;
        }
        if let Some(v) = self.style_density {
            style.density = v;
        }
        Ok(Some(style))
    }

    pub fn mcd_config(&self) -> Result<McdConfig> {
        let schedule =
            DiffusionSchedule::new(self.mcd_beta_start, self.mcd_beta_end, self.mcd_timesteps)
                .map_err(|e| CliError::config(e.to_string()))?;
        McdConfig::new(
            schedule,
            [self.mcd_r_min, self.mcd_r_max],
            [self.mcd_s_min, self.mcd_s_max],
            self.seed,
        )
        .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn ransac_config(&self, seed: u64) -> RansacConfig {
        RansacConfig {
            threshold: self.ransac_threshold,
            max_iters: self.ransac_max_iters,
            confidence: self.ransac_confidence,
            min_set: 8,
            refine: self.ransac_refine,
            seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train_epochs,
            scenes_per_epoch: self.train_scenes_per_epoch,
            k_samples: self.train_k,
            mc_draws: self.train_h,
            learning_rate: self.train_learning_rate,
            lr_decay: self.train_lr_decay,
            baseline: if self.train_baseline == "none" {
                Baseline::None
            } else {
                Baseline::Mean
            },
            seed: self.seed,
        }
    }

    pub fn model_dims(&self) -> Vec<usize> {
        let mut dims = vec![4];
        dims.extend_from_slice(&self.train_hidden_dims);
        dims.push(1);
        dims
    }
}

/// Stable per-index seed stream from a master seed.
pub fn derived_seed(master: u64, index: u64) -> u64 {
    DetRng::stream(master, index).next_u64()
}
