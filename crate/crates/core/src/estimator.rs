//! RANSAC essential-matrix estimation with uniform or guided (weighted)
//! hypothesis sampling, inlier-count scoring, adaptive termination, and
//! optional least-squares refit on the final consensus set.

use alloc::vec::Vec;
use nalgebra::Matrix3;
use thiserror::Error;

use crate::geometry::{
    decompose_essential, eight_point, normalize_match, sampson_distance, Camera,
    EssentialHypothesis, RelativePose,
};
use crate::matchset::Correspondence;
use crate::rng::DetRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimatorError {
    #[error("invalid RANSAC config: {0}")]
    InvalidConfig(&'static str),
    #[error("need at least {need} matches, got {got}")]
    NotEnoughMatches { need: usize, got: usize },
    #[error("weights must be finite and nonnegative")]
    InvalidWeights,
    #[error("fewer positive weights than the minimal sample size")]
    SamplingInfeasible,
    #[error("no hypothesis could be estimated")]
    EstimationFailed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RansacConfig {
    /// Sampson inlier threshold as a first-order distance in normalized
    /// coordinates (about 1 px at f = 1000); squared before masking.
    pub threshold: f64,
    /// Hypothesis budget.
    pub max_iters: u64,
    /// Desired success probability for adaptive termination.
    pub confidence: f64,
    /// Minimal sample size; the linear essential solver needs 8.
    pub min_set: usize,
    /// Least-squares refit of the final hypothesis on its inliers.
    pub refine: bool,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            threshold: 1e-3,
            max_iters: 1000,
            confidence: 0.999,
            min_set: 8,
            refine: true,
            seed: 0,
        }
    }
}

impl RansacConfig {
    fn validate(&self) -> Result<(), EstimatorError> {
        if !(self.threshold > 0.0) {
            return Err(EstimatorError::InvalidConfig("threshold must be positive"));
        }
        if self.max_iters < 1 {
            return Err(EstimatorError::InvalidConfig("max_iters must be at least 1"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(EstimatorError::InvalidConfig("confidence must be in (0, 1)"));
        }
        if self.min_set != 8 {
            return Err(EstimatorError::InvalidConfig("min_set must be 8"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub hypothesis: EssentialHypothesis,
    pub pose: RelativePose,
    pub iterations_used: u64,
    pub inlier_ratio: f64,
}

/// Draw `m` distinct indices, each draw proportional to the remaining
/// weights (sequential renormalized sampling without replacement).
/// Uniform weights reduce exactly to uniform sampling.
pub fn sample_minimal_set(
    weights: &[f64],
    m: usize,
    rng: &mut DetRng,
) -> Result<Vec<usize>, EstimatorError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(EstimatorError::InvalidWeights);
    }
    if weights.iter().filter(|&&w| w > 0.0).count() < m {
        return Err(EstimatorError::SamplingInfeasible);
    }

    let mut taken = alloc::vec![false; weights.len()];
    let mut total: f64 = weights.iter().sum();
    let mut picked = Vec::with_capacity(m);
    for _ in 0..m {
        let u = rng.uniform(0.0, total);
        let mut acc = 0.0;
        let mut choice = None;
        for (i, &w) in weights.iter().enumerate() {
            if taken[i] || w <= 0.0 {
                continue;
            }
            acc += w;
            if u < acc {
                choice = Some(i);
                break;
            }
        }
        // Rounding can push u past the last accumulated boundary; fall
        // back to the last remaining positive-weight index.
        let i = match choice {
            Some(i) => i,
            None => weights
                .iter()
                .enumerate()
                .rev()
                .find(|(i, &w)| !taken[*i] && w > 0.0)
                .map(|(i, _)| i)
                .ok_or(EstimatorError::SamplingInfeasible)?,
        };
        taken[i] = true;
        total -= weights[i];
        picked.push(i);
    }
    Ok(picked)
}

/// Inlier mask and count of a hypothesis over normalized matches.
///
/// `threshold` is the first-order geometric distance in normalized
/// coordinates (so 1e-3 is about one pixel at a focal length of 1000);
/// since [`sampson_distance`] returns the squared error, the strict test
/// is `sampson_distance < threshold^2`.
pub fn count_inliers(
    e: &Matrix3<f64>,
    matches: &[Correspondence],
    threshold: f64,
) -> (Vec<bool>, usize) {
    let limit = threshold * threshold;
    let mask: Vec<bool> = matches
        .iter()
        .map(|c| sampson_distance(e, c) < limit)
        .collect();
    let score = mask.iter().filter(|&&b| b).count();
    (mask, score)
}

/// Standard adaptive iteration bound
/// `ceil(log(1 - p) / log(1 - w^m))` clamped to `[1, max_iters]`.
pub fn adaptive_iters(inlier_ratio: f64, m: usize, confidence: f64, max_iters: u64) -> u64 {
    if inlier_ratio >= 1.0 {
        return 1;
    }
    if inlier_ratio <= 0.0 {
        return max_iters;
    }
    let w_m = inlier_ratio.powi(m as i32);
    let denom = (1.0 - w_m).ln();
    if !(denom < 0.0) {
        // w^m underflowed to 0 or rounded 1 - w^m to 1.
        return max_iters;
    }
    let n = ((1.0 - confidence).ln() / denom).ceil();
    if !n.is_finite() || n >= max_iters as f64 {
        max_iters
    } else {
        (n as u64).max(1)
    }
}

/// RANSAC over pixel-coordinate matches: sample a minimal set (uniform
/// when `weights` is `None`), solve, score by inlier count (ties keep the
/// earlier hypothesis), shrink the iteration bound adaptively, then
/// optionally refit on the consensus set and recover the pose with a
/// cheirality vote over the final inliers. Deterministic given the
/// config.
pub fn ransac_estimate(
    matches: &[Correspondence],
    cam1: &Camera,
    cam2: &Camera,
    weights: Option<&[f64]>,
    cfg: &RansacConfig,
) -> Result<EstimationResult, EstimatorError> {
    cfg.validate()?;
    let n = matches.len();
    if n < cfg.min_set {
        return Err(EstimatorError::NotEnoughMatches { need: cfg.min_set, got: n });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(EstimatorError::InvalidConfig("weights length mismatch"));
        }
    }
    let uniform;
    let weights: &[f64] = match weights {
        Some(w) => w,
        None => {
            uniform = alloc::vec![1.0; n];
            &uniform
        }
    };
    // Feasibility is a property of the weights, not of a single draw.
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(EstimatorError::InvalidWeights);
    }
    if weights.iter().filter(|&&w| w > 0.0).count() < cfg.min_set {
        return Err(EstimatorError::SamplingInfeasible);
    }

    let normalized: Vec<Correspondence> = matches
        .iter()
        .map(|c| normalize_match(c, cam1, cam2))
        .collect();

    let mut rng = DetRng::new(cfg.seed);
    let mut best: Option<(Matrix3<f64>, Vec<bool>, usize)> = None;
    let mut bound = cfg.max_iters;
    let mut iterations = 0u64;
    let mut subset = Vec::with_capacity(cfg.min_set);

    while iterations < bound {
        iterations += 1;
        let idx = sample_minimal_set(weights, cfg.min_set, &mut rng)
            .expect("feasibility checked before the loop");
        subset.clear();
        subset.extend(idx.iter().map(|&i| normalized[i]));

        // Degenerate minimal samples just consume the iteration.
        let e = match eight_point(&subset) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let (mask, score) = count_inliers(&e, &normalized, cfg.threshold);
        let improved = match &best {
            None => true,
            Some((_, _, best_score)) => score > *best_score,
        };
        if improved {
            bound = bound.min(adaptive_iters(
                score as f64 / n as f64,
                cfg.min_set,
                cfg.confidence,
                cfg.max_iters,
            ));
            best = Some((e, mask, score));
        }
    }

    let (mut e, mut mask, mut score) = best.ok_or(EstimatorError::EstimationFailed)?;

    if cfg.refine && score >= cfg.min_set {
        let consensus: Vec<Correspondence> = normalized
            .iter()
            .zip(&mask)
            .filter_map(|(c, &keep)| keep.then_some(*c))
            .collect();
        if let Ok(refit) = eight_point(&consensus) {
            let (mask2, score2) = count_inliers(&refit, &normalized, cfg.threshold);
            // Adopt the refit only when it does not lose consensus.
            if score2 >= score {
                e = refit;
                mask = mask2;
                score = score2;
            }
        }
    }

    let inliers: Vec<Correspondence> = normalized
        .iter()
        .zip(&mask)
        .filter_map(|(c, &keep)| keep.then_some(*c))
        .collect();
    let pose = decompose_essential(&e, if inliers.is_empty() { &normalized } else { &inliers })
        .map_err(|_| EstimatorError::EstimationFailed)?;

    Ok(EstimationResult {
        hypothesis: EssentialHypothesis { essential: e, inlier_mask: mask, score },
        pose,
        iterations_used: iterations,
        inlier_ratio: score as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{essential_from_pose, pose_error_deg};
    use crate::synth::{apply_style, generate_scene, MatcherStyle, SceneConfig};
    use alloc::string::String;
    use alloc::vec;

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

    #[test]
    fn minimal_set_forced_when_n_equals_m() {
        let mut rng = DetRng::new(0);
        let w = vec![1.0; 8];
        let mut idx = sample_minimal_set(&w, 8, &mut rng).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn zero_weight_index_never_selected() {
        let mut rng = DetRng::new(1);
        let mut w = vec![1.0; 9];
        w[4] = 0.0;
        for _ in 0..10_000 {
            let idx = sample_minimal_set(&w, 8, &mut rng).unwrap();
            assert!(!idx.contains(&4));
        }
    }

    #[test]
    fn too_few_positive_weights_is_infeasible() {
        let mut rng = DetRng::new(2);
        let w = vec![1.0, 1.0, 0.0, 0.0];
        assert_eq!(
            sample_minimal_set(&w, 3, &mut rng),
            Err(EstimatorError::SamplingInfeasible)
        );
        assert_eq!(
            sample_minimal_set(&[1.0, f64::NAN], 1, &mut rng),
            Err(EstimatorError::InvalidWeights)
        );
    }

    #[test]
    fn first_draw_frequency_tracks_weights() {
        // weights (2, 1, 1, ..., 1) over N = 10: P(first draw = 0) = 2/11.
        let mut w = vec![1.0; 10];
        w[0] = 2.0;
        let mut rng = DetRng::new(3);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let idx = sample_minimal_set(&w, 1, &mut rng).unwrap();
            if idx[0] == 0 {
                hits += 1;
            }
        }
        let p = 2.0 / 11.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let freq = hits as f64 / n as f64;
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} expected {p}");
    }

    #[test]
    fn uniform_weights_match_uniform_distribution() {
        let w = vec![1.0; 10];
        let mut rng = DetRng::new(4);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            let idx = sample_minimal_set(&w, 1, &mut rng).unwrap();
            counts[idx[0]] += 1;
        }
        let p = 0.1;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() < 4.0 * sigma, "index {i}: freq {freq}");
        }
    }

    #[test]
    fn count_inliers_on_exact_set() {
        let scene = generate_scene(&scene_config(5, 64)).unwrap();
        let e = essential_from_pose(&scene.pose);
        let normalized: Vec<Correspondence> = scene
            .gt_matches
            .matches
            .iter()
            .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
            .collect();
        let (mask, score) = count_inliers(&e, &normalized, 1e-3);
        assert_eq!(score, 64);
        assert!(mask.iter().all(|&b| b));

        // Strict inequality: a zero threshold admits nothing.
        let (_, score) = count_inliers(&e, &normalized, 0.0);
        assert_eq!(score, 0);
    }

    #[test]
    fn count_inliers_with_half_outliers() {
        let style = MatcherStyle {
            name: String::from("half"),
            keypoint_jitter_px: 0.1,
            outlier_ratio: 0.5,
            grid_snap_px: 0.0,
            density: 500,
        };
        let mut fractions = Vec::new();
        for seed in 0..100u64 {
            let scene = generate_scene(&scene_config(900 + seed, 600)).unwrap();
            let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
            let e = essential_from_pose(&scene.pose);
            let normalized: Vec<Correspondence> = styled
                .matches
                .iter()
                .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
                .collect();
            let (_, score) = count_inliers(&e, &normalized, 1e-3);
            fractions.push(score as f64 / 500.0);
        }
        let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
        assert!((0.45..=0.57).contains(&mean), "mean inlier fraction {mean}");
    }

    #[test]
    fn adaptive_iteration_bounds() {
        assert_eq!(adaptive_iters(1.0, 8, 0.99, 10_000), 1);
        assert_eq!(adaptive_iters(0.0, 8, 0.99, 10_000), 10_000);
        assert_eq!(adaptive_iters(0.5, 8, 0.99, 10_000), 1177);
        assert_eq!(adaptive_iters(1e-6, 8, 0.99, 5000), 5000);
    }

    #[test]
    fn ransac_on_exact_inliers() {
        let scene = generate_scene(&scene_config(7, 64)).unwrap();
        let cfg = RansacConfig { seed: 11, ..RansacConfig::default() };
        let res = ransac_estimate(
            &scene.gt_matches.matches,
            &scene.cam1,
            &scene.cam2,
            None,
            &cfg,
        )
        .unwrap();
        assert!(pose_error_deg(&res.pose, &scene.pose) < 1e-6);
        assert!(res.iterations_used <= 3);
        assert_eq!(res.inlier_ratio, 1.0);
    }

    #[test]
    fn ransac_with_half_outliers_recovers_pose() {
        let style = MatcherStyle {
            name: String::from("half"),
            keypoint_jitter_px: 0.1,
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
        let mut ok = 0;
        for seed in 0..20u64 {
            let mut sc = scene_config(2000 + seed, 600);
            sc.baseline_range = [1.0, 2.0];
            let scene = generate_scene(&sc).unwrap();
            let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
            let res =
                ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg).unwrap();
            if pose_error_deg(&res.pose, &scene.pose) < 2.0 {
                ok += 1;
            }
        }
        assert!(ok >= 19, "only {ok}/20 scenes under 2 degrees");
    }

    #[test]
    fn oracle_weights_do_not_slow_estimation() {
        let style = MatcherStyle {
            name: String::from("half"),
            keypoint_jitter_px: 0.1,
            outlier_ratio: 0.5,
            grid_snap_px: 0.0,
            density: 400,
        };
        let mut wins = 0;
        for seed in 0..40u64 {
            let mut sc = scene_config(3000 + seed, 500);
            sc.baseline_range = [1.0, 2.0];
            let scene = generate_scene(&sc).unwrap();
            let styled = apply_style(&scene, &style, seed, 1e-3).unwrap();
            let cfg = RansacConfig {
                max_iters: 4000,
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
        }
        assert!(wins >= 38, "guided faster in only {wins}/40 runs");
    }

    #[test]
    fn result_mask_is_reproducible() {
        let scene = generate_scene(&scene_config(8, 64)).unwrap();
        let cfg = RansacConfig { seed: 3, ..RansacConfig::default() };
        let res = ransac_estimate(
            &scene.gt_matches.matches,
            &scene.cam1,
            &scene.cam2,
            None,
            &cfg,
        )
        .unwrap();
        let normalized: Vec<Correspondence> = scene
            .gt_matches
            .matches
            .iter()
            .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
            .collect();
        let (mask, score) = count_inliers(&res.hypothesis.essential, &normalized, cfg.threshold);
        assert_eq!(mask, res.hypothesis.inlier_mask);
        assert_eq!(score, res.hypothesis.score);
    }

    #[test]
    fn estimate_is_deterministic() {
        let scene = generate_scene(&scene_config(9, 80)).unwrap();
        let styled =
            apply_style(&scene, &MatcherStyle::clean(64), 17, 1e-3).unwrap();
        let cfg = RansacConfig { seed: 21, ..RansacConfig::default() };
        let a = ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg).unwrap();
        let b = ransac_estimate(&styled.matches, &scene.cam1, &scene.cam2, None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation_errors() {
        let scene = generate_scene(&scene_config(10, 16)).unwrap();
        let mut cfg = RansacConfig::default();
        cfg.threshold = 0.0;
        assert!(matches!(
            ransac_estimate(&scene.gt_matches.matches, &scene.cam1, &scene.cam2, None, &cfg),
            Err(EstimatorError::InvalidConfig(_))
        ));
        let mut cfg = RansacConfig::default();
        cfg.min_set = 5;
        assert!(ransac_estimate(
            &scene.gt_matches.matches,
            &scene.cam1,
            &scene.cam2,
            None,
            &cfg
        )
        .is_err());
        let cfg = RansacConfig::default();
        assert_eq!(
            ransac_estimate(
                &scene.gt_matches.matches[..5],
                &scene.cam1,
                &scene.cam2,
                None,
                &cfg
            ),
            Err(EstimatorError::NotEnoughMatches { need: 8, got: 5 })
        );
    }
}
