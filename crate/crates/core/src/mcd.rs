//! Monte Carlo diffusion of ground-truth correspondences.
//!
//! Ground-truth matches are split by a random ratio; the selected subset
//! is pushed through the forward diffusion closed form
//! `c_t = sqrt(abar_t) c_0 + sqrt(1 - abar_t) * eps * s * max(W, H)`
//! at a per-match random timestep, out-of-bounds results are uniformly
//! resampled, and the noised subset is unioned with the untouched
//! remainder. Randomizing (r, s, t) per draw plus the uniform resampling
//! makes every emitted set one Monte Carlo draw from a broad family of
//! correspondence distributions.

use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::Camera;
use crate::matchset::{Correspondence, MatchSet};
use crate::rng::DetRng;
use crate::synth::ScenePair;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McdError {
    #[error("invalid diffusion schedule: {0}")]
    InvalidSchedule(&'static str),
    #[error("invalid diffusion config: {0}")]
    InvalidConfig(&'static str),
    #[error("timestep {t} outside schedule range 0..={max}")]
    TimestepOutOfRange { t: u32, max: u32 },
}

/// Linear noise-rate schedule with its cumulative-product table.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSchedule {
    pub beta_start: f64,
    pub beta_end: f64,
    pub timesteps: u32,
    /// `abar[t] = prod_{s=1..t} (1 - beta_s)`, `abar[0] = 1`.
    alpha_bar: Vec<f64>,
}

/// Exact product of two f64 via Dekker splitting (no FMA dependence).
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    const SPLIT: f64 = 134_217_729.0; // 2^27 + 1
    let p = a * b;
    let (ah, al) = {
        let c = SPLIT * a;
        let h = c - (c - a);
        (h, a - h)
    };
    let (bh, bl) = {
        let c = SPLIT * b;
        let h = c - (c - b);
        (h, b - h)
    };
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

impl DiffusionSchedule {
    pub fn new(beta_start: f64, beta_end: f64, timesteps: u32) -> Result<Self, McdError> {
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(McdError::InvalidSchedule("need 0 < beta_start <= beta_end < 1"));
        }
        if timesteps == 0 {
            return Err(McdError::InvalidSchedule("timesteps must be positive"));
        }
        // The cumulative product is accumulated in double-double precision
        // and rounded per entry, so the stored table carries no sequential
        // rounding drift.
        let mut alpha_bar = Vec::with_capacity(timesteps as usize + 1);
        alpha_bar.push(1.0);
        let (mut hi, mut lo) = (1.0f64, 0.0f64);
        for t in 1..=timesteps {
            let factor =
                1.0 - (beta_start + (t as f64 / timesteps as f64) * (beta_end - beta_start));
            let (p, e) = two_prod(hi, factor);
            let e = e + lo * factor;
            hi = p + e;
            lo = e - (hi - p);
            alpha_bar.push(hi + lo);
        }
        Ok(Self { beta_start, beta_end, timesteps, alpha_bar })
    }

    /// Noise rate at `t` on the linear schedule
    /// `beta_t = beta_start + (t/T)(beta_end - beta_start)`.
    pub fn beta_at(&self, t: u32) -> Result<f64, McdError> {
        if t > self.timesteps {
            return Err(McdError::TimestepOutOfRange { t, max: self.timesteps });
        }
        Ok(self.beta_start
            + (t as f64 / self.timesteps as f64) * (self.beta_end - self.beta_start))
    }

    /// `prod_{s=1..t} (1 - beta_s)`; 1 at `t = 0`.
    pub fn alpha_bar_at(&self, t: u32) -> Result<f64, McdError> {
        self.alpha_bar
            .get(t as usize)
            .copied()
            .ok_or(McdError::TimestepOutOfRange { t, max: self.timesteps })
    }
}

impl Default for DiffusionSchedule {
    /// The shipped defaults: `beta_start = 0.0005`, `beta_end = 0.0025`,
    /// `T = 500`.
    fn default() -> Self {
        Self::new(5e-4, 25e-4, 500).expect("default schedule is valid")
    }
}

/// Full diffusion configuration: schedule plus the sampling ranges for
/// the per-draw ratio and noise scale.
#[derive(Clone, Debug, PartialEq)]
pub struct McdConfig {
    pub schedule: DiffusionSchedule,
    /// `[r_min, r_max]` within `[0, 1]`.
    pub r_range: [f64; 2],
    /// `[s_min, s_max]`, positive.
    pub s_range: [f64; 2],
    pub seed: u64,
}

impl McdConfig {
    pub fn new(
        schedule: DiffusionSchedule,
        r_range: [f64; 2],
        s_range: [f64; 2],
        seed: u64,
    ) -> Result<Self, McdError> {
        if !(0.0 <= r_range[0] && r_range[0] <= r_range[1] && r_range[1] <= 1.0) {
            return Err(McdError::InvalidConfig("need 0 <= r_min <= r_max <= 1"));
        }
        if !(s_range[0] > 0.0 && s_range[0] <= s_range[1]) {
            return Err(McdError::InvalidConfig("need 0 < s_min <= s_max"));
        }
        Ok(Self { schedule, r_range, s_range, seed })
    }
}

/// Where each output match of a diffused set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchOrigin {
    /// Untouched ground truth (the inlier subset).
    Kept,
    /// Diffused at this timestep and still in bounds.
    Diffused { t: u32 },
    /// Diffused at this timestep, left the image, uniformly regenerated.
    Resampled { t: u32 },
}

impl MatchOrigin {
    pub fn timestep(&self) -> Option<u32> {
        match self {
            MatchOrigin::Kept => None,
            MatchOrigin::Diffused { t } | MatchOrigin::Resampled { t } => Some(*t),
        }
    }

    pub fn is_kept(&self) -> bool {
        matches!(self, MatchOrigin::Kept)
    }
}

/// One Monte Carlo draw: the diffused match set with labels (inlier means
/// kept), per-match provenance, and the realized ratio / noise scale.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusedSet {
    pub set: MatchSet,
    pub provenance: Vec<MatchOrigin>,
    /// Realized diffusion ratio `round(r_draw * N) / N`.
    pub sampled_r: f64,
    /// The drawn noise scale.
    pub sampled_s: f64,
}

impl DiffusedSet {
    /// Check the structural invariants: cardinality, label/origin
    /// agreement, and coordinate bounds.
    pub fn validate(&self, n_gt: usize, w1: f64, h1: f64, w2: f64, h2: f64) -> bool {
        self.set.len() == n_gt
            && self.set.len() == self.provenance.len()
            && self
                .set
                .labels
                .iter()
                .zip(&self.provenance)
                .all(|(&label, origin)| label == origin.is_kept())
            && self
                .set
                .matches
                .iter()
                .all(|c| c.in_bounds(w1, h1, w2, h2))
    }
}

/// Forward-diffuse one match: 4 i.i.d. standard normals scaled by
/// `s * max(w, h)`, combined with the closed form at timestep `t`. The
/// output is intentionally not bounds-checked; validity is restored
/// downstream by [`resample_invalid`].
pub fn diffuse_match(
    c0: &Correspondence,
    schedule: &DiffusionSchedule,
    t: u32,
    noise_scale: f64,
    w: f64,
    h: f64,
    rng: &mut DetRng,
) -> Result<Correspondence, McdError> {
    let abar = schedule.alpha_bar_at(t)?;
    let signal = abar.sqrt();
    let noise = (1.0 - abar).sqrt() * noise_scale * w.max(h);
    let mut out = c0.to_array();
    for v in out.iter_mut() {
        *v = signal * *v + noise * rng.normal();
    }
    Ok(Correspondence::from_array(out))
}

/// Partition `0..n` into a uniformly random subset of size
/// `round(r * n)` (the diffusion side) and its complement (the kept
/// side). Both index lists are ascending.
pub fn split_gt(n: usize, r: f64, rng: &mut DetRng) -> (Vec<usize>, Vec<usize>) {
    debug_assert!((0.0..=1.0).contains(&r));
    let k = ((r * n as f64).round() as usize).min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    rng.partial_shuffle(&mut indices, k);
    let mut diffuse: Vec<usize> = indices[..k].to_vec();
    let mut keep: Vec<usize> = indices[k..].to_vec();
    diffuse.sort_unstable();
    keep.sort_unstable();
    (diffuse, keep)
}

/// Return the match unchanged when all four coordinates are in bounds;
/// otherwise draw a fully uniform replacement
/// `x ~ U(0, W1), y ~ U(0, H1), x' ~ U(0, W2), y' ~ U(0, H2)`.
pub fn resample_invalid(
    c: &Correspondence,
    w1: f64,
    h1: f64,
    w2: f64,
    h2: f64,
    rng: &mut DetRng,
) -> Correspondence {
    if c.in_bounds(w1, h1, w2, h2) {
        *c
    } else {
        Correspondence::new(
            rng.uniform(0.0, w1),
            rng.uniform(0.0, h1),
            rng.uniform(0.0, w2),
            rng.uniform(0.0, h2),
        )
    }
}

/// One Monte Carlo diffusion draw over a ground-truth match set.
///
/// Stage order (each stage consumes the RNG in sequence): draw `r`,
/// split; draw `s`; per selected match an independent timestep
/// `t ~ U{1..T}` and the diffusion noise; then a validity pass replacing
/// out-of-bounds matches with uniform ones. Output positions mirror the
/// input (kept matches stay at their original index), so cardinality is
/// preserved by construction.
pub fn mcd_sample(
    gt: &MatchSet,
    cfg: &McdConfig,
    cam1: &Camera,
    cam2: &Camera,
    rng: &mut DetRng,
) -> DiffusedSet {
    let n = gt.len();
    let (w1, h1, w2, h2) = (cam1.width, cam1.height, cam2.width, cam2.height);
    // One scalar scale per pair, symmetric in the two images.
    let (wmax, hmax) = (w1.max(w2), h1.max(h2));

    let r_draw = rng.uniform(cfg.r_range[0], cfg.r_range[1]);
    let (diffuse_idx, _keep_idx) = split_gt(n, r_draw, rng);
    let s_draw = rng.uniform(cfg.s_range[0], cfg.s_range[1]);

    let mut matches = gt.matches.clone();
    let mut provenance = alloc::vec![MatchOrigin::Kept; n];

    let t_max = cfg.schedule.timesteps as u64;
    for &i in &diffuse_idx {
        let t = 1 + rng.uniform_index(t_max) as u32;
        matches[i] = diffuse_match(&gt.matches[i], &cfg.schedule, t, s_draw, wmax, hmax, rng)
            .expect("timestep drawn within schedule range");
        provenance[i] = MatchOrigin::Diffused { t };
    }
    for &i in &diffuse_idx {
        if !matches[i].in_bounds(w1, h1, w2, h2) {
            matches[i] = resample_invalid(&matches[i], w1, h1, w2, h2, rng);
            let t = provenance[i].timestep().unwrap();
            provenance[i] = MatchOrigin::Resampled { t };
        }
    }

    let labels: Vec<bool> = provenance.iter().map(MatchOrigin::is_kept).collect();
    let realized_r = diffuse_idx.len() as f64 / n.max(1) as f64;

    DiffusedSet {
        set: MatchSet::new(matches, labels),
        provenance,
        sampled_r: realized_r,
        sampled_s: s_draw,
    }
}

/// Diffuse a stream of scenes, one independent RNG stream per scene
/// (derived from the master seed and the scene index), so draws are
/// reproducible regardless of evaluation order.
pub fn mcd_stream<I>(
    scenes: I,
    cfg: McdConfig,
    master_seed: u64,
) -> impl Iterator<Item = (ScenePair, DiffusedSet)>
where
    I: Iterator<Item = ScenePair>,
{
    scenes.enumerate().map(move |(index, scene)| {
        let mut rng = DetRng::stream(master_seed, index as u64);
        let diffused = mcd_sample(&scene.gt_matches, &cfg, &scene.cam1, &scene.cam2, &mut rng);
        (scene, diffused)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_scene, SceneConfig};
    use alloc::vec::Vec;

    fn camera() -> Camera {
        Camera::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0).unwrap()
    }

    fn default_cfg(seed: u64) -> McdConfig {
        McdConfig::new(DiffusionSchedule::default(), [0.2, 0.9], [0.02, 0.7], seed).unwrap()
    }

    fn small_scene(seed: u64, n_points: usize) -> ScenePair {
        generate_scene(&SceneConfig {
            n_points,
            depth_range: [4.0, 10.0],
            rotation_max_deg: 15.0,
            baseline_range: [0.15, 0.4],
            camera: camera(),
            seed,
        })
        .unwrap()
    }

    #[test]
    fn beta_endpoints_and_midpoint() {
        let s = DiffusionSchedule::default();
        assert_eq!(s.beta_at(0).unwrap(), 0.0005);
        assert_eq!(s.beta_at(500).unwrap(), 0.0025);
        assert!((s.beta_at(250).unwrap() - 0.0015).abs() < 1e-18);
        assert_eq!(
            s.beta_at(501),
            Err(McdError::TimestepOutOfRange { t: 501, max: 500 })
        );
    }

    #[test]
    fn schedule_validation() {
        assert!(DiffusionSchedule::new(0.0, 0.1, 10).is_err());
        assert!(DiffusionSchedule::new(0.2, 0.1, 10).is_err());
        assert!(DiffusionSchedule::new(0.1, 1.0, 10).is_err());
        assert!(DiffusionSchedule::new(0.1, 0.2, 0).is_err());
    }

    #[test]
    fn alpha_bar_boundary_values() {
        let s = DiffusionSchedule::default();
        assert_eq!(s.alpha_bar_at(0).unwrap(), 1.0);
        let beta1 = s.beta_at(1).unwrap();
        assert_eq!(s.alpha_bar_at(1).unwrap(), 1.0 - beta1);
        assert!(s.alpha_bar_at(501).is_err());
    }

    #[test]
    fn alpha_bar_strictly_decreasing_in_unit_interval() {
        let s = DiffusionSchedule::default();
        let mut prev = s.alpha_bar_at(0).unwrap();
        for t in 1..=500 {
            let a = s.alpha_bar_at(t).unwrap();
            assert!(a < prev && a > 0.0, "t={t}");
            prev = a;
        }
    }

    #[test]
    fn alpha_bar_matches_exact_rational_product() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use num_traits::{FromPrimitive, One, ToPrimitive};

        let s = DiffusionSchedule::default();
        let mut product = BigRational::one();
        for t in 1..=500u32 {
            let factor = 1.0 - s.beta_at(t).unwrap();
            product *= BigRational::from_f64(factor).unwrap();
            let exact = product.to_f64().unwrap();
            let table = s.alpha_bar_at(t).unwrap();
            assert!(
                (table - exact).abs() < 1e-12,
                "t={t}: table {table} vs exact {exact}"
            );
        }
        // Keep BigInt in the dependency graph explicit.
        let _ = BigInt::one();
    }

    #[test]
    fn diffuse_at_t0_is_identity() {
        let s = DiffusionSchedule::default();
        let c0 = Correspondence::new(100.0, 200.0, 300.0, 400.0);
        let mut rng = DetRng::new(1);
        let out = diffuse_match(&c0, &s, 0, 0.5, 640.0, 480.0, &mut rng).unwrap();
        assert_eq!(out, c0);
    }

    #[test]
    fn diffuse_matches_scalar_oracle() {
        let s = DiffusionSchedule::default();
        let c0 = Correspondence::new(100.0, 200.0, 300.0, 400.0);
        let (t, scale, w, h) = (250u32, 0.1, 640.0, 640.0);

        let mut rng = DetRng::new(77);
        let out = diffuse_match(&c0, &s, t, scale, w, h, &mut rng).unwrap();

        // Same draws replayed through plain scalar arithmetic.
        let mut replay = DetRng::new(77);
        let eps: Vec<f64> = (0..4).map(|_| replay.normal()).collect();
        let abar = s.alpha_bar_at(t).unwrap();
        let expect: Vec<f64> = c0
            .to_array()
            .iter()
            .zip(&eps)
            .map(|(v, e)| abar.sqrt() * v + (1.0 - abar).sqrt() * e * scale * 640.0)
            .collect();
        for (a, b) in out.to_array().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn diffuse_moments_match_closed_form() {
        let s = DiffusionSchedule::default();
        let c0 = Correspondence::new(100.0, 200.0, 300.0, 400.0);
        let (scale, w, h) = (0.1, 640.0, 640.0);
        let n = 100_000u32;

        for &t in &[1u32, 50, 500] {
            let abar = s.alpha_bar_at(t).unwrap();
            let expect_std = (1.0 - abar).sqrt() * scale * 640.0;
            let mut rng = DetRng::new(1000 + t as u64);
            let mut sums = [0.0f64; 4];
            let mut sums2 = [0.0f64; 4];
            for _ in 0..n {
                let out = diffuse_match(&c0, &s, t, scale, w, h, &mut rng).unwrap();
                for (k, v) in out.to_array().iter().enumerate() {
                    sums[k] += v;
                    sums2[k] += v * v;
                }
            }
            for k in 0..4 {
                let mean = sums[k] / n as f64;
                let std = (sums2[k] / n as f64 - mean * mean).sqrt();
                let expect_mean = abar.sqrt() * c0.to_array()[k];
                let mean_tol = 3.0 * expect_std / (n as f64).sqrt();
                assert!(
                    (mean - expect_mean).abs() < mean_tol,
                    "t={t} coord {k}: mean {mean} vs {expect_mean}"
                );
                assert!(
                    (std - expect_std).abs() < 0.02 * expect_std,
                    "t={t} coord {k}: std {std} vs {expect_std}"
                );
            }
        }
    }

    #[test]
    fn split_extremes_and_partition() {
        let mut rng = DetRng::new(4);
        let (a, b) = split_gt(100, 0.0, &mut rng);
        assert!(a.is_empty());
        assert_eq!(b.len(), 100);

        let (a, b) = split_gt(100, 1.0, &mut rng);
        assert_eq!(a.len(), 100);
        assert!(b.is_empty());

        let (a, b) = split_gt(1000, 0.5, &mut rng);
        assert_eq!(a.len(), 500);
        assert_eq!(b.len(), 500);
        let mut union: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
        union.sort_unstable();
        assert_eq!(union, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn resample_keeps_valid_and_replaces_invalid() {
        let mut rng = DetRng::new(5);
        let ok = Correspondence::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(resample_invalid(&ok, 640.0, 480.0, 640.0, 480.0, &mut rng), ok);

        let bad = Correspondence::new(-5.0, 2.0, 3.0, 4.0);
        let out = resample_invalid(&bad, 640.0, 480.0, 640.0, 480.0, &mut rng);
        assert!(out.in_bounds(640.0, 480.0, 640.0, 480.0));
        assert_ne!(out, bad);
    }

    #[test]
    fn resampled_coordinates_are_uniform() {
        // Kolmogorov-Smirnov against U(0, W) / U(0, H) per coordinate;
        // 1% critical value is 1.63 / sqrt(n).
        let mut rng = DetRng::new(6);
        let bad = Correspondence::new(-1.0, -1.0, -1.0, -1.0);
        let n = 100_000usize;
        let mut cols: [Vec<f64>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for _ in 0..n {
            let c = resample_invalid(&bad, 640.0, 480.0, 640.0, 480.0, &mut rng);
            for (k, v) in c.to_array().iter().enumerate() {
                cols[k].push(*v);
            }
        }
        let spans = [640.0, 480.0, 640.0, 480.0];
        let critical = 1.63 / (n as f64).sqrt();
        for (col, span) in cols.iter_mut().zip(spans) {
            col.sort_by(f64::total_cmp);
            let mut ks: f64 = 0.0;
            for (i, v) in col.iter().enumerate() {
                let cdf = v / span;
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                ks = ks.max((cdf - lo).abs()).max((hi - cdf).abs());
            }
            assert!(ks < critical, "KS statistic {ks} over critical {critical}");
        }
    }

    #[test]
    fn sample_extreme_ratios() {
        let scene = small_scene(1, 64);
        let mut cfg = default_cfg(0);

        cfg.r_range = [0.0, 0.0];
        let mut rng = DetRng::new(10);
        let out = mcd_sample(&scene.gt_matches, &cfg, &scene.cam1, &scene.cam2, &mut rng);
        assert_eq!(out.set.matches, scene.gt_matches.matches);
        assert!(out.set.labels.iter().all(|&l| l));
        assert_eq!(out.sampled_r, 0.0);

        cfg.r_range = [1.0, 1.0];
        let mut rng = DetRng::new(11);
        let out = mcd_sample(&scene.gt_matches, &cfg, &scene.cam1, &scene.cam2, &mut rng);
        assert_eq!(out.set.inlier_count(), 0);
        assert_eq!(out.sampled_r, 1.0);
    }

    #[test]
    fn sample_invariants_hold_in_bulk() {
        let scene = small_scene(2, 128);
        let cfg = default_cfg(0);
        let mut kept_total = 0usize;
        for seed in 0..500u64 {
            let mut rng = DetRng::new(seed);
            let out = mcd_sample(&scene.gt_matches, &cfg, &scene.cam1, &scene.cam2, &mut rng);
            assert!(out.validate(128, 640.0, 480.0, 640.0, 480.0));
            // Realized inlier fraction is 1 - sampled_r by cardinality.
            let diffused = (out.sampled_r * 128.0).round() as usize;
            assert_eq!(out.set.inlier_count(), 128 - diffused);
            assert!((0.2..=0.9).contains(&out.sampled_r));
            assert!((0.02..=0.7).contains(&out.sampled_s));
            kept_total += out.set.inlier_count();
        }
        // Mean kept fraction should sit near 1 - E[r] = 0.45.
        let mean_kept = kept_total as f64 / (500.0 * 128.0);
        assert!((mean_kept - 0.45).abs() < 0.03, "mean kept {mean_kept}");
    }

    #[test]
    fn sampled_r_is_uniform_on_its_range() {
        let scene = small_scene(3, 512);
        let cfg = default_cfg(0);
        let n = 10_000usize;
        let mut rs: Vec<f64> = (0..n)
            .map(|seed| {
                let mut rng = DetRng::new(seed as u64);
                mcd_sample(&scene.gt_matches, &cfg, &scene.cam1, &scene.cam2, &mut rng).sampled_r
            })
            .collect();
        rs.sort_by(f64::total_cmp);
        let critical = 1.63 / (n as f64).sqrt();
        let mut ks: f64 = 0.0;
        for (i, r) in rs.iter().enumerate() {
            let cdf = ((r - 0.2) / 0.7).clamp(0.0, 1.0);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        // Quantization of the realized ratio to 1/512 adds at most ~0.0014.
        assert!(ks < critical + 1.0 / 1024.0, "KS {ks} critical {critical}");
    }

    #[test]
    fn displacement_grows_with_timestep() {
        let s = DiffusionSchedule::default();
        let c0 = Correspondence::new(320.0, 240.0, 320.0, 240.0);
        let mut prev = -1.0;
        for step in 0..10 {
            let t = 50 * (step + 1) as u32;
            let mut rng = DetRng::new(31337 + step as u64);
            let mut mean_disp = 0.0;
            for _ in 0..10_000 {
                let c = diffuse_match(&c0, &s, t, 0.1, 640.0, 480.0, &mut rng).unwrap();
                let d = [c.x - c0.x, c.y - c0.y, c.xp - c0.xp, c.yp - c0.yp];
                mean_disp += d.iter().map(|v| v * v).sum::<f64>().sqrt();
            }
            mean_disp /= 10_000.0;
            assert!(mean_disp > prev, "t={t}: {mean_disp} <= {prev}");
            prev = mean_disp;
        }
    }

    #[test]
    fn stream_is_deterministic_and_streams_are_distinct() {
        let cfg = default_cfg(0);
        let scenes: Vec<ScenePair> = (0..8).map(|s| small_scene(s, 32)).collect();

        let a: Vec<DiffusedSet> = mcd_stream(scenes.clone().into_iter(), cfg.clone(), 99)
            .map(|(_, d)| d)
            .collect();
        let b: Vec<DiffusedSet> = mcd_stream(scenes.clone().into_iter(), cfg.clone(), 99)
            .map(|(_, d)| d)
            .collect();
        assert_eq!(a, b);

        let mut r_values: Vec<f64> = a.iter().map(|d| d.sampled_s).collect();
        r_values.sort_by(f64::total_cmp);
        r_values.dedup();
        assert_eq!(r_values.len(), 8, "stream cross-talk detected");
    }

    #[test]
    fn batch_mean_variance_decays_as_one_over_h() {
        // Monte Carlo law on a bounded per-set statistic (sampled_s,
        // uniform on [0.02, 0.7]): Var(mean of H draws) = Var/H.
        let scene = small_scene(9, 8);
        let cfg = default_cfg(0);
        let span: f64 = 0.7 - 0.02;
        let true_var = span * span / 12.0;

        let batches = 500;
        for &h in &[10usize, 100, 1000] {
            let mut batch_means = Vec::with_capacity(batches);
            for b in 0..batches {
                let scenes = core::iter::repeat_with(|| scene.clone()).take(h);
                let mean: f64 = mcd_stream(scenes, cfg.clone(), 7_000_000 + b as u64)
                    .map(|(_, d)| d.sampled_s)
                    .sum::<f64>()
                    / h as f64;
                batch_means.push(mean);
            }
            let m = batch_means.iter().sum::<f64>() / batches as f64;
            let var = batch_means.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
                / (batches - 1) as f64;
            let expected = true_var / h as f64;
            assert!(
                (var - expected).abs() < 0.2 * expected,
                "H={h}: var {var} expected {expected}"
            );
        }
    }
}
