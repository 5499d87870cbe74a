//! JSON-lines dataset files.
//!
//! Line 1 is a header record (format version, kind, camera, full config
//! echo, master seed); every following line is one scene with its pose,
//! matches, labels, and (for diffused data) provenance and the realized
//! draw parameters. Every line parses independently; floats are written
//! in shortest round-trip decimal form, so re-reading reproduces the
//! exact bit patterns.
//!
//! Reading always validates: structural consistency, pose orthonormality,
//! coordinate bounds, and the semantic redundancies of each kind
//! (ground-truth and kept matches must satisfy the epipolar constraint,
//! styled labels must recompute identically under the header's threshold,
//! diffused label counts must agree with the realized ratio). A
//! single-field edit of any constrained field fails validation.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use mcd_core::nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use mcd_core::geometry::{essential_from_pose, normalize_match, sampson_distance, Camera, RelativePose};
use mcd_core::matchset::{Correspondence, MatchSet};
use mcd_core::mcd::{DiffusedSet, MatchOrigin};
use mcd_core::sampler::TrainScene;
use mcd_core::synth::ScenePair;

use crate::error::{CliError, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;
const EPIPOLAR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Gt,
    Styled,
    Diffused,
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetKind::Gt => write!(f, "gt"),
            DatasetKind::Styled => write!(f, "styled"),
            DatasetKind::Diffused => write!(f, "diffused"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CameraJson {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: f64,
    height: f64,
}

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    format_version: u32,
    kind: DatasetKind,
    camera: CameraJson,
    config: BTreeMap<String, String>,
    master_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct PoseJson {
    /// Rotation, row-major.
    r: Vec<f64>,
    t: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProvenanceJson {
    origin: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct SceneJson {
    scene_id: usize,
    pose: PoseJson,
    matches: Vec<[f64; 4]>,
    labels: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Vec<ProvenanceJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sampled_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sampled_s: Option<f64>,
}

/// One scene of a dataset in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneRecord {
    pub scene_id: usize,
    pub pose: RelativePose,
    pub matches: MatchSet,
    pub provenance: Option<Vec<MatchOrigin>>,
    pub sampled_r: Option<f64>,
    pub sampled_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub camera: Camera,
    pub config_echo: BTreeMap<String, String>,
    pub master_seed: u64,
    pub scenes: Vec<SceneRecord>,
}

impl Dataset {
    pub fn new(
        kind: DatasetKind,
        camera: Camera,
        config_echo: BTreeMap<String, String>,
        master_seed: u64,
    ) -> Self {
        Self { kind, camera, config_echo, master_seed, scenes: Vec::new() }
    }

    pub fn push_scene(
        &mut self,
        pose: RelativePose,
        matches: MatchSet,
        diffused: Option<&DiffusedSet>,
    ) {
        let scene_id = self.scenes.len();
        let (provenance, sampled_r, sampled_s) = match diffused {
            Some(d) => (Some(d.provenance.clone()), Some(d.sampled_r), Some(d.sampled_s)),
            None => (None, None, None),
        };
        self.scenes.push(SceneRecord {
            scene_id,
            pose,
            matches,
            provenance,
            sampled_r,
            sampled_s,
        });
    }

    /// Adapt records for the trainer: pixel matches plus the GT pose.
    pub fn train_scenes(&self) -> impl Iterator<Item = TrainScene> + '_ {
        self.scenes.iter().map(|s| TrainScene {
            matches: s.matches.matches.clone(),
            cam1: self.camera,
            cam2: self.camera,
            gt_pose: s.pose.clone(),
        })
    }

    /// Reconstruct a `ScenePair` view of a ground-truth record.
    pub fn scene_pair(&self, index: usize) -> ScenePair {
        let s = &self.scenes[index];
        ScenePair {
            cam1: self.camera,
            cam2: self.camera,
            pose: s.pose.clone(),
            gt_matches: s.matches.clone(),
        }
    }
}

fn pose_to_json(p: &RelativePose) -> PoseJson {
    PoseJson {
        r: p.rotation.transpose().as_slice().to_vec(),
        t: p.translation.as_slice().to_vec(),
    }
}

fn pose_from_json(j: &PoseJson, line: usize) -> Result<RelativePose> {
    if j.r.len() != 9 || j.t.len() != 3 {
        return Err(CliError::data(format!("line {line}: pose needs 9 + 3 numbers")));
    }
    let rotation = Matrix3::from_row_slice(&j.r);
    let translation = Vector3::new(j.t[0], j.t[1], j.t[2]);
    RelativePose::new(rotation, translation)
        .map_err(|e| CliError::data(format!("line {line}: invalid pose: {e}")))
}

fn origin_to_json(o: &MatchOrigin) -> ProvenanceJson {
    match o {
        MatchOrigin::Kept => ProvenanceJson { origin: "kept".into(), t: None },
        MatchOrigin::Diffused { t } => {
            ProvenanceJson { origin: "diffused".into(), t: Some(*t) }
        }
        MatchOrigin::Resampled { t } => {
            ProvenanceJson { origin: "resampled".into(), t: Some(*t) }
        }
    }
}

fn origin_from_json(j: &ProvenanceJson, line: usize) -> Result<MatchOrigin> {
    match (j.origin.as_str(), j.t) {
        ("kept", None) => Ok(MatchOrigin::Kept),
        ("diffused", Some(t)) => Ok(MatchOrigin::Diffused { t }),
        ("resampled", Some(t)) => Ok(MatchOrigin::Resampled { t }),
        _ => Err(CliError::data(format!(
            "line {line}: invalid provenance {:?}/{:?}",
            j.origin, j.t
        ))),
    }
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::data(format!("cannot write {path:?}: {e}")))?;
    let mut out = std::io::BufWriter::new(file);
    let header = HeaderJson {
        format_version: DATASET_FORMAT_VERSION,
        kind: ds.kind,
        camera: CameraJson {
            fx: ds.camera.fx,
            fy: ds.camera.fy,
            cx: ds.camera.cx,
            cy: ds.camera.cy,
            width: ds.camera.width,
            height: ds.camera.height,
        },
        config: ds.config_echo.clone(),
        master_seed: ds.master_seed,
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for s in &ds.scenes {
        let record = SceneJson {
            scene_id: s.scene_id,
            pose: pose_to_json(&s.pose),
            matches: s.matches.matches.iter().map(|c| c.to_array()).collect(),
            labels: s.matches.labels.iter().map(|&l| l as u8).collect(),
            provenance: s
                .provenance
                .as_ref()
                .map(|p| p.iter().map(origin_to_json).collect()),
            sampled_r: s.sampled_r,
            sampled_s: s.sampled_s,
        };
        writeln!(out, "{}", serde_json::to_string(&record).expect("record serializes"))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("cannot open {path:?}: {e}")))?;
    let mut lines = BufReader::new(file).lines();

    let header_line = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{path:?} is empty")))??;
    let header: HeaderJson = serde_json::from_str(&header_line)
        .map_err(|e| CliError::data(format!("bad header: {e}")))?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(CliError::data(format!(
            "unsupported format_version {}",
            header.format_version
        )));
    }
    let camera = Camera::new(
        header.camera.fx,
        header.camera.fy,
        header.camera.cx,
        header.camera.cy,
        header.camera.width,
        header.camera.height,
    )
    .map_err(|e| CliError::data(format!("bad camera: {e}")))?;

    let mut ds = Dataset::new(header.kind, camera, header.config, header.master_seed);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let rec: SceneJson = serde_json::from_str(&line)
            .map_err(|e| CliError::data(format!("line {lineno}: {e}")))?;
        if rec.scene_id != ds.scenes.len() {
            return Err(CliError::data(format!(
                "line {lineno}: scene_id {} out of order (expected {})",
                rec.scene_id,
                ds.scenes.len()
            )));
        }
        if rec.labels.len() != rec.matches.len() {
            return Err(CliError::data(format!(
                "line {lineno}: {} labels for {} matches",
                rec.labels.len(),
                rec.matches.len()
            )));
        }
        let pose = pose_from_json(&rec.pose, lineno)?;
        let matches: Vec<Correspondence> =
            rec.matches.iter().map(|&a| Correspondence::from_array(a)).collect();
        let labels: Vec<bool> = rec.labels.iter().map(|&b| b != 0).collect();
        let provenance = match rec.provenance {
            Some(p) => {
                if p.len() != matches.len() {
                    return Err(CliError::data(format!(
                        "line {lineno}: provenance length mismatch"
                    )));
                }
                Some(
                    p.iter()
                        .map(|j| origin_from_json(j, lineno))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => None,
        };
        ds.scenes.push(SceneRecord {
            scene_id: rec.scene_id,
            pose,
            matches: MatchSet::new(matches, labels),
            provenance,
            sampled_r: rec.sampled_r,
            sampled_s: rec.sampled_s,
        });
    }
    validate_dataset(&ds)?;
    Ok(ds)
}

/// Semantic validation beyond per-line parsing; see the module docs.
pub fn validate_dataset(ds: &Dataset) -> Result<()> {
    let cam = &ds.camera;
    let label_threshold: Option<f64> = ds
        .config_echo
        .get("ransac.threshold")
        .and_then(|v| v.parse().ok());

    for s in &ds.scenes {
        let id = s.scene_id;
        let e_gt = essential_from_pose(&s.pose);
        for (c, &label) in s.matches.matches.iter().zip(&s.matches.labels) {
            for v in c.to_array() {
                if !v.is_finite() {
                    return Err(CliError::data(format!("scene {id}: non-finite coordinate")));
                }
            }
            if !c.in_bounds(cam.width, cam.height, cam.width, cam.height) {
                return Err(CliError::data(format!("scene {id}: out-of-bounds coordinate")));
            }
            let exact = ds.kind == DatasetKind::Gt
                || (ds.kind == DatasetKind::Diffused && label);
            if exact {
                let n = normalize_match(c, cam, cam);
                let x = Vector3::new(n.x, n.y, 1.0);
                let xp = Vector3::new(n.xp, n.yp, 1.0);
                let residual = xp.dot(&(e_gt * x)).abs();
                if residual > EPIPOLAR_TOL {
                    return Err(CliError::data(format!(
                        "scene {id}: exact match violates epipolar constraint ({residual:.2e})"
                    )));
                }
            }
        }
        match ds.kind {
            DatasetKind::Gt => {
                if !s.matches.labels.iter().all(|&l| l) {
                    return Err(CliError::data(format!(
                        "scene {id}: ground-truth scene with outlier label"
                    )));
                }
                if s.provenance.is_some() || s.sampled_r.is_some() || s.sampled_s.is_some() {
                    return Err(CliError::data(format!(
                        "scene {id}: ground-truth scene with diffusion fields"
                    )));
                }
            }
            DatasetKind::Styled => {
                let threshold = label_threshold.ok_or_else(|| {
                    CliError::data("styled dataset without ransac.threshold in config echo")
                })?;
                let limit = threshold * threshold;
                for (c, &label) in s.matches.matches.iter().zip(&s.matches.labels) {
                    let d = sampson_distance(&e_gt, &normalize_match(c, cam, cam));
                    if (d < limit) != label {
                        return Err(CliError::data(format!(
                            "scene {id}: label disagrees with geometric threshold"
                        )));
                    }
                }
            }
            DatasetKind::Diffused => {
                let (Some(prov), Some(r), Some(sv)) =
                    (&s.provenance, s.sampled_r, s.sampled_s)
                else {
                    return Err(CliError::data(format!(
                        "scene {id}: diffused scene missing provenance or draw parameters"
                    )));
                };
                if !(0.0..=1.0).contains(&r) || !(sv > 0.0) {
                    return Err(CliError::data(format!(
                        "scene {id}: draw parameters out of range"
                    )));
                }
                for (o, &label) in prov.iter().zip(&s.matches.labels) {
                    if o.is_kept() != label {
                        return Err(CliError::data(format!(
                            "scene {id}: label disagrees with provenance"
                        )));
                    }
                }
                let n = s.matches.len();
                let expected_kept = n - ((r * n as f64).round() as usize).min(n);
                if s.matches.inlier_count() != expected_kept {
                    return Err(CliError::data(format!(
                        "scene {id}: inlier count {} but sampled_r {} implies {}",
                        s.matches.inlier_count(),
                        r,
                        expected_kept
                    )));
                }
            }
        }
    }
    Ok(())
}
