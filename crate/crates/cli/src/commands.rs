//! Command implementations. The binary is a thin wrapper over these so
//! tests can drive every command in-process.

use std::path::{Path, PathBuf};

use mcd_core::estimator::ransac_estimate;
use mcd_core::geometry::{
    normalize_match, pose_auc, rotation_error_deg, translation_error_deg, FAILURE_POSE_ERROR_DEG,
};
use mcd_core::matchset::Correspondence;
use mcd_core::mcd::mcd_sample;
use mcd_core::rng::DetRng;
use mcd_core::sampler::{forward, train, weights_from_logits, SamplerModel, TrainScene};
use mcd_core::synth::{apply_style, generate_scene};

use crate::config::{derived_seed, RunConfig};
use crate::dataset::{read_dataset, write_dataset, Dataset, DatasetKind, SceneRecord};
use crate::error::{CliError, Result};
use crate::model_file::{read_model, write_model};
use crate::parallel::indexed_map;
use crate::report::{render_table, write_report_csv, Report, SceneEval, AUC_THRESHOLDS_DEG};
use crate::svg::{cumulative_error_svg, Series};

pub struct SynthSummary {
    pub scenes: usize,
    pub matches_per_scene: usize,
    pub kind: DatasetKind,
    pub mean_inlier_fraction: f64,
}

/// Generate scenes (optionally style-corrupted) and write a dataset.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<SynthSummary> {
    let style = cfg.style()?;
    let camera = cfg.camera()?;
    let scene_cfgs: Result<Vec<_>> = (0..cfg.scenes).map(|i| cfg.scene_config(i)).collect();
    let scene_cfgs = scene_cfgs?;

    let results = indexed_map(cfg.scenes, |i| -> Result<(SceneRecord, f64)> {
        let scene = generate_scene(&scene_cfgs[i]).map_err(map_synth_err)?;
        let matches = match &style {
            None => scene.gt_matches.clone(),
            Some(style) => {
                apply_style(&scene, style, cfg.style_seed(i), cfg.ransac_threshold)
                    .map_err(map_synth_err)?
            }
        };
        let fraction = matches.inlier_fraction();
        Ok((
            SceneRecord {
                scene_id: i,
                pose: scene.pose,
                matches,
                provenance: None,
                sampled_r: None,
                sampled_s: None,
            },
            fraction,
        ))
    });

    let kind = if style.is_some() { DatasetKind::Styled } else { DatasetKind::Gt };
    let mut ds = Dataset::new(kind, camera, cfg.echo(), cfg.seed);
    let mut fraction_sum = 0.0;
    for item in results {
        let (record, fraction) = item?;
        fraction_sum += fraction;
        ds.scenes.push(record);
    }
    write_dataset(out, &ds)?;
    Ok(SynthSummary {
        scenes: cfg.scenes,
        matches_per_scene: ds.scenes.first().map_or(0, |s| s.matches.len()),
        kind,
        mean_inlier_fraction: fraction_sum / cfg.scenes.max(1) as f64,
    })
}

pub struct DiffuseSummary {
    pub scenes: usize,
    pub mean_inlier_fraction: f64,
    pub mean_sampled_r: f64,
    pub mean_sampled_s: f64,
}

/// Monte Carlo-diffuse a ground-truth dataset.
pub fn cmd_diffuse(cfg: &RunConfig, input: &Path, out: &Path) -> Result<DiffuseSummary> {
    let source = read_dataset(input)?;
    if source.kind != DatasetKind::Gt {
        return Err(CliError::data(format!(
            "diffuse needs a ground-truth dataset, got kind {}",
            source.kind
        )));
    }
    let mcd_cfg = cfg.mcd_config()?;
    let camera = source.camera;

    let diffused = indexed_map(source.scenes.len(), |i| {
        let mut rng = DetRng::stream(mcd_cfg.seed, i as u64);
        mcd_sample(&source.scenes[i].matches, &mcd_cfg, &camera, &camera, &mut rng)
    });

    let mut ds = Dataset::new(DatasetKind::Diffused, camera, cfg.echo(), cfg.seed);
    let (mut frac, mut r_sum, mut s_sum) = (0.0, 0.0, 0.0);
    for (record, d) in source.scenes.iter().zip(diffused) {
        frac += d.set.inlier_fraction();
        r_sum += d.sampled_r;
        s_sum += d.sampled_s;
        ds.push_scene(record.pose.clone(), d.set.clone(), Some(&d));
    }
    write_dataset(out, &ds)?;
    let n = source.scenes.len().max(1) as f64;
    Ok(DiffuseSummary {
        scenes: source.scenes.len(),
        mean_inlier_fraction: frac / n,
        mean_sampled_r: r_sum / n,
        mean_sampled_s: s_sum / n,
    })
}

pub struct TrainSummary {
    pub epochs: usize,
    pub final_mean_loss: f64,
}

/// Train the scorer on a styled or diffused dataset; writes the model
/// file and a per-epoch CSV log.
pub fn cmd_train(
    cfg: &RunConfig,
    data: &Path,
    model_out: &Path,
    log_out: Option<&Path>,
) -> Result<TrainSummary> {
    let ds = read_dataset(data)?;
    if ds.kind == DatasetKind::Gt {
        return Err(CliError::data(
            "training needs a styled or diffused dataset (ground truth has no outliers to learn from)",
        ));
    }
    let tc = cfg.train_config();
    if tc.epochs > 0 && ds.scenes.len() < tc.scenes_per_epoch as usize {
        return Err(CliError::data(format!(
            "dataset has {} scenes but one epoch needs {}",
            ds.scenes.len(),
            tc.scenes_per_epoch
        )));
    }

    let init = SamplerModel::init(&cfg.model_dims(), cfg.seed)
        .map_err(|e| CliError::config(e.to_string()))?;
    // Epochs cycle over the dataset in scene order.
    let total = tc.epochs as usize * tc.scenes_per_epoch as usize;
    let scenes: Vec<TrainScene> = ds.train_scenes().collect();
    let stream = (0..total).map(|i| scenes[i % scenes.len()].clone());

    let (model, log) =
        train(&init, stream, &tc).map_err(|e| CliError::Numeric(e.to_string()))?;

    write_model(model_out, &model, cfg.seed, cfg.echo())?;

    let log_path = match log_out {
        Some(p) => p.to_path_buf(),
        None => default_log_path(model_out),
    };
    let mut csv = String::from("epoch,mean_loss,grad_norm,lr\n");
    for rec in &log {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            rec.epoch, rec.mean_loss, rec.grad_norm, rec.lr
        ));
    }
    std::fs::write(&log_path, csv)
        .map_err(|e| CliError::data(format!("cannot write {log_path:?}: {e}")))?;

    Ok(TrainSummary {
        epochs: log.len(),
        final_mean_loss: log.last().map_or(f64::NAN, |r| r.mean_loss),
    })
}

pub fn default_log_path(model_out: &Path) -> PathBuf {
    let mut name = model_out.file_stem().unwrap_or_default().to_os_string();
    name.push(".log.csv");
    model_out.with_file_name(name)
}

/// Evaluate guided (or uniform, when no model is given) RANSAC over a
/// dataset and write the per-scene report.
pub fn cmd_eval(
    cfg: &RunConfig,
    data: &Path,
    model_path: Option<&Path>,
    report_out: Option<&Path>,
) -> Result<Report> {
    let ds = read_dataset(data)?;
    let model = match model_path {
        Some(p) => Some(read_model(p)?),
        None => None,
    };
    let report = evaluate_dataset(cfg, &ds, model.as_ref())?;
    if let Some(path) = report_out {
        write_report_csv(path, &report)?;
    }
    Ok(report)
}

/// Scene-parallel evaluation of one dataset under an optional scorer.
pub fn evaluate_dataset(
    cfg: &RunConfig,
    ds: &Dataset,
    model: Option<&SamplerModel>,
) -> Result<Report> {
    if ds.scenes.is_empty() {
        return Err(CliError::data("dataset has no scenes"));
    }
    if let Some(m) = model {
        if m.layer_dims.first() != Some(&4) {
            return Err(CliError::data("model input dimension does not fit correspondences"));
        }
    }
    let camera = ds.camera;
    let rows: Result<Vec<SceneEval>> = indexed_map(ds.scenes.len(), |i| {
        let scene = &ds.scenes[i];
        let ransac_cfg = cfg.ransac_config(derived_seed(cfg.seed, scene.scene_id as u64));
        let weights = match model {
            None => None,
            Some(m) => {
                let normalized: Vec<Correspondence> = scene
                    .matches
                    .matches
                    .iter()
                    .map(|c| normalize_match(c, &camera, &camera))
                    .collect();
                let logits =
                    forward(m, &normalized).map_err(|e| CliError::Numeric(e.to_string()))?;
                Some(weights_from_logits(&logits))
            }
        };
        let outcome = ransac_estimate(
            &scene.matches.matches,
            &camera,
            &camera,
            weights.as_deref(),
            &ransac_cfg,
        );
        Ok(match outcome {
            Ok(res) => SceneEval {
                scene_id: scene.scene_id,
                rot_err_deg: rotation_error_deg(&res.pose.rotation, &scene.pose.rotation),
                trans_err_deg: translation_error_deg(
                    &res.pose.translation,
                    &scene.pose.translation,
                ),
                pose_err_deg: rotation_error_deg(&res.pose.rotation, &scene.pose.rotation)
                    .max(translation_error_deg(
                        &res.pose.translation,
                        &scene.pose.translation,
                    )),
                iterations: res.iterations_used,
            },
            Err(_) => SceneEval {
                scene_id: scene.scene_id,
                rot_err_deg: FAILURE_POSE_ERROR_DEG,
                trans_err_deg: FAILURE_POSE_ERROR_DEG,
                pose_err_deg: FAILURE_POSE_ERROR_DEG,
                iterations: 0,
            },
        })
    })
    .into_iter()
    .collect();
    let rows = rows?;

    let errors: Vec<f64> = rows.iter().map(|r| r.pose_err_deg).collect();
    let aucs = pose_auc(&errors, &AUC_THRESHOLDS_DEG)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let failures = rows.iter().filter(|r| r.pose_err_deg >= FAILURE_POSE_ERROR_DEG).count();
    Ok(Report {
        rows,
        aucs: [aucs[0], aucs[1], aucs[2]],
        failures,
    })
}

pub struct CompareCell {
    pub train_name: String,
    pub test_name: String,
    pub aucs: [f64; 3],
}

pub struct CompareSummary {
    pub cells: Vec<CompareCell>,
    pub table_text: String,
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// Cross evaluation: train one model per training source (plus the
/// uniform baseline row), evaluate each on every test source, and emit
/// the table, per-cell reports, and per-cell cumulative error curves.
pub fn cmd_compare(
    cfg: &RunConfig,
    train_sources: &[PathBuf],
    test_sources: &[PathBuf],
    out_dir: &Path,
) -> Result<CompareSummary> {
    if test_sources.is_empty() {
        return Err(CliError::config("compare needs at least one --test-data source"));
    }
    std::fs::create_dir_all(out_dir.join("models"))?;
    std::fs::create_dir_all(out_dir.join("reports"))?;
    std::fs::create_dir_all(out_dir.join("curves"))?;

    // Train (or reuse) one model per training source.
    let mut rows: Vec<(String, Option<SamplerModel>)> = vec![("uniform".to_string(), None)];
    for source in train_sources {
        let name = stem(source);
        let model_path = out_dir.join("models").join(format!("{name}.json"));
        if !model_path.exists() {
            cmd_train(cfg, source, &model_path, None)?;
        }
        rows.push((name, Some(read_model(&model_path)?)));
    }

    let mut cells = Vec::new();
    for test in test_sources {
        let test_name = stem(test);
        let ds = read_dataset(test)?;
        for (train_name, model) in &rows {
            let report = evaluate_dataset(cfg, &ds, model.as_ref())?;
            let base = format!("{train_name}__{test_name}");
            write_report_csv(&out_dir.join("reports").join(format!("{base}.csv")), &report)?;
            let svg = cumulative_error_svg(
                &[Series { name: base.clone(), errors: report.pose_errors() }],
                20.0,
            );
            std::fs::write(out_dir.join("curves").join(format!("{base}.svg")), svg)?;
            cells.push(CompareCell {
                train_name: train_name.clone(),
                test_name: test_name.clone(),
                aucs: report.aucs,
            });
        }
    }

    // Long-form CSV plus the matrix-style text table.
    let mut csv = String::from("train,test,auc5,auc10,auc20\n");
    for c in &cells {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            c.train_name, c.test_name, c.aucs[0], c.aucs[1], c.aucs[2]
        ));
    }
    std::fs::write(out_dir.join("table.csv"), &csv)?;

    let mut text = String::new();
    let test_names: Vec<String> = test_sources.iter().map(|p| stem(p)).collect();
    text.push_str(&format!("{:<16}", "training"));
    for t in &test_names {
        text.push_str(&format!("| {t}: AUC@5 @10 @20          "));
    }
    text.push('\n');
    for (train_name, _) in &rows {
        text.push_str(&format!("{train_name:<16}"));
        for t in &test_names {
            let cell = cells
                .iter()
                .find(|c| &c.train_name == train_name && &c.test_name == t)
                .expect("cell computed");
            text.push_str(&format!(
                "| {:.4} {:.4} {:.4}       ",
                cell.aucs[0], cell.aucs[1], cell.aucs[2]
            ));
        }
        text.push('\n');
    }
    std::fs::write(out_dir.join("table.txt"), &text)?;

    Ok(CompareSummary { cells, table_text: text })
}

/// Combined cumulative-error curves for one or more reports.
pub fn cmd_plot(reports: &[PathBuf], out_svg: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(CliError::config("plot needs at least one report"));
    }
    let mut series = Vec::new();
    for path in reports {
        let report = crate::report::read_report_csv(path)?;
        series.push(Series { name: stem(path), errors: report.pose_errors() });
    }
    std::fs::write(out_svg, cumulative_error_svg(&series, 20.0))?;
    Ok(())
}

fn map_synth_err(e: mcd_core::synth::SynthError) -> CliError {
    use mcd_core::synth::SynthError;
    match e {
        SynthError::SceneInfeasible => CliError::Numeric(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

/// Console summaries, shared by main.
pub fn print_synth_summary(s: &SynthSummary) {
    println!(
        "wrote {} {} scenes, {} matches/scene, mean inlier fraction {:.4}",
        s.scenes, s.kind, s.matches_per_scene, s.mean_inlier_fraction
    );
}

pub fn print_diffuse_summary(s: &DiffuseSummary) {
    println!(
        "diffused {} scenes: mean inlier fraction {:.4}, mean r {:.4}, mean s {:.4}",
        s.scenes, s.mean_inlier_fraction, s.mean_sampled_r, s.mean_sampled_s
    );
}

pub fn print_eval_report(name: &str, report: &Report) {
    print!("{}", render_table(name, report));
}
