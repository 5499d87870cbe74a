//! Per-scene evaluation reports: CSV with an AUC footer plus a
//! human-readable table.

use std::path::Path;

use crate::error::{CliError, Result};

pub const AUC_THRESHOLDS_DEG: [f64; 3] = [5.0, 10.0, 20.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneEval {
    pub scene_id: usize,
    pub rot_err_deg: f64,
    pub trans_err_deg: f64,
    pub pose_err_deg: f64,
    pub iterations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<SceneEval>,
    /// AUC at 5, 10, 20 degrees.
    pub aucs: [f64; 3],
    pub failures: usize,
}

impl Report {
    pub fn pose_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.pose_err_deg).collect()
    }
}

pub fn write_report_csv(path: &Path, report: &Report) -> Result<()> {
    let mut out = String::from("scene_id,rot_err_deg,trans_err_deg,pose_err_deg,iterations\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scene_id, r.rot_err_deg, r.trans_err_deg, r.pose_err_deg, r.iterations
        ));
    }
    out.push_str(&format!("# auc5,{}\n", report.aucs[0]));
    out.push_str(&format!("# auc10,{}\n", report.aucs[1]));
    out.push_str(&format!("# auc20,{}\n", report.aucs[2]));
    out.push_str(&format!("# failures,{}\n", report.failures));
    std::fs::write(path, out)
        .map_err(|e| CliError::data(format!("cannot write {path:?}: {e}")))?;
    Ok(())
}

pub fn read_report_csv(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot open {path:?}: {e}")))?;
    let mut rows = Vec::new();
    let mut aucs = [f64::NAN; 3];
    let mut failures = 0usize;
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "scene_id,rot_err_deg,trans_err_deg,pose_err_deg,iterations" {
                return Err(CliError::data(format!("{path:?}: unexpected CSV header")));
            }
            continue;
        }
        if let Some(footer) = line.strip_prefix("# ") {
            let (key, value) = footer
                .split_once(',')
                .ok_or_else(|| CliError::data(format!("{path:?}: bad footer line {line:?}")))?;
            match key {
                "auc5" => aucs[0] = value.parse().map_err(|_| bad_number(path, line))?,
                "auc10" => aucs[1] = value.parse().map_err(|_| bad_number(path, line))?,
                "auc20" => aucs[2] = value.parse().map_err(|_| bad_number(path, line))?,
                "failures" => {
                    failures = value.parse().map_err(|_| bad_number(path, line))?
                }
                _ => return Err(CliError::data(format!("{path:?}: unknown footer {key:?}"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::data(format!("{path:?}: bad row {line:?}")));
        }
        rows.push(SceneEval {
            scene_id: fields[0].parse().map_err(|_| bad_number(path, line))?,
            rot_err_deg: fields[1].parse().map_err(|_| bad_number(path, line))?,
            trans_err_deg: fields[2].parse().map_err(|_| bad_number(path, line))?,
            pose_err_deg: fields[3].parse().map_err(|_| bad_number(path, line))?,
            iterations: fields[4].parse().map_err(|_| bad_number(path, line))?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{path:?}: report has no rows")));
    }
    if aucs.iter().any(|a| a.is_nan()) {
        return Err(CliError::data(format!("{path:?}: report is missing AUC footer")));
    }
    Ok(Report { rows, aucs, failures })
}

fn bad_number(path: &Path, line: &str) -> CliError {
    CliError::data(format!("{path:?}: cannot parse number in {line:?}"))
}

/// Console summary table for one evaluation.
pub fn render_table(name: &str, report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{name}: {} scenes, {} failures\n",
        report.rows.len(),
        report.failures
    ));
    out.push_str("  AUC @5      @10     @20\n");
    out.push_str(&format!(
        "      {:<7.4} {:<7.4} {:<7.4}\n",
        report.aucs[0], report.aucs[1], report.aucs[2]
    ));
    out
}
