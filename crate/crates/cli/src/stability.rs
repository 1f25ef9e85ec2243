//! Sub-ensemble stability curves for a finished run.

use std::path::{Path, PathBuf};

use minlgan::eval::stability_curve;
use minlgan::score::calibrate_from_logits;
use minlgan::{EnsembleMode, Method, ScoreVector, StabilityPoint};
use ndarray::Array1;

use crate::error::{CliError, Result};
use crate::plots::{color, Canvas, Frame};
use crate::runner::FinishedRun;
use crate::tsv::{fmt_f64, ScoreFile, Table};

pub const DEFAULT_TRIALS: usize = 200;

/// Display names of the plain and scaled ensembles of `method`.
pub fn ensemble_labels(method: Method) -> [&'static str; 2] {
    match method {
        Method::Gan => ["EGAN-1", "EGAN-2"],
        _ => ["EMinLGAN-1", "EMinLGAN-2"],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub plain: Vec<StabilityPoint>,
    pub scaled: Vec<StabilityPoint>,
}

fn member_scores(path: &Path) -> Result<ScoreFile> {
    let f = ScoreFile::read(path)?;
    if f.column("score").is_none() {
        return Err(CliError::parse(path, "score file", "no score column"));
    }
    Ok(f)
}

/// Computes both curves from the member score files of `run`.
pub fn stability_of(run: &FinishedRun, trials: usize, seed: u64) -> Result<StabilityReport> {
    let dirs = run.member_dirs();
    if dirs.is_empty() {
        return Err(CliError::InvalidArgument(format!("run {} has no ensemble members", run.dir.display())));
    }
    let mut test = Vec::with_capacity(dirs.len());
    let mut hold_logits = Vec::with_capacity(dirs.len());
    let mut labels = None;
    for d in &dirs {
        let f = member_scores(&d.join("scores.tsv"))?;
        let s = f.column("score").expect("checked").to_vec();
        match &labels {
            None => labels = Some(f.labels.clone()),
            Some(l) if *l != f.labels => {
                return Err(CliError::parse(d.join("scores.tsv"), "score file", "member label columns disagree"))
            }
            Some(_) => {}
        }
        test.push(ScoreVector::new(run.config.method.name(), s)?);
        let h = member_scores(&d.join("holdout_scores.tsv"))?;
        hold_logits.push(h.column("score").expect("checked").iter().map(|v| -v).collect::<Array1<f64>>());
    }
    let labels = labels.expect("at least one member");
    let cal = calibrate_from_logits(&hold_logits)?;
    Ok(StabilityReport {
        plain: stability_curve(&test, &labels, EnsembleMode::Plain, None, trials, seed)?,
        scaled: stability_curve(&test, &labels, EnsembleMode::Scaled, Some(&cal), trials, seed)?,
    })
}

pub fn write_stability(report: &StabilityReport, method: Method, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut t = Table::new(&["mode", "k", "subsets", "mean_auc", "std_auc"]);
    for (mode, curve) in [("ensemble", &report.plain), ("scaled_ensemble", &report.scaled)] {
        for p in curve {
            t.row(&[
                mode.to_string(),
                p.k.to_string(),
                p.subsets.to_string(),
                fmt_f64(p.mean_auc),
                fmt_f64(p.std_auc),
            ]);
        }
    }
    let tsv = dir.join("stability.tsv");
    t.write(&tsv)?;
    let svg = dir.join("stability.svg");
    plot_stability(report, method, "AUC of random sub-ensembles").save(&svg)?;
    Ok(vec![tsv, svg])
}

pub fn plot_stability(report: &StabilityReport, method: Method, title: &str) -> Canvas {
    let n = report.plain.len().max(1) as f64;
    let [plain, scaled] = ensemble_labels(method);
    let curves = [(plain, &report.plain), (scaled, &report.scaled)];
    let lo = curves
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.mean_auc - p.std_auc))
        .fold(1.0f64, f64::min);
    let hi = curves
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.mean_auc + p.std_auc))
        .fold(0.0f64, f64::max);
    let pad = ((hi - lo) * 0.1).max(0.005);
    let mut canvas = Canvas::new(1, title);
    let mut panel = canvas.panel(
        0,
        Frame {
            x: [0.5, n + 0.5],
            y: [lo - pad, hi + pad],
        },
        "number of members",
    );
    for (i, (_, curve)) in curves.iter().enumerate() {
        let line: Vec<(f64, f64)> = curve.iter().map(|p| (p.k as f64, p.mean_auc)).collect();
        let bars: Vec<(f64, f64, f64)> = curve.iter().map(|p| (p.k as f64, p.mean_auc, p.std_auc)).collect();
        panel.polyline(&line, color(i), i == 1);
        panel.error_bars(&bars, color(i));
    }
    panel.legend(&[(curves[0].0, color(0)), (curves[1].0, color(1))]);
    canvas
}
