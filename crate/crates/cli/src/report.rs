//! Cross-run AUC tables with ROC, boxplot and stability figures.
//!
//! Rows are scoring methods (single models and ensembles), columns are
//! experiment names. A cell averages every completed run that contributes to
//! it; runs are identified by directory, so repeating a config and seed does
//! not add a second entry.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use minlgan::eval::boxstats;
use minlgan::Method;

use crate::error::{CliError, Result};
use crate::plots::{color, Canvas, Frame};
use crate::runner::FinishedRun;
use crate::stability::{ensemble_labels, plot_stability, StabilityReport};
use crate::tsv::{fmt_f64, read_roc, write_atomic, Parsed, ScoreFile, Table};

/// Row order of the table.
pub const ROWS: [&str; 8] = ["MinLGAN", "EMinLGAN-1", "EMinLGAN-2", "GAN", "EGAN-1", "EGAN-2", "AE", "VAE"];

fn single_row(m: Method) -> &'static str {
    match m {
        Method::Minlgan => "MinLGAN",
        Method::Gan => "GAN",
        Method::Ae => "AE",
        Method::Vae => "VAE",
    }
}

/// Every completed run directly under `root`, ordered by directory name.
pub fn collect_runs(root: &Path) -> Result<Vec<FinishedRun>> {
    let entries = fs::read_dir(root).map_err(|e| CliError::io(root, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("run.json").is_file())
        .collect();
    dirs.sort();
    let mut runs = Vec::new();
    for d in dirs {
        match FinishedRun::open(&d) {
            Ok(r) if r.record.is_completed() => runs.push(r),
            Ok(_) => log::info!("skipping failed run {}", d.display()),
            Err(e) => log::warn!("skipping unreadable run {}: {e}", d.display()),
        }
    }
    Ok(runs)
}

/// One scoring method of one run, with the files behind it.
struct Entry<'a> {
    run: &'a FinishedRun,
    row: &'static str,
    auc: f64,
    roc: PathBuf,
    scores: PathBuf,
    column: &'static str,
}

fn entries(run: &FinishedRun) -> Vec<Entry<'_>> {
    let rec = &run.record;
    let mut out = Vec::new();
    if let Some(mean) = rec.mean_test_auc {
        out.push(Entry {
            run,
            row: single_row(rec.method),
            auc: mean,
            roc: run.restart_dir(0).join("roc.tsv"),
            scores: run.restart_dir(0).join("scores.tsv"),
            column: "score",
        });
    }
    if let Some(e) = &rec.ensemble {
        let [plain, scaled] = ensemble_labels(rec.method);
        let edir = run.dir.join("ensemble");
        out.push(Entry {
            run,
            row: plain,
            auc: e.test_auc_ensemble,
            roc: edir.join("roc_ensemble.tsv"),
            scores: edir.join("scores.tsv"),
            column: "ensemble",
        });
        out.push(Entry {
            run,
            row: scaled,
            auc: e.test_auc_scaled_ensemble,
            roc: edir.join("roc_scaled_ensemble.tsv"),
            scores: edir.join("scores.tsv"),
            column: "scaled_ensemble",
        });
    }
    out
}

/// Mean AUC per (row, experiment).
#[derive(Clone, Debug, PartialEq)]
pub struct AucTable {
    pub experiments: Vec<String>,
    pub rows: Vec<String>,
    /// `cells[row][experiment]`.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl AucTable {
    pub fn get(&self, row: &str, experiment: &str) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.experiments.iter().position(|x| x == experiment)?;
        self.cells[r][c]
    }

    pub fn to_tsv(&self) -> String {
        let mut header = vec!["method".to_string()];
        header.extend(self.experiments.iter().cloned());
        let mut t = Table::new(&header);
        for (name, cells) in self.rows.iter().zip(&self.cells) {
            let mut row = vec![name.clone()];
            row.extend(cells.iter().map(|c| c.map(fmt_f64).unwrap_or_else(|| "-".into())));
            t.row(&row);
        }
        t.render()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Method |");
        for e in &self.experiments {
            let _ = write!(s, " {e} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---:|".repeat(self.experiments.len()));
        s.push('\n');
        for (name, cells) in self.rows.iter().zip(&self.cells) {
            let _ = write!(s, "| {name} |");
            for c in cells {
                match c {
                    Some(v) => {
                        let _ = write!(s, " {v:.4} |");
                    }
                    None => s.push_str(" - |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

pub fn auc_table(runs: &[FinishedRun]) -> Result<AucTable> {
    let mut sums: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    let mut experiments: Vec<String> = Vec::new();
    for run in runs {
        let name = run.config.name.as_str();
        if !experiments.iter().any(|e| e == name) {
            experiments.push(name.to_string());
        }
        for e in entries(run) {
            let cell = sums.entry((e.row, name)).or_insert((0.0, 0));
            cell.0 += e.auc;
            cell.1 += 1;
        }
    }
    if sums.is_empty() {
        return Err(CliError::InvalidArgument("no completed runs to report".into()));
    }
    experiments.sort();
    let rows: Vec<String> = ROWS
        .iter()
        .filter(|r| sums.keys().any(|(row, _)| row == *r))
        .map(|r| r.to_string())
        .collect();
    let cells = rows
        .iter()
        .map(|r| {
            experiments
                .iter()
                .map(|e| sums.get(&(r.as_str(), e.as_str())).map(|(s, n)| s / *n as f64))
                .collect()
        })
        .collect();
    Ok(AucTable { experiments, rows, cells })
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Writes the table, ROC overlays and boxplots into `dest`; returns the files
/// written.
pub fn emit_report(runs: &[FinishedRun], dest: &Path) -> Result<Vec<PathBuf>> {
    let table = auc_table(runs)?;
    let mut written = Vec::new();
    let tsv = dest.join("table.tsv");
    write_atomic(&tsv, table.to_tsv().as_bytes())?;
    let md = dest.join("table.md");
    write_atomic(&md, table.to_markdown().as_bytes())?;
    written.extend([tsv, md]);

    for exp in &table.experiments {
        let mine: Vec<&FinishedRun> = runs.iter().filter(|r| &r.config.name == exp).collect();
        let all: Vec<Entry<'_>> = mine.iter().flat_map(|r| entries(r)).collect();
        // One curve per row; the first contributing run is drawn.
        let mut drawn: Vec<&Entry<'_>> = Vec::new();
        for row in ROWS {
            if let Some(e) = all.iter().find(|e| e.row == row) {
                drawn.push(e);
            }
        }

        let stem = file_stem(exp);
        let mut canvas = Canvas::new(1, &format!("ROC, {exp}"));
        let mut panel = canvas.panel(0, Frame::unit(), "false positive rate");
        panel.polyline(&[(0.0, 0.0), (1.0, 1.0)], "#bbbbbb", true);
        let mut legend = Vec::new();
        for (i, e) in drawn.iter().enumerate() {
            match read_roc(&e.roc) {
                Ok(points) => {
                    panel.polyline(&points, color(i), false);
                    legend.push((format!("{} ({:.3})", e.row, e.auc), color(i)));
                }
                Err(err) => log::warn!("no ROC for {} in {}: {err}", e.row, e.run.dir.display()),
            }
        }
        let legend_refs: Vec<(&str, &str)> = legend.iter().map(|(l, c)| (l.as_str(), *c)).collect();
        panel.legend(&legend_refs);
        let path = dest.join(format!("roc_{stem}.svg"));
        canvas.save(&path)?;
        written.push(path);

        let mut box_rows = Table::new(&["method", "class", "label", "count", "min", "q1", "median", "q3", "max"]);
        let mut canvas = Canvas::new(drawn.len(), &format!("anomaly scores by class, {exp}"));
        for (i, e) in drawn.iter().enumerate() {
            let file = ScoreFile::read(&e.scores)?;
            let scores = file
                .column(e.column)
                .ok_or_else(|| CliError::parse(&e.scores, "score file", format!("no {} column", e.column)))?;
            let groups: Vec<String> = file
                .classes
                .iter()
                .zip(&file.labels)
                .map(|(c, &a)| format!("{c} ({})", if a { "anomaly" } else { "normal" }))
                .collect();
            let stats = boxstats(scores, &groups)?;
            for (g, s) in &stats {
                let (class, label) = g.rsplit_once(" (").expect("formatted above");
                let count = groups.iter().filter(|x| *x == g).count();
                box_rows.row(&[
                    e.row.to_string(),
                    class.to_string(),
                    label.trim_end_matches(')').to_string(),
                    count.to_string(),
                    fmt_f64(s.min),
                    fmt_f64(s.q1),
                    fmt_f64(s.median),
                    fmt_f64(s.q3),
                    fmt_f64(s.max),
                ]);
            }
            let lo = stats.iter().map(|(_, s)| s.min).fold(f64::INFINITY, f64::min);
            let hi = stats.iter().map(|(_, s)| s.max).fold(f64::NEG_INFINITY, f64::max);
            let pad = ((hi - lo) * 0.05).max(1e-9);
            let frame = Frame {
                x: [0.5, stats.len() as f64 + 0.5],
                y: [lo - pad, hi + pad],
            };
            canvas.panel(i, frame, e.row).boxes(&stats);
        }
        let path = dest.join(format!("box_{stem}.tsv"));
        box_rows.write(&path)?;
        written.push(path);
        let path = dest.join(format!("box_{stem}.svg"));
        canvas.save(&path)?;
        written.push(path);

        for run in &mine {
            let stab = run.dir.join("ensemble").join("stability.tsv");
            if stab.is_file() {
                let report = read_stability(&stab)?;
                let path = dest.join(format!("stability_{stem}_{}.svg", run.record.config_hash));
                plot_stability(&report, run.record.method, &format!("sub-ensemble AUC, {exp}")).save(&path)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn read_stability(path: &Path) -> Result<StabilityReport> {
    let p = Parsed::read(path)?;
    let col = |n: &str| p.column(n).ok_or_else(|| CliError::parse(path, "stability table", format!("no {n} column")));
    let (mode, k, subsets, mean, std) = (col("mode")?, col("k")?, col("subsets")?, col("mean_auc")?, col("std_auc")?);
    let mut rep = StabilityReport {
        plain: Vec::new(),
        scaled: Vec::new(),
    };
    for r in &p.rows {
        let point = minlgan::StabilityPoint {
            k: r[k].parse().map_err(|e| CliError::parse(path, "k", e))?,
            subsets: r[subsets].parse().map_err(|e| CliError::parse(path, "subsets", e))?,
            mean_auc: crate::tsv::parse_f64(path, &r[mean])?,
            std_auc: crate::tsv::parse_f64(path, &r[std])?,
        };
        match r[mode].as_str() {
            "ensemble" => rep.plain.push(point),
            "scaled_ensemble" => rep.scaled.push(point),
            other => return Err(CliError::parse(path, "mode", other)),
        }
    }
    Ok(rep)
}
