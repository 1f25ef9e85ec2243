//! Executes an experiment config: prepares the splits, trains every restart
//! and ensemble member, persists checkpoints and score files, and derives all
//! reported metrics from the persisted score files.
//!
//! Layout under `output_dir/<config-hash>/`:
//!
//! ```text
//! config.toml  data.json  run.json  metrics.tsv
//! <restart>/   checkpoint.json  final.json  history.jsonl  scores.tsv  roc.tsv  metrics.tsv
//! ensemble/<member>/  checkpoint.json  final.json  history.jsonl  scores.tsv  holdout_scores.tsv
//! ensemble/    scores.tsv  roc_ensemble.tsv  roc_scaled_ensemble.tsv  calibration.tsv
//! ```
//!
//! `checkpoint.json` is the model selected on the holdout and the one every
//! score comes from; `final.json` is the state after the last step.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use minlgan::data::{load_tabular_cached, make_circle, make_moons, uniform_box, Normalization};
use minlgan::eval::roc;
use minlgan::score::{calibrate_from_logits, ensemble_from_logits, scaled_ensemble_from_logits, score_model, EnsembleCalibration};
use minlgan::train::{train, vae_score_rng, History, Holdout, TrainFailure};
use minlgan::{split, Checkpoint, Dataset, Label};
use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetConfig, ExperimentConfig, ToyData, ToyShape};
use crate::error::{CliError, Result};
use crate::tsv::{fmt_f64, write_atomic, write_roc, ScoreFile, Table};

pub const RECORD_FORMAT: &str = "minlgan-run/1";
pub const MODE_SINGLE: &str = "single";
pub const MODE_ENSEMBLE: &str = "ensemble";
pub const MODE_SCALED: &str = "scaled_ensemble";

/// Train, model-selection and test sets of one experiment.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Dataset,
    /// Holdout normals followed by holdout anomalies.
    pub selection: Dataset,
    pub test: Dataset,
    pub normalization: Option<Normalization>,
}

/// Feature layout needed to score new data with a finished run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub feature_names: Vec<String>,
    pub normalization: Option<Normalization>,
    pub train_rows: usize,
    pub selection_rows: usize,
    pub test_rows: usize,
}

fn toy_seed(base: u64, part: u64) -> u64 {
    base.wrapping_mul(16).wrapping_add(part)
}

fn toy_normals(t: &ToyData, n: usize, seed: u64) -> Result<Dataset> {
    Ok(match t.shape {
        ToyShape::Circle => make_circle(n, t.noise_sigma, seed)?,
        ToyShape::Moons => make_moons(n, t.noise_sigma, seed)?,
    })
}

/// Toy data is used in its raw coordinates so that manifold distances stay
/// meaningful.
pub fn prepare_toy(t: &ToyData) -> Result<Prepared> {
    let [lo, hi] = t.anomaly_box;
    let s = |k| toy_seed(t.data_seed, k);
    let train = toy_normals(t, t.n_train, s(0))?;
    let hold_n = toy_normals(t, t.n_holdout_normal, s(1))?;
    let hold_a = uniform_box(t.n_holdout_anomaly, 2, lo, hi, Label::Anomaly, s(2))?;
    let test_n = toy_normals(t, t.n_test_normal, s(3))?;
    let test_a = uniform_box(t.n_test_anomaly, 2, lo, hi, Label::Anomaly, s(4))?;
    Ok(Prepared {
        train,
        selection: hold_n.concat(&hold_a)?,
        test: test_n.concat(&test_a)?,
        normalization: None,
    })
}

pub fn prepare(cfg: &ExperimentConfig, data_root: Option<&Path>) -> Result<Prepared> {
    match &cfg.dataset {
        DatasetConfig::Toy(t) => prepare_toy(t),
        DatasetConfig::Tabular(t) => {
            let spec = t.spec(data_root);
            let cache_dir = cfg.output_dir.join(".cache");
            let ds = load_tabular_cached(&spec, &cache_dir)?;
            let splits = split(&ds, &t.split)?.with_holdout_anomalies(t.holdout_anomalies, t.split.seed)?;
            Ok(Prepared {
                selection: splits.selection_set()?,
                normalization: splits.train.normalization.clone(),
                train: splits.train,
                test: splits.test,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub seed: u64,
    pub best_holdout_auc: Option<f64>,
    pub best_step: Option<usize>,
    pub steps: usize,
    /// Relative to the run directory.
    pub checkpoint: String,
    pub test_auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub members: usize,
    pub seeds: Vec<u64>,
    pub member_test_aucs: Vec<f64>,
    pub test_auc_ensemble: f64,
    pub test_auc_scaled_ensemble: f64,
    pub degenerate_members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format: String,
    pub name: String,
    pub config_hash: String,
    pub method: minlgan::Method,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub restarts: Vec<RestartRecord>,
    pub mean_test_auc: Option<f64>,
    pub ensemble: Option<EnsembleRecord>,
    pub wall_time_secs: f64,
}

impl RunRecord {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, "run record", e))
    }

    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the machine's parallelism.
    pub workers: Option<usize>,
    pub data_root: Option<PathBuf>,
}

pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join(cfg.content_hash())
}

/// A run directory read back from disk.
#[derive(Clone, Debug)]
pub struct FinishedRun {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub data: DataInfo,
    pub record: RunRecord,
}

impl FinishedRun {
    pub fn open(dir: &Path) -> Result<Self> {
        let config = ExperimentConfig::load(&dir.join("config.toml"))?;
        let data_path = dir.join("data.json");
        let text = fs::read_to_string(&data_path).map_err(|e| CliError::io(&data_path, e))?;
        let data = serde_json::from_str(&text).map_err(|e| CliError::parse(&data_path, "data description", e))?;
        let record = RunRecord::load(&dir.join("run.json"))?;
        Ok(FinishedRun {
            dir: dir.to_path_buf(),
            config,
            data,
            record,
        })
    }

    /// Like [`FinishedRun::open`] but rejects runs that did not complete.
    pub fn open_completed(dir: &Path) -> Result<Self> {
        let run = Self::open(dir)?;
        if !run.record.is_completed() {
            return Err(CliError::InvalidArgument(format!(
                "run {} did not complete: {}",
                dir.display(),
                run.record.error.as_deref().unwrap_or("unknown error")
            )));
        }
        Ok(run)
    }

    pub fn restart_dir(&self, index: usize) -> PathBuf {
        self.dir.join(index.to_string())
    }

    pub fn member_dirs(&self) -> Vec<PathBuf> {
        let n = self.record.ensemble.as_ref().map_or(0, |e| e.members);
        (0..n).map(|j| self.dir.join("ensemble").join(j.to_string())).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Job {
    Restart(usize),
    Member(usize),
}

impl Job {
    fn dir(self) -> PathBuf {
        match self {
            Job::Restart(i) => PathBuf::from(i.to_string()),
            Job::Member(j) => Path::new("ensemble").join(j.to_string()),
        }
    }

    fn seed(self, cfg: &ExperimentConfig) -> u64 {
        match self {
            Job::Restart(i) => cfg.restart_seed(i),
            Job::Member(j) => cfg.member_seed(j),
        }
    }

    fn describe(self) -> String {
        match self {
            Job::Restart(i) => format!("restart {i}"),
            Job::Member(j) => format!("ensemble member {j}"),
        }
    }
}

struct JobResult {
    job: Job,
    seed: u64,
    best_holdout_auc: Option<f64>,
    best_step: Option<usize>,
    steps: usize,
}

fn write_history(path: &Path, history: &History) -> Result<()> {
    #[derive(Serialize)]
    #[serde(tag = "kind", rename_all = "snake_case")]
    enum Line<'a> {
        Loss { step: usize, name: &'a str, value: f64 },
        Eval { step: usize, holdout_auc: f64, best_auc: f64 },
    }
    let mut out = Vec::new();
    for r in &history.losses {
        let line = Line::Loss {
            step: r.step,
            name: &r.name,
            value: r.value,
        };
        serde_json::to_writer(&mut out, &line).expect("history serializes");
        out.push(b'\n');
    }
    for e in &history.evals {
        let line = Line::Eval {
            step: e.step,
            holdout_auc: e.holdout_auc,
            best_auc: e.best_auc,
        };
        serde_json::to_writer(&mut out, &line).expect("history serializes");
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

fn run_job(cfg: &ExperimentConfig, data: &Prepared, dir: &Path, job: Job) -> Result<JobResult> {
    let seed = job.seed(cfg);
    let tcfg = minlgan::TrainConfig { seed, ..cfg.train.clone() };
    let labels = data.selection.is_anomaly();
    let holdout = Holdout {
        features: data.selection.features.view(),
        labels: &labels,
    };
    let job_dir = dir.join(job.dir());
    log::info!("{}: training {} (seed {seed})", cfg.name, job.describe());
    let outcome = match train(cfg.method, data.train.features.view(), holdout, &tcfg) {
        Ok(o) => o,
        Err(TrainFailure { error, history }) => {
            write_history(&job_dir.join("history.jsonl"), &history)?;
            return Err(CliError::RunFailed {
                config_hash: cfg.content_hash(),
                stage: job.describe(),
                source: error,
            });
        }
    };
    write_history(&job_dir.join("history.jsonl"), &outcome.history)?;
    let ckpt: Checkpoint = outcome.state.selected_checkpoint();
    ckpt.save(&job_dir.join("checkpoint.json"))?;
    outcome.state.checkpoint().save(&job_dir.join("final.json"))?;

    let score = |x: &Dataset| -> Result<Vec<f64>> {
        let mut r = vae_score_rng(seed);
        Ok(score_model(&ckpt.model, &tcfg.noise, x.features.view(), tcfg.vae_score_samples, &mut r)?.scores)
    };
    ScoreFile::single(&data.test, score(&data.test)?).write(&job_dir.join("scores.tsv"))?;
    if let Job::Member(_) = job {
        ScoreFile::single(&data.selection, score(&data.selection)?).write(&job_dir.join("holdout_scores.tsv"))?;
    }
    let best = outcome.state.best.as_ref();
    Ok(JobResult {
        job,
        seed,
        best_holdout_auc: best.map(|b| b.holdout_auc),
        best_step: best.map(|b| b.step),
        steps: outcome.state.step,
    })
}

fn read_single(path: &Path) -> Result<(ScoreFile, Vec<f64>)> {
    let f = ScoreFile::read(path)?;
    let s = f
        .column("score")
        .ok_or_else(|| CliError::parse(path, "score file", "no score column"))?
        .to_vec();
    Ok((f, s))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "-".into())
}

const METRIC_COLUMNS: [&str; 7] = ["method", "mode", "index", "seed", "best_step", "best_holdout_auc", "test_auc"];

/// Recomputes every test metric from the score files under `dir`.
fn finalize(cfg: &ExperimentConfig, dir: &Path, results: &[JobResult]) -> Result<(Vec<RestartRecord>, Option<EnsembleRecord>)> {
    let method = cfg.method.name();
    let mut summary = Table::new(&METRIC_COLUMNS);
    let mut restarts = Vec::new();
    for r in results.iter().filter(|r| matches!(r.job, Job::Restart(_))) {
        let Job::Restart(i) = r.job else { unreachable!() };
        let rdir = dir.join(r.job.dir());
        let (file, scores) = read_single(&rdir.join("scores.tsv"))?;
        let res = roc(&scores, &file.labels)?;
        write_roc(&rdir.join("roc.tsv"), &res.points)?;
        let row = [
            method.to_string(),
            MODE_SINGLE.to_string(),
            i.to_string(),
            r.seed.to_string(),
            r.best_step.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
            opt(r.best_holdout_auc),
            fmt_f64(res.auc),
        ];
        let mut t = Table::new(&METRIC_COLUMNS);
        t.row(&row);
        t.write(&rdir.join("metrics.tsv"))?;
        summary.row(&row);
        restarts.push(RestartRecord {
            index: i,
            seed: r.seed,
            best_holdout_auc: r.best_holdout_auc,
            best_step: r.best_step,
            steps: r.steps,
            checkpoint: format!("{i}/checkpoint.json"),
            test_auc: res.auc,
        });
    }

    let members: Vec<&JobResult> = results.iter().filter(|r| matches!(r.job, Job::Member(_))).collect();
    let ensemble = if members.is_empty() {
        None
    } else {
        let edir = dir.join("ensemble");
        let mut test_logits = Vec::new();
        let mut hold_logits = Vec::new();
        let mut member_aucs = Vec::new();
        let mut test_file = None;
        for m in &members {
            let mdir = dir.join(m.job.dir());
            let (f, s) = read_single(&mdir.join("scores.tsv"))?;
            member_aucs.push(roc(&s, &f.labels)?.auc);
            test_logits.push(s.iter().map(|v| -v).collect::<Array1<f64>>());
            let (_, h) = read_single(&mdir.join("holdout_scores.tsv"))?;
            hold_logits.push(h.iter().map(|v| -v).collect::<Array1<f64>>());
            test_file.get_or_insert(f);
        }
        let test_file = test_file.expect("at least one member");
        let cal = calibrate_from_logits(&hold_logits)?;
        write_calibration(&edir.join("calibration.tsv"), &cal)?;
        let plain = ensemble_from_logits(&test_logits)?.scores;
        let scaled = scaled_ensemble_from_logits(&test_logits, &cal)?.scores;
        let combined = ScoreFile {
            columns: vec![MODE_ENSEMBLE.into(), MODE_SCALED.into()],
            scores: vec![plain, scaled],
            ..test_file
        };
        combined.write(&edir.join("scores.tsv"))?;
        // Reread so that reported numbers come from the persisted file.
        let persisted = ScoreFile::read(&edir.join("scores.tsv"))?;
        let mut aucs = [0.0; 2];
        for (k, mode) in [MODE_ENSEMBLE, MODE_SCALED].iter().enumerate() {
            let res = roc(persisted.column(mode).expect("written above"), &persisted.labels)?;
            write_roc(&edir.join(format!("roc_{mode}.tsv")), &res.points)?;
            aucs[k] = res.auc;
            summary.row(&[
                method.to_string(),
                mode.to_string(),
                "-".into(),
                cfg.seed.to_string(),
                "-".into(),
                "-".into(),
                fmt_f64(res.auc),
            ]);
        }
        Some(EnsembleRecord {
            members: members.len(),
            seeds: members.iter().map(|m| m.seed).collect(),
            member_test_aucs: member_aucs,
            test_auc_ensemble: aucs[0],
            test_auc_scaled_ensemble: aucs[1],
            degenerate_members: cal.degenerate_members(),
        })
    };
    summary.write(&dir.join("metrics.tsv"))?;
    Ok((restarts, ensemble))
}

fn write_calibration(path: &Path, cal: &EnsembleCalibration) -> Result<()> {
    let mut t = Table::new(&["member", "holdout_max_logit", "holdout_min_logit", "degenerate"]);
    for (i, r) in cal.members.iter().enumerate() {
        t.row(&[i.to_string(), fmt_f64(r.max), fmt_f64(r.min), r.is_degenerate().to_string()]);
    }
    t.write(path)
}

fn append_registry(cfg: &ExperimentConfig, record: &RunRecord) -> Result<()> {
    let path = cfg.output_dir.join("registry.jsonl");
    let mut line = serde_json::to_vec(record).expect("record serializes");
    line.push(b'\n');
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| CliError::io(&path, e))?;
    f.write_all(&line).map_err(|e| CliError::io(&path, e))
}

/// Runs the experiment and returns its record. On failure the record is
/// still written (status `failed`) together with every artifact produced so
/// far, and the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = run_dir(cfg);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_atomic(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())?;

    let mut record = RunRecord {
        format: RECORD_FORMAT.into(),
        name: cfg.name.clone(),
        config_hash: cfg.content_hash(),
        method: cfg.method,
        seed: cfg.seed,
        status: RunStatus::Failed,
        error: None,
        restarts: Vec::new(),
        mean_test_auc: None,
        ensemble: None,
        wall_time_secs: 0.0,
    };
    let outcome = execute(cfg, opts, &dir);
    record.wall_time_secs = start.elapsed().as_secs_f64();
    let failure = match outcome {
        Ok((restarts, ensemble)) => {
            record.status = RunStatus::Completed;
            record.mean_test_auc = Some(restarts.iter().map(|r| r.test_auc).sum::<f64>() / restarts.len() as f64);
            record.restarts = restarts;
            record.ensemble = ensemble;
            None
        }
        Err(e) => {
            record.error = Some(e.to_string());
            Some(e)
        }
    };
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    write_atomic(&dir.join("run.json"), json.as_bytes())?;
    append_registry(cfg, &record)?;
    match failure {
        None => Ok(record),
        Some(e) => Err(e),
    }
}

type Finalized = (Vec<RestartRecord>, Option<EnsembleRecord>);

fn execute(cfg: &ExperimentConfig, opts: &RunOptions, dir: &Path) -> Result<Finalized> {
    let data = prepare(cfg, opts.data_root.as_deref())?;
    let info = DataInfo {
        feature_names: data.train.feature_names.clone(),
        normalization: data.normalization.clone(),
        train_rows: data.train.len(),
        selection_rows: data.selection.len(),
        test_rows: data.test.len(),
    };
    write_atomic(&dir.join("data.json"), serde_json::to_string_pretty(&info).expect("serializes").as_bytes())?;
    log::info!(
        "{}: {} train, {} holdout, {} test rows, {} features",
        cfg.name,
        info.train_rows,
        info.selection_rows,
        info.test_rows,
        data.train.dim()
    );

    let jobs: Vec<Job> = (0..cfg.restarts)
        .map(Job::Restart)
        .chain((0..cfg.ensemble_n).map(Job::Member))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<JobResult>> = pool.install(|| jobs.par_iter().map(|&j| run_job(cfg, &data, dir, j)).collect());
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    finalize(cfg, dir, &results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(method: &str, ensemble: usize) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
version = 1
name = "tiny"
method = "{method}"
restarts = 2
ensemble_n = {ensemble}

[dataset]
kind = "toy"
shape = "circle"
n_train = 200
n_holdout_normal = 30
n_holdout_anomaly = 30
n_test_normal = 40
n_test_anomaly = 40

[train]
max_steps = 20
eval_every = 10
batch_size = 16

[train.architecture]
latent_dim = 4
hidden = [8, 8]
"#
        ))
        .unwrap()
    }

    #[test]
    fn run_writes_the_layout_and_metrics_come_from_score_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny("minlgan", 3);
        cfg.output_dir = dir.path().to_path_buf();
        let rec = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let rd = run_dir(&cfg);
        for f in ["config.toml", "data.json", "run.json", "metrics.tsv", "0/checkpoint.json", "1/roc.tsv"] {
            assert!(rd.join(f).exists(), "{f}");
        }
        for f in ["scores.tsv", "calibration.tsv", "roc_ensemble.tsv", "2/holdout_scores.tsv"] {
            assert!(rd.join("ensemble").join(f).exists(), "{f}");
        }
        assert_eq!(rec.restarts.len(), 2);
        assert_eq!(rec.ensemble.as_ref().unwrap().members, 3);
        assert_eq!(rec.ensemble.as_ref().unwrap().seeds, vec![1000, 1001, 1002]);

        // Deleting checkpoints does not change recomputed metrics.
        let metrics = fs::read(rd.join("metrics.tsv")).unwrap();
        fs::remove_file(rd.join("0/checkpoint.json")).unwrap();
        let results: Vec<JobResult> = rec
            .restarts
            .iter()
            .map(|r| JobResult {
                job: Job::Restart(r.index),
                seed: r.seed,
                best_holdout_auc: r.best_holdout_auc,
                best_step: r.best_step,
                steps: r.steps,
            })
            .chain(rec.ensemble.as_ref().unwrap().seeds.iter().enumerate().map(|(j, &s)| JobResult {
                job: Job::Member(j),
                seed: s,
                best_holdout_auc: None,
                best_step: None,
                steps: 0,
            }))
            .collect();
        finalize(&cfg, &rd, &results).unwrap();
        assert_eq!(metrics, fs::read(rd.join("metrics.tsv")).unwrap());
        let header = String::from_utf8(metrics).unwrap();
        assert!(header.starts_with("method\tmode\tindex\tseed\tbest_step\tbest_holdout_auc\ttest_auc\n"));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut cfg = tiny("vae", 0);
        cfg.output_dir = a.path().to_path_buf();
        run_experiment(&cfg, &RunOptions { workers: Some(2), data_root: None }).unwrap();
        let first = fs::read(run_dir(&cfg).join("metrics.tsv")).unwrap();
        cfg.output_dir = b.path().to_path_buf();
        run_experiment(&cfg, &RunOptions { workers: Some(1), data_root: None }).unwrap();
        assert_eq!(first, fs::read(run_dir(&cfg).join("metrics.tsv")).unwrap());
        assert_eq!(
            fs::read(a.path().join(cfg.content_hash()).join("0/scores.tsv")).unwrap(),
            fs::read(run_dir(&cfg).join("0/scores.tsv")).unwrap()
        );
    }

    #[test]
    fn missing_data_marks_the_run_failed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_toml(&format!(
            r#"
version = 1
name = "absent"
method = "gan"
output_dir = "{}"

[dataset]
kind = "tabular"
paths = ["no/such/file.csv"]
label_column = "c0"
normal_labels = ["1"]
anomaly_labels = "rest"
"#,
            dir.path().display()
        ))
        .unwrap();
        assert!(run_experiment(&cfg, &RunOptions::default()).is_err());
        let rec = RunRecord::load(&run_dir(&cfg).join("run.json")).unwrap();
        assert_eq!(rec.status, RunStatus::Failed);
        assert!(rec.error.unwrap().contains("file.csv"));
        assert!(dir.path().join("registry.jsonl").exists());
    }
}
