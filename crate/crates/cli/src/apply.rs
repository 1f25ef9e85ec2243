//! Scores new rows with the models of a finished run.

use std::fs;
use std::path::Path;

use minlgan::score::{ensemble_from_logits, scaled_ensemble_from_logits, calibrate_from_logits, score_model};
use minlgan::train::vae_score_rng;
use minlgan::Checkpoint;
use ndarray::{Array1, Array2};

use crate::error::{CliError, Result};
use crate::runner::FinishedRun;
use crate::tsv::{fmt_f64, Table};

/// Reads the run's feature columns, by name, from a headered file.
///
/// Tab, comma and semicolon delimiters are recognised from the header line.
/// Extra columns are ignored. Values are in the units of the source data;
/// the run's normalization is applied here.
pub fn read_features(run: &FinishedRun, path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| CliError::parse(path, "input", "empty file"))?;
    let delim = ['\t', ',', ';'].into_iter().find(|d| header.contains(*d)).unwrap_or('\t');
    let columns: Vec<&str> = header.split(delim).map(str::trim).collect();
    let names = &run.data.feature_names;
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            columns
                .iter()
                .position(|c| c == n)
                .ok_or_else(|| CliError::InvalidArgument(format!("{} has no column {n:?}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(delim).map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(CliError::parse(path, "input", format!("row {} has {} cells", i + 2, cells.len())));
        }
        for &j in &idx {
            let v: f64 = cells[j]
                .parse()
                .map_err(|e| CliError::parse(path, "number", format!("row {} column {}: {e}", i + 2, columns[j])))?;
            values.push(v);
        }
        rows += 1;
    }
    let x = Array2::from_shape_vec((rows, names.len()), values).expect("row widths checked");
    Ok(match &run.data.normalization {
        Some(n) => n.apply(x.view()),
        None => x,
    })
}

/// Anomaly scores of `x` (already normalized) under every restart and, when
/// present, both ensemble modes. Columns are `restart_<i>`, `ensemble`,
/// `scaled_ensemble`.
pub fn score_rows(run: &FinishedRun, x: &Array2<f64>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let noise = &run.config.train.noise;
    let samples = run.config.train.vae_score_samples;
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for r in &run.record.restarts {
        let ckpt = Checkpoint::load(&run.restart_dir(r.index).join("checkpoint.json"))?;
        let s = score_model(&ckpt.model, noise, x.view(), samples, &mut vae_score_rng(r.seed))?;
        names.push(format!("restart_{}", r.index));
        cols.push(s.scores);
    }
    let members = run.member_dirs();
    if !members.is_empty() {
        let mut logits = Vec::new();
        let mut hold = Vec::new();
        for d in &members {
            let ckpt = Checkpoint::load(&d.join("checkpoint.json"))?;
            let d_net = ckpt
                .discriminator()
                .ok_or_else(|| CliError::InvalidArgument(format!("{} holds no discriminator", d.display())))?;
            logits.push(d_net.logits(x.view())?);
            let h = crate::tsv::ScoreFile::read(&d.join("holdout_scores.tsv"))?;
            let hs = h
                .column("score")
                .ok_or_else(|| CliError::parse(d.join("holdout_scores.tsv"), "score file", "no score column"))?;
            hold.push(hs.iter().map(|v| -v).collect::<Array1<f64>>());
        }
        let cal = calibrate_from_logits(&hold)?;
        names.push("ensemble".into());
        cols.push(ensemble_from_logits(&logits)?.scores);
        names.push("scaled_ensemble".into());
        cols.push(scaled_ensemble_from_logits(&logits, &cal)?.scores);
    }
    Ok((names, cols))
}

/// Scores `input` and writes a table with a `row` column and one column per
/// scoring mode to `output`. Returns the number of rows scored.
pub fn score_file(run: &FinishedRun, input: &Path, output: &Path) -> Result<usize> {
    let x = read_features(run, input)?;
    let (names, cols) = score_rows(run, &x)?;
    let mut header = vec!["row".to_string()];
    header.extend(names);
    let mut t = Table::new(&header);
    for i in 0..x.nrows() {
        let mut row = vec![i.to_string()];
        row.extend(cols.iter().map(|c| fmt_f64(c[i])));
        t.row(&row);
    }
    t.write(output)?;
    Ok(x.nrows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::runner::{run_dir, run_experiment, RunOptions};
    use crate::tsv::ScoreFile;

    #[test]
    fn rescoring_the_test_set_reproduces_the_persisted_scores() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::from_toml(
            r#"
version = 1
name = "apply"
method = "minlgan"
ensemble_n = 2

[dataset]
kind = "toy"
shape = "circle"
n_train = 150
n_holdout_normal = 20
n_holdout_anomaly = 20
n_test_normal = 30
n_test_anomaly = 30

[train]
max_steps = 10
eval_every = 5
batch_size = 16

[train.architecture]
latent_dim = 3
hidden = [6]
"#,
        )
        .unwrap();
        cfg.output_dir = dir.path().to_path_buf();
        run_experiment(&cfg, &RunOptions::default()).unwrap();
        let run = FinishedRun::open_completed(&run_dir(&cfg)).unwrap();
        let data = crate::runner::prepare(&cfg, None).unwrap();

        let input = dir.path().join("new.csv");
        let mut text = String::from("note,x1,x0\n");
        for r in data.test.features.rows() {
            text.push_str(&format!("z,{},{}\n", fmt_f64(r[1]), fmt_f64(r[0])));
        }
        fs::write(&input, text).unwrap();
        let out = dir.path().join("scored.tsv");
        assert_eq!(score_file(&run, &input, &out).unwrap(), 60);

        let scored = crate::tsv::Parsed::read(&out).unwrap();
        assert_eq!(scored.header, vec!["row", "restart_0", "ensemble", "scaled_ensemble"]);
        let persisted = ScoreFile::read(&run.restart_dir(0).join("scores.tsv")).unwrap();
        let ens = ScoreFile::read(&run.dir.join("ensemble/scores.tsv")).unwrap();
        for (i, row) in scored.rows.iter().enumerate() {
            assert_eq!(row[1].parse::<f64>().unwrap(), persisted.scores[0][i]);
            assert_eq!(row[2].parse::<f64>().unwrap(), ens.column("ensemble").unwrap()[i]);
            assert_eq!(row[3].parse::<f64>().unwrap(), ens.column("scaled_ensemble").unwrap()[i]);
        }
    }

    #[test]
    fn missing_feature_columns_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::from_toml(
            r#"
version = 1
name = "apply"
method = "ae"

[dataset]
kind = "toy"
shape = "circle"
n_train = 100
n_holdout_normal = 10
n_holdout_anomaly = 10
n_test_normal = 10
n_test_anomaly = 10

[train]
max_steps = 2
eval_every = 1
batch_size = 8
"#,
        )
        .unwrap();
        cfg.output_dir = dir.path().to_path_buf();
        run_experiment(&cfg, &RunOptions::default()).unwrap();
        let run = FinishedRun::open_completed(&run_dir(&cfg)).unwrap();
        let input = dir.path().join("bad.tsv");
        fs::write(&input, "x0\ty\n1\t2\n").unwrap();
        assert!(matches!(read_features(&run, &input), Err(CliError::InvalidArgument(_))));
    }
}
