//! Datasets, normalization and train/holdout/test splitting.

mod cache;
mod tabular;
mod toy;

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use cache::{cache_key, load_tabular_cached, read_cache, write_cache};
pub use tabular::{load_tabular, Delimiter, LabelSet, TabularSpec};
pub use toy::{make_circle, make_moons, moons_arc_distance, uniform_box};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }
}

/// Borrowed view of one row.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub id: usize,
    pub features: ArrayView1<'a, f64>,
    pub label: Label,
    pub class: &'a str,
}

/// Per-feature affine map `(x - shift) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Normalization {
    /// Column means and population standard deviations; constant columns get
    /// scale 1.
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidArgument("cannot fit normalization on zero rows".into()));
        }
        let shift = x.mean_axis(Axis(0)).expect("nonempty");
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 });
        Ok(Normalization { shift, scale })
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.shift) / &self.scale
    }

    pub fn invert(&self, x: ArrayView2<f64>) -> Array2<f64> {
        &x * &self.scale + &self.shift
    }
}

/// Feature matrix plus per-row label, original class name and row id.
///
/// `ids` are positions in the dataset as first loaded, so splits can be
/// traced back to source rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
    pub classes: Vec<String>,
    pub ids: Vec<usize>,
    pub feature_names: Vec<String>,
    /// Normalization already applied to `features`, if any.
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<Label>, classes: Vec<String>) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || classes.len() != n {
            return Err(Error::shape(
                format!("{n} labels and classes"),
                format!("{} labels, {} classes", labels.len(), classes.len()),
            ));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidArgument("datasets need at least one feature".into()));
        }
        let feature_names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Dataset {
            features,
            labels,
            classes,
            ids: (0..n).collect(),
            feature_names,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            id: self.ids[i],
            features: self.features.row(i),
            label: self.labels[i],
            class: &self.classes[i],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> {
        (0..self.len()).map(move |i| self.sample(i))
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn is_anomaly(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_anomaly()).collect()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: idx.iter().map(|&i| self.classes[i].clone()).collect(),
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
            feature_names: self.feature_names.clone(),
            normalization: self.normalization.clone(),
        }
    }

    pub fn indices_of(&self, label: Label) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Stacks `other` under `self`. Ids are kept as they are.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim() != other.dim() {
            return Err(Error::shape(format!("{} features", self.dim()), other.dim()));
        }
        Ok(Dataset {
            features: concatenate(Axis(0), &[self.features.view(), other.features.view()])
                .expect("matching widths"),
            labels: self.labels.iter().chain(&other.labels).copied().collect(),
            classes: self.classes.iter().chain(&other.classes).cloned().collect(),
            ids: self.ids.iter().chain(&other.ids).copied().collect(),
            feature_names: self.feature_names.clone(),
            normalization: self.normalization.clone(),
        })
    }

    /// Replaces every label.
    pub fn relabeled(mut self, label: Label) -> Dataset {
        self.labels.iter_mut().for_each(|l| *l = label);
        self
    }

    pub fn normalized_with(&self, norm: &Normalization) -> Dataset {
        let mut out = self.clone();
        out.features = norm.apply(self.features.view());
        out.normalization = Some(norm.clone());
        out
    }

    /// Features mapped back through the stored normalization.
    pub fn raw_features(&self) -> Array2<f64> {
        match &self.normalization {
            Some(n) => n.invert(self.features.view()),
            None => self.features.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            holdout_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let t = self.train_fraction;
        let h = self.holdout_fraction;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!("train_fraction {t} outside (0, 1]")));
        }
        if !(0.0..1.0).contains(&h) {
            return Err(Error::InvalidArgument(format!("holdout_fraction {h} outside [0, 1)")));
        }
        if t + h > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "train_fraction + holdout_fraction = {} exceeds 1",
                t + h
            )));
        }
        Ok(())
    }
}

/// How many anomalies to move from the test split into the holdout used for
/// model selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldoutAnomalies {
    None,
    /// Match the holdout's anomaly rate to the remaining test set's.
    Mirror,
    /// Fraction of all anomalies.
    Fraction(f64),
}

/// Output of [`split`]. `train` and `holdout` hold normals only; anomalies
/// reserved for model selection live in `holdout_anomalies`, never in `test`.
#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub holdout: Dataset,
    pub test: Dataset,
    pub holdout_anomalies: Dataset,
}

impl Splits {
    /// Holdout normals followed by holdout anomalies.
    pub fn selection_set(&self) -> Result<Dataset> {
        self.holdout.concat(&self.holdout_anomalies)
    }

    /// Moves anomalies out of `test` into `holdout_anomalies`.
    pub fn with_holdout_anomalies(mut self, policy: HoldoutAnomalies, seed: u64) -> Result<Splits> {
        let anomalies = self.test.indices_of(Label::Anomaly);
        let normals_left = self.test.len() - anomalies.len();
        let take = match policy {
            HoldoutAnomalies::None => 0,
            HoldoutAnomalies::Mirror => {
                let h = self.holdout.len() as f64;
                let total = h + normals_left as f64;
                if total == 0.0 {
                    0
                } else {
                    (anomalies.len() as f64 * h / total).round() as usize
                }
            }
            HoldoutAnomalies::Fraction(f) => {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::InvalidArgument(format!(
                        "holdout anomaly fraction {f} outside [0, 1)"
                    )));
                }
                (anomalies.len() as f64 * f).round() as usize
            }
        };
        // Keep at least one anomaly for the test set.
        let take = take.min(anomalies.len().saturating_sub(1));
        let mut shuffled = anomalies.clone();
        shuffled.shuffle(&mut rng::stream(seed, 0xa7a7));
        let mut moved: Vec<usize> = shuffled[..take].to_vec();
        moved.sort_unstable();
        let keep: Vec<usize> = (0..self.test.len()).filter(|i| moved.binary_search(i).is_err()).collect();
        self.holdout_anomalies = self.holdout_anomalies.concat(&self.test.select(&moved))?;
        self.test = self.test.select(&keep);
        Ok(self)
    }
}

/// Seeded partition of the normals into train and holdout; test receives the
/// remaining normals and every anomaly. All three are normalized with
/// statistics fitted on train.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut normals = ds.indices_of(Label::Normal);
    let anomalies = ds.indices_of(Label::Anomaly);
    if normals.is_empty() {
        return Err(Error::EmptyClass("dataset has no normal samples".into()));
    }
    if anomalies.is_empty() {
        return Err(Error::EmptyClass(
            "dataset has no anomalies; test AUC would be undefined".into(),
        ));
    }
    normals.shuffle(&mut rng::stream(spec.seed, 0x5917));
    let n = normals.len();
    let n_train = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n);
    let n_holdout = ((spec.holdout_fraction * n as f64).round() as usize).min(n - n_train);

    let train_idx = &normals[..n_train];
    let holdout_idx = &normals[n_train..n_train + n_holdout];
    let mut test_idx: Vec<usize> = normals[n_train + n_holdout..].to_vec();
    test_idx.extend(&anomalies);
    test_idx.sort_unstable();

    let train_raw = ds.select(train_idx);
    let norm = Normalization::fit(train_raw.features.view())?;
    let empty = ds.select(&[]).normalized_with(&norm);
    Ok(Splits {
        train: train_raw.normalized_with(&norm),
        holdout: ds.select(holdout_idx).normalized_with(&norm),
        test: ds.select(&test_idx).normalized_with(&norm),
        holdout_anomalies: empty,
    })
}
