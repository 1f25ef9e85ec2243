//! Experiment configuration files.
//!
//! ```toml
//! version = 1
//! name = "shu-a"
//! method = "minlgan"
//! restarts = 5
//! ensemble_n = 10
//! seed = 0
//! output_dir = "runs"
//!
//! [dataset]
//! kind = "tabular"
//! paths = ["shuttle/shuttle.trn", "shuttle/shuttle.tst"]
//! delimiter = "whitespace"
//! label_column = "c9"
//! normal_labels = ["1"]
//! anomaly_labels = ["2", "3", "4", "5", "6", "7"]
//!
//! [train]
//! a = 0.01
//! max_steps = 3000
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use minlgan::data::{HoldoutAnomalies, LabelSet, TabularSpec};
use minlgan::{Method, SplitSpec, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;
pub const DATA_ROOT_ENV: &str = "MINLGAN_DATA_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyShape {
    Circle,
    Moons,
}

/// Synthetic 2-D data: normals from the toy manifold, anomalies uniform on a
/// square. Every split is drawn from its own seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyData {
    pub shape: ToyShape,
    #[serde(default = "defaults::n_train")]
    pub n_train: usize,
    #[serde(default = "defaults::noise_sigma")]
    pub noise_sigma: f64,
    #[serde(default = "defaults::n_holdout")]
    pub n_holdout_normal: usize,
    #[serde(default = "defaults::n_holdout")]
    pub n_holdout_anomaly: usize,
    #[serde(default = "defaults::n_test")]
    pub n_test_normal: usize,
    #[serde(default = "defaults::n_test")]
    pub n_test_anomaly: usize,
    /// Anomalies are uniform on `[lo, hi]^2`.
    #[serde(default = "defaults::anomaly_box")]
    pub anomaly_box: [f64; 2],
    #[serde(default)]
    pub data_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularData {
    /// Relative paths resolve against the data root.
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub delimiter: minlgan::data::Delimiter,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub column_names: Option<Vec<String>>,
    pub label_column: String,
    pub normal_labels: LabelSet,
    pub anomaly_labels: LabelSet,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Cap on normal rows, e.g. for the KDD and covertype profiles.
    #[serde(default)]
    pub max_normals: Option<usize>,
    #[serde(default)]
    pub max_anomalies: Option<usize>,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default = "defaults::holdout_anomalies")]
    pub holdout_anomalies: HoldoutAnomalies,
}

impl TabularData {
    pub fn spec(&self, data_root: Option<&Path>) -> TabularSpec {
        let spec = TabularSpec {
            paths: self.paths.clone(),
            delimiter: self.delimiter,
            has_header: self.has_header,
            column_names: self.column_names.clone(),
            label_column: self.label_column.clone(),
            normal_labels: self.normal_labels.clone(),
            anomaly_labels: self.anomaly_labels.clone(),
            drop_columns: self.drop_columns.clone(),
            max_normals: self.max_normals,
            max_anomalies: self.max_anomalies,
            subsample_seed: self.split.seed,
        };
        match data_root {
            Some(root) => spec.rooted(root),
            None => spec,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Toy(ToyData),
    Tabular(TabularData),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub name: String,
    pub method: Method,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "defaults::restarts")]
    pub restarts: usize,
    /// Extra members trained for the ensemble scores; `0` disables them.
    #[serde(default)]
    pub ensemble_n: usize,
    /// Base seed; restart `i` uses `seed + i`, ensemble member `j` uses
    /// `seed + 1000 + j`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
}

pub const MEMBER_SEED_OFFSET: u64 = 1000;

mod defaults {
    use super::*;
    pub fn n_train() -> usize {
        1000
    }
    pub fn noise_sigma() -> f64 {
        0.05
    }
    pub fn n_holdout() -> usize {
        100
    }
    pub fn n_test() -> usize {
        500
    }
    pub fn anomaly_box() -> [f64; 2] {
        [-1.5, 1.5]
    }
    pub fn holdout_anomalies() -> HoldoutAnomalies {
        HoldoutAnomalies::Mirror
    }
    pub fn restarts() -> usize {
        1
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("runs")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if self.ensemble_n > 0 && !self.method.is_adversarial() {
            return bad(format!("ensemble_n applies to gan and minlgan, not {}", self.method));
        }
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match &self.dataset {
            DatasetConfig::Toy(t) => {
                if t.n_train == 0 || t.n_test_normal == 0 || t.n_test_anomaly == 0 {
                    return bad("toy train and test sizes must be positive".into());
                }
                if t.n_holdout_normal == 0 || t.n_holdout_anomaly == 0 {
                    return bad("toy holdout needs normals and anomalies".into());
                }
                if !(t.anomaly_box[0] < t.anomaly_box[1]) {
                    return bad("anomaly_box must be [lo, hi] with lo < hi".into());
                }
                if !(t.noise_sigma >= 0.0) {
                    return bad("noise_sigma must be nonnegative".into());
                }
            }
            DatasetConfig::Tabular(t) => {
                if t.paths.is_empty() {
                    return bad("tabular dataset needs at least one path".into());
                }
                t.split.validate().map_err(|e| CliError::Config(e.to_string()))?;
                if t.holdout_anomalies == HoldoutAnomalies::None {
                    return bad("holdout_anomalies = \"none\" leaves early stopping without a holdout AUC".into());
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical JSON form, ignoring `output_dir`.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        let digest = Sha256::digest(&json);
        hex::encode(&digest[..8])
    }

    pub fn restart_seed(&self, restart: usize) -> u64 {
        self.seed.wrapping_add(restart as u64)
    }

    pub fn member_seed(&self, member: usize) -> u64 {
        self.seed.wrapping_add(MEMBER_SEED_OFFSET + member as u64)
    }

    pub fn is_toy(&self) -> bool {
        matches!(self.dataset, DatasetConfig::Toy(_))
    }
}

/// Data root from the environment, if set.
pub fn data_root_from_env() -> Option<PathBuf> {
    std::env::var_os(DATA_ROOT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
version = 1
name = "circle"
method = "minlgan"
restarts = 2
ensemble_n = 3

[dataset]
kind = "toy"
shape = "circle"

[train]
a = 0.05
max_steps = 10
"#;

    #[test]
    fn toy_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(TOY).unwrap();
        assert_eq!(cfg.method, Method::Minlgan);
        let DatasetConfig::Toy(t) = &cfg.dataset else { panic!() };
        assert_eq!((t.n_train, t.noise_sigma, t.anomaly_box), (1000, 0.05, [-1.5, 1.5]));
        assert_eq!(cfg.train.a, 0.05);
        assert_eq!(cfg.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(cfg.member_seed(2), 1002);
    }

    #[test]
    fn round_trip_keeps_the_hash() {
        let cfg = ExperimentConfig::from_toml(TOY).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.content_hash(), again.content_hash());
        let mut moved = cfg.clone();
        moved.output_dir = "elsewhere".into();
        assert_eq!(moved.content_hash(), cfg.content_hash());
        moved.seed = 9;
        assert_ne!(moved.content_hash(), cfg.content_hash());
    }

    #[test]
    fn rejects_bad_configs() {
        let unknown = TOY.replace("restarts = 2", "restarts = 2\nrestrats = 3");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(CliError::Config(_))));
        let zero = TOY.replace("restarts = 2", "restarts = 0");
        assert!(matches!(ExperimentConfig::from_toml(&zero), Err(CliError::Config(_))));
        let version = TOY.replace("version = 1", "version = 7");
        assert!(ExperimentConfig::from_toml(&version).is_err());
        let ae_ensemble = TOY.replace("method = \"minlgan\"", "method = \"ae\"");
        assert!(ExperimentConfig::from_toml(&ae_ensemble).is_err());
        let bad_train = TOY.replace("a = 0.05", "a = 0.05\nlearning_rat = 1.0");
        assert!(ExperimentConfig::from_toml(&bad_train).is_err());
    }

    #[test]
    fn tabular_config_parses_label_sets() {
        let text = r#"
version = 1
name = "cov-a"
method = "gan"

[dataset]
kind = "tabular"
paths = ["covtype.data.gz"]
label_column = "c54"
normal_labels = ["1", "3", "5", "6", "7"]
anomaly_labels = "rest"
max_normals = 50000

[dataset.split]
train_fraction = 0.8
holdout_fraction = 0.1
seed = 3
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let DatasetConfig::Tabular(t) = &cfg.dataset else { panic!() };
        assert_eq!(t.anomaly_labels, LabelSet::rest());
        assert_eq!(t.holdout_anomalies, HoldoutAnomalies::Mirror);
        let spec = t.spec(Some(Path::new("/data")));
        assert_eq!(spec.paths, vec![PathBuf::from("/data/covtype.data.gz")]);
        assert_eq!(spec.subsample_seed, 3);
    }
}
