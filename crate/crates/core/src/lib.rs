//! Minimum-likelihood GAN anomaly detection.
//!
//! A generator is trained with feature matching against a discriminator plus
//! a penalty on the likelihood it assigns to normal data, so that its samples
//! spread into low-density regions. The discriminator logit then serves as a
//! normality score; ensembles of independently trained discriminators are
//! combined with or without per-member min-max calibration.

pub mod data;
pub mod error;
pub mod eval;
pub mod nets;
pub mod optim;
pub mod rng;
pub mod score;
pub mod train;

pub use data::{split, Dataset, Label, Normalization, SplitSpec, Splits};
pub use error::{Error, Result};
pub use eval::{roc, BoxStats, EnsembleMode, RocResult, StabilityPoint};
pub use nets::{Architecture, Checkpoint, Discriminator, Encoder, Generator, Model, NoiseFamily, NoiseModel, Vae};
pub use score::{EnsembleCalibration, MemberRange, ScoreVector};
pub use train::{train, History, Holdout, Method, TrainConfig, TrainFailure, TrainOutcome, TrainState};
