//! Anomaly scores. Every method is oriented so that a higher score means
//! "more anomalous".
//!
//! The GAN family scores from raw discriminator logits. For an ensemble of
//! `N` discriminators there are two aggregates: the plain one, the negative
//! mean logit, and the scaled one, which first min-max normalizes each
//! member's logits by its extremes over a holdout set.

use ndarray::{Array1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::{Autoencoder, Discriminator, Model, NoiseModel, Vae};
use crate::rng::standard_normal;

pub const METHOD_GAN: &str = "gan";
pub const METHOD_ENSEMBLE: &str = "ensemble";
pub const METHOD_SCALED_ENSEMBLE: &str = "scaled-ensemble";
pub const METHOD_AE: &str = "ae";
pub const METHOD_VAE: &str = "vae";

/// Per-sample anomaly scores, aligned with the input rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub method: String,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(method: impl Into<String>, scores: Vec<f64>) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite anomaly score {} at sample {i}",
                scores[i]
            )));
        }
        Ok(ScoreVector {
            method: method.into(),
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Negated discriminator logit.
pub fn score_gan(d: &Discriminator, x: ArrayView2<f64>) -> Result<ScoreVector> {
    let logits = d.logits(x)?;
    ScoreVector::new(METHOD_GAN, logits.iter().map(|l| -l).collect())
}

/// Logits of every member on `x`, one vector per member.
pub fn member_logits(ds: &[Discriminator], x: ArrayView2<f64>) -> Result<Vec<Array1<f64>>> {
    ds.iter().map(|d| d.logits(x)).collect()
}

fn check_members(logits: &[Array1<f64>]) -> Result<usize> {
    let first = logits
        .first()
        .ok_or_else(|| Error::InvalidArgument("ensemble has no members".into()))?;
    let n = first.len();
    if logits.iter().any(|l| l.len() != n) {
        return Err(Error::shape("members scoring the same samples", "ragged member logits"));
    }
    Ok(n)
}

/// `s = -(1/N) sum_i D_i(x)` from precomputed member logits.
pub fn ensemble_from_logits(logits: &[Array1<f64>]) -> Result<ScoreVector> {
    let n = check_members(logits)?;
    let k = logits.len() as f64;
    let scores = (0..n)
        .map(|j| -logits.iter().map(|l| l[j]).sum::<f64>() / k)
        .collect();
    ScoreVector::new(METHOD_ENSEMBLE, scores)
}

pub fn score_ensemble(ds: &[Discriminator], x: ArrayView2<f64>) -> Result<ScoreVector> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    ensemble_from_logits(&member_logits(ds, x)?)
}

/// Holdout extremes `(max, min)` of one member's logits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRange {
    pub max: f64,
    pub min: f64,
}

impl MemberRange {
    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    /// `(logit - min) / (max - min)`; a degenerate member contributes 0.5.
    pub fn scale(&self, logit: f64) -> f64 {
        if self.is_degenerate() {
            0.5
        } else {
            (logit - self.min) / (self.max - self.min)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCalibration {
    pub members: Vec<MemberRange>,
}

impl EnsembleCalibration {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn degenerate_members(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_degenerate())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn subset(&self, members: &[usize]) -> EnsembleCalibration {
        EnsembleCalibration {
            members: members.iter().map(|&i| self.members[i]).collect(),
        }
    }
}

pub fn calibrate_from_logits(holdout_logits: &[Array1<f64>]) -> Result<EnsembleCalibration> {
    let n = check_members(holdout_logits)?;
    if n == 0 {
        return Err(Error::InvalidArgument("calibration holdout is empty".into()));
    }
    let members: Vec<MemberRange> = holdout_logits
        .iter()
        .map(|l| MemberRange {
            max: l.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: l.iter().copied().fold(f64::INFINITY, f64::min),
        })
        .collect();
    for (i, r) in members.iter().enumerate() {
        if r.is_degenerate() {
            log::warn!("ensemble member {i} is constant on the holdout; its scaled term is fixed at 0.5");
        }
    }
    Ok(EnsembleCalibration { members })
}

pub fn calibrate(ds: &[Discriminator], holdout: ArrayView2<f64>) -> Result<EnsembleCalibration> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    if holdout.nrows() == 0 {
        return Err(Error::InvalidArgument("calibration holdout is empty".into()));
    }
    calibrate_from_logits(&member_logits(ds, holdout)?)
}

/// `s = -(1/N) sum_i (D_i(x) - n_i) / (m_i - n_i)` from precomputed logits.
pub fn scaled_ensemble_from_logits(
    logits: &[Array1<f64>],
    cal: &EnsembleCalibration,
) -> Result<ScoreVector> {
    let n = check_members(logits)?;
    if cal.len() != logits.len() {
        return Err(Error::InvalidArgument(format!(
            "calibration covers {} members but the ensemble has {}",
            cal.len(),
            logits.len()
        )));
    }
    let k = logits.len() as f64;
    let scores = (0..n)
        .map(|j| {
            -logits
                .iter()
                .zip(&cal.members)
                .map(|(l, r)| r.scale(l[j]))
                .sum::<f64>()
                / k
        })
        .collect();
    ScoreVector::new(METHOD_SCALED_ENSEMBLE, scores)
}

pub fn score_scaled_ensemble(
    ds: &[Discriminator],
    cal: &EnsembleCalibration,
    x: ArrayView2<f64>,
) -> Result<ScoreVector> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    if cal.len() != ds.len() {
        return Err(Error::InvalidArgument(format!(
            "calibration covers {} members but the ensemble has {}",
            cal.len(),
            ds.len()
        )));
    }
    scaled_ensemble_from_logits(&member_logits(ds, x)?, cal)
}

/// Mean squared reconstruction error per sample.
pub fn score_ae(ae: &Autoencoder, x: ArrayView2<f64>) -> Result<ScoreVector> {
    let recon = ae.ae_forward(x)?;
    ScoreVector::new(METHOD_AE, mean_squared_rows(x, &recon))
}

pub(crate) fn mean_squared_rows(x: ArrayView2<f64>, recon: &ndarray::Array2<f64>) -> Vec<f64> {
    let d = x.ncols().max(1) as f64;
    x.rows()
        .into_iter()
        .zip(recon.rows())
        .map(|(a, b)| a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / d)
        .collect()
}

/// Negative Monte-Carlo reconstruction log-probability,
/// `-(1/S) sum_s log p(x | dec(z_s))` with `z_s ~ q(z | x)`.
pub fn score_vae<R: Rng + ?Sized>(
    vae: &Vae,
    noise: &NoiseModel,
    x: ArrayView2<f64>,
    n_samples: usize,
    rng: &mut R,
) -> Result<ScoreVector> {
    if n_samples < 1 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let x_owned = x.to_owned();
    let mut acc = Array1::<f64>::zeros(x.nrows());
    for _ in 0..n_samples {
        let eps = standard_normal(rng, x.nrows(), vae.latent_dim());
        let pass = vae.vae_forward(x, &eps)?;
        acc += &noise.log_cond_density(&x_owned, &pass.reconstruction)?;
    }
    let s = n_samples as f64;
    ScoreVector::new(METHOD_VAE, acc.iter().map(|v| -v / s).collect())
}

/// Scores `x` with the scorer that matches the model kind: the GAN family by
/// discriminator logit, the AE by reconstruction error and the VAE by
/// reconstruction probability with `vae_samples` draws from `rng`.
pub fn score_model<R: Rng + ?Sized>(
    model: &Model,
    noise: &NoiseModel,
    x: ArrayView2<f64>,
    vae_samples: usize,
    rng: &mut R,
) -> Result<ScoreVector> {
    match model {
        Model::Gan { discriminator, .. } => score_gan(discriminator, x),
        Model::Ae { autoencoder } => score_ae(autoencoder, x),
        Model::Vae { vae } => score_vae(vae, noise, x, vae_samples, rng),
    }
}
