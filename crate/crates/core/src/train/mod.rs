//! Alternating optimization for the GAN baseline and the minimum-likelihood
//! GAN, plus reconstruction training for the AE and VAE baselines.
//!
//! A minimum-likelihood iteration runs, in order, one discriminator ascent
//! step, one encoder ELBO ascent step and one generator descent step. The GAN
//! baseline skips the encoder. Each kind of draw has its own random stream,
//! so a minimum-likelihood run with `a = 0` follows exactly the same
//! discriminator and generator trajectory as the GAN baseline.

pub mod objectives;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::roc;
use crate::nets::{Architecture, Autoencoder, Checkpoint, Discriminator, Encoder, Generator, Mlp, MlpGrad, Model, NoiseModel, Vae};
use crate::optim::{clip_global_norm, Adam};
use crate::rng::{self, standard_normal, StdRng};
use crate::score::{score_ae, score_gan, score_vae};

pub use objectives::{
    discriminator_objective, elbo, elbo_per_sample, feature_matching, min_likelihood_objective, reconstruction_loss,
    ElboEval, MinLikelihoodEval,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gan,
    Minlgan,
    Ae,
    Vae,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gan => "gan",
            Method::Minlgan => "minlgan",
            Method::Ae => "ae",
            Method::Vae => "vae",
        }
    }

    pub fn is_adversarial(self) -> bool {
        matches!(self, Method::Gan | Method::Minlgan)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Weight of the minimum-likelihood penalty; `0` reduces to the GAN.
    pub a: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    pub eval_every: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    /// Global gradient-norm ceiling applied to every update; off when `None`.
    pub grad_clip: Option<f64>,
    pub architecture: Architecture,
    /// Monte-Carlo draws per sample when scoring a VAE.
    pub vae_score_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            a: 0.01,
            learning_rate: 1e-3,
            beta1: 0.5,
            beta2: 0.999,
            batch_size: 64,
            max_steps: 2000,
            eval_every: 100,
            seed: 0,
            noise: NoiseModel::default(),
            grad_clip: None,
            architecture: Architecture::default(),
            vae_score_samples: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return bad(format!("a must be a finite nonnegative number, got {}", self.a));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive".into());
        }
        if self.vae_score_samples == 0 {
            return bad("vae_score_samples must be positive".into());
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return bad(format!("grad_clip must be positive, got {c}"));
            }
        }
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.architecture.latent_dim == 0 || self.architecture.hidden.contains(&0) {
            return bad("architecture widths must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub holdout_auc: f64,
    pub best_auc: f64,
}

/// Per-step losses and per-evaluation holdout AUCs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub losses: Vec<LossRecord>,
    pub evals: Vec<EvalRecord>,
}

impl History {
    fn push(&mut self, step: usize, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Divergence {
                step,
                what: name.to_string(),
            });
        }
        self.losses.push(LossRecord {
            step,
            name: name.to_string(),
            value,
        });
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty() && self.evals.is_empty()
    }

    pub fn values(&self, name: &str) -> Vec<f64> {
        self.losses.iter().filter(|r| r.name == name).map(|r| r.value).collect()
    }
}

/// Random streams of one run, split by purpose.
#[derive(Clone, Debug)]
struct Streams {
    d_prior: StdRng,
    g_prior: StdRng,
    encoder: StdRng,
    penalty: StdRng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Streams {
            d_prior: rng::stream(seed, 11),
            g_prior: rng::stream(seed, 12),
            encoder: rng::stream(seed, 13),
            penalty: rng::stream(seed, 14),
        }
    }
}

fn checked(mut grad: MlpGrad, clip: Option<f64>, step: usize, what: &str) -> Result<MlpGrad> {
    if !grad.is_finite() {
        return Err(Error::Divergence {
            step,
            what: format!("{what} gradient"),
        });
    }
    if let Some(c) = clip {
        clip_global_norm(&mut grad, c);
    }
    Ok(grad)
}

fn finite(v: f64, step: usize, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergence {
            step,
            what: what.to_string(),
        })
    }
}

/// Parameters, optimizer moments and random streams of a GAN-family run.
#[derive(Clone, Debug)]
pub struct GanState {
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub encoder: Option<Encoder>,
    opt_g: Adam,
    opt_d: Adam,
    opt_e: Option<Adam>,
    streams: Streams,
}

impl GanState {
    /// Fresh networks; the encoder exists only for the minimum-likelihood
    /// method. Each network is initialized from its own stream.
    pub fn init(method: Method, data_dim: usize, cfg: &TrainConfig) -> Result<Self> {
        let arch = &cfg.architecture;
        let generator = Generator::new(arch, data_dim, &mut rng::stream(cfg.seed, 1))?;
        let discriminator = Discriminator::new(arch, data_dim, &mut rng::stream(cfg.seed, 2))?;
        let encoder = match method {
            Method::Minlgan => Some(Encoder::new(arch, data_dim, arch.latent_dim, &mut rng::stream(cfg.seed, 3))?),
            _ => None,
        };
        Ok(GanState::from_parts(generator, discriminator, encoder, cfg))
    }

    pub fn from_parts(generator: Generator, discriminator: Discriminator, encoder: Option<Encoder>, cfg: &TrainConfig) -> Self {
        let adam = |net: &Mlp| Adam::new(net, cfg.learning_rate, cfg.beta1, cfg.beta2);
        GanState {
            opt_g: adam(&generator.net),
            opt_d: adam(&discriminator.net),
            opt_e: encoder.as_ref().map(|e| adam(&e.net)),
            generator,
            discriminator,
            encoder,
            streams: Streams::new(cfg.seed),
        }
    }

    /// One ascent step on the discriminator objective with a fresh fake batch
    /// `G(z)`. Returns the objective value before the update.
    pub fn d_step(&mut self, real: ArrayView2<f64>, cfg: &TrainConfig, step: usize) -> Result<f64> {
        let z = self.generator.sample_prior(real.nrows(), &mut self.streams.d_prior);
        let fake = self.generator.generate(z.view())?;
        let (value, grad) = discriminator_objective(&self.discriminator, real, fake.view())?;
        let value = finite(value, step, "d_loss")?;
        let grad = checked(grad, cfg.grad_clip, step, "discriminator")?;
        self.opt_d.step(&mut self.discriminator.net, &grad);
        Ok(value)
    }

    /// One ascent step on the ELBO of `real` under the current generator,
    /// which is held fixed. Returns the ELBO before the update.
    pub fn encoder_step(&mut self, real: ArrayView2<f64>, cfg: &TrainConfig, step: usize) -> Result<f64> {
        let (Some(e), Some(opt)) = (self.encoder.as_ref(), self.opt_e.as_mut()) else {
            return Err(Error::Config("encoder_step needs a minimum-likelihood state".into()));
        };
        let eps = standard_normal(&mut self.streams.encoder, real.nrows(), e.latent_dim);
        let ev = elbo(e, &self.generator.net, &cfg.noise, real, &eps)?;
        let value = finite(ev.elbo, step, "elbo")?;
        let grad = checked(ev.encoder_grad, cfg.grad_clip, step, "encoder")?;
        opt.step(&mut self.encoder.as_mut().unwrap().net, &grad);
        Ok(value)
    }

    /// One descent step on the feature-matching distance.
    pub fn g_step_gan(&mut self, real: ArrayView2<f64>, cfg: &TrainConfig, step: usize) -> Result<f64> {
        let z = self.generator.sample_prior(cfg.batch_size, &mut self.streams.g_prior);
        let (fm, grad) = feature_matching(&self.discriminator, &self.generator, real, z.view())?;
        let fm = finite(fm, step, "fm_loss")?;
        let grad = checked(grad, cfg.grad_clip, step, "generator")?;
        self.opt_g.step(&mut self.generator.net, &grad);
        Ok(fm)
    }

    /// One descent step on feature matching plus `a` times the batch-mean
    /// log-likelihood of `real` under `G` at encoder samples. Returns
    /// `(fm_loss, ml_penalty)` before the update.
    pub fn g_step_minl(&mut self, real: ArrayView2<f64>, cfg: &TrainConfig, step: usize) -> Result<(f64, f64)> {
        let Some(e) = self.encoder.as_ref() else {
            return Err(Error::Config("g_step_minl needs a minimum-likelihood state".into()));
        };
        let z = self.generator.sample_prior(cfg.batch_size, &mut self.streams.g_prior);
        let eps = standard_normal(&mut self.streams.penalty, real.nrows(), e.latent_dim);
        let ev = min_likelihood_objective(&self.discriminator, &self.generator, e, &cfg.noise, cfg.a, real, z.view(), &eps)?;
        let fm = finite(ev.feature_matching, step, "fm_loss")?;
        let pen = finite(ev.likelihood_penalty, step, "ml_penalty")?;
        let grad = checked(ev.generator_grad, cfg.grad_clip, step, "generator")?;
        self.opt_g.step(&mut self.generator.net, &grad);
        Ok((fm, pen))
    }

    pub fn model(&self) -> Model {
        Model::Gan {
            generator: self.generator.clone(),
            discriminator: self.discriminator.clone(),
            encoder: self.encoder.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AeState {
    pub autoencoder: Autoencoder,
    opt_enc: Adam,
    opt_dec: Adam,
}

#[derive(Clone, Debug)]
pub struct VaeState {
    pub vae: Vae,
    opt_enc: Adam,
    opt_dec: Adam,
    eps: StdRng,
}

#[derive(Clone, Debug)]
pub enum ModelState {
    Gan(GanState),
    Ae(AeState),
    Vae(VaeState),
}

impl ModelState {
    pub fn snapshot(&self) -> Model {
        match self {
            ModelState::Gan(s) => s.model(),
            ModelState::Ae(s) => Model::Ae {
                autoencoder: s.autoencoder.clone(),
            },
            ModelState::Vae(s) => Model::Vae { vae: s.vae.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestCheckpoint {
    pub holdout_auc: f64,
    pub step: usize,
    pub checkpoint: Checkpoint,
}

#[derive(Clone, Debug)]
pub struct TrainState {
    pub method: Method,
    pub model: ModelState,
    /// Completed iterations.
    pub step: usize,
    pub best: Option<BestCheckpoint>,
    batch_rng: StdRng,
    seed: u64,
}

impl TrainState {
    pub fn init(method: Method, data_dim: usize, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let arch = &cfg.architecture;
        let model = match method {
            Method::Gan | Method::Minlgan => ModelState::Gan(GanState::init(method, data_dim, cfg)?),
            Method::Ae => {
                let ae = Autoencoder::new(arch, data_dim, &mut rng::stream(cfg.seed, 4))?;
                ModelState::Ae(AeState {
                    opt_enc: Adam::new(&ae.encoder, cfg.learning_rate, cfg.beta1, cfg.beta2),
                    opt_dec: Adam::new(&ae.decoder, cfg.learning_rate, cfg.beta1, cfg.beta2),
                    autoencoder: ae,
                })
            }
            Method::Vae => {
                let vae = Vae::new(arch, data_dim, &mut rng::stream(cfg.seed, 5))?;
                ModelState::Vae(VaeState {
                    opt_enc: Adam::new(&vae.encoder.net, cfg.learning_rate, cfg.beta1, cfg.beta2),
                    opt_dec: Adam::new(&vae.decoder, cfg.learning_rate, cfg.beta1, cfg.beta2),
                    vae,
                    eps: rng::stream(cfg.seed, 15),
                })
            }
        };
        Ok(TrainState {
            method,
            model,
            step: 0,
            best: None,
            batch_rng: rng::stream(cfg.seed, 10),
            seed: cfg.seed,
        })
    }

    pub fn gan(&self) -> Option<&GanState> {
        match &self.model {
            ModelState::Gan(g) => Some(g),
            _ => None,
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.seed, self.step, self.model.snapshot())
    }

    /// The best-holdout checkpoint if one was recorded, else the current model.
    pub fn selected_checkpoint(&self) -> Checkpoint {
        match &self.best {
            Some(b) => b.checkpoint.clone(),
            None => self.checkpoint(),
        }
    }

    fn next_batch(&mut self, train: ArrayView2<f64>, batch: usize) -> Array2<f64> {
        let n = train.nrows();
        let idx: Vec<usize> = if n >= batch {
            sample(&mut self.batch_rng, n, batch).into_vec()
        } else {
            (0..batch).map(|_| self.batch_rng.random_range(0..n)).collect()
        };
        train.select(Axis(0), &idx)
    }

    /// Runs one iteration of the method's update schedule.
    pub fn iterate(&mut self, train: ArrayView2<f64>, cfg: &TrainConfig, history: &mut History) -> Result<()> {
        let step = self.step;
        let real = self.next_batch(train, cfg.batch_size);
        let real = real.view();
        match (&mut self.model, self.method) {
            (ModelState::Gan(s), Method::Gan) => {
                let d = s.d_step(real, cfg, step)?;
                history.push(step, "d_loss", d)?;
                let fm = s.g_step_gan(real, cfg, step)?;
                history.push(step, "fm_loss", fm)?;
            }
            (ModelState::Gan(s), Method::Minlgan) => {
                let d = s.d_step(real, cfg, step)?;
                history.push(step, "d_loss", d)?;
                let e = s.encoder_step(real, cfg, step)?;
                history.push(step, "elbo", e)?;
                let (fm, pen) = s.g_step_minl(real, cfg, step)?;
                history.push(step, "fm_loss", fm)?;
                history.push(step, "ml_penalty", pen)?;
            }
            (ModelState::Ae(s), _) => {
                let (loss, ge, gd) = reconstruction_loss(&s.autoencoder.encoder, &s.autoencoder.decoder, real)?;
                history.push(step, "recon_loss", loss)?;
                let ge = checked(ge, cfg.grad_clip, step, "ae encoder")?;
                let gd = checked(gd, cfg.grad_clip, step, "ae decoder")?;
                s.opt_enc.step(&mut s.autoencoder.encoder, &ge);
                s.opt_dec.step(&mut s.autoencoder.decoder, &gd);
            }
            (ModelState::Vae(s), _) => {
                let eps = standard_normal(&mut s.eps, real.nrows(), s.vae.latent_dim());
                let ev = elbo(&s.vae.encoder, &s.vae.decoder, &cfg.noise, real, &eps)?;
                history.push(step, "elbo", ev.elbo)?;
                let ge = checked(ev.encoder_grad, cfg.grad_clip, step, "vae encoder")?;
                let gd = checked(ev.decoder_grad, cfg.grad_clip, step, "vae decoder")?;
                s.opt_enc.step(&mut s.vae.encoder.net, &ge);
                s.opt_dec.step(&mut s.vae.decoder, &gd);
            }
            (ModelState::Gan(_), m) => unreachable!("GAN state built for {m}"),
        }
        self.step += 1;
        Ok(())
    }

    /// Anomaly scores of the current model on `x`.
    pub fn score(&self, x: ArrayView2<f64>, cfg: &TrainConfig) -> Result<Vec<f64>> {
        let scores = match &self.model {
            ModelState::Gan(s) => score_gan(&s.discriminator, x)?,
            ModelState::Ae(s) => score_ae(&s.autoencoder, x)?,
            ModelState::Vae(s) => score_vae(&s.vae, &cfg.noise, x, cfg.vae_score_samples, &mut vae_score_rng(self.seed))?,
        };
        Ok(scores.scores)
    }

    /// Scores the holdout, records its AUC and keeps the checkpoint if it is
    /// the best so far.
    pub fn evaluate(&mut self, holdout: &Holdout<'_>, cfg: &TrainConfig, history: &mut History) -> Result<f64> {
        let scores = self.score(holdout.features, cfg)?;
        let auc = roc(&scores, holdout.labels)?.auc;
        let improved = self.best.as_ref().is_none_or(|b| auc > b.holdout_auc);
        if improved {
            self.best = Some(BestCheckpoint {
                holdout_auc: auc,
                step: self.step,
                checkpoint: self.checkpoint(),
            });
        }
        history.evals.push(EvalRecord {
            step: self.step,
            holdout_auc: auc,
            best_auc: self.best.as_ref().unwrap().holdout_auc,
        });
        Ok(auc)
    }
}

/// Random stream for Monte-Carlo VAE scoring of a run with `seed`.
pub fn vae_score_rng(seed: u64) -> StdRng {
    rng::stream(seed, 0xe7a1)
}

/// Labelled model-selection set.
#[derive(Clone, Copy, Debug)]
pub struct Holdout<'a> {
    pub features: ArrayView2<'a, f64>,
    /// `true` for anomalies.
    pub labels: &'a [bool],
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub history: History,
}

/// A run that stopped on an error, with everything recorded up to it.
#[derive(Debug)]
pub struct TrainFailure {
    pub error: Error,
    pub history: History,
}

impl std::fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} loss records)", self.error, self.history.losses.len())
    }
}

impl std::error::Error for TrainFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<TrainFailure> for Error {
    fn from(f: TrainFailure) -> Self {
        f.error
    }
}

/// Trains `method` on the normal-only `train` matrix, evaluating holdout AUC
/// every `eval_every` iterations and after the last one.
pub fn train(
    method: Method,
    train: ArrayView2<f64>,
    holdout: Holdout<'_>,
    cfg: &TrainConfig,
) -> std::result::Result<TrainOutcome, TrainFailure> {
    let mut history = History::default();
    let fail = |error: Error, history: History| TrainFailure { error, history };
    if let Err(e) = cfg.validate() {
        return Err(fail(e, history));
    }
    if train.nrows() == 0 {
        return Err(fail(Error::Config("training set is empty".into()), history));
    }
    if holdout.features.nrows() == 0 {
        return Err(fail(Error::Config("holdout set is empty".into()), history));
    }
    if holdout.features.nrows() != holdout.labels.len() {
        return Err(fail(
            Error::Config("holdout labels do not match holdout rows".into()),
            history,
        ));
    }
    if !holdout.labels.iter().any(|&l| l) || holdout.labels.iter().all(|&l| l) {
        return Err(fail(
            Error::Config("holdout needs normals and anomalies for model selection".into()),
            history,
        ));
    }
    let mut state = match TrainState::init(method, train.ncols(), cfg) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, history)),
    };
    for _ in 0..cfg.max_steps {
        if let Err(e) = state.iterate(train, cfg, &mut history) {
            return Err(fail(e, history));
        }
        if state.step % cfg.eval_every == 0 || state.step == cfg.max_steps {
            if let Err(e) = state.evaluate(&holdout, cfg, &mut history) {
                return Err(fail(e, history));
            }
        }
    }
    log::debug!(
        "{method} seed {} finished {} steps, best holdout AUC {:?}",
        cfg.seed,
        state.step,
        state.best.as_ref().map(|b| b.holdout_auc)
    );
    Ok(TrainOutcome { state, history })
}

/// AE baseline; same protocol as [`train`].
pub fn train_ae(train_x: ArrayView2<f64>, holdout: Holdout<'_>, cfg: &TrainConfig) -> std::result::Result<TrainOutcome, TrainFailure> {
    train(Method::Ae, train_x, holdout, cfg)
}

/// VAE baseline; same protocol as [`train`].
pub fn train_vae(train_x: ArrayView2<f64>, holdout: Holdout<'_>, cfg: &TrainConfig) -> std::result::Result<TrainOutcome, TrainFailure> {
    train(Method::Vae, train_x, holdout, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_circle, uniform_box, Label};

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            architecture: Architecture {
                latent_dim: 4,
                hidden: vec![8, 8],
                ..Architecture::default()
            },
            batch_size: 16,
            max_steps: 30,
            eval_every: 10,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    fn toy() -> (Array2<f64>, Array2<f64>, Vec<bool>) {
        let train = make_circle(200, 0.05, 1).unwrap().features;
        let normal = make_circle(50, 0.05, 2).unwrap();
        let anomalies = uniform_box(50, 2, -1.5, 1.5, Label::Anomaly, 3).unwrap();
        let hold = normal.concat(&anomalies).unwrap();
        let labels = hold.is_anomaly();
        (train, hold.features, labels)
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let (tr, ho, lab) = toy();
        let cfg = TrainConfig { max_steps: 0, ..tiny_cfg() };
        let out = train(Method::Minlgan, tr.view(), Holdout { features: ho.view(), labels: &lab }, &cfg).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(out.state.step, 0);
        let fresh = TrainState::init(Method::Minlgan, 2, &cfg).unwrap();
        assert_eq!(out.state.checkpoint(), fresh.checkpoint());
        assert!(out.state.best.is_none());
    }

    #[test]
    fn same_seed_same_history() {
        let (tr, ho, lab) = toy();
        for method in [Method::Gan, Method::Minlgan, Method::Ae, Method::Vae] {
            let h = Holdout { features: ho.view(), labels: &lab };
            let a = train(method, tr.view(), h, &tiny_cfg()).unwrap();
            let b = train(method, tr.view(), h, &tiny_cfg()).unwrap();
            assert_eq!(a.history, b.history, "{method}");
            assert_eq!(a.state.checkpoint(), b.state.checkpoint());
        }
    }

    #[test]
    fn zero_coefficient_reproduces_the_gan_baseline() {
        let (tr, ho, lab) = toy();
        let cfg = TrainConfig { a: 0.0, ..tiny_cfg() };
        let h = Holdout { features: ho.view(), labels: &lab };
        let gan = train(Method::Gan, tr.view(), h, &cfg).unwrap();
        let minl = train(Method::Minlgan, tr.view(), h, &cfg).unwrap();
        let (g1, g2) = (gan.state.gan().unwrap(), minl.state.gan().unwrap());
        assert_eq!(g1.generator, g2.generator);
        assert_eq!(g1.discriminator, g2.discriminator);
        assert_eq!(gan.history.values("d_loss"), minl.history.values("d_loss"));
        assert_eq!(gan.history.values("fm_loss"), minl.history.values("fm_loss"));
        assert_eq!(gan.history.evals, minl.history.evals);
    }

    #[test]
    fn best_auc_never_decreases() {
        let (tr, ho, lab) = toy();
        let cfg = TrainConfig { max_steps: 60, eval_every: 5, ..tiny_cfg() };
        let out = train(Method::Minlgan, tr.view(), Holdout { features: ho.view(), labels: &lab }, &cfg).unwrap();
        assert_eq!(out.history.evals.len(), 12);
        assert!(out.history.evals.windows(2).all(|w| w[1].best_auc >= w[0].best_auc));
        let best = out.state.best.unwrap();
        assert_eq!(best.holdout_auc, out.history.evals.last().unwrap().best_auc);
    }

    #[test]
    fn config_errors() {
        let (tr, ho, lab) = toy();
        let h = Holdout { features: ho.view(), labels: &lab };
        let cfg = TrainConfig { batch_size: 1, ..tiny_cfg() };
        assert!(matches!(train(Method::Gan, tr.view(), h, &cfg).unwrap_err().error, Error::Config(_)));
        let empty = Array2::<f64>::zeros((0, 2));
        let h0 = Holdout { features: empty.view(), labels: &[] };
        assert!(matches!(train(Method::Gan, tr.view(), h0, &tiny_cfg()).unwrap_err().error, Error::Config(_)));
        let normals_only = vec![false; lab.len()];
        let h1 = Holdout { features: ho.view(), labels: &normals_only };
        assert!(matches!(train(Method::Gan, tr.view(), h1, &tiny_cfg()).unwrap_err().error, Error::Config(_)));
    }

    #[test]
    fn divergence_is_an_error_with_partial_history() {
        let (tr, ho, lab) = toy();
        let mut bad = tr.clone();
        bad[[5, 0]] = f64::INFINITY;
        let cfg = TrainConfig { batch_size: 200, ..tiny_cfg() };
        let err = train(Method::Ae, bad.view(), Holdout { features: ho.view(), labels: &lab }, &cfg).unwrap_err();
        assert!(matches!(err.error, Error::Divergence { step: 0, .. }), "{err}");
        assert!(err.history.losses.iter().all(|r| r.value.is_finite()));
    }
}
