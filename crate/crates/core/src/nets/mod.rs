//! Generator, discriminator, variational encoder, autoencoder and VAE.
//!
//! All networks are values; forward passes take `&self` and never touch a
//! random number generator. Stochastic inputs (prior draws, reparameterization
//! noise) are always passed in explicitly.

mod checkpoint;
mod mlp;
mod noise;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, Model, CHECKPOINT_FORMAT};
pub use mlp::{Activation, Dense, Forward, Mlp, MlpGrad, NetworkSpec};
pub use noise::{NoiseFamily, NoiseModel};

use crate::error::{Error, Result};
use crate::rng::standard_normal;

/// Layer sizes shared by the default architectures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Architecture {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub leaky_slope: f64,
    /// Bottleneck width of the AE/VAE baselines; `None` picks `dim / 2`
    /// clamped to `1..=16`.
    pub code_dim: Option<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            latent_dim: 32,
            hidden: vec![64, 64],
            leaky_slope: 0.2,
            code_dim: None,
        }
    }
}

impl Architecture {
    fn widths(&self, input: usize, output: usize) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(input);
        w.extend_from_slice(&self.hidden);
        w.push(output);
        w
    }

    pub fn code_dim_for(&self, data_dim: usize) -> usize {
        self.code_dim.unwrap_or_else(|| (data_dim / 2).clamp(1, 16))
    }

    pub fn generator_spec(&self, data_dim: usize) -> NetworkSpec {
        NetworkSpec::new(self.widths(self.latent_dim, data_dim), Activation::Relu)
    }

    /// Feature layer is the last hidden layer.
    pub fn discriminator_spec(&self, data_dim: usize) -> NetworkSpec {
        let spec = NetworkSpec::new(self.widths(data_dim, 1), Activation::LeakyRelu(self.leaky_slope));
        let feature = spec.num_layers().saturating_sub(2);
        spec.with_feature_layer(feature)
    }

    pub fn encoder_spec(&self, data_dim: usize, latent_dim: usize) -> NetworkSpec {
        NetworkSpec::new(
            self.widths(data_dim, 2 * latent_dim),
            Activation::LeakyRelu(self.leaky_slope),
        )
    }

    fn half_widths(&self, input: usize, output: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(self.hidden.iter().take(1.max(self.hidden.len() / 2)));
        w.push(output);
        w
    }
}

fn check_cols(x: &ArrayView2<f64>, expected: usize) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::shape(format!("{expected} columns"), format!("{} columns", x.ncols())));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub net: Mlp,
    pub latent_dim: usize,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(arch: &Architecture, data_dim: usize, rng: &mut R) -> Result<Self> {
        Generator::from_net(Mlp::new(arch.generator_spec(data_dim), rng)?)
    }

    pub fn from_net(net: Mlp) -> Result<Self> {
        Ok(Generator {
            latent_dim: net.input_dim(),
            net,
        })
    }

    pub fn data_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Draws `n` latent vectors from the standard normal prior.
    pub fn sample_prior<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Array2<f64> {
        standard_normal(rng, n, self.latent_dim)
    }

    pub fn generate(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_cols(&z, self.latent_dim)?;
        self.net.predict(z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub net: Mlp,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(arch: &Architecture, data_dim: usize, rng: &mut R) -> Result<Self> {
        Discriminator::from_net(Mlp::new(arch.discriminator_spec(data_dim), rng)?)
    }

    pub fn from_net(net: Mlp) -> Result<Self> {
        if net.output_dim() != 1 {
            return Err(Error::InvalidArgument(
                "a discriminator must output a single logit".into(),
            ));
        }
        if net.spec().feature_layer_index.is_none() {
            return Err(Error::InvalidArgument(
                "a discriminator needs a feature layer".into(),
            ));
        }
        Ok(Discriminator { net })
    }

    pub fn data_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn feature_layer(&self) -> usize {
        self.net.spec().feature_layer_index.expect("validated at construction")
    }

    /// Pre-sigmoid logits and feature-layer activations.
    pub fn discriminate(&self, x: ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
        let fwd = self.net.forward(x)?;
        let features = fwd.layer_output(self.feature_layer()).clone();
        Ok((fwd.output().column(0).to_owned(), features))
    }

    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        Ok(self.net.predict(x)?.column(0).to_owned())
    }
}

/// Diagonal-Gaussian variational encoder `q(z | x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub net: Mlp,
    pub latent_dim: usize,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(
        arch: &Architecture,
        data_dim: usize,
        latent_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Encoder::from_net(Mlp::new(arch.encoder_spec(data_dim, latent_dim), rng)?)
    }

    pub fn from_net(net: Mlp) -> Result<Self> {
        let out = net.output_dim();
        if !out.is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "encoder output must hold a mean and a log-variance head".into(),
            ));
        }
        Ok(Encoder {
            latent_dim: out / 2,
            net,
        })
    }

    /// Returns `(mu, log_var)`.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let out = self.net.predict(x)?;
        Ok(self.split_heads(&out))
    }

    pub fn split_heads(&self, out: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let l = self.latent_dim;
        (out.slice(s![.., ..l]).to_owned(), out.slice(s![.., l..]).to_owned())
    }
}

/// `z = mu + exp(log_var / 2) * eps`.
pub fn reparameterize(mu: &Array2<f64>, log_var: &Array2<f64>, eps: &Array2<f64>) -> Array2<f64> {
    mu + &(log_var.mapv(|v| (0.5 * v).exp()) * eps)
}

/// Closed-form `KL(N(mu, diag(exp(log_var))) || N(0, I))` per row.
pub fn gaussian_kl(mu: &Array2<f64>, log_var: &Array2<f64>) -> Array1<f64> {
    let mut kl = Array1::zeros(mu.nrows());
    for ((k, m), lv) in kl.iter_mut().zip(mu.rows()).zip(log_var.rows()) {
        *k = 0.5
            * m.iter()
                .zip(lv.iter())
                .map(|(&m, &lv)| m * m + lv.exp() - 1.0 - lv)
                .sum::<f64>();
    }
    kl
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl Autoencoder {
    pub fn new<R: Rng + ?Sized>(arch: &Architecture, data_dim: usize, rng: &mut R) -> Result<Self> {
        let code = arch.code_dim_for(data_dim);
        let enc = NetworkSpec::new(arch.half_widths(data_dim, code), Activation::LeakyRelu(arch.leaky_slope));
        let dec = NetworkSpec::new(arch.half_widths(code, data_dim), Activation::LeakyRelu(arch.leaky_slope));
        Ok(Autoencoder {
            encoder: Mlp::new(enc, rng)?,
            decoder: Mlp::new(dec, rng)?,
        })
    }

    pub fn from_parts(encoder: Mlp, decoder: Mlp) -> Result<Self> {
        if encoder.output_dim() != decoder.input_dim() || decoder.output_dim() != encoder.input_dim() {
            return Err(Error::shape(
                "encoder/decoder widths that compose to the data dimension",
                format!(
                    "{}->{} then {}->{}",
                    encoder.input_dim(),
                    encoder.output_dim(),
                    decoder.input_dim(),
                    decoder.output_dim()
                ),
            ));
        }
        Ok(Autoencoder { encoder, decoder })
    }

    pub fn data_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn ae_forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let code = self.encoder.predict(x)?;
        self.decoder.predict(code.view())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vae {
    pub encoder: Encoder,
    pub decoder: Mlp,
}

/// Output of a VAE pass with an explicit reparameterization draw.
#[derive(Clone, Debug)]
pub struct VaePass {
    pub reconstruction: Array2<f64>,
    pub mu: Array2<f64>,
    pub log_var: Array2<f64>,
}

impl Vae {
    pub fn new<R: Rng + ?Sized>(arch: &Architecture, data_dim: usize, rng: &mut R) -> Result<Self> {
        let code = arch.code_dim_for(data_dim);
        let enc = NetworkSpec::new(
            arch.half_widths(data_dim, 2 * code),
            Activation::LeakyRelu(arch.leaky_slope),
        );
        let dec = NetworkSpec::new(arch.half_widths(code, data_dim), Activation::LeakyRelu(arch.leaky_slope));
        Ok(Vae {
            encoder: Encoder::from_net(Mlp::new(enc, rng)?)?,
            decoder: Mlp::new(dec, rng)?,
        })
    }

    pub fn data_dim(&self) -> usize {
        self.decoder.output_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.latent_dim
    }

    /// Encodes `x`, decodes the reparameterized sample built from `eps`.
    pub fn vae_forward(&self, x: ArrayView2<f64>, eps: &Array2<f64>) -> Result<VaePass> {
        let (mu, log_var) = self.encoder.encode(x)?;
        if eps.dim() != mu.dim() {
            return Err(Error::shape(format!("{:?} noise", mu.dim()), format!("{:?}", eps.dim())));
        }
        let z = reparameterize(&mu, &log_var, eps);
        Ok(VaePass {
            reconstruction: self.decoder.predict(z.view())?,
            mu,
            log_var,
        })
    }
}

/// Row means of a batch, as a single-row matrix-friendly vector.
pub(crate) fn column_means(x: &Array2<f64>) -> Array1<f64> {
    x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()))
}
