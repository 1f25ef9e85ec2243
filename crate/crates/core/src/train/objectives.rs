//! Loss values and analytic parameter gradients. All randomness (prior draws
//! `z`, reparameterization noise `eps`) is an explicit argument so the
//! functions are deterministic and can be checked against finite differences.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::nets::{column_means, gaussian_kl, reparameterize, Discriminator, Encoder, Generator, Mlp, MlpGrad, NoiseModel};

/// `log(sigmoid(v))` without overflow.
pub fn log_sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        -(-v).exp().ln_1p()
    } else {
        v - v.exp().ln_1p()
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Discriminator objective `E log D(x) + E log(1 - D(G(z)))` on a real and a
/// fake batch, with the gradient of its negation (the binary cross-entropy)
/// with respect to the discriminator parameters.
pub fn discriminator_objective(
    d: &Discriminator,
    real: ArrayView2<f64>,
    fake: ArrayView2<f64>,
) -> Result<(f64, MlpGrad)> {
    if real.nrows() == 0 || fake.nrows() == 0 {
        return Err(Error::InvalidArgument("discriminator batches must be nonempty".into()));
    }
    let (nr, nf) = (real.nrows() as f64, fake.nrows() as f64);
    let fr = d.net.forward(real)?;
    let ff = d.net.forward(fake)?;
    let lr = fr.output().column(0);
    let lf = ff.output().column(0);
    let value = lr.iter().map(|&l| log_sigmoid(l)).sum::<f64>() / nr
        + lf.iter().map(|&l| log_sigmoid(-l)).sum::<f64>() / nf;

    let last = d.net.layers().len() - 1;
    let g_real = lr.mapv(|l| (sigmoid(l) - 1.0) / nr).insert_axis(Axis(1));
    let g_fake = lf.mapv(|l| sigmoid(l) / nf).insert_axis(Axis(1));
    let (mut grad, _) = d.net.backward(&fr, &[(last, g_real.view())]);
    let (grad_f, _) = d.net.backward(&ff, &[(last, g_fake.view())]);
    grad.add_assign(&grad_f);
    Ok((value, grad))
}

/// Feature-matching distance `|| mean f(real) - mean f(G(z)) ||` and its
/// gradient with respect to the generator parameters.
pub fn feature_matching(
    d: &Discriminator,
    g: &Generator,
    real: ArrayView2<f64>,
    z: ArrayView2<f64>,
) -> Result<(f64, MlpGrad)> {
    if real.nrows() == 0 || z.nrows() == 0 {
        return Err(Error::InvalidArgument("feature-matching batches must be nonempty".into()));
    }
    let feat = d.feature_layer();
    let real_features = d.net.forward(real)?.layer_output(feat).clone();
    let gf = g.net.forward(z)?;
    let df = d.net.forward(gf.output().view())?;
    let diff = column_means(df.layer_output(feat)) - column_means(&real_features);
    let norm = diff.dot(&diff).sqrt();

    let mut grad = MlpGrad::zeros_like(&g.net);
    if norm > 0.0 {
        let nf = z.nrows();
        let row = &diff / (norm * nf as f64);
        let seed = row.broadcast((nf, row.len())).expect("row broadcast").to_owned();
        let (_, dx) = d.net.backward(&df, &[(feat, seed.view())]);
        let last = g.net.layers().len() - 1;
        grad = g.net.backward(&gf, &[(last, dx.view())]).0;
    }
    Ok((norm, grad))
}

/// Batch-mean ELBO with a decoder `dec` and observation noise `noise`,
/// `mean_i [ log p(x_i | dec(z_i)) - KL(q(z | x_i) || N(0, I)) ]` where
/// `z_i = mu_i + exp(log_var_i / 2) * eps_i`.
#[derive(Clone, Debug)]
pub struct ElboEval {
    pub elbo: f64,
    pub reconstruction: f64,
    pub kl: f64,
    /// Gradient of `-elbo` with respect to the encoder parameters.
    pub encoder_grad: MlpGrad,
    /// Gradient of `-elbo` with respect to the decoder parameters.
    pub decoder_grad: MlpGrad,
}

pub fn elbo(
    encoder: &Encoder,
    decoder: &Mlp,
    noise: &NoiseModel,
    x: ArrayView2<f64>,
    eps: &Array2<f64>,
) -> Result<ElboEval> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("ELBO batch must be nonempty".into()));
    }
    let nf = n as f64;
    let fe = encoder.net.forward(x)?;
    let (mu, log_var) = encoder.split_heads(fe.output());
    if eps.dim() != mu.dim() {
        return Err(Error::shape(format!("{:?} noise", mu.dim()), format!("{:?}", eps.dim())));
    }
    let z = reparameterize(&mu, &log_var, eps);
    let fd = decoder.forward(z.view())?;
    let x_owned = x.to_owned();
    let rec = noise.log_cond_density(&x_owned, fd.output())?;
    let kl = gaussian_kl(&mu, &log_var);
    let reconstruction = rec.sum() / nf;
    let kl_mean = kl.sum() / nf;

    let d_gz = noise.grad_wrt_mean(&x_owned, fd.output())? * (-1.0 / nf);
    let dec_last = decoder.layers().len() - 1;
    let (decoder_grad, dz) = decoder.backward(&fd, &[(dec_last, d_gz.view())]);
    let std = log_var.mapv(|v| (0.5 * v).exp());
    let d_mu = &dz + &(&mu / nf);
    let d_lv = &dz * eps * &std * 0.5 + &(log_var.mapv(|v| v.exp() - 1.0) * (0.5 / nf));
    let seed = concatenate(Axis(1), &[d_mu.view(), d_lv.view()]).expect("matching rows");
    let enc_last = encoder.net.layers().len() - 1;
    let (encoder_grad, _) = encoder.net.backward(&fe, &[(enc_last, seed.view())]);
    Ok(ElboEval {
        elbo: reconstruction - kl_mean,
        reconstruction,
        kl: kl_mean,
        encoder_grad,
        decoder_grad,
    })
}

/// Per-row ELBO without gradients.
pub fn elbo_per_sample(
    encoder: &Encoder,
    decoder: &Mlp,
    noise: &NoiseModel,
    x: ArrayView2<f64>,
    eps: &Array2<f64>,
) -> Result<Array1<f64>> {
    let (mu, log_var) = encoder.encode(x)?;
    let z = reparameterize(&mu, &log_var, eps);
    let gz = decoder.predict(z.view())?;
    Ok(noise.log_cond_density(&x.to_owned(), &gz)? - gaussian_kl(&mu, &log_var))
}

#[derive(Clone, Debug)]
pub struct MinLikelihoodEval {
    pub feature_matching: f64,
    /// Batch mean of `log p(x | G(z_q))` with `z_q` drawn from the encoder.
    pub likelihood_penalty: f64,
    /// `feature_matching + a * likelihood_penalty`.
    pub total: f64,
    pub generator_grad: MlpGrad,
}

/// Generator objective of the minimum-likelihood GAN,
/// `|| mean f(x) - mean f(G(z)) || + a * mean_x log p(x | G(z_q(x)))`,
/// where `z_q(x) = mu(x) + exp(log_var(x) / 2) * eps` and the encoder is held
/// fixed. Minimizing the second term pushes `G(z_q)` away from the data.
#[allow(clippy::too_many_arguments)]
pub fn min_likelihood_objective(
    d: &Discriminator,
    g: &Generator,
    e: &Encoder,
    noise: &NoiseModel,
    a: f64,
    real: ArrayView2<f64>,
    z: ArrayView2<f64>,
    eps: &Array2<f64>,
) -> Result<MinLikelihoodEval> {
    let (fm, mut grad) = feature_matching(d, g, real, z)?;
    let (mu, log_var) = e.encode(real)?;
    if eps.dim() != mu.dim() {
        return Err(Error::shape(format!("{:?} noise", mu.dim()), format!("{:?}", eps.dim())));
    }
    let zq = reparameterize(&mu, &log_var, eps);
    let gq = g.net.forward(zq.view())?;
    let x = real.to_owned();
    let penalty = noise.log_cond_density(&x, gq.output())?.mean().unwrap_or(0.0);
    if a != 0.0 {
        let seed = noise.grad_wrt_mean(&x, gq.output())? * (a / real.nrows() as f64);
        let last = g.net.layers().len() - 1;
        let (pg, _) = g.net.backward(&gq, &[(last, seed.view())]);
        grad.add_assign(&pg);
    }
    Ok(MinLikelihoodEval {
        feature_matching: fm,
        likelihood_penalty: penalty,
        total: fm + a * penalty,
        generator_grad: grad,
    })
}

/// Mean over the batch of the per-sample mean squared reconstruction error,
/// with gradients for encoder and decoder.
pub fn reconstruction_loss(encoder: &Mlp, decoder: &Mlp, x: ArrayView2<f64>) -> Result<(f64, MlpGrad, MlpGrad)> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("reconstruction batch must be nonempty".into()));
    }
    let fe = encoder.forward(x)?;
    let fd = decoder.forward(fe.output().view())?;
    let resid = fd.output() - &x;
    let scale = (n * x.ncols()) as f64;
    let loss = resid.iter().map(|r| r * r).sum::<f64>() / scale;
    let d_out = resid * (2.0 / scale);
    let (dec_grad, d_code) = decoder.backward(&fd, &[(decoder.layers().len() - 1, d_out.view())]);
    let (enc_grad, _) = encoder.backward(&fe, &[(encoder.layers().len() - 1, d_code.view())]);
    Ok((loss, enc_grad, dec_grad))
}
