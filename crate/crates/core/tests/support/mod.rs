//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls the gradient or AUC code under
//! test; the oracles work from function values and pair counts only.

#![allow(dead_code)]

use minlgan::nets::{Activation, Discriminator, Encoder, Generator, Mlp, MlpGrad, NetworkSpec, NoiseFamily, NoiseModel};
use minlgan::rng::{standard_normal, stream};
use minlgan::train::{discriminator_objective, elbo, elbo_per_sample, feature_matching, min_likelihood_objective};
use ndarray::{Array1, Array2};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-4;

/// Central differences of `f` around `theta`.
pub fn central_differences(theta: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            p[i] = theta[i] + FD_STEP;
            let up = f(&p);
            p[i] = theta[i] - FD_STEP;
            let down = f(&p);
            p[i] = theta[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Largest componentwise relative error, with the denominator floored at
/// `1e-6` so that components that are zero both ways compare as equal.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn with_flat(net: &Mlp, flat: &[f64]) -> Mlp {
    let mut m = net.clone();
    m.set_flat(flat).unwrap();
    m
}

fn grad_flat(g: &MlpGrad) -> Vec<f64> {
    g.to_flat()
}

/// Small random network shapes for gradient checks.
pub struct Case {
    pub data_dim: usize,
    pub latent_dim: usize,
    pub batch: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub noise: NoiseModel,
    rng: minlgan::rng::StdRng,
}

impl Case {
    pub fn new(seed: u64) -> Self {
        let mut rng = stream(seed, 0x6c);
        let depth = rng.random_range(1..=2);
        let hidden = (0..depth).map(|_| rng.random_range(2..=5)).collect();
        let activation = match rng.random_range(0..3) {
            0 => Activation::Tanh,
            1 => Activation::LeakyRelu(0.2),
            _ => Activation::Relu,
        };
        let family = if rng.random_bool(0.5) { NoiseFamily::Gaussian } else { NoiseFamily::Laplace };
        let noise = NoiseModel::new(family, rng.random_range(0.3..1.0)).unwrap();
        Case {
            data_dim: rng.random_range(1..=3),
            latent_dim: rng.random_range(1..=3),
            batch: rng.random_range(2..=6),
            hidden,
            activation,
            noise,
            rng,
        }
    }

    /// Glorot weights with random biases, so that no unit starts exactly on
    /// an activation kink.
    fn net(&mut self, spec: NetworkSpec) -> Mlp {
        let mut m = Mlp::new(spec, &mut self.rng).unwrap();
        for layer in m.layers_mut() {
            layer.bias.mapv_inplace(|_| self.rng.random_range(-0.5..0.5));
        }
        m
    }

    fn widths(&self, input: usize, output: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(&self.hidden);
        w.push(output);
        w
    }

    pub fn generator(&mut self) -> Generator {
        let spec = NetworkSpec::new(self.widths(self.latent_dim, self.data_dim), self.activation);
        Generator::from_net(self.net(spec)).unwrap()
    }

    pub fn discriminator(&mut self) -> Discriminator {
        let spec = NetworkSpec::new(self.widths(self.data_dim, 1), self.activation);
        let feature = spec.num_layers() - 2;
        Discriminator::from_net(self.net(spec.with_feature_layer(feature))).unwrap()
    }

    pub fn encoder(&mut self) -> Encoder {
        let spec = NetworkSpec::new(self.widths(self.data_dim, 2 * self.latent_dim), self.activation);
        Encoder::from_net(self.net(spec)).unwrap()
    }

    pub fn batch(&mut self, rows: usize, cols: usize) -> Array2<f64> {
        standard_normal(&mut self.rng, rows, cols)
    }
}

/// Discriminator loss (negated objective) with respect to D's parameters.
pub fn d_loss_error(seed: u64) -> f64 {
    let mut c = Case::new(seed);
    let d = c.discriminator();
    let real = c.batch(c.batch, c.data_dim);
    let fake = c.batch(c.batch + 1, c.data_dim);
    let (_, grad) = discriminator_objective(&d, real.view(), fake.view()).unwrap();
    let theta = d.net.to_flat();
    let numeric = central_differences(&theta, |p| {
        let dp = Discriminator::from_net(with_flat(&d.net, p)).unwrap();
        -discriminator_objective(&dp, real.view(), fake.view()).unwrap().0
    });
    max_relative_error(&grad_flat(&grad), &numeric)
}

/// Negative ELBO with respect to encoder and decoder parameters jointly.
pub fn elbo_error(seed: u64) -> f64 {
    let mut c = Case::new(seed);
    let e = c.encoder();
    let g = c.generator();
    let x = c.batch(c.batch, c.data_dim);
    let eps = c.batch(c.batch, c.latent_dim);
    let ev = elbo(&e, &g.net, &c.noise, x.view(), &eps).unwrap();
    let ne = e.net.num_params();
    let mut theta = e.net.to_flat();
    theta.extend(g.net.to_flat());
    let numeric = central_differences(&theta, |p| {
        let ep = Encoder::from_net(with_flat(&e.net, &p[..ne])).unwrap();
        let gp = with_flat(&g.net, &p[ne..]);
        -elbo(&ep, &gp, &c.noise, x.view(), &eps).unwrap().elbo
    });
    let mut analytic = grad_flat(&ev.encoder_grad);
    analytic.extend(grad_flat(&ev.decoder_grad));
    max_relative_error(&analytic, &numeric)
}

/// Feature-matching distance with respect to G's parameters.
pub fn feature_matching_error(seed: u64) -> f64 {
    let mut c = Case::new(seed);
    let d = c.discriminator();
    let g = c.generator();
    let real = c.batch(c.batch, c.data_dim);
    let z = c.batch(c.batch + 2, c.latent_dim);
    let (_, grad) = feature_matching(&d, &g, real.view(), z.view()).unwrap();
    let numeric = central_differences(&g.net.to_flat(), |p| {
        let gp = Generator::from_net(with_flat(&g.net, p)).unwrap();
        feature_matching(&d, &gp, real.view(), z.view()).unwrap().0
    });
    max_relative_error(&grad_flat(&grad), &numeric)
}

/// Full minimum-likelihood generator objective with respect to G.
pub fn min_likelihood_error(seed: u64) -> f64 {
    let mut c = Case::new(seed);
    let d = c.discriminator();
    let g = c.generator();
    let e = c.encoder();
    let a = c.rng.random_range(0.05..2.0);
    let real = c.batch(c.batch, c.data_dim);
    let z = c.batch(c.batch + 1, c.latent_dim);
    let eps = c.batch(c.batch, c.latent_dim);
    let ev = min_likelihood_objective(&d, &g, &e, &c.noise, a, real.view(), z.view(), &eps).unwrap();
    let numeric = central_differences(&g.net.to_flat(), |p| {
        let gp = Generator::from_net(with_flat(&g.net, p)).unwrap();
        min_likelihood_objective(&d, &gp, &e, &c.noise, a, real.view(), z.view(), &eps).unwrap().total
    });
    max_relative_error(&grad_flat(&ev.generator_grad), &numeric)
}

/// Log of the trapezoid integral of `exp(log_values)`, computed stably.
fn log_trapezoid(log_values: &[f64], step: f64) -> f64 {
    let m = log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = log_values.len() - 1;
    let s: f64 = log_values
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 || i == last { 0.5 } else { 1.0 } * (v - m).exp())
        .sum();
    m + (s * step).ln()
}

fn std_normal_log_pdf(v: f64) -> f64 {
    -0.5 * v * v - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// `log ∫ N(z; 0, 1) p(x | G(z)) dz` for a 1-D latent and 1-D data by
/// trapezoid quadrature on `[-12, 12]`.
pub fn log_marginal_1d(g: &Generator, noise: &NoiseModel, x: f64) -> f64 {
    const N: usize = 48_001;
    let step = 24.0 / (N - 1) as f64;
    let z = Array2::from_shape_fn((N, 1), |(i, _)| -12.0 + i as f64 * step);
    let gz = g.generate(z.view()).unwrap();
    let xs = Array2::from_elem((N, 1), x);
    let cond = noise.log_cond_density(&xs, &gz).unwrap();
    let terms: Vec<f64> = (0..N).map(|i| std_normal_log_pdf(z[[i, 0]]) + cond[i]).collect();
    log_trapezoid(&terms, step)
}

/// ELBO at `x` with the expectation over `eps ~ N(0, 1)` taken by
/// trapezoid quadrature instead of sampling.
pub fn expected_elbo_1d(e: &Encoder, g: &Generator, noise: &NoiseModel, x: f64) -> f64 {
    const N: usize = 8_001;
    let step = 20.0 / (N - 1) as f64;
    let eps = Array2::from_shape_fn((N, 1), |(i, _)| -10.0 + i as f64 * step);
    let xs = Array2::from_elem((N, 1), x);
    let per = elbo_per_sample(e, &g.net, noise, xs.view(), &eps).unwrap();
    (0..N)
        .map(|i| {
            let w = if i == 0 || i == N - 1 { 0.5 } else { 1.0 };
            w * step * std_normal_log_pdf(eps[[i, 0]]).exp() * per[i]
        })
        .sum()
}

/// `(expected ELBO, quadrature log-marginal)` at `points` test inputs for a
/// random smooth 1-D generator and encoder with Gaussian noise.
pub fn elbo_bound_pairs(seed: u64, points: usize) -> Vec<(f64, f64)> {
    let mut rng = stream(seed, 0xe1b0);
    let g = Generator::from_net(Mlp::new(NetworkSpec::new(vec![1, 6, 6, 1], Activation::Tanh), &mut rng).unwrap()).unwrap();
    let e = Encoder::from_net(Mlp::new(NetworkSpec::new(vec![1, 6, 2], Activation::Tanh), &mut rng).unwrap()).unwrap();
    let noise = NoiseModel::new(NoiseFamily::Gaussian, rng.random_range(0.1..0.5)).unwrap();
    (0..points)
        .map(|_| {
            let z: f64 = rng.random_range(-2.0..2.0);
            let gz = g.generate(Array2::from_elem((1, 1), z).view()).unwrap()[[0, 0]];
            let x = gz + rng.random_range(-0.5..0.5);
            (expected_elbo_1d(&e, &g, &noise, x), log_marginal_1d(&g, &noise, x))
        })
        .collect()
}

/// Probability that a random anomaly outscores a random normal, ties
/// counted half, by enumerating every pair.
pub fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Random score/label instance with both classes present and deliberate ties.
pub fn random_instance(seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = stream(seed, 0xa0c);
    let n = rng.random_range(2..=200);
    let levels = rng.random_range(1..=n.max(2));
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.37 - 5.0).collect();
    (scores, labels)
}

/// Quantile read off the piecewise-linear curve through the knots
/// `(k / (n - 1), v_(k))` of the sorted sample, located by scanning.
pub fn sorted_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.len() == 1 {
        return v[0];
    }
    let last = (v.len() - 1) as f64;
    for k in 0..v.len() - 1 {
        let (p0, p1) = (k as f64 / last, (k + 1) as f64 / last);
        if q <= p1 {
            return v[k] + (q - p0) / (p1 - p0) * (v[k + 1] - v[k]);
        }
    }
    v[v.len() - 1]
}

/// Per-member holdout and test logits for an ensemble of `members`.
pub fn random_logits(rng: &mut impl Rng, members: usize, rows: usize) -> Vec<Array1<f64>> {
    (0..members)
        .map(|_| {
            let scale = rng.random_range(0.1..5.0);
            let shift = rng.random_range(-3.0..3.0);
            (0..rows).map(|_| shift + scale * rng.random_range(-1.0..1.0)).collect()
        })
        .collect()
}
