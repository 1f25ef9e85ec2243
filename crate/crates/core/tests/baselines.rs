use minlgan::nets::{Activation, Architecture, Discriminator, Encoder, Generator, Mlp, NetworkSpec, NoiseModel, Vae};
use minlgan::rng::stream;
use minlgan::score::{score_ae, score_vae};
use minlgan::train::{elbo, min_likelihood_objective, train_ae, Holdout, ModelState, TrainConfig};
use ndarray::{array, Array2};

fn small_ae_config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 5e-3,
        beta1: 0.9,
        batch_size: 2,
        max_steps: 4000,
        eval_every: 4000,
        seed,
        architecture: Architecture {
            hidden: vec![16],
            code_dim: Some(2),
            ..Architecture::default()
        },
        ..TrainConfig::default()
    }
}

fn overfit_error(train: &Array2<f64>) -> Vec<f64> {
    let hold = array![[0.0, 0.0], [5.0, 5.0]];
    let out = train_ae(
        train.view(),
        Holdout {
            features: hold.view(),
            labels: &[false, true],
        },
        &small_ae_config(4),
    )
    .unwrap();
    let ModelState::Ae(s) = &out.state.model else { unreachable!() };
    score_ae(&s.autoencoder, train.view()).unwrap().scores
}

#[test]
fn autoencoder_overfits_two_points() {
    let x = array![[0.6, -1.1], [-0.4, 0.9]];
    for e in overfit_error(&x) {
        assert!(e < 1e-3, "reconstruction error {e}");
    }
}

#[test]
fn autoencoder_overfits_a_repeated_point() {
    let x = Array2::from_shape_fn((8, 2), |(_, j)| [0.3, -0.7][j]);
    for e in overfit_error(&x) {
        assert!(e < 1e-3, "reconstruction error {e}");
    }
}

#[test]
fn standard_normal_encoder_has_zero_kl() {
    let mut rng = stream(1, 1);
    let mut vae = Vae::new(&Architecture::default(), 3, &mut rng).unwrap();
    vae.encoder = Encoder::from_net(Mlp::zeros(vae.encoder.net.spec().clone()).unwrap()).unwrap();
    let x = array![[0.1, 0.2, 0.3], [2.0, -1.0, 0.5]];
    let eps = minlgan::rng::standard_normal(&mut rng, 2, vae.latent_dim());
    let ev = elbo(&vae.encoder, &vae.decoder, &NoiseModel::default(), x.view(), &eps).unwrap();
    assert_eq!(ev.kl, 0.0);
    assert_eq!(ev.elbo, ev.reconstruction);
}

#[test]
fn more_vae_samples_give_a_less_variable_score() {
    let vae = Vae::new(&Architecture::default(), 4, &mut stream(2, 0)).unwrap();
    let noise = NoiseModel::default();
    let x = array![[0.5, -0.5, 1.0, 0.0]];
    let spread = |n: usize| {
        let draws: Vec<f64> = (0..100)
            .map(|r| score_vae(&vae, &noise, x.view(), n, &mut stream(r, 9)).unwrap().scores[0])
            .collect();
        let m = draws.iter().sum::<f64>() / 100.0;
        draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / 99.0
    };
    let (v8, v16, v32) = (spread(8), spread(16), spread(32));
    assert!(v16 < v8 && v32 < v16, "variances {v8} {v16} {v32}");
}

/// Identity generator, zero discriminator and an encoder whose mean head is
/// the identity, so that with `eps = 0` the penalty sample `G(z_q)` is `x + offset`.
fn penalty_setup(offset: f64) -> (Discriminator, Generator, Encoder) {
    let mut g = Mlp::zeros(NetworkSpec::new(vec![2, 2], Activation::Identity)).unwrap();
    g.layers_mut()[0].weight = Array2::eye(2);
    g.layers_mut()[0].bias.fill(offset);
    let dspec = NetworkSpec::new(vec![2, 3, 1], Activation::Tanh).with_feature_layer(0);
    let d = Discriminator::from_net(Mlp::zeros(dspec).unwrap()).unwrap();
    let mut e = Mlp::zeros(NetworkSpec::new(vec![2, 4], Activation::Identity)).unwrap();
    e.layers_mut()[0].weight = array![[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
    (d, Generator::from_net(g).unwrap(), Encoder::from_net(e).unwrap())
}

#[test]
fn penalty_peaks_when_the_generator_hits_the_data() {
    let noise = NoiseModel::default();
    let x = array![[0.2, -0.3], [1.0, 0.4]];
    let eps = Array2::zeros((2, 2));
    let (d, g, e) = penalty_setup(0.0);
    let ev = min_likelihood_objective(&d, &g, &e, &noise, 1.0, x.view(), x.view(), &eps).unwrap();
    assert!((ev.likelihood_penalty - noise.log_density_peak(2)).abs() < 1e-12);

    // Slightly off the data, a descent step on the penalty moves G(z_q) further away.
    let (d, mut g, e) = penalty_setup(0.01);
    let before = min_likelihood_objective(&d, &g, &e, &noise, 1.0, x.view(), x.view(), &eps).unwrap();
    assert_eq!(before.feature_matching, 0.0);
    let mut flat = g.net.to_flat();
    for (p, gr) in flat.iter_mut().zip(before.generator_grad.to_flat()) {
        *p -= 1e-4 * gr;
    }
    g.net.set_flat(&flat).unwrap();
    let after = min_likelihood_objective(&d, &g, &e, &noise, 1.0, x.view(), x.view(), &eps).unwrap();
    assert!(after.likelihood_penalty < before.likelihood_penalty);
    let moved = g.generate(x.view()).unwrap() - &x;
    assert!(moved.iter().all(|v| *v > 0.01));
}
