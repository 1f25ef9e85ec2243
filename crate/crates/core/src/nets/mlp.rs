//! Dense feed-forward networks with explicit reverse-mode gradients.
//!
//! Every network in the crate is built from [`Mlp`]. A forward pass returns a
//! [`Forward`] trace holding each layer's input and pre-activation; the
//! backward pass consumes that trace plus gradient "seeds" injected at any
//! layer output, which is how feature-matching losses reach into the middle
//! of the discriminator.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu(f64),
    Tanh,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::LeakyRelu(slope) => {
                if v > 0.0 {
                    v
                } else {
                    slope * v
                }
            }
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation and the output.
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(slope) => {
                if pre > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

/// Architecture of a dense network.
///
/// `layer_widths` lists the input width followed by every layer's output
/// width, so a network with `k` weight layers has `k + 1` widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub output_activation: Option<Activation>,
    /// Index of the weight layer whose post-activation output is exposed as
    /// the feature layer `f(x)`.
    pub feature_layer_index: Option<usize>,
}

impl NetworkSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation) -> Self {
        NetworkSpec {
            layer_widths,
            activation,
            output_activation: None,
            feature_layer_index: None,
        }
    }

    pub fn with_feature_layer(mut self, index: usize) -> Self {
        self.feature_layer_index = Some(index);
        self
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len().saturating_sub(1)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::InvalidArgument(
                "a network needs at least an input and an output width".into(),
            ));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidArgument("layer widths must be positive".into()));
        }
        if let Some(f) = self.feature_layer_index {
            if f + 1 >= self.num_layers() {
                return Err(Error::InvalidArgument(format!(
                    "feature layer {f} must come strictly before the final layer ({} layers)",
                    self.num_layers()
                )));
            }
        }
        Ok(())
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation.unwrap_or(Activation::Identity)
        } else {
            self.activation
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `(fan_in, fan_out)`; rows of the input batch are multiplied on the left.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatMlp", into = "FlatMlp")]
pub struct Mlp {
    spec: NetworkSpec,
    layers: Vec<Dense>,
}

/// Recorded intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl Forward {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    pub fn into_output(self) -> Array2<f64> {
        self.output
    }

    /// Post-activation output of weight layer `layer`.
    pub fn layer_output(&self, layer: usize) -> &Array2<f64> {
        if layer + 1 < self.inputs.len() {
            &self.inputs[layer + 1]
        } else {
            &self.output
        }
    }
}

/// Gradient with the same layout as an [`Mlp`]'s parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<Dense>,
}

impl MlpGrad {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrad {
            layers: net
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrad) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight *= factor;
            l.bias *= factor;
        }
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| {
            [
                l.weight.as_slice().expect("standard layout"),
                l.bias.as_slice().expect("standard layout"),
            ]
        })
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| {
            [
                l.weight.as_slice_mut().expect("standard layout"),
                l.bias.as_slice_mut().expect("standard layout"),
            ]
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().flatten().copied().collect()
    }

    pub fn sq_norm(&self) -> f64 {
        self.slices().flatten().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().flatten().all(|v| v.is_finite())
    }
}

impl Mlp {
    /// Glorot-uniform weights and zero biases drawn from `rng`.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weight: Array2::from_shape_simple_fn((fan_in, fan_out), || {
                        rng.random_range(-limit..limit)
                    }),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Mlp { spec, layers })
    }

    /// Network with every weight and bias set to zero.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Dense {
                weight: Array2::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Mlp { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Forward> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("{} input columns", self.input_dim()),
                format!("{} columns", x.ncols()),
            ));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = current.dot(&layer.weight) + &layer.bias;
            let act = self.spec.activation_of(i);
            let out = z.mapv(|v| act.apply(v));
            inputs.push(current);
            pre.push(z);
            current = out;
        }
        Ok(Forward {
            inputs,
            pre,
            output: current,
        })
    }

    /// Forward pass keeping only the final output.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.into_output())
    }

    /// Reverse pass. `seeds` are `(layer, dL/d output_of_layer)` pairs; seeds
    /// on the same layer accumulate. Returns parameter gradients and the
    /// gradient with respect to the network input.
    pub fn backward(&self, fwd: &Forward, seeds: &[(usize, ArrayView2<f64>)]) -> (MlpGrad, Array2<f64>) {
        let n = fwd.inputs[0].nrows();
        let mut grad = MlpGrad::zeros_like(self);
        let top = seeds.iter().map(|(l, _)| *l).max();
        let Some(top) = top else {
            return (grad, Array2::zeros((n, self.input_dim())));
        };
        let mut upstream: Array2<f64> = Array2::zeros((n, self.spec.layer_widths[top + 1]));
        for layer in (0..=top).rev() {
            for (l, s) in seeds {
                if *l == layer {
                    upstream += s;
                }
            }
            let act = self.spec.activation_of(layer);
            let out = fwd.layer_output(layer);
            let mut dpre = upstream;
            Zip::from(&mut dpre)
                .and(&fwd.pre[layer])
                .and(out)
                .for_each(|g, &p, &o| *g *= act.derivative(p, o));
            grad.layers[layer].weight.assign(&fwd.inputs[layer].t().dot(&dpre));
            grad.layers[layer].bias = dpre.sum_axis(Axis(0));
            upstream = dpre.dot(&self.layers[layer].weight.t());
        }
        (grad, upstream)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| {
            [
                l.weight.as_slice_mut().expect("standard layout"),
                l.bias.as_slice_mut().expect("standard layout"),
            ]
        })
    }

    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| {
            [
                l.weight.as_slice().expect("standard layout"),
                l.bias.as_slice().expect("standard layout"),
            ]
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.params().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(
                format!("{} parameters", self.num_params()),
                flat.len(),
            ));
        }
        let mut it = flat.iter();
        for slice in self.params_mut() {
            for v in slice.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn from_flat(spec: NetworkSpec, flat: &[f64]) -> Result<Self> {
        let mut net = Mlp::zeros(spec)?;
        net.set_flat(flat)?;
        Ok(net)
    }
}

#[derive(Serialize, Deserialize)]
struct FlatMlp {
    spec: NetworkSpec,
    params: Vec<f64>,
}

impl From<Mlp> for FlatMlp {
    fn from(net: Mlp) -> Self {
        FlatMlp {
            params: net.to_flat(),
            spec: net.spec,
        }
    }
}

impl TryFrom<FlatMlp> for Mlp {
    type Error = Error;

    fn try_from(flat: FlatMlp) -> Result<Self> {
        Mlp::from_flat(flat.spec, &flat.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let spec = NetworkSpec::new(vec![3, 5, 2], Activation::Relu);
        let net = Mlp::zeros(spec).unwrap();
        let y = net.predict(array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]].view()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_feature_layer_at_output() {
        let spec = NetworkSpec::new(vec![2, 4, 1], Activation::Relu).with_feature_layer(1);
        assert!(matches!(Mlp::zeros(spec), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = Mlp::zeros(NetworkSpec::new(vec![3, 1], Activation::Identity)).unwrap();
        let err = net.forward(Array2::zeros((2, 4)).view()).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = NetworkSpec::new(vec![4, 6, 3], Activation::Tanh);
        let net = Mlp::new(spec.clone(), &mut rng).unwrap();
        let back = Mlp::from_flat(spec, &net.to_flat()).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = NetworkSpec::new(vec![3, 7, 5, 2], Activation::Tanh).with_feature_layer(1);
        let net = Mlp::new(spec, &mut rng).unwrap();
        let x = Array2::from_shape_fn((4, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
        // L = sum(output) + 0.5 * sum(features)
        let loss = |x: &Array2<f64>| {
            let f = net.forward(x.view()).unwrap();
            f.output().sum() + 0.5 * f.layer_output(1).sum()
        };
        let fwd = net.forward(x.view()).unwrap();
        let ones_out = Array2::ones(fwd.output().raw_dim());
        let half_feat = Array2::from_elem(fwd.layer_output(1).raw_dim(), 0.5);
        let (_, gx) = net.backward(&fwd, &[(2, ones_out.view()), (1, half_feat.view())]);
        let h = 1e-5;
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                let mut xp = x.clone();
                xp[[i, j]] += h;
                let mut xm = x.clone();
                xm[[i, j]] -= h;
                let num = (loss(&xp) - loss(&xm)) / (2.0 * h);
                assert!((num - gx[[i, j]]).abs() < 1e-7, "{num} vs {}", gx[[i, j]]);
            }
        }
    }
}
