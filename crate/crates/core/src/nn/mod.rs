//! Dense feed-forward networks with hand-written reverse mode.
//!
//! Besides the usual parameter and input gradients, [`DenseNet::input_gradient_vjp`]
//! differentiates a linear functional of the input gradient with respect to
//! the parameters. The critic's gradient penalty is built on it.

mod adam;

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use adam::{adam_step, AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("expected input of length {expected}, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("expected output gradient of length {expected}, got {got}")]
    OutputLength { expected: usize, got: usize },
    #[error("layer {index}: {message}")]
    Layer { index: usize, message: String },
    #[error("network has no layers")]
    Empty,
    #[error("tape does not belong to this network")]
    TapeMismatch,
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    /// Slope 0.2 for negative inputs.
    LeakyRelu,
    Identity,
    Sigmoid,
}

const LEAKY_SLOPE: f64 = 0.2;

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// First derivative, given the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    fn second_derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => -2.0 * a * (1.0 - a * a),
            Activation::Sigmoid => a * (1.0 - a) * (1.0 - 2.0 * a),
            Activation::Relu | Activation::LeakyRelu | Activation::Identity => 0.0,
        }
    }
}

/// `y = activation(W x + b)` with `W` stored row-major (`outputs × inputs`).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, NnError> {
        let err = |message: String| NnError::Layer { index: 0, message };
        if inputs == 0 || outputs == 0 {
            return Err(err("zero-width layer".into()));
        }
        if weights.len() != inputs * outputs {
            return Err(err(format!(
                "weights have {} entries, expected {}",
                weights.len(),
                inputs * outputs
            )));
        }
        if bias.len() != outputs {
            return Err(err(format!("bias has {} entries, expected {outputs}", bias.len())));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(err("non-finite parameter".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }
    pub fn outputs(&self) -> usize {
        self.outputs
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
    pub fn activation(&self) -> Activation {
        self.activation
    }
    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// `Wᵀ v`
    fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inputs];
        for (row, &d) in self.weights.chunks_exact(self.inputs).zip(v) {
            if d == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * d;
            }
        }
        out
    }

    /// `W v`
    fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .map(|row| row.iter().zip(v).map(|(w, x)| w * x).sum())
            .collect()
    }
}

/// Values recorded by [`DenseNet::forward`]. `activations[0]` is the input
/// and `activations[l + 1]` the output of layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    pre: Vec<Vec<f64>>,
    activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("non-empty tape")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Flat, in [`DenseNet::params`] order.
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

impl DenseNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Empty);
        }
        for (index, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(NnError::Layer {
                    index: index + 1,
                    message: format!(
                        "expects {} inputs but previous layer has {} outputs",
                        pair[1].inputs, pair[0].outputs
                    ),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialized net with `widths = [in, h1, …, out]`; hidden layers
    /// use `hidden`, the last layer `output`.
    pub fn glorot<R: Rng + ?Sized>(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(NnError::Empty);
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let act = if l == last { output } else { hidden };
                Layer::glorot(w[0], w[1], act, rng)
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Flattened parameters: per layer, weights (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::ParamCount {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.bias.len());
            l.weights.copy_from_slice(w);
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Clamps every parameter into `[-c, c]`.
    pub fn clip(&mut self, c: f64) {
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = v.clamp(-c, c);
            }
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape), NnError> {
        if input.len() != self.input_width() {
            return Err(NnError::InputLength {
                expected: self.input_width(),
                got: input.len(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for l in &self.layers {
            let z = l.affine(activations.last().expect("input pushed"));
            let a = z.iter().map(|&v| l.activation.apply(v)).collect();
            pre.push(z);
            activations.push(a);
        }
        let out = activations.last().expect("non-empty").clone();
        Ok((out, Tape { pre, activations }))
    }

    /// Forward pass without recording a tape.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        if input.len() != self.input_width() {
            return Err(NnError::InputLength {
                expected: self.input_width(),
                got: input.len(),
            });
        }
        let mut a = input.to_vec();
        for l in &self.layers {
            a = l.affine(&a).into_iter().map(|z| l.activation.apply(z)).collect();
        }
        Ok(a)
    }

    fn check_tape(&self, tape: &Tape) -> Result<(), NnError> {
        let ok = tape.pre.len() == self.layers.len()
            && tape.activations.len() == self.layers.len() + 1
            && tape.activations[0].len() == self.input_width()
            && self
                .layers
                .iter()
                .zip(&tape.pre)
                .all(|(l, z)| z.len() == l.outputs);
        if ok {
            Ok(())
        } else {
            Err(NnError::TapeMismatch)
        }
    }

    fn check_output_grad(&self, g: &[f64]) -> Result<(), NnError> {
        if g.len() != self.output_width() {
            return Err(NnError::OutputLength {
                expected: self.output_width(),
                got: g.len(),
            });
        }
        Ok(())
    }

    /// Per-layer `δ_l = g_l ⊙ σ'(z_l)` and the gradients `g_l` flowing into
    /// each layer's output, from the top down. Index `l` in both vectors is
    /// layer `l`; the extra trailing entry of `grads` is the input gradient.
    fn backward_signals(&self, tape: &Tape, output_grad: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.layers.len();
        let mut deltas = vec![Vec::new(); n];
        let mut grads = vec![Vec::new(); n + 1];
        grads[n] = output_grad.to_vec();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let delta: Vec<f64> = grads[l + 1]
                .iter()
                .zip(&tape.pre[l])
                .zip(&tape.activations[l + 1])
                .map(|((g, &z), &a)| g * layer.activation.derivative(z, a))
                .collect();
            grads[l] = layer.transpose_mul(&delta);
            deltas[l] = delta;
        }
        (deltas, grads)
    }

    /// Reverse-mode gradients of `output_gradᵀ · f(x)` with respect to all
    /// parameters and the input.
    pub fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<Gradients, NnError> {
        self.check_tape(tape)?;
        self.check_output_grad(output_grad)?;
        let (deltas, mut grads) = self.backward_signals(tape, output_grad);
        let mut params = Vec::with_capacity(self.param_count());
        for (x, delta) in tape.activations.iter().zip(&deltas) {
            for &d in delta {
                params.extend(x.iter().map(|v| d * v));
            }
            params.extend_from_slice(delta);
        }
        let input = std::mem::take(&mut grads[0]);
        Ok(Gradients { params, input })
    }

    /// Gradient with respect to the parameters of
    /// `input_adjoint · ∇ₓ(output_gradᵀ · f(x))`, i.e. how a linear readout
    /// of the input gradient changes with the weights. `output_grad` is held
    /// constant.
    pub fn input_gradient_vjp(
        &self,
        tape: &Tape,
        output_grad: &[f64],
        input_adjoint: &[f64],
    ) -> Result<Vec<f64>, NnError> {
        self.check_tape(tape)?;
        self.check_output_grad(output_grad)?;
        if input_adjoint.len() != self.input_width() {
            return Err(NnError::InputLength {
                expected: self.input_width(),
                got: input_adjoint.len(),
            });
        }
        let n = self.layers.len();
        let (deltas, grads) = self.backward_signals(tape, output_grad);

        let mut w_bar: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
        let mut b_bar: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        let mut z_bar: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();

        // Reverse of the backward sweep, bottom layer first.
        let mut g_bar = input_adjoint.to_vec();
        for l in 0..n {
            let layer = &self.layers[l];
            // g_{l} = W_lᵀ δ_l
            for (i, &d) in deltas[l].iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut w_bar[l][i * layer.inputs..(i + 1) * layer.inputs];
                for (w, gb) in row.iter_mut().zip(&g_bar) {
                    *w += d * gb;
                }
            }
            let delta_bar = layer.mul(&g_bar);
            // δ_l = g_{l+1} ⊙ σ'(z_l)
            let mut next = Vec::with_capacity(layer.outputs);
            for k in 0..layer.outputs {
                let z = tape.pre[l][k];
                let a = tape.activations[l + 1][k];
                z_bar[l][k] +=
                    delta_bar[k] * grads[l + 1][k] * layer.activation.second_derivative(a);
                next.push(delta_bar[k] * layer.activation.derivative(z, a));
            }
            g_bar = next;
        }

        // Reverse of the forward sweep, seeded with the accumulated z̄.
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let x = &tape.activations[l];
            for (i, &zb) in z_bar[l].iter().enumerate() {
                if zb == 0.0 {
                    continue;
                }
                let row = &mut w_bar[l][i * layer.inputs..(i + 1) * layer.inputs];
                for (w, v) in row.iter_mut().zip(x) {
                    *w += zb * v;
                }
                b_bar[l][i] += zb;
            }
            if l > 0 {
                let a_bar = layer.transpose_mul(&z_bar[l]);
                let below = &self.layers[l - 1];
                for k in 0..below.outputs {
                    let z = tape.pre[l - 1][k];
                    let a = tape.activations[l][k];
                    z_bar[l - 1][k] += a_bar[k] * below.activation.derivative(z, a);
                }
            }
        }

        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in w_bar.into_iter().zip(b_bar) {
            out.extend(w);
            out.extend(b);
        }
        Ok(out)
    }
}

/// Free-function form of [`DenseNet::forward`].
pub fn forward(net: &DenseNet, input: &[f64]) -> Result<(Vec<f64>, Tape), NnError> {
    net.forward(input)
}

/// Free-function form of [`DenseNet::backward`].
pub fn backward(net: &DenseNet, tape: &Tape, output_grad: &[f64]) -> Result<Gradients, NnError> {
    net.backward(tape, output_grad)
}

const CHECKPOINT_FORMAT: &str = "qmolgen-densenet";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetRecord {
    format: String,
    version: u32,
    layers: BTreeMap<String, LayerRecord>,
}

impl Serialize for DenseNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                (
                    i.to_string(),
                    LayerRecord {
                        inputs: l.inputs,
                        outputs: l.outputs,
                        activation: l.activation,
                        weights: l.weights.clone(),
                        bias: l.bias.clone(),
                    },
                )
            })
            .collect();
        NetRecord {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            layers,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let rec = NetRecord::deserialize(d)?;
        if rec.format != CHECKPOINT_FORMAT || rec.version != CHECKPOINT_VERSION {
            return Err(D::Error::custom(format!(
                "unsupported network format {} v{}",
                rec.format, rec.version
            )));
        }
        let mut indexed = rec
            .layers
            .into_iter()
            .map(|(k, l)| k.parse::<usize>().map(|i| (i, l)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        indexed.sort_by_key(|(i, _)| *i);
        if indexed.iter().enumerate().any(|(pos, (i, _))| pos != *i) {
            return Err(D::Error::custom("layer indices are not 0..n"));
        }
        let layers = indexed
            .into_iter()
            .map(|(index, l)| {
                Layer::new(l.inputs, l.outputs, l.weights, l.bias, l.activation).map_err(|e| match e {
                    NnError::Layer { message, .. } => NnError::Layer { index, message },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        DenseNet::new(layers).map_err(D::Error::custom)
    }
}
