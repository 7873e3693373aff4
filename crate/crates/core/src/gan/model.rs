use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ArchitectureConfig, GeneratorKind, LossKind};
use super::GanError;
use crate::metrics::{Embed, EMBED_WIDTH};
use crate::molgraph::{DenseGraph, ATOM_TYPES, BOND_TYPES, N_MAX};
use crate::nn::{Activation, DenseNet, Tape};
use crate::qsim::{jacobian, run_ansatz, CircuitParams, CircuitSpec, GradientMethod};

const ATOM_LOGITS: usize = N_MAX * ATOM_TYPES;
/// Post-net output: atom logits followed by the full bond-logit tensor.
pub const LOGIT_WIDTH: usize = ATOM_LOGITS + N_MAX * N_MAX * BOND_TYPES;

fn softmax(z: &[f64], out: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// `p ⊙ (g − ⟨p, g⟩)`
fn softmax_backward(p: &[f64], g: &[f64], out: &mut [f64]) {
    let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    for ((o, &pi), &gi) in out.iter_mut().zip(p).zip(g) {
        *o = pi * (gi - dot);
    }
}

fn bond_logit(i: usize, j: usize) -> usize {
    ATOM_LOGITS + (i * N_MAX + j) * BOND_TYPES
}

/// Row softmax over atom logits; bond logits are averaged with their
/// transpose, softmaxed per pair, and the diagonal is pinned to "none".
pub fn logits_to_dense(logits: &[f64]) -> Result<DenseGraph, GanError> {
    if logits.len() != LOGIT_WIDTH {
        return Err(GanError::InvalidConfig(format!(
            "expected {LOGIT_WIDTH} logits, got {}",
            logits.len()
        )));
    }
    let mut atoms = vec![[0.0; ATOM_TYPES]; N_MAX];
    for (i, row) in atoms.iter_mut().enumerate() {
        softmax(&logits[i * ATOM_TYPES..(i + 1) * ATOM_TYPES], row);
    }
    let mut bonds = vec![[0.0; BOND_TYPES]; N_MAX * N_MAX];
    for i in 0..N_MAX {
        bonds[i * N_MAX + i][0] = 1.0;
        for j in i + 1..N_MAX {
            let (a, b) = (bond_logit(i, j), bond_logit(j, i));
            let mut sym = [0.0; BOND_TYPES];
            for (t, s) in sym.iter_mut().enumerate() {
                *s = 0.5 * (logits[a + t] + logits[b + t]);
            }
            let mut p = [0.0; BOND_TYPES];
            softmax(&sym, &mut p);
            bonds[i * N_MAX + j] = p;
            bonds[j * N_MAX + i] = p;
        }
    }
    DenseGraph::new(atoms, bonds).map_err(|e| GanError::InvalidConfig(e.to_string()))
}

/// Pulls a gradient on the embedding of `dense` back onto the logits.
fn dense_backward(dense: &DenseGraph, grad: &[f64]) -> Vec<f64> {
    debug_assert_eq!(grad.len(), EMBED_WIDTH);
    let mut out = vec![0.0; LOGIT_WIDTH];
    for (i, p) in dense.atom_probs().iter().enumerate() {
        let r = i * ATOM_TYPES..(i + 1) * ATOM_TYPES;
        softmax_backward(p, &grad[r.clone()], &mut out[r]);
    }
    let mut k = ATOM_LOGITS;
    for i in 0..N_MAX {
        for j in i + 1..N_MAX {
            let mut ds = [0.0; BOND_TYPES];
            softmax_backward(dense.bond_probs(i, j), &grad[k..k + BOND_TYPES], &mut ds);
            let (a, b) = (bond_logit(i, j), bond_logit(j, i));
            for t in 0..BOND_TYPES {
                out[a + t] = 0.5 * ds[t];
                out[b + t] = 0.5 * ds[t];
            }
            k += BOND_TYPES;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantumPart {
    spec: CircuitSpec,
    params: CircuitParams,
}

/// Optional patched circuit followed by the classical post-network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorRepr", into = "GeneratorRepr")]
pub struct GeneratorModel {
    quantum: Option<QuantumPart>,
    post: DenseNet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quantum: Option<QuantumPart>,
    post: DenseNet,
}

impl From<GeneratorModel> for GeneratorRepr {
    fn from(g: GeneratorModel) -> Self {
        Self {
            quantum: g.quantum,
            post: g.post,
        }
    }
}

impl TryFrom<GeneratorRepr> for GeneratorModel {
    type Error = GanError;
    fn try_from(r: GeneratorRepr) -> Result<Self, GanError> {
        Self::new(r.quantum.map(|q| (q.spec, q.params)), r.post)
    }
}

/// Everything a generator backward pass needs from the forward pass.
pub(crate) struct GeneratorPass {
    pub latent: Vec<f64>,
    pub tape: Tape,
    pub dense: DenseGraph,
}

pub(crate) struct GeneratorGrads {
    pub post: Vec<f64>,
    pub angles: Vec<f64>,
}

impl GeneratorModel {
    pub fn new(quantum: Option<(CircuitSpec, CircuitParams)>, post: DenseNet) -> Result<Self, GanError> {
        if let Some((spec, params)) = &quantum {
            if params.len() != spec.num_angles() {
                return Err(GanError::InvalidConfig(format!(
                    "circuit has {} angles, expected {}",
                    params.len(),
                    spec.num_angles()
                )));
            }
            if post.input_width() != spec.feature_width() {
                return Err(GanError::InvalidConfig(format!(
                    "post-net input {} does not match feature width {}",
                    post.input_width(),
                    spec.feature_width()
                )));
            }
        }
        if post.output_width() != LOGIT_WIDTH {
            return Err(GanError::InvalidConfig(format!(
                "post-net output {} is not {LOGIT_WIDTH}",
                post.output_width()
            )));
        }
        Ok(Self {
            quantum: quantum.map(|(spec, params)| QuantumPart { spec, params }),
            post,
        })
    }

    /// Glorot post-net, circuit angles uniform in [−π, π).
    pub fn init<R: Rng + ?Sized>(config: &ArchitectureConfig, rng: &mut R) -> Result<Self, GanError> {
        let quantum = match (config.generator_kind, &config.circuit) {
            (GeneratorKind::HybridQuantum, Some(spec)) => {
                let angles = (0..spec.num_angles())
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect();
                Some((*spec, CircuitParams::new(spec, angles)?))
            }
            (GeneratorKind::HybridQuantum, None) => {
                return Err(GanError::InvalidConfig("hybrid generator requires a circuit".into()))
            }
            (GeneratorKind::Classical, _) => None,
        };
        let mut widths = vec![config.latent_dim()];
        widths.extend(&config.post_hidden);
        widths.push(LOGIT_WIDTH);
        let post = DenseNet::glorot(&widths, Activation::Tanh, Activation::Identity, rng)?;
        Self::new(quantum, post)
    }

    pub fn latent_dim(&self) -> usize {
        self.post.input_width()
    }

    pub fn circuit(&self) -> Option<(&CircuitSpec, &CircuitParams)> {
        self.quantum.as_ref().map(|q| (&q.spec, &q.params))
    }

    pub fn post(&self) -> &DenseNet {
        &self.post
    }

    pub fn angles(&self) -> &[f64] {
        self.quantum.as_ref().map_or(&[], |q| q.params.angles())
    }

    pub(crate) fn set_angles(&mut self, angles: &[f64]) {
        if let Some(q) = &mut self.quantum {
            q.params.angles_mut().copy_from_slice(angles);
        }
    }

    pub(crate) fn post_mut(&mut self) -> &mut DenseNet {
        &mut self.post
    }

    fn check_latent(&self, latent: &[f64]) -> Result<(), GanError> {
        if latent.len() != self.latent_dim() {
            return Err(GanError::LatentLength {
                expected: self.latent_dim(),
                got: latent.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn forward(&self, latent: &[f64]) -> Result<GeneratorPass, GanError> {
        self.check_latent(latent)?;
        let features = match &self.quantum {
            Some(q) => run_ansatz(&q.spec, &q.params, latent)?.0,
            None => latent.to_vec(),
        };
        let (logits, tape) = self.post.forward(&features)?;
        Ok(GeneratorPass {
            latent: latent.to_vec(),
            dense: logits_to_dense(&logits)?,
            tape,
        })
    }

    /// Latent → (circuit) → post-net → softmaxed graph relaxation.
    pub fn generate(&self, latent: &[f64]) -> Result<DenseGraph, GanError> {
        Ok(self.forward(latent)?.dense)
    }

    /// Gradients of `⟨grad, embed(dense)⟩` with respect to the post-net
    /// parameters and the circuit angles.
    pub(crate) fn backward(
        &self,
        pass: &GeneratorPass,
        grad_embed: &[f64],
        method: GradientMethod,
    ) -> Result<GeneratorGrads, GanError> {
        let dlogits = dense_backward(&pass.dense, grad_embed);
        let g = self.post.backward(&pass.tape, &dlogits)?;
        let angles = match &self.quantum {
            Some(q) => jacobian(&q.spec, &q.params, &pass.latent, method)?.vjp(&g.input),
            None => Vec::new(),
        };
        Ok(GeneratorGrads { post: g.params, angles })
    }
}

/// Dense critic over the flattened graph relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseNet", into = "DenseNet")]
pub struct CriticModel {
    net: DenseNet,
}

impl From<CriticModel> for DenseNet {
    fn from(c: CriticModel) -> Self {
        c.net
    }
}

impl TryFrom<DenseNet> for CriticModel {
    type Error = GanError;
    fn try_from(net: DenseNet) -> Result<Self, GanError> {
        Self::new(net)
    }
}

impl CriticModel {
    pub fn new(net: DenseNet) -> Result<Self, GanError> {
        if net.input_width() != EMBED_WIDTH || net.output_width() != 1 {
            return Err(GanError::InvalidConfig(format!(
                "critic must map {EMBED_WIDTH} inputs to 1 output, got {} -> {}",
                net.input_width(),
                net.output_width()
            )));
        }
        Ok(Self { net })
    }

    /// Leaky-ReLU hidden layers; identity output for Wasserstein losses and
    /// sigmoid for the vanilla loss.
    pub fn init<R: Rng + ?Sized>(config: &ArchitectureConfig, rng: &mut R) -> Result<Self, GanError> {
        let mut widths = vec![EMBED_WIDTH];
        widths.extend(&config.critic_hidden);
        widths.push(1);
        let out = match config.loss_kind {
            LossKind::Vanilla => Activation::Sigmoid,
            _ => Activation::Identity,
        };
        Self::new(DenseNet::glorot(&widths, Activation::LeakyRelu, out, rng)?)
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub(crate) fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    pub fn score(&self, input: &[f64]) -> Result<f64, GanError> {
        Ok(self.net.predict(input)?[0])
    }

    pub fn score_graph<T: Embed>(&self, graph: &T) -> Result<f64, GanError> {
        self.score(&graph.embed())
    }
}
