//! Patched, layered rotation ansatz.
//!
//! Each patch is an independent circuit on `num_qubits` qubits. A patch
//! starts in |0…0⟩, angle-encodes its slice of the latent vector with
//! `RY(arccos z_i)`, then runs `num_layers` layers of per-qubit
//! RX·RY·RZ rotations followed by a CZ entangler. The patch reads out ⟨Z_i⟩
//! for every qubit; patch outputs are concatenated in patch order.

use serde::{Deserialize, Serialize};

use super::state::{Gate, StateVector};
use super::{QsimError, MAX_QUBITS};

/// Rotations per qubit per layer (RX, RY, RZ).
pub const ROTATIONS_PER_QUBIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entanglement {
    /// CZ on every pair i < j.
    AllToAll,
    /// CZ on (i, i+1 mod n).
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct CircuitSpec {
    num_qubits: usize,
    num_layers: usize,
    num_patches: usize,
    entanglement: Entanglement,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    num_qubits: usize,
    num_layers: usize,
    num_patches: usize,
    entanglement: Entanglement,
}

impl TryFrom<RawSpec> for CircuitSpec {
    type Error = QsimError;
    fn try_from(r: RawSpec) -> Result<Self, QsimError> {
        CircuitSpec::new(r.num_qubits, r.num_layers, r.num_patches, r.entanglement)
    }
}

impl From<CircuitSpec> for RawSpec {
    fn from(s: CircuitSpec) -> Self {
        RawSpec {
            num_qubits: s.num_qubits,
            num_layers: s.num_layers,
            num_patches: s.num_patches,
            entanglement: s.entanglement,
        }
    }
}

impl CircuitSpec {
    pub fn new(
        num_qubits: usize,
        num_layers: usize,
        num_patches: usize,
        entanglement: Entanglement,
    ) -> Result<Self, QsimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::QubitCount(num_qubits));
        }
        if num_layers == 0 {
            return Err(QsimError::InvalidSpec("num_layers must be positive".into()));
        }
        if num_patches == 0 {
            return Err(QsimError::InvalidSpec("num_patches must be positive".into()));
        }
        Ok(Self {
            num_qubits,
            num_layers,
            num_patches,
            entanglement,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }
    pub fn num_layers(&self) -> usize {
        self.num_layers
    }
    pub fn num_patches(&self) -> usize {
        self.num_patches
    }
    pub fn entanglement(&self) -> Entanglement {
        self.entanglement
    }

    /// Width of the latent input and of the feature output.
    pub fn feature_width(&self) -> usize {
        self.num_patches * self.num_qubits
    }

    pub fn angles_per_patch(&self) -> usize {
        self.num_layers * self.num_qubits * ROTATIONS_PER_QUBIT
    }

    pub fn num_angles(&self) -> usize {
        self.num_patches * self.angles_per_patch()
    }

    /// Flat index of rotation `rot` (0 = RX, 1 = RY, 2 = RZ).
    pub fn angle_index(&self, patch: usize, layer: usize, qubit: usize, rot: usize) -> usize {
        ((patch * self.num_layers + layer) * self.num_qubits + qubit) * ROTATIONS_PER_QUBIT + rot
    }

    fn entangling_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_qubits;
        match self.entanglement {
            Entanglement::AllToAll => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
            Entanglement::Ring => match n {
                1 => Vec::new(),
                2 => vec![(0, 1)],
                _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            },
        }
    }
}

/// Trainable rotation angles laid out as `[patch][layer][qubit][rx, ry, rz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    angles: Vec<f64>,
}

impl CircuitParams {
    pub fn new(spec: &CircuitSpec, angles: Vec<f64>) -> Result<Self, QsimError> {
        if angles.len() != spec.num_angles() {
            return Err(QsimError::ParamLength {
                expected: spec.num_angles(),
                got: angles.len(),
            });
        }
        Ok(Self { angles })
    }

    pub fn zeros(spec: &CircuitSpec) -> Self {
        Self {
            angles: vec![0.0; spec.num_angles()],
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub(crate) fn check(&self, spec: &CircuitSpec) -> Result<(), QsimError> {
        if self.angles.len() != spec.num_angles() {
            return Err(QsimError::ParamLength {
                expected: spec.num_angles(),
                got: self.angles.len(),
            });
        }
        Ok(())
    }
}

/// Concatenated per-qubit ⟨Z⟩ readouts; every entry lies in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_latent(spec: &CircuitSpec, latent: &[f64]) -> Result<(), QsimError> {
    if latent.len() != spec.feature_width() {
        return Err(QsimError::LatentLength {
            expected: spec.feature_width(),
            got: latent.len(),
        });
    }
    if let Some((index, &value)) = latent
        .iter()
        .enumerate()
        .find(|(_, v)| !(-1.0..=1.0).contains(*v))
    {
        return Err(QsimError::LatentRange { index, value });
    }
    Ok(())
}

/// Final state of one patch. `patch_angles` is that patch's slice of the
/// parameter vector and `latent` its slice of the latent vector.
pub fn patch_state(
    spec: &CircuitSpec,
    patch_angles: &[f64],
    latent: &[f64],
) -> Result<StateVector, QsimError> {
    let n = spec.num_qubits;
    debug_assert_eq!(patch_angles.len(), spec.angles_per_patch());
    debug_assert_eq!(latent.len(), n);
    let mut state = StateVector::zero(n)?;
    for (qubit, &z) in latent.iter().enumerate() {
        let theta = z.clamp(-1.0, 1.0).acos();
        state.apply(&Gate::Ry { qubit, theta })?;
    }
    let pairs = spec.entangling_pairs();
    for layer in patch_angles.chunks_exact(n * ROTATIONS_PER_QUBIT) {
        for (qubit, rot) in layer.chunks_exact(ROTATIONS_PER_QUBIT).enumerate() {
            state.apply(&Gate::Rx { qubit, theta: rot[0] })?;
            state.apply(&Gate::Ry { qubit, theta: rot[1] })?;
            state.apply(&Gate::Rz { qubit, theta: rot[2] })?;
        }
        for &(a, b) in &pairs {
            state.apply(&Gate::Cz { a, b })?;
        }
    }
    Ok(state)
}

pub(crate) fn run_patch_unchecked(
    spec: &CircuitSpec,
    patch_angles: &[f64],
    latent: &[f64],
) -> Result<Vec<f64>, QsimError> {
    let state = patch_state(spec, patch_angles, latent)?;
    (0..spec.num_qubits)
        .map(|q| state.expectation_z(q))
        .collect()
}

/// Runs every patch and concatenates the ⟨Z⟩ readouts.
pub fn run_ansatz(
    spec: &CircuitSpec,
    params: &CircuitParams,
    latent: &[f64],
) -> Result<FeatureVector, QsimError> {
    params.check(spec)?;
    check_latent(spec, latent)?;
    let per_patch = spec.angles_per_patch();
    let n = spec.num_qubits;
    let mut out = Vec::with_capacity(spec.feature_width());
    for p in 0..spec.num_patches {
        let angles = &params.angles[p * per_patch..(p + 1) * per_patch];
        out.extend(run_patch_unchecked(spec, angles, &latent[p * n..(p + 1) * n])?);
    }
    Ok(FeatureVector(out))
}
