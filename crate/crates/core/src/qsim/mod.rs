//! Statevector simulation of the generator's parameterized circuits.

mod ansatz;
mod gradient;
mod state;

pub use ansatz::{
    patch_state, run_ansatz, CircuitParams, CircuitSpec, Entanglement, FeatureVector,
    ROTATIONS_PER_QUBIT,
};
pub use gradient::{jacobian, parameter_shift_grad, GradientMethod, Jacobian};
pub use state::{apply_gate, expectation_z, Gate, StateVector};

/// Largest register the simulator will allocate (2^20 amplitudes).
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QsimError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },
    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("amplitude vector length {0} is not a power of two >= 2")]
    AmplitudeLength(usize),
    #[error("expected {expected} circuit angles, got {got}")]
    ParamLength { expected: usize, got: usize },
    #[error("expected latent of length {expected}, got {got}")]
    LatentLength { expected: usize, got: usize },
    #[error("latent entry {index} = {value} outside [-1, 1]")]
    LatentRange { index: usize, value: f64 },
    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),
}
