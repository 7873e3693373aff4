//! Dense statevector and the gate set used by the generator ansatz.

use num_complex::Complex64;
use serde::Serialize;

use super::{QsimError, MAX_QUBITS};

/// Gate descriptors. Rotation angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, theta: f64 },
    Ry { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
}

/// Amplitudes over the computational basis. Bit `q` of the basis index is
/// the state of qubit `q` (qubit 0 is the least significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The |0…0⟩ state.
    pub fn zero(num_qubits: usize) -> Result<Self, QsimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::QubitCount(num_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalisation.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QsimError> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QsimError::AmplitudeLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::QubitCount(num_qubits));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn check_qubit(&self, q: usize) -> Result<(), QsimError> {
        if q >= self.num_qubits {
            Err(QsimError::QubitIndex {
                index: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<(), QsimError> {
        match *gate {
            Gate::Rx { qubit, theta } => {
                self.check_qubit(qubit)?;
                let (s, c) = (theta / 2.0).sin_cos();
                let m = [
                    [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                    [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
                ];
                self.apply_single(qubit, m);
            }
            Gate::Ry { qubit, theta } => {
                self.check_qubit(qubit)?;
                let (s, c) = (theta / 2.0).sin_cos();
                let m = [
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ];
                self.apply_single(qubit, m);
            }
            Gate::Rz { qubit, theta } => {
                self.check_qubit(qubit)?;
                let (s, c) = (theta / 2.0).sin_cos();
                let lo = Complex64::new(c, -s);
                let hi = Complex64::new(c, s);
                let bit = 1usize << qubit;
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    *amp *= if i & bit == 0 { lo } else { hi };
                }
            }
            Gate::Cz { a, b } => {
                self.check_qubit(a)?;
                self.check_qubit(b)?;
                if a == b {
                    return Err(QsimError::SameQubit(a));
                }
                let mask = (1usize << a) | (1usize << b);
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(QsimError::SameQubit(control));
                }
                let c = 1usize << control;
                let t = 1usize << target;
                for i in 0..self.amplitudes.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amplitudes.swap(i, i | t);
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// ⟨Z⟩ on `qubit`: Σ |amp_b|² · (+1 if bit clear, −1 if set).
    pub fn expectation_z(&self, qubit: usize) -> Result<f64, QsimError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let z: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        Ok(z.clamp(-1.0, 1.0))
    }

    /// JSON array of `[re, im]` pairs, used by the harness `--dump-state` flag.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Pair(f64, f64);
        let pairs: Vec<Pair> = self.amplitudes.iter().map(|a| Pair(a.re, a.im)).collect();
        serde_json::to_value(pairs).expect("amplitudes serialize")
    }
}

/// Free-function form of [`StateVector::expectation_z`].
pub fn expectation_z(state: &StateVector, qubit: usize) -> Result<f64, QsimError> {
    state.expectation_z(qubit)
}

/// Returns a new state with `gate` applied.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector, QsimError> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}
