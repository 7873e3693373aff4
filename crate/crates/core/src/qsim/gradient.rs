//! Jacobians of the ansatz readout with respect to the rotation angles.

use std::f64::consts::FRAC_PI_2;

use super::ansatz::{check_latent, run_patch_unchecked, CircuitParams, CircuitSpec};
use super::QsimError;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GradientMethod {
    /// Exact two-term shift rule at ±π/2.
    #[default]
    ParameterShift,
    /// Central finite difference with step `h`.
    FiniteDifference { h: f64 },
}

/// Row-major `features × angles` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Jacobian {
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn get(&self, feature: usize, angle: usize) -> f64 {
        self.data[feature * self.cols + angle]
    }
    pub fn row(&self, feature: usize) -> &[f64] {
        &self.data[feature * self.cols..(feature + 1) * self.cols]
    }

    /// `upstreamᵀ · J`: chains a loss gradient over features onto the angles.
    pub fn vjp(&self, upstream: &[f64]) -> Vec<f64> {
        assert_eq!(upstream.len(), self.rows, "upstream length");
        let mut out = vec![0.0; self.cols];
        for (r, &g) in upstream.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (o, &j) in out.iter_mut().zip(self.row(r)) {
                *o += g * j;
            }
        }
        out
    }
}

/// Parameter-shift Jacobian: entry (i, j) is
/// `[f_i(θ_j + π/2) − f_i(θ_j − π/2)] / 2`.
pub fn parameter_shift_grad(
    spec: &CircuitSpec,
    params: &CircuitParams,
    latent: &[f64],
) -> Result<Jacobian, QsimError> {
    jacobian(spec, params, latent, GradientMethod::ParameterShift)
}

pub fn jacobian(
    spec: &CircuitSpec,
    params: &CircuitParams,
    latent: &[f64],
    method: GradientMethod,
) -> Result<Jacobian, QsimError> {
    params.check(spec)?;
    check_latent(spec, latent)?;
    let (shift, scale) = match method {
        GradientMethod::ParameterShift => (FRAC_PI_2, 0.5),
        GradientMethod::FiniteDifference { h } => (h, 0.5 / h),
    };
    let n = spec.num_qubits();
    let per_patch = spec.angles_per_patch();
    let rows = spec.feature_width();
    let cols = spec.num_angles();
    let mut data = vec![0.0; rows * cols];
    let angles = params.angles();

    // Features of patch p depend only on the angles of patch p.
    for p in 0..spec.num_patches() {
        let base = p * per_patch;
        let z = &latent[p * n..(p + 1) * n];
        let mut local = angles[base..base + per_patch].to_vec();
        for k in 0..per_patch {
            let orig = local[k];
            local[k] = orig + shift;
            let plus = run_patch_unchecked(spec, &local, z)?;
            local[k] = orig - shift;
            let minus = run_patch_unchecked(spec, &local, z)?;
            local[k] = orig;
            for q in 0..n {
                data[(p * n + q) * cols + base + k] = (plus[q] - minus[q]) * scale;
            }
        }
    }
    Ok(Jacobian { rows, cols, data })
}
