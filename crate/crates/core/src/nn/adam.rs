use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One bias-corrected Adam update. Nothing is modified when the shapes
/// disagree or a gradient is non-finite.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<(), NnError> {
    if params.len() != state.m.len() || grads.len() != params.len() {
        return Err(NnError::ParamCount {
            expected: state.m.len(),
            got: if params.len() != state.m.len() {
                params.len()
            } else {
                grads.len()
            },
        });
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(NnError::NonFiniteGradient { index });
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2, AdamConfig::default());
        adam_step(&mut p, &[0.0, 0.0], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn moves_against_constant_gradient() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1, AdamConfig::default());
        for _ in 0..50 {
            adam_step(&mut p, &[3.0], &mut s).unwrap();
        }
        assert!(p[0] < 0.0);
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut x = vec![1.0];
        let mut s = AdamState::new(
            1,
            AdamConfig {
                lr: 0.01,
                ..AdamConfig::default()
            },
        );
        let mut reached = None;
        for step in 1..=500 {
            let g = 2.0 * x[0];
            adam_step(&mut x, &[g], &mut s).unwrap();
            if reached.is_none() && x[0].abs() < 0.1 {
                reached = Some(step);
            }
        }
        assert!(reached.is_some(), "x = {}", x[0]);
        assert!(x[0].abs() < 0.1);
    }

    #[test]
    fn errors() {
        let mut s = AdamState::new(2, AdamConfig::default());
        let mut p = vec![0.0, 0.0];
        assert_eq!(
            adam_step(&mut p, &[0.0, f64::NAN], &mut s),
            Err(NnError::NonFiniteGradient { index: 1 })
        );
        assert_eq!(s.step, 0);
        assert!(adam_step(&mut p, &[0.0], &mut s).is_err());
        assert!(adam_step(&mut [0.0; 3], &[0.0; 3], &mut s).is_err());
    }
}
