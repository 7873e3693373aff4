use rand::Rng;

use super::model::CriticModel;
use super::GanError;

/// Sigmoid scores are clamped to `[SCORE_CLAMP, 1 − SCORE_CLAMP]`.
pub const SCORE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanillaLosses {
    pub gen_loss: f64,
    pub disc_loss: f64,
    /// Number of scores that had to be clamped.
    pub clamped: usize,
}

fn clamp_score(s: f64, clamped: &mut usize) -> f64 {
    let c = s.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
    if c != s {
        *clamped += 1;
    }
    c
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// Non-saturating cross-entropy losses on sigmoid critic scores.
pub fn vanilla_losses(real: &[f64], fake: &[f64]) -> Result<VanillaLosses, GanError> {
    if real.is_empty() || fake.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let mut clamped = 0;
    let r: Vec<f64> = real.iter().map(|&s| clamp_score(s, &mut clamped)).collect();
    let f: Vec<f64> = fake.iter().map(|&s| clamp_score(s, &mut clamped)).collect();
    if clamped > 0 {
        log::debug!("clamped {clamped} critic scores");
    }
    let disc_loss = -mean(r.iter().map(|d| d.ln()), r.len()) - mean(f.iter().map(|d| (1.0 - d).ln()), f.len());
    let gen_loss = -mean(f.iter().map(|d| d.ln()), f.len());
    Ok(VanillaLosses {
        gen_loss,
        disc_loss,
        clamped,
    })
}

fn check_pair(real: usize, fake: usize) -> Result<(), GanError> {
    if real == 0 || fake == 0 {
        return Err(GanError::EmptyBatch);
    }
    if real != fake {
        return Err(GanError::BatchMismatch(real, fake));
    }
    Ok(())
}

/// `(gen_loss, critic_loss) = (−mean f(fake), mean f(fake) − mean f(real))`.
pub fn wasserstein_from_scores(real: &[f64], fake: &[f64]) -> Result<(f64, f64), GanError> {
    check_pair(real.len(), fake.len())?;
    let mr = mean(real.iter().copied(), real.len());
    let mf = mean(fake.iter().copied(), fake.len());
    Ok((-mf, mf - mr))
}

pub fn wasserstein_losses(
    critic: &CriticModel,
    real: &[Vec<f64>],
    fake: &[Vec<f64>],
) -> Result<(f64, f64), GanError> {
    check_pair(real.len(), fake.len())?;
    let score = |b: &[Vec<f64>]| b.iter().map(|x| critic.score(x)).collect::<Result<Vec<_>, _>>();
    wasserstein_from_scores(&score(real)?, &score(fake)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyOutput {
    pub penalty: f64,
    /// Gradient of `penalty` with respect to the critic parameters.
    pub param_grad: Vec<f64>,
    /// `‖∇f(x̂)‖₂` for each interpolate.
    pub grad_norms: Vec<f64>,
}

/// `k · mean (‖∇f(x̂)‖₂ − 1)²` over interpolates `x̂ = ε·real + (1 − ε)·fake`
/// with one `ε ~ U(0, 1)` per pair, together with its parameter gradient.
pub fn gradient_penalty_with_grad<R: Rng + ?Sized>(
    critic: &CriticModel,
    real: &[Vec<f64>],
    fake: &[Vec<f64>],
    k: f64,
    rng: &mut R,
) -> Result<PenaltyOutput, GanError> {
    check_pair(real.len(), fake.len())?;
    if !(k > 0.0) {
        return Err(GanError::InvalidConfig("gp_coefficient must be positive".into()));
    }
    let n = real.len() as f64;
    let net = critic.net();
    let mut penalty = 0.0;
    let mut param_grad = vec![0.0; net.param_count()];
    let mut grad_norms = Vec::with_capacity(real.len());
    for (xr, xf) in real.iter().zip(fake) {
        let eps: f64 = rng.random();
        let x: Vec<f64> = xr.iter().zip(xf).map(|(r, f)| eps * r + (1.0 - eps) * f).collect();
        let (_, tape) = net.forward(&x)?;
        let g = net.backward(&tape, &[1.0])?.input;
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(GanError::NonFinite {
                iteration: 0,
                term: "gradient penalty input gradient".into(),
            });
        }
        penalty += (norm - 1.0).powi(2);
        grad_norms.push(norm);
        if norm > 0.0 {
            let scale = k * 2.0 * (norm - 1.0) / (n * norm);
            let u: Vec<f64> = g.iter().map(|v| v * scale).collect();
            let dp = net.input_gradient_vjp(&tape, &[1.0], &u)?;
            for (a, b) in param_grad.iter_mut().zip(dp) {
                *a += b;
            }
        }
    }
    Ok(PenaltyOutput {
        penalty: k * (penalty / n),
        param_grad,
        grad_norms,
    })
}

pub fn gradient_penalty<R: Rng + ?Sized>(
    critic: &CriticModel,
    real: &[Vec<f64>],
    fake: &[Vec<f64>],
    k: f64,
    rng: &mut R,
) -> Result<f64, GanError> {
    Ok(gradient_penalty_with_grad(critic, real, fake, k, rng)?.penalty)
}
