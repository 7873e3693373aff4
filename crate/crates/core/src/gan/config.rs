use serde::{Deserialize, Serialize};

use super::GanError;
use crate::qsim::{CircuitSpec, Entanglement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Classical,
    HybridQuantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Vanilla,
    Wasserstein,
    WassersteinGp,
}

impl LossKind {
    pub fn is_wasserstein(self) -> bool {
        !matches!(self, LossKind::Vanilla)
    }
}

fn default_gp() -> f64 {
    10.0
}
fn default_clip() -> f64 {
    0.01
}
fn default_post_hidden() -> Vec<usize> {
    vec![64, 128]
}
fn default_critic_hidden() -> Vec<usize> {
    vec![128, 64]
}
fn default_lr() -> f64 {
    1e-3
}

/// A full architecture description. Fields left out of a JSON document take
/// their defaults; `latent_dim` is derived from the circuit for hybrid
/// generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub name: String,
    pub generator_kind: GeneratorKind,
    pub loss_kind: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSpec>,
    #[serde(default)]
    pub latent_dim: Option<usize>,
    /// Penalty weight `k`; read only in `wasserstein_gp` mode.
    #[serde(default = "default_gp")]
    pub gp_coefficient: f64,
    /// Critic weight clip `c`; read only in plain `wasserstein` mode.
    #[serde(default = "default_clip")]
    pub clip_value: f64,
    #[serde(default)]
    pub critic_steps_per_gen_step: Option<usize>,
    #[serde(default = "default_post_hidden")]
    pub post_hidden: Vec<usize>,
    #[serde(default = "default_critic_hidden")]
    pub critic_hidden: Vec<usize>,
    #[serde(default = "default_lr")]
    pub generator_lr: f64,
    #[serde(default = "default_lr")]
    pub critic_lr: f64,
}

impl ArchitectureConfig {
    pub fn new(name: &str, generator_kind: GeneratorKind, loss_kind: LossKind, circuit: Option<CircuitSpec>) -> Self {
        Self {
            name: name.to_string(),
            generator_kind,
            loss_kind,
            circuit,
            latent_dim: None,
            gp_coefficient: default_gp(),
            clip_value: default_clip(),
            critic_steps_per_gen_step: None,
            post_hidden: default_post_hidden(),
            critic_hidden: default_critic_hidden(),
            generator_lr: default_lr(),
            critic_lr: default_lr(),
        }
    }

    /// Validates and fills every derived field, so that two configs that
    /// train identically also compare (and hash) identically.
    pub fn expand(mut self) -> Result<Self, GanError> {
        let bad = |m: &str| Err(GanError::InvalidConfig(m.to_string()));
        let derived_latent = match (self.generator_kind, &self.circuit) {
            (GeneratorKind::HybridQuantum, Some(c)) => c.feature_width(),
            (GeneratorKind::HybridQuantum, None) => return bad("hybrid generator requires a circuit"),
            (GeneratorKind::Classical, Some(_)) => return bad("classical generator takes no circuit"),
            (GeneratorKind::Classical, None) => 8,
        };
        match self.latent_dim {
            None => self.latent_dim = Some(derived_latent),
            Some(0) => return bad("latent_dim must be positive"),
            Some(d) if self.generator_kind == GeneratorKind::HybridQuantum && d != derived_latent => {
                return Err(GanError::InvalidConfig(format!(
                    "latent_dim {d} does not match circuit feature width {derived_latent}"
                )))
            }
            Some(_) => {}
        }
        let steps = *self
            .critic_steps_per_gen_step
            .get_or_insert(if self.loss_kind.is_wasserstein() { 5 } else { 1 });
        if steps == 0 {
            return bad("critic_steps_per_gen_step must be positive");
        }
        if !(self.gp_coefficient > 0.0 && self.gp_coefficient.is_finite()) {
            return bad("gp_coefficient must be positive");
        }
        if !(self.clip_value > 0.0 && self.clip_value.is_finite()) {
            return bad("clip_value must be positive");
        }
        if !(self.generator_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.post_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(self)
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim.unwrap_or_else(|| match &self.circuit {
            Some(c) => c.feature_width(),
            None => 8,
        })
    }

    pub fn critic_steps(&self) -> usize {
        self.critic_steps_per_gen_step
            .unwrap_or(if self.loss_kind.is_wasserstein() { 5 } else { 1 })
    }
}

/// Total feature width shared by every hybrid preset.
const FEATURES: usize = 8;

fn hybrid(name: &str, loss: LossKind, patches: usize, layers: usize) -> ArchitectureConfig {
    let spec = CircuitSpec::new(FEATURES / patches, layers, patches, Entanglement::AllToAll)
        .expect("preset circuit is valid");
    ArchitectureConfig::new(name, GeneratorKind::HybridQuantum, loss, Some(spec))
}

/// The five architectures compared head to head; the grid presets follow.
pub const NAMED_PRESETS: [&str; 5] = ["MolGAN", "QGAN-HG", "QWGAN-HG", "QGAN-HG-GP", "QWGAN-HG-GP"];
const GRID_PATCHES: [usize; 3] = [1, 2, 4];
const GRID_LAYERS: [usize; 2] = [1, 2];

/// Every accepted preset name: the five named architectures followed by the
/// patch × layer grid in both Wasserstein modes.
pub fn preset_names() -> Vec<String> {
    let mut names: Vec<String> = NAMED_PRESETS.iter().map(|s| s.to_string()).collect();
    for prefix in ["QWGAN-HG", "QWGAN-GP-HG"] {
        for p in GRID_PATCHES {
            for l in GRID_LAYERS {
                names.push(format!("{prefix}-P{p}-L{l}"));
            }
        }
    }
    names
}

fn parse_grid(name: &str) -> Option<(LossKind, usize, usize)> {
    let (loss, rest) = if let Some(r) = name.strip_prefix("QWGAN-GP-HG-P") {
        (LossKind::WassersteinGp, r)
    } else {
        (LossKind::Wasserstein, name.strip_prefix("QWGAN-HG-P")?)
    };
    let (p, l) = rest.split_once("-L")?;
    let (p, l) = (p.parse().ok()?, l.parse().ok()?);
    (GRID_PATCHES.contains(&p) && GRID_LAYERS.contains(&l)).then_some((loss, p, l))
}

/// Expands a preset name into a full configuration.
pub fn preset(name: &str) -> Result<ArchitectureConfig, GanError> {
    let config = match name {
        "MolGAN" => ArchitectureConfig::new(name, GeneratorKind::Classical, LossKind::Vanilla, None),
        "QGAN-HG" => hybrid(name, LossKind::Vanilla, 1, 1),
        "QWGAN-HG" => hybrid(name, LossKind::Wasserstein, 1, 1),
        "QGAN-HG-GP" => {
            // alternating single critic update, GAN style
            let mut c = hybrid(name, LossKind::WassersteinGp, 1, 1);
            c.critic_steps_per_gen_step = Some(1);
            c
        }
        "QWGAN-HG-GP" => hybrid(name, LossKind::WassersteinGp, 1, 1),
        _ => match parse_grid(name) {
            Some((loss, p, l)) => hybrid(name, loss, p, l),
            None => {
                return Err(GanError::UnknownPreset {
                    name: name.to_string(),
                    valid: preset_names(),
                })
            }
        },
    };
    config.expand()
}
