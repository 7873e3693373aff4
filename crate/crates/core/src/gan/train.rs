use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ArchitectureConfig, LossKind};
use super::losses::{gradient_penalty_with_grad, vanilla_losses, wasserstein_from_scores, SCORE_CLAMP};
use super::model::{CriticModel, GeneratorModel};
use super::GanError;
use crate::dataset::{sample_batch, DatasetSplit};
use crate::metrics::{wasserstein1_1d, BatchStatistics, Embed, FrechetReference};
use crate::nn::{adam_step, AdamConfig, AdamState, NnError};
use crate::qsim::GradientMethod;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    pub iterations: u64,
    pub batch_size: usize,
    pub eval_interval: u64,
    /// Size of the fixed held-out batch used for Fréchet and Wasserstein
    /// evaluation (capped at the dataset size).
    pub eval_samples: usize,
    pub seed: u64,
}

impl TrainOptions {
    pub fn new(iterations: u64, seed: u64) -> Self {
        Self {
            iterations,
            batch_size: 32,
            eval_interval: 10,
            eval_samples: 128,
            seed,
        }
    }

    fn validate(&self) -> Result<(), GanError> {
        if self.iterations == 0 {
            return Err(GanError::ZeroIterations);
        }
        if self.batch_size == 0 || self.eval_interval == 0 || self.eval_samples < 2 {
            return Err(GanError::InvalidConfig(
                "batch_size and eval_interval must be positive and eval_samples at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iteration: u64,
    pub gen_loss: f64,
    pub critic_loss: f64,
    /// Latest Fréchet evaluation; carried forward between evaluations.
    pub frechet: f64,
    /// Latest 1-D Wasserstein estimate between critic scores on the
    /// evaluation batches; carried forward like `frechet`.
    pub wasserstein: f64,
    /// Wall-clock seconds since the start of this run.
    pub seconds: f64,
}

pub const LOG_CSV_HEADER: &str = "iter,gen_loss,critic_loss,frechet,wasserstein,seconds";

impl LogRecord {
    /// One CSV line. With `timing` off the seconds column is 0 so that
    /// reruns are byte-identical.
    pub fn csv_row(&self, timing: bool) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.iteration,
            self.gen_loss,
            self.critic_loss,
            self.frechet,
            self.wasserstein,
            if timing { self.seconds } else { 0.0 }
        )
    }
}

/// Append-only, strictly increasing in iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn push(&mut self, record: LogRecord) -> Result<(), GanError> {
        if let Some(last) = self.records.last() {
            if record.iteration <= last.iteration {
                return Err(GanError::InvalidConfig(format!(
                    "log iteration {} does not follow {}",
                    record.iteration, last.iteration
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self, timing: bool) -> String {
        let mut s = String::from(LOG_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row(timing));
            s.push('\n');
        }
        s
    }
}

/// Counters used to check which Lipschitz mechanism actually ran.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instrumentation {
    pub critic_updates: u64,
    pub generator_updates: u64,
    pub clip_applications: u64,
    pub gp_evaluations: u64,
    pub clamped_scores: u64,
}

/// Everything that changes during training; enough to resume exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainState {
    pub iteration: u64,
    pub generator: GeneratorModel,
    pub critic: CriticModel,
    pub adam_post: AdamState,
    pub adam_angles: AdamState,
    pub adam_critic: AdamState,
    pub last_frechet: f64,
    pub last_wasserstein: f64,
    pub instrumentation: Instrumentation,
}

impl TrainState {
    /// Fresh models drawn from the `Init` stream of `seed`.
    pub fn init(config: &ArchitectureConfig, seed: u64) -> Result<Self, GanError> {
        let mut rng = stream(seed, Purpose::Init, 0);
        let generator = GeneratorModel::init(config, &mut rng)?;
        let critic = CriticModel::init(config, &mut rng)?;
        let gen_cfg = AdamConfig {
            lr: config.generator_lr,
            ..AdamConfig::default()
        };
        let critic_cfg = AdamConfig {
            lr: config.critic_lr,
            ..AdamConfig::default()
        };
        Ok(Self {
            iteration: 0,
            adam_post: AdamState::new(generator.post().param_count(), gen_cfg),
            adam_angles: AdamState::new(generator.angles().len(), gen_cfg),
            adam_critic: AdamState::new(critic.net().param_count(), critic_cfg),
            generator,
            critic,
            last_frechet: f64::NAN,
            last_wasserstein: f64::NAN,
            instrumentation: Instrumentation::default(),
        })
    }
}

pub const CHECKPOINT_FORMAT: &str = "qmolgen-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: ArchitectureConfig,
    pub options: TrainOptions,
    pub state: TrainState,
}

impl Checkpoint {
    pub fn new(config_hash: String, config: ArchitectureConfig, options: TrainOptions, state: TrainState) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash,
            config,
            options,
            state,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, GanError> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| GanError::Checkpoint(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(GanError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                c.format, c.version
            )));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }
}

struct EvalSet {
    real: Vec<Vec<f64>>,
    latents: Vec<Vec<f64>>,
    reference: FrechetReference,
}

fn draw_latents<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn non_finite(iteration: u64, term: &str) -> GanError {
    GanError::NonFinite {
        iteration,
        term: term.to_string(),
    }
}

/// Owns the mutable training state for one run over a borrowed dataset.
pub struct Trainer<'a> {
    config: ArchitectureConfig,
    options: TrainOptions,
    data: &'a DatasetSplit,
    state: TrainState,
    eval: EvalSet,
    started: Instant,
}

impl<'a> Trainer<'a> {
    pub fn new(config: ArchitectureConfig, options: TrainOptions, data: &'a DatasetSplit) -> Result<Self, GanError> {
        let config = config.expand()?;
        let state = TrainState::init(&config, options.seed)?;
        Self::resume(config, options, data, state)
    }

    /// Continues from `state`; iteration numbering picks up where it left off.
    pub fn resume(
        config: ArchitectureConfig,
        options: TrainOptions,
        data: &'a DatasetSplit,
        state: TrainState,
    ) -> Result<Self, GanError> {
        let config = config.expand()?;
        options.validate()?;
        if options.batch_size > data.len() {
            return Err(crate::dataset::DatasetError::BatchTooLarge {
                requested: options.batch_size,
                available: data.len(),
            }
            .into());
        }
        if state.generator.latent_dim() != config.latent_dim() {
            return Err(GanError::Checkpoint("generator does not match the architecture".into()));
        }
        let mut rng = stream(options.seed, Purpose::Evaluation, 0);
        let n = options.eval_samples.min(data.len());
        let real: Vec<Vec<f64>> = sample_batch(data, n, &mut rng)?.iter().map(Embed::embed).collect();
        let latents = draw_latents(&mut rng, n, config.latent_dim());
        let reference = FrechetReference::new(BatchStatistics::from_rows(&real)?)?;
        Ok(Self {
            config,
            options,
            data,
            state,
            eval: EvalSet {
                real,
                latents,
                reference,
            },
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    pub fn options(&self) -> &TrainOptions {
        &self.options
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn into_state(self) -> TrainState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.iteration >= self.options.iterations
    }

    fn embed_fakes(&self, latents: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, GanError> {
        let g = &self.state.generator;
        latents
            .par_iter()
            .map(|z| Ok(g.generate(z)?.embed()))
            .collect()
    }

    /// Fréchet distance of the relaxed generator output against the fixed
    /// evaluation batch, and the 1-D Wasserstein distance between critic
    /// scores on the two.
    pub fn evaluate(&self) -> Result<(f64, f64), GanError> {
        let fake = self.embed_fakes(&self.eval.latents)?;
        let frechet = self.eval.reference.distance(&BatchStatistics::from_rows(&fake)?)?;
        let critic = &self.state.critic;
        let score = |rows: &[Vec<f64>]| rows.iter().map(|x| critic.score(x)).collect::<Result<Vec<_>, _>>();
        let w = wasserstein1_1d(&score(&self.eval.real)?, &score(&fake)?)?;
        Ok((frechet, w))
    }

    fn critic_step<R: Rng + ?Sized>(
        &mut self,
        it: u64,
        data_rng: &mut R,
        latent_rng: &mut R,
        interp_rng: &mut R,
    ) -> Result<f64, GanError> {
        let b = self.options.batch_size;
        let real: Vec<Vec<f64>> = sample_batch(self.data, b, data_rng)?.iter().map(Embed::embed).collect();
        let latents = draw_latents(latent_rng, b, self.config.latent_dim());
        let fake = self.embed_fakes(&latents)?;

        let net = self.state.critic.net();
        let forward = |rows: &[Vec<f64>]| -> Result<Vec<_>, NnError> { rows.par_iter().map(|x| net.forward(x)).collect() };
        let real_fw = forward(&real)?;
        let fake_fw = forward(&fake)?;
        let real_s: Vec<f64> = real_fw.iter().map(|(o, _)| o[0]).collect();
        let fake_s: Vec<f64> = fake_fw.iter().map(|(o, _)| o[0]).collect();
        let n = b as f64;

        let (mut loss, dr, df): (f64, Vec<f64>, Vec<f64>) = match self.config.loss_kind {
            LossKind::Vanilla => {
                let l = vanilla_losses(&real_s, &fake_s)?;
                self.state.instrumentation.clamped_scores += l.clamped as u64;
                let c = |s: f64| s.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
                (
                    l.disc_loss,
                    real_s.iter().map(|&s| -1.0 / (n * c(s))).collect(),
                    fake_s.iter().map(|&s| 1.0 / (n * (1.0 - c(s)))).collect(),
                )
            }
            _ => {
                let (_, critic_loss) = wasserstein_from_scores(&real_s, &fake_s)?;
                (critic_loss, vec![-1.0 / n; b], vec![1.0 / n; b])
            }
        };

        let per_sample: Vec<Vec<f64>> = real_fw
            .par_iter()
            .zip(&dr)
            .chain(fake_fw.par_iter().zip(&df))
            .map(|((_, tape), &g)| net.backward(tape, &[g]).map(|g| g.params))
            .collect::<Result<_, _>>()?;
        let mut grad = vec![0.0; net.param_count()];
        for g in &per_sample {
            add_into(&mut grad, g);
        }

        if self.config.loss_kind == LossKind::WassersteinGp {
            let gp = gradient_penalty_with_grad(
                &self.state.critic,
                &real,
                &fake,
                self.config.gp_coefficient,
                interp_rng,
            )
            .map_err(|e| match e {
                GanError::NonFinite { term, .. } => non_finite(it, &term),
                other => other,
            })?;
            if !gp.penalty.is_finite() {
                return Err(non_finite(it, "gradient penalty"));
            }
            loss += gp.penalty;
            add_into(&mut grad, &gp.param_grad);
            self.state.instrumentation.gp_evaluations += 1;
        }
        if !loss.is_finite() {
            return Err(non_finite(it, "critic loss"));
        }

        let mut params = self.state.critic.net().params();
        adam_step(&mut params, &grad, &mut self.state.adam_critic).map_err(|_| non_finite(it, "critic gradient"))?;
        let critic = self.state.critic.net_mut();
        critic.set_params(&params)?;
        if self.config.loss_kind == LossKind::Wasserstein {
            critic.clip(self.config.clip_value);
            self.state.instrumentation.clip_applications += 1;
        }
        self.state.instrumentation.critic_updates += 1;
        Ok(loss)
    }

    fn generator_step<R: Rng + ?Sized>(&mut self, it: u64, latent_rng: &mut R) -> Result<f64, GanError> {
        let b = self.options.batch_size;
        let n = b as f64;
        let latents = draw_latents(latent_rng, b, self.config.latent_dim());
        let gen = &self.state.generator;
        let critic = self.state.critic.net();
        let loss_kind = self.config.loss_kind;

        let results: Vec<(f64, Vec<f64>, Vec<f64>)> = latents
            .par_iter()
            .map(|z| -> Result<_, GanError> {
                let pass = gen.forward(z)?;
                let (out, tape) = critic.forward(&pass.dense.embed())?;
                let s = out[0];
                let (term, ds) = match loss_kind {
                    LossKind::Vanilla => {
                        let c = s.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
                        (-c.ln(), -1.0 / (n * c))
                    }
                    _ => (-s, -1.0 / n),
                };
                let g_embed = critic.backward(&tape, &[ds])?.input;
                let g = gen.backward(&pass, &g_embed, GradientMethod::ParameterShift)?;
                Ok((term, g.post, g.angles))
            })
            .collect::<Result<_, _>>()?;

        let mut loss = 0.0;
        let mut g_post = vec![0.0; gen.post().param_count()];
        let mut g_angles = vec![0.0; gen.angles().len()];
        for (term, gp, ga) in &results {
            loss += term;
            add_into(&mut g_post, gp);
            add_into(&mut g_angles, ga);
        }
        loss /= n;
        if !loss.is_finite() {
            return Err(non_finite(it, "generator loss"));
        }

        let mut post = gen.post().params();
        adam_step(&mut post, &g_post, &mut self.state.adam_post).map_err(|_| non_finite(it, "generator gradient"))?;
        let mut angles = gen.angles().to_vec();
        if !angles.is_empty() {
            adam_step(&mut angles, &g_angles, &mut self.state.adam_angles)
                .map_err(|_| non_finite(it, "circuit angle gradient"))?;
        }
        self.state.generator.post_mut().set_params(&post)?;
        self.state.generator.set_angles(&angles);
        self.state.instrumentation.generator_updates += 1;
        Ok(loss)
    }

    /// Runs one full iteration: the critic updates, one generator update,
    /// and an evaluation when due.
    pub fn step(&mut self) -> Result<LogRecord, GanError> {
        let it = self.state.iteration + 1;
        let seed = self.options.seed;
        let mut data_rng = stream(seed, Purpose::Data, it);
        let mut latent_rng = stream(seed, Purpose::Latent, it);
        let mut interp_rng = stream(seed, Purpose::Interpolation, it);

        let mut critic_loss = 0.0;
        for _ in 0..self.config.critic_steps() {
            critic_loss = self.critic_step(it, &mut data_rng, &mut latent_rng, &mut interp_rng)?;
        }
        let gen_loss = self.generator_step(it, &mut latent_rng)?;
        self.state.iteration = it;

        let due = it == 1 || it % self.options.eval_interval == 0;
        if due {
            let (f, w) = self.evaluate()?;
            if !f.is_finite() {
                return Err(non_finite(it, "frechet distance"));
            }
            self.state.last_frechet = f;
            self.state.last_wasserstein = w;
        }
        Ok(LogRecord {
            iteration: it,
            gen_loss,
            critic_loss,
            frechet: self.state.last_frechet,
            wasserstein: self.state.last_wasserstein,
            seconds: self.started.elapsed().as_secs_f64(),
        })
    }

    /// Steps until `options.iterations`, passing each record to `on_record`.
    pub fn run(&mut self, mut on_record: impl FnMut(&LogRecord, &Self)) -> Result<TrainingLog, GanError> {
        let mut log = TrainingLog::default();
        while !self.is_done() {
            let r = self.step()?;
            log.push(r)?;
            on_record(&r, self);
        }
        Ok(log)
    }
}

/// Trains from scratch with default options apart from `iterations` and
/// `seed`.
pub fn train(
    config: &ArchitectureConfig,
    dataset: &DatasetSplit,
    iterations: u64,
    seed: u64,
) -> Result<(GeneratorModel, CriticModel, TrainingLog), GanError> {
    let mut options = TrainOptions::new(iterations, seed);
    options.batch_size = options.batch_size.min(dataset.len());
    let mut trainer = Trainer::new(config.clone(), options, dataset)?;
    let log = trainer.run(|_, _| {})?;
    let state = trainer.into_state();
    Ok((state.generator, state.critic, log))
}
