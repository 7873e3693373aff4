use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use qmolgen_core::dataset::{load_sdf, sample_batch, DatasetSplit, LoadReport, Rejection};
use qmolgen_core::gan::{preset_names, Checkpoint, LogRecord, Trainer, TrainingLog, LOG_CSV_HEADER, NAMED_PRESETS};
use qmolgen_core::metrics::{
    batch_embed, batch_quality, chem_scores, frechet_distance, wasserstein1_1d, BatchStatistics, ChemContext,
    MetricsReport, ScoreTables, REPORT_CSV_HEADER, TABLE_VERSION,
};
use qmolgen_core::qsim::patch_state;
use qmolgen_core::rng::{stream, Purpose};
use qmolgen_core::{CriticModel, GeneratorModel, MolecularGraph};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExpandedConfig, RunConfig};
use crate::data::{self, GraphCache, CACHE_FORMAT, CACHE_VERSION};
use crate::error::CliError;

pub const LOG_FILE: &str = "training_log.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.csv";
pub const SAMPLES_FILE: &str = "samples.json";
pub const STATE_DUMP_FILE: &str = "state_dump.json";
pub const CACHE_FILE: &str = "graphs.json";
pub const STATS_FILE: &str = "prepare_stats.json";
pub const COMPARISON_FILE: &str = "comparison.csv";

/// Header of the comparison table: the report columns plus provenance.
pub const COMPARISON_CSV_HEADER: &str = "label,frechet,wasserstein,validity,uniqueness,novelty,diversity,np_score,qed_score,logp_score,sa_score,drug_candidate_score,config_hash,status";
pub const SERIES_CSV_HEADER: &str = "iter,frechet,wasserstein";

fn hash_line(hash: &str) -> String {
    format!("# config_hash: {hash}\n")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(CliError::io(format!("writing {}", path.display())))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    Ok(Checkpoint::from_json(&read_text(path)?)?)
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PrepareSummary {
    pub report: LoadReport,
    pub dataset_sha256: String,
    pub cache_path: PathBuf,
    pub stats_path: PathBuf,
}

fn stats_json(report: &LoadReport, sha: &str) -> String {
    let rejected: BTreeMap<String, usize> = [
        Rejection::TooLarge,
        Rejection::UnsupportedBond,
        Rejection::InvalidValence,
        Rejection::UnsupportedElement,
    ]
    .into_iter()
    .map(|r| (r.to_string(), report.rejected.get(&r).copied().unwrap_or(0)))
    .collect();
    let v = json!({
        "dataset_sha256": sha,
        "blocks": report.blocks,
        "parse_failures": report.parse_failures,
        "accepted": report.accepted,
        "acceptance_rate": report.acceptance_rate(),
        "rejected": rejected,
    });
    serde_json::to_string_pretty(&v).expect("stats serialize") + "\n"
}

/// Parses and filters an SDF file, writing the graph cache and the
/// acceptance statistics into `output`. The statistics are written even
/// when nothing is accepted.
pub fn cmd_prepare(input: &Path, output: &Path) -> Result<PrepareSummary, CliError> {
    let bytes = std::fs::read(input).map_err(CliError::io(format!("reading {}", input.display())))?;
    let (graphs, report) = load_sdf(&bytes);
    let sha = data::graphs_sha256(&graphs);
    let stats_path = output.join(STATS_FILE);
    write_file(&stats_path, &stats_json(&report, &sha))?;
    if graphs.is_empty() {
        let reasons: Vec<String> = report.rejected.iter().map(|(r, n)| format!("{r}: {n}")).collect();
        return Err(CliError::Data(format!(
            "zero accepted molecules in {} ({} blocks, {} parse failures{}{})",
            input.display(),
            report.blocks,
            report.parse_failures,
            if reasons.is_empty() { "" } else { ", " },
            reasons.join(", ")
        )));
    }
    let cache = GraphCache {
        format: CACHE_FORMAT.into(),
        version: CACHE_VERSION,
        dataset_sha256: sha.clone(),
        graphs,
    };
    let cache_path = output.join(CACHE_FILE);
    write_file(&cache_path, &(serde_json::to_string(&cache).expect("cache serializes") + "\n"))?;
    Ok(PrepareSummary {
        report,
        dataset_sha256: sha,
        cache_path,
        stats_path,
    })
}

#[derive(Debug, Clone, Default)]
pub struct TrainFlags {
    pub resume: Option<PathBuf>,
    /// Write real wall-clock seconds into the log instead of 0.
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub config_hash: String,
    /// Records produced by this invocation.
    pub log: TrainingLog,
    pub final_iteration: u64,
    pub output_dir: PathBuf,
    pub log_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Rows of an earlier log up to and including `iteration`, with its
/// preamble. Missing file means starting a fresh log.
fn log_prefix(path: &Path, hash: &str, iteration: u64) -> Result<String, CliError> {
    let fresh = hash_line(hash) + LOG_CSV_HEADER + "\n";
    if !path.exists() {
        return Ok(fresh);
    }
    let text = read_text(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(hash_line(hash).trim_end()) || lines.next() != Some(LOG_CSV_HEADER) {
        return Err(CliError::Data(format!("{} belongs to a different run", path.display())));
    }
    let mut out = fresh;
    for line in lines {
        let it: u64 = line
            .split(',')
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| CliError::Data(format!("{}: bad row {line:?}", path.display())))?;
        if it > iteration {
            break;
        }
        out += line;
        out.push('\n');
    }
    Ok(out)
}

fn manifest(run: &RunConfig, expanded: &ExpandedConfig, hash: &str, started: SystemTime, elapsed: f64) -> String {
    let v = json!({
        "config_hash": hash,
        "seed": run.seed,
        "iterations": run.iterations,
        "dataset_path": run.dataset_path.as_ref().map(|p| p.display().to_string()),
        "config": expanded,
        "versions": {
            "qmolgen": env!("CARGO_PKG_VERSION"),
            "checkpoint": qmolgen_core::gan::CHECKPOINT_VERSION,
            "score_tables": TABLE_VERSION,
        },
        "started_unix_seconds": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "wall_clock_seconds": elapsed,
    });
    serde_json::to_string_pretty(&v).expect("manifest serializes") + "\n"
}

fn save_checkpoint(trainer: &Trainer<'_>, hash: &str, path: &Path) -> Result<(), CliError> {
    let ck = Checkpoint::new(
        hash.to_string(),
        trainer.config().clone(),
        trainer.options().clone(),
        trainer.state().clone(),
    );
    write_file(path, &(ck.to_json() + "\n"))
}

/// Trains one run into `run.output_dir`: `training_log.csv`,
/// `checkpoint.json` (plus `checkpoint_<iter>.json` when
/// `checkpoint_every` is set) and `manifest.json`.
pub fn cmd_train(run: &RunConfig, flags: &TrainFlags) -> Result<TrainSummary, CliError> {
    let started_at = SystemTime::now();
    let clock = Instant::now();
    let data = data::load(run.dataset_path.as_deref())?;
    let expanded = ExpandedConfig::new(run, &data.sha256)?;
    let hash = expanded.hash();
    let split = DatasetSplit::new(data.graphs, run.seed)?;
    let out = run.output_dir.clone();
    let log_path = out.join(LOG_FILE);

    let (mut trainer, mut csv) = match &flags.resume {
        None => (
            Trainer::new(expanded.architecture.clone(), run.train_options(), &split)?,
            hash_line(&hash) + LOG_CSV_HEADER + "\n",
        ),
        Some(p) => {
            let ck = read_checkpoint(p)?;
            if ck.config_hash != hash {
                return Err(CliError::Data(format!(
                    "checkpoint {} has config hash {}, this run has {hash}",
                    p.display(),
                    ck.config_hash
                )));
            }
            let prefix = log_prefix(&log_path, &hash, ck.state.iteration)?;
            log::info!("resuming {} at iteration {}", ck.config.name, ck.state.iteration);
            (Trainer::resume(ck.config, run.train_options(), &split, ck.state)?, prefix)
        }
    };

    let mut log = TrainingLog::default();
    while !trainer.is_done() {
        let r: LogRecord = trainer.step()?;
        csv += &r.csv_row(flags.timing);
        csv.push('\n');
        log.push(r).map_err(CliError::from)?;
        if r.iteration == 1 || r.iteration % run.eval_interval == 0 {
            log::info!(
                "iter {} gen {:.4} critic {:.4} frechet {:.4} w1 {:.4}",
                r.iteration,
                r.gen_loss,
                r.critic_loss,
                r.frechet,
                r.wasserstein
            );
        }
        if let Some(every) = run.checkpoint_every.filter(|&e| e > 0) {
            if r.iteration % every == 0 && !trainer.is_done() {
                save_checkpoint(&trainer, &hash, &out.join(format!("checkpoint_{}.json", r.iteration)))?;
                write_file(&log_path, &csv)?;
            }
        }
    }
    write_file(&log_path, &csv)?;
    let checkpoint_path = out.join(CHECKPOINT_FILE);
    save_checkpoint(&trainer, &hash, &checkpoint_path)?;
    write_file(
        &out.join(MANIFEST_FILE),
        &manifest(run, &expanded, &hash, started_at, clock.elapsed().as_secs_f64()),
    )?;
    Ok(TrainSummary {
        config_hash: hash,
        final_iteration: trainer.state().iteration,
        log,
        output_dir: out,
        log_path,
        checkpoint_path,
    })
}

fn draw_latents(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, Purpose::Sampling, 0);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

fn generate(generator: &GeneratorModel, latents: &[Vec<f64>]) -> Result<Vec<MolecularGraph>, CliError> {
    latents
        .par_iter()
        .map(|z| Ok(generator.generate(z)?.decode()))
        .collect()
}

fn samples_json(hash: &str, seed: u64, mols: &[MolecularGraph]) -> String {
    let v = json!({ "config_hash": hash, "seed": seed, "molecules": mols });
    serde_json::to_string(&v).expect("samples serialize") + "\n"
}

#[derive(Debug, Clone)]
pub struct EvaluateRequest {
    pub checkpoint: PathBuf,
    /// `None` selects the bundled sample.
    pub dataset: Option<PathBuf>,
    pub n_samples: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// When given, the checkpoint must have been trained from this config.
    pub config: Option<RunConfig>,
}

#[derive(Debug, Clone)]
pub struct EvaluateSummary {
    pub config_hash: String,
    pub report: MetricsReport,
    pub report_path: PathBuf,
    pub samples_path: PathBuf,
}

fn score_all(critic: &CriticModel, mols: &[MolecularGraph]) -> Result<Vec<f64>, CliError> {
    mols.par_iter().map(|m| Ok(critic.score_graph(m)?)).collect()
}

/// Samples `n_samples` molecules from a checkpoint and scores them against
/// an equal-size sample of the dataset. Writes `report.csv` and
/// `samples.json` into `output`.
pub fn cmd_evaluate(req: &EvaluateRequest) -> Result<EvaluateSummary, CliError> {
    if req.n_samples == 0 {
        return Err(CliError::Usage("n_samples must be at least 1".into()));
    }
    let ck = read_checkpoint(&req.checkpoint)?;
    if let Some(run) = &req.config {
        let d = data::load(run.dataset_path.as_deref())?;
        let expected = ExpandedConfig::new(run, &d.sha256)?.hash();
        if expected != ck.config_hash {
            return Err(CliError::Data(format!(
                "checkpoint/config mismatch: checkpoint {} has config hash {}, config has {expected}",
                req.checkpoint.display(),
                ck.config_hash
            )));
        }
    }
    let data = data::load(req.dataset.as_deref())?;
    if req.n_samples > data.graphs.len() {
        return Err(CliError::Data(format!(
            "n_samples {} exceeds the {} molecules in the dataset",
            req.n_samples,
            data.graphs.len()
        )));
    }
    let split = DatasetSplit::new(data.graphs, req.seed)?;
    let generator = &ck.state.generator;
    let critic = &ck.state.critic;

    let fakes = generate(generator, &draw_latents(req.seed, req.n_samples, generator.latent_dim()))?;
    let real = sample_batch(&split, req.n_samples, &mut stream(req.seed, Purpose::Sampling, 1))?;

    let frechet = frechet_distance(
        &BatchStatistics::from_rows(&batch_embed(&real)?)?,
        &BatchStatistics::from_rows(&batch_embed(&fakes)?)?,
    )?;
    let wasserstein = wasserstein1_1d(&score_all(critic, &real)?, &score_all(critic, &fakes)?)?;
    let ctx = ChemContext::from_training(split.graphs(), ScoreTables::builtin());
    let quality = batch_quality(&fakes, &ctx.training_keys)?;
    let chem = chem_scores(&fakes, &ctx)?;
    let report = MetricsReport::new(ck.config.name.clone(), frechet, wasserstein, quality, chem);

    if !frechet.is_finite() || !wasserstein.is_finite() {
        return Err(CliError::Numerical(format!(
            "non-finite evaluation (frechet {frechet}, wasserstein {wasserstein})"
        )));
    }
    let violations = report.range_violations();
    if !violations.is_empty() {
        return Err(CliError::Numerical(format!("report out of range: {}", violations.join("; "))));
    }

    let report_path = req.output.join(REPORT_FILE);
    write_file(
        &report_path,
        &format!("{}{REPORT_CSV_HEADER}\n{}\n", hash_line(&ck.config_hash), report.csv_row()),
    )?;
    let samples_path = req.output.join(SAMPLES_FILE);
    write_file(&samples_path, &samples_json(&ck.config_hash, req.seed, &fakes))?;
    Ok(EvaluateSummary {
        config_hash: ck.config_hash,
        report,
        report_path,
        samples_path,
    })
}

#[derive(Debug, Clone)]
pub struct SampleSummary {
    pub config_hash: String,
    pub molecules: Vec<MolecularGraph>,
    pub samples_path: PathBuf,
    pub state_dump_path: Option<PathBuf>,
}

/// Writes `n` decoded samples to `samples.json`. With `dump_state`, also
/// writes the per-patch statevectors for the first latent as `[re, im]`
/// pairs.
pub fn cmd_sample(
    checkpoint: &Path,
    n: usize,
    seed: u64,
    output: &Path,
    dump_state: bool,
) -> Result<SampleSummary, CliError> {
    if n == 0 {
        return Err(CliError::Usage("sample count must be at least 1".into()));
    }
    let ck = read_checkpoint(checkpoint)?;
    let generator = &ck.state.generator;
    let latents = draw_latents(seed, n, generator.latent_dim());
    let molecules = generate(generator, &latents)?;
    let samples_path = output.join(SAMPLES_FILE);
    write_file(&samples_path, &samples_json(&ck.config_hash, seed, &molecules))?;

    let state_dump_path = if dump_state {
        let Some((spec, params)) = generator.circuit() else {
            return Err(CliError::Usage(format!("{} has no quantum circuit to dump", ck.config.name)));
        };
        let q = spec.num_qubits();
        let per = spec.angles_per_patch();
        let z = &latents[0];
        let patches = (0..spec.num_patches())
            .map(|p| {
                let s = patch_state(spec, &params.angles()[p * per..(p + 1) * per], &z[p * q..(p + 1) * q])
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                Ok(s.to_json())
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let v = json!({ "config_hash": ck.config_hash, "latent": z, "patches": patches });
        let path = output.join(STATE_DUMP_FILE);
        write_file(&path, &(serde_json::to_string(&v).expect("state serializes") + "\n"))?;
        Some(path)
    } else {
        None
    };
    Ok(SampleSummary {
        config_hash: ck.config_hash,
        molecules,
        samples_path,
        state_dump_path,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// The five named architectures.
    Named,
    /// The patch/layer grid for both Wasserstein losses.
    Grid,
}

pub fn sweep_configs(sweep: Sweep, iterations: u64, seed: u64) -> Vec<RunConfig> {
    let names: Vec<String> = match sweep {
        Sweep::Named => NAMED_PRESETS.iter().map(|s| s.to_string()).collect(),
        Sweep::Grid => preset_names()
            .into_iter()
            .filter(|n| !NAMED_PRESETS.contains(&n.as_str()))
            .collect(),
    };
    names
        .iter()
        .map(|n| RunConfig::for_preset(n, iterations, seed, "runs"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct CompareRequest {
    pub runs: Vec<RunConfig>,
    pub output: PathBuf,
    pub sort_by_frechet: bool,
    /// Runs executed concurrently; results do not depend on it.
    pub jobs: usize,
    pub n_samples: usize,
}

#[derive(Debug)]
pub struct CompareRow {
    pub label: String,
    pub config_hash: Option<String>,
    pub outcome: Result<MetricsReport, CliError>,
}

impl CompareRow {
    pub fn csv_row(&self) -> String {
        let hash = self.config_hash.as_deref().unwrap_or("");
        match &self.outcome {
            Ok(r) => format!("{},{hash},ok", r.csv_row()),
            Err(e) => format!(
                "{}{},{hash},{}",
                csv_quote(&self.label),
                ",".repeat(11),
                csv_quote(&format!("failed: {e}"))
            ),
        }
    }
}

#[derive(Debug)]
pub struct CompareSummary {
    pub rows: Vec<CompareRow>,
    pub table_path: PathBuf,
}

impl CompareSummary {
    pub fn first_failure(&self) -> Option<&CliError> {
        self.rows.iter().find_map(|r| r.outcome.as_ref().err())
    }
}

fn run_one(
    index: usize,
    run: &RunConfig,
    output: &Path,
    n_samples: usize,
    hash_slot: &mut Option<String>,
) -> Result<MetricsReport, CliError> {
    let label = run.architecture()?.name;
    let name = format!("{index:02}-{}", slug(&label));
    let mut run = run.clone();
    run.output_dir = output.join("runs").join(&name);
    let trained = cmd_train(&run, &TrainFlags::default())?;
    *hash_slot = Some(trained.config_hash.clone());
    let mut series = hash_line(&trained.config_hash) + SERIES_CSV_HEADER + "\n";
    for r in trained.log.records() {
        series += &format!("{},{},{}\n", r.iteration, r.frechet, r.wasserstein);
    }
    write_file(&output.join("series").join(format!("{name}.csv")), &series)?;
    let eval = cmd_evaluate(&EvaluateRequest {
        checkpoint: trained.checkpoint_path,
        dataset: run.dataset_path.clone(),
        n_samples,
        seed: run.seed,
        output: run.output_dir.clone(),
        config: None,
    })?;
    Ok(eval.report)
}

/// Trains and evaluates every run, then writes `comparison.csv` (one row
/// per run, failed runs included) and `series/<run>.csv` into `output`.
/// Returns `Ok` even when individual runs fail; see
/// [`CompareSummary::first_failure`].
pub fn cmd_compare(req: &CompareRequest) -> Result<CompareSummary, CliError> {
    if req.runs.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least 2 configs, got {}",
            req.runs.len()
        )));
    }
    let exec = |(i, run): (usize, &RunConfig)| {
        let label = match run.architecture() {
            Ok(a) => a.name,
            Err(_) => match &run.architecture {
                crate::config::ArchitectureSpec::Preset(n) => n.clone(),
                crate::config::ArchitectureSpec::Explicit(c) => c.name.clone(),
            },
        };
        let mut hash = None;
        let outcome = run_one(i, run, &req.output, req.n_samples, &mut hash);
        if let Err(e) = &outcome {
            log::error!("run {i} ({label}) failed: {e}");
        }
        CompareRow {
            label,
            config_hash: hash,
            outcome,
        }
    };
    let mut rows: Vec<CompareRow> = if req.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(req.jobs)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
        pool.install(|| req.runs.par_iter().enumerate().map(exec).collect())
    } else {
        req.runs.iter().enumerate().map(exec).collect()
    };
    if req.sort_by_frechet {
        rows.sort_by(|a, b| match (&a.outcome, &b.outcome) {
            (Ok(x), Ok(y)) => x.frechet.total_cmp(&y.frechet),
            (Ok(_), Err(_)) => std::cmp::Ordering::Less,
            (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
            (Err(_), Err(_)) => std::cmp::Ordering::Equal,
        });
    }
    let mut table = String::from(COMPARISON_CSV_HEADER) + "\n";
    for r in &rows {
        table += &r.csv_row();
        table.push('\n');
    }
    let table_path = req.output.join(COMPARISON_FILE);
    write_file(&table_path, &table)?;
    Ok(CompareSummary { rows, table_path })
}
