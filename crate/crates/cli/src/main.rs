use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qmolgen_cli::{
    cmd_compare, cmd_evaluate, cmd_prepare, cmd_sample, cmd_train, sweep_configs, CliError, CompareRequest,
    EvaluateRequest, RunConfig, Sweep, TrainFlags,
};

#[derive(Parser)]
#[command(name = "qmolgen", version, about = "Hybrid quantum-classical molecular GAN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Named,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum SortKey {
    Frechet,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and filter an SDF file into a graph cache plus statistics.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "prepared")]
        output: PathBuf,
    },
    /// Train one configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output_dir.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Record wall-clock seconds in the log (breaks byte-identical reruns).
        #[arg(long)]
        timing: bool,
    },
    /// Score samples from a checkpoint against the dataset.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// SDF file or prepared cache; defaults to the bundled sample.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Require the checkpoint to come from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "evaluation")]
        output: PathBuf,
    },
    /// Train and evaluate several configurations into one table.
    Compare {
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        /// Use a preset sweep instead of (or in addition to) config files.
        #[arg(long, value_enum)]
        sweep: Option<SweepArg>,
        /// Iterations for sweep runs.
        #[arg(long, default_value_t = 50)]
        iterations: u64,
        /// Shared seed; also overrides the seed of config files.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        sort: Option<SortKey>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 128)]
        samples: usize,
        #[arg(long, default_value = "comparison")]
        output: PathBuf,
    },
    /// Decode samples from a checkpoint.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "samples")]
        output: PathBuf,
        /// Also write the circuit statevectors for the first latent.
        #[arg(long)]
        dump_state: bool,
    },
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Prepare { input, output } => {
            let s = cmd_prepare(&input, &output)?;
            let r = &s.report;
            println!(
                "blocks {} parse_failures {} accepted {} ({:.1}%)",
                r.blocks,
                r.parse_failures,
                r.accepted,
                100.0 * r.acceptance_rate()
            );
            for (reason, n) in &r.rejected {
                println!("rejected {reason} {n}");
            }
            println!("cache {}", s.cache_path.display());
        }
        Command::Train {
            config,
            seed,
            output,
            resume,
            timing,
        } => {
            let mut run = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                run.seed = seed;
            }
            if let Some(output) = output {
                run.output_dir = output;
            }
            let s = cmd_train(&run, &TrainFlags { resume, timing })?;
            println!("config_hash {}", s.config_hash);
            if let Some(r) = s.log.records().last() {
                println!("iter {} frechet {} wasserstein {}", r.iteration, r.frechet, r.wasserstein);
            }
            println!("checkpoint {}", s.checkpoint_path.display());
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            config,
            samples,
            seed,
            output,
        } => {
            let config = config.map(|p| RunConfig::load(&p)).transpose()?;
            let s = cmd_evaluate(&EvaluateRequest {
                checkpoint,
                dataset,
                n_samples: samples,
                seed,
                output,
                config,
            })?;
            println!("{}", qmolgen_core::metrics::REPORT_CSV_HEADER);
            println!("{}", s.report.csv_row());
        }
        Command::Compare {
            configs,
            sweep,
            iterations,
            seed,
            sort,
            jobs,
            samples,
            output,
        } => {
            let mut runs = configs.iter().map(|p| RunConfig::load(p)).collect::<Result<Vec<_>, _>>()?;
            if let Some(sweep) = sweep {
                let which = match sweep {
                    SweepArg::Named => Sweep::Named,
                    SweepArg::Grid => Sweep::Grid,
                };
                runs.extend(sweep_configs(which, iterations, seed.unwrap_or(0)));
            }
            if let Some(seed) = seed {
                for r in &mut runs {
                    r.seed = seed;
                }
            }
            let s = cmd_compare(&CompareRequest {
                runs,
                output,
                sort_by_frechet: matches!(sort, Some(SortKey::Frechet)),
                jobs,
                n_samples: samples,
            })?;
            for r in &s.rows {
                println!("{}", r.csv_row());
            }
            println!("table {}", s.table_path.display());
            if let Some(e) = s.first_failure() {
                eprintln!("error: some runs failed; first failure: {e}");
                return Ok(ExitCode::from(e.exit_code() as u8));
            }
        }
        Command::Sample {
            checkpoint,
            samples,
            seed,
            output,
            dump_state,
        } => {
            let s = cmd_sample(&checkpoint, samples, seed, &output, dump_state)?;
            let valid = s.molecules.iter().filter(|m| m.is_valid()).count();
            println!("{} samples, {valid} valid, written to {}", s.molecules.len(), s.samples_path.display());
            if let Some(p) = s.state_dump_path {
                println!("state dump {}", p.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
