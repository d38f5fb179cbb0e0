use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dapg_core::envs::EnvId;
use dapg_core::EnvSpec;
use dapg_harness::commands::{self, DEFAULT_DEMO_COUNT, DEFAULT_EVAL_ROLLOUTS};
use dapg_harness::report::write_eval_report;
use dapg_harness::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "dapg", version, about = "Demo-augmented policy gradient runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a frozen checkpoint under distractor modes.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Env and encoder settings; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated distractor names, `all` or `none`. The clean run
        /// is always included.
        #[arg(long, default_value = "none")]
        distractors: String,
        #[arg(long, default_value_t = DEFAULT_EVAL_ROLLOUTS)]
        rollouts: usize,
        /// Evaluation seed; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the report as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate scripted-expert demonstrations.
    GenDemos {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Environment id; overrides the config's env.id.
        #[arg(long)]
        env: Option<String>,
        #[arg(long, default_value_t = DEFAULT_DEMO_COUNT)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: Option<&PathBuf>) -> CliResult<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { config } => {
            let cfg = RunConfig::load(&config)?;
            let summary = commands::train(&cfg)?;
            println!(
                "completed {} iterations; artifacts in {}",
                summary.iterations,
                summary.output_dir.display()
            );
        }
        Command::Eval {
            checkpoint,
            config,
            distractors,
            rollouts,
            seed,
            out,
        } => {
            let cfg = load(config.as_ref())?;
            let modes = commands::parse_eval_modes(&distractors)?;
            let rows = commands::eval(&cfg, &checkpoint, &modes, rollouts, seed.unwrap_or(cfg.seed))?;
            print!("{}", commands::format_eval_table(&rows));
            if let Some(path) = out {
                write_eval_report(&path, &rows)?;
            }
        }
        Command::GenDemos {
            config,
            env,
            count,
            out,
            seed,
        } => {
            let mut cfg = load(config.as_ref())?;
            if let Some(id) = env {
                let id: EnvId = id.parse().map_err(|e: dapg_core::Error| CliError::Config(format!("--env: {e}")))?;
                let base = cfg.env.clone();
                cfg.env = EnvSpec {
                    observation_mode: base.observation_mode,
                    reward_mode: base.reward_mode,
                    distractors: base.distractors,
                    seed: base.seed,
                    ..EnvSpec::default_for(id)
                };
            }
            let summary = commands::gen_demos(&cfg, count, &out, seed.unwrap_or(cfg.seed))?;
            println!(
                "wrote {} demos to {} ({} expert failures resampled)",
                summary.count,
                out.display(),
                summary.failures
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
