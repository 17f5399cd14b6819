use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use coopfront_cli::config::config_hash;
use coopfront_cli::{run, write_artifacts, CliError, Command};

#[derive(Parser, Debug)]
#[command(name = "coopfront", version, about = "Spreading fronts of two-species mutation-competition systems")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path prefix; files are written as <prefix>_<name>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

fn execute(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let raw = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(raw.clone()).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set up {n} worker threads: {e}")))?;
    }
    let hash = config_hash(&raw);
    log::info!("{} with config {} (sha256 {hash})", args.command.name(), path.display());
    let files = run(args.command, &text, &hash)?;
    let prefix = args.out.clone().unwrap_or_else(|| path.with_extension(""));
    write_artifacts(&prefix, &files)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
