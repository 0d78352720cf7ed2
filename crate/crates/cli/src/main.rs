use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use subspec_cli::cache::{cache_clear, cache_list, default_cache_root};
use subspec_cli::config::CachePolicy;
use subspec_cli::{run_experiment, CliError, ExperimentConfig, RunOptions, ToleranceProfile};

#[derive(Parser)]
#[command(name = "subspec", version, about = "Spectral asymptotics of measures on submanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of an experiment config.
    Run {
        config: PathBuf,
        /// Output directory, overriding output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Neither read nor write the table cache.
        #[arg(long)]
        no_cache: bool,
        #[arg(long, value_enum, default_value_t = Profile::Default)]
        tolerance_profile: Profile,
    },
    /// Parse and validate a config without computing anything.
    Validate { config: PathBuf },
    /// Inspect the table cache (root: $SUBSPEC_CACHE_DIR or ./.subspec-cache).
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    Ls,
    Clear,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Strict,
    Default,
}

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run {
            config,
            out,
            no_cache,
            tolerance_profile,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if no_cache {
                cfg.cache_policy = CachePolicy::Off;
            }
            let options = RunOptions {
                output_dir: out,
                cache_root: Some(default_cache_root()),
                profile: match tolerance_profile {
                    Profile::Strict => ToleranceProfile::Strict,
                    Profile::Default => ToleranceProfile::Default,
                },
            };
            let report = run_experiment(&cfg, &options)?;
            for c in &report.checks {
                println!(
                    "{} {}/{} = {:?} in [{:?}, {:?}]",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.suite.name(),
                    c.name,
                    c.value,
                    c.lo,
                    c.hi
                );
            }
            println!(
                "{}: {} checks, output in {} ({:.2} s)",
                report.name,
                report.checks.len(),
                report.output_dir.display(),
                report.provenance.wall_time.as_secs_f64()
            );
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_TOLERANCE)
            })
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let suites: Vec<&str> = cfg.suites.iter().map(|s| s.name()).collect();
            println!("{}: ok ({}; suites: {})", cfg.name, cfg.measure.descriptor(), suites.join(", "));
            Ok(ExitCode::SUCCESS)
        }
        Command::Cache { action } => {
            let root = default_cache_root();
            match action {
                CacheAction::Ls => {
                    for e in cache_list(&root)? {
                        println!(
                            "{}  {:>12} bytes  {}",
                            e.key,
                            e.bytes,
                            match (&e.descriptor, e.lambda_max) {
                                (Some(d), Some(l)) => format!("{d} up to {l}"),
                                _ => "unreadable".to_string(),
                            }
                        );
                    }
                }
                CacheAction::Clear => {
                    let n = cache_clear(&root)?;
                    println!("removed {n} cached tables from {}", root.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
