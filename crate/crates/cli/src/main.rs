use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hsd_cli::commands::{self, Overrides};
use hsd_cli::{CliError, CliResult, ConfigError};
use hsd_core::Hypothesis;

/// Sub-pixel target detection: Kelly, ACUTE and SPADE detectors and their
/// Monte-Carlo evaluation.
#[derive(Debug, Parser)]
#[command(name = "hsd", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HypothesisArg {
    H0,
    H1,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score test spectra and print per-pixel statistics as CSV.
    Detect {
        /// Test spectra, one per line (defaults to `y_file` in the config).
        #[arg(long)]
        y: Option<PathBuf>,
        /// Training spectra, one per line; drawn from the background model when absent.
        #[arg(long)]
        z: Option<PathBuf>,
        /// kelly, acute, spade or all; repeatable.
        #[arg(long = "detector", default_value = "all")]
        detectors: Vec<String>,
    },
    /// ROC curves of the three detectors.
    Roc {
        /// Use the published dimensions and amplitude (long running).
        #[arg(long)]
        paper_operating_point: bool,
    },
    /// False-alarm gain of ACUTE and SPADE over Kelly across the beta grid.
    PfaGain {
        /// Add Kelly's gain against itself as a final column.
        #[arg(long)]
        self_gain: bool,
        /// Use the published dimensions, amplitude and P_d (long running).
        #[arg(long)]
        paper_operating_point: bool,
    },
    /// Dump synthetic joint samples.
    Sample {
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "h0")]
        hypothesis: HypothesisArg,
    },
    /// Run the built-in oracle and identity checks.
    Selfcheck,
}

fn config_path(cli: &Cli) -> CliResult<&PathBuf> {
    cli.config
        .as_ref()
        .ok_or_else(|| ConfigError::new("--config", "required for this subcommand").into())
}

fn run(cli: &Cli) -> CliResult<()> {
    let mut overrides = Overrides {
        seed: cli.seed,
        threads: cli.threads,
        paper_alpha: None,
    };
    match &cli.command {
        Command::Detect { y, z, detectors } => {
            let config = commands::load_config(config_path(cli)?, &overrides)?;
            let detectors = commands::parse_detectors(detectors)?;
            let y = y
                .clone()
                .or_else(|| config.y_file.clone())
                .ok_or_else(|| ConfigError::new("y_file", "pass --y or set y_file"))?;
            let z = z.clone().or_else(|| config.z_file.clone());
            let stdout = std::io::stdout();
            commands::cmd_detect(&config, &y, z.as_deref(), &detectors, &mut stdout.lock())?;
        }
        Command::Roc { paper_operating_point } => {
            if *paper_operating_point {
                overrides.paper_alpha = Some(commands::PAPER_ROC_ALPHA);
            }
            let config = commands::load_config(config_path(cli)?, &overrides)?;
            let run = commands::cmd_roc(&config, &cli.out)?;
            for o in &run.outputs {
                eprintln!("wrote {}", cli.out.join(&o.file).display());
            }
            eprintln!("wrote {}", run.manifest.display());
        }
        Command::PfaGain {
            self_gain,
            paper_operating_point,
        } => {
            if *paper_operating_point {
                overrides.paper_alpha = Some(commands::PAPER_GAIN_ALPHA);
            }
            let config = commands::load_config(config_path(cli)?, &overrides)?;
            let run = commands::cmd_pfa_gain(&config, &cli.out, *self_gain)?;
            for pt in run.points.iter().filter(|pt| pt.flagged()) {
                eprintln!("warning: beta = {} has zero H0 exceedances; gain left empty", pt.beta);
            }
            eprintln!("wrote {}", cli.out.join(commands::PFA_GAIN_FILE).display());
            eprintln!("wrote {}", run.manifest.display());
        }
        Command::Sample { count, hypothesis } => {
            let config = commands::load_config(config_path(cli)?, &overrides)?;
            let hypothesis = match hypothesis {
                HypothesisArg::H0 => Hypothesis::H0,
                HypothesisArg::H1 => Hypothesis::H1,
            };
            let run = commands::cmd_sample(&config, &cli.out, *count, hypothesis)?;
            eprintln!("wrote {}", run.manifest.display());
        }
        Command::Selfcheck => {
            let results = commands::cmd_selfcheck(cli.seed.unwrap_or(0))?;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if let Some(bad) = results.iter().find(|r| !r.passed) {
                return Err(CliError::SelfCheck(bad.name.to_string()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
