//! Command-line front end for the marking laboratory.
//!
//! Every subcommand resolves its configuration the same way: command
//! defaults, then an optional config file, then repeatable `--set key=value`
//! overrides. Results are CSV with the resolved configuration echoed in the
//! header, written to `--output` (or the `output` config key) or stdout.

use clap::{Parser, Subcommand};
use sawmark::config::ExperimentConfig;
use sawmark::harness;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sawmark",
    about = "Spread-spectrum marking, channel attacks, and game-optimal tuning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Configuration file of `key=value` lines (`#` comments allowed).
    #[arg(long)]
    config: Option<String>,
    /// Override one configuration key, e.g. `--set m=4096`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Input file (CSV from an earlier command, or a PGM image).
    #[arg(long)]
    input: Option<String>,
    /// Output file; stdout when omitted (images always need a path).
    #[arg(long)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic host population.
    Gen(CommonArgs),
    /// Embed a message into a generated host CSV.
    Embed(CommonArgs),
    /// Run a channel attack over a marked CSV.
    Attack(CommonArgs),
    /// Decode a marked or attacked CSV.
    Extract(CommonArgs),
    /// Solve the marking game, optionally calibrating to distortion budgets.
    Optimize(CommonArgs),
    /// Map the attacker's best-response regimes over a parameter grid.
    #[command(name = "sweep-domains")]
    SweepDomains(CommonArgs),
    /// Sweep optimal strength against host power.
    #[command(name = "sweep-alpha")]
    SweepAlpha(CommonArgs),
    /// Compare strength policies under an escalating attack.
    #[command(name = "sweep-attack")]
    SweepAttack(CommonArgs),
    /// Embed a message into a PGM image.
    #[command(name = "image-embed")]
    ImageEmbed(CommonArgs),
    /// Blindly extract a message from a PGM image.
    #[command(name = "image-extract")]
    ImageExtract(CommonArgs),
    /// Cross-check closed forms against brute-force search.
    #[command(name = "oracle-check")]
    OracleCheck(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Embed(_) => "embed",
            Command::Attack(_) => "attack",
            Command::Extract(_) => "extract",
            Command::Optimize(_) => "optimize",
            Command::SweepDomains(_) => "sweep-domains",
            Command::SweepAlpha(_) => "sweep-alpha",
            Command::SweepAttack(_) => "sweep-attack",
            Command::ImageEmbed(_) => "image-embed",
            Command::ImageExtract(_) => "image-extract",
            Command::OracleCheck(_) => "oracle-check",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Gen(a)
            | Command::Embed(a)
            | Command::Attack(a)
            | Command::Extract(a)
            | Command::Optimize(a)
            | Command::SweepDomains(a)
            | Command::SweepAlpha(a)
            | Command::SweepAttack(a)
            | Command::ImageEmbed(a)
            | Command::ImageExtract(a)
            | Command::OracleCheck(a) => a,
        }
    }
}

fn resolve_config(command: &Command) -> sawmark::Result<ExperimentConfig> {
    let args = command.args();
    let mut config = ExperimentConfig::for_command(command.name());
    if let Some(path) = &args.config {
        config.apply_file(path)?;
    }
    for pair in &args.set {
        config.apply_set(pair)?;
    }
    if let Some(input) = &args.input {
        config.input = Some(input.clone());
    }
    if let Some(output) = &args.output {
        config.output = Some(output.clone());
    }
    Ok(config)
}

fn emit(config: &ExperimentConfig, csv: &str) -> sawmark::Result<()> {
    match &config.output {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run(command: &Command) -> sawmark::Result<bool> {
    let config = resolve_config(command)?;
    let (csv, ok) = match command {
        Command::Gen(_) => (harness::cmd_gen(&config)?, true),
        Command::Embed(_) => (harness::cmd_embed(&config)?, true),
        Command::Attack(_) => (harness::cmd_attack(&config)?, true),
        Command::Extract(_) => (harness::cmd_extract(&config)?, true),
        Command::Optimize(_) => (harness::cmd_optimize(&config)?, true),
        Command::SweepDomains(_) => (harness::cmd_sweep_domains(&config)?, true),
        Command::SweepAlpha(_) => (harness::cmd_sweep_alpha(&config)?, true),
        Command::SweepAttack(_) => (harness::cmd_sweep_attack(&config)?, true),
        Command::ImageEmbed(_) => {
            // The marked image goes to `output`; the report goes to stdout.
            let report = harness::cmd_image_embed(&config)?;
            print!("{report}");
            return Ok(true);
        }
        Command::ImageExtract(_) => {
            let report = harness::cmd_image_extract(&config)?;
            // `output` names the optional report destination here; the
            // image itself is the input.
            emit(&config, &report)?;
            return Ok(true);
        }
        Command::OracleCheck(_) => harness::cmd_oracle_check(&config)?,
    };
    emit(&config, &csv)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("sawmark: verification failed; see the pass column in the output");
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("sawmark: error: {err}");
            ExitCode::FAILURE
        }
    }
}
