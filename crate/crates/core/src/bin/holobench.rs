//! `holobench synth|recon|analyze|pipeline --config <file> [--seed N]
//! [--scheme spatial|angular] [--out DIR] [--input DIR]`
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 partial
//! processing failure, 3 I/O error. `HOLOBENCH_LOG` sets the log filter.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holobench::io::config::RunConfig;
use holobench::io::report::comparison_text;
use holobench::pipeline::{cmd_analyze, cmd_pipeline, cmd_recon, cmd_synth, Outcome};
use holobench::synth::SchemeVariant;
use holobench::Error;

#[derive(Parser)]
#[command(name = "holobench", version, about = "Polarization-diverse digital holography bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["spatial", "angular"])]
    scheme: Option<String>,
    #[arg(long, default_value = "holobench-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Render camera frames for every port and polarization.
    Synth(Common),
    /// Reconstruct complex fields from a frame directory.
    Recon {
        #[command(flatten)]
        common: Common,
        /// Directory written by `synth`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Decompose fields and report crosstalk and MDL.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Directory written by `recon`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Synth, recon and analyze for each configured scheme, then compare.
    Pipeline(Common),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::MissingInput { .. }
        | Error::DuplicateInput { .. }
        | Error::NoSideband(_)
        | Error::ConjugateAmbiguity(_)
        | Error::SidebandAssignmentAmbiguous(_) => 2,
        _ => 1,
    }
}

fn load(common: &Common) -> Result<(RunConfig, Option<SchemeVariant>), Error> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let scheme = common.scheme.as_deref().map(str::parse).transpose()?;
    Ok((cfg, scheme))
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Synth(c) => {
            let (cfg, scheme) = load(&c)?;
            cmd_synth(&cfg, scheme.unwrap_or(cfg.scheme.variant), &c.out)
        }
        Command::Recon { common, input } => {
            let (cfg, scheme) = load(&common)?;
            cmd_recon(&cfg, scheme, &input, &common.out)
        }
        Command::Analyze { common, input } => {
            let (cfg, _) = load(&common)?;
            let report = cmd_analyze(&cfg, &input, &common.out)?;
            print!("{}", holobench::io::report::summary_text(&report));
            Ok(Outcome::default())
        }
        Command::Pipeline(c) => {
            let (cfg, scheme) = load(&c)?;
            let (comparison, outcome) = cmd_pipeline(&cfg, scheme, &c.out)?;
            print!("{}", comparison_text(&comparison));
            Ok(outcome)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HOLOBENCH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) if o.is_partial() => {
            for f in &o.failures {
                eprintln!("failed: {f}");
            }
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
