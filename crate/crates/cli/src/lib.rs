//! Command-line pipeline: corpus → demonstrations → mixtures → ablation
//! variants → evaluation → reports.

pub mod config;
pub mod evaluate;
pub mod pipeline;
pub mod reporting;

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use crossalpaca::{Error, Result};

use config::{Overrides, PipelineConfig};
use evaluate::EvalSettings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_TRANSPORT: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "crossalpaca",
    version,
    about = "Build CrossAlpaca datasets and evaluate completion endpoints"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the pipeline language.
    #[arg(long, global = true)]
    pub language: Option<String>,
    /// Override the seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the instruction, translation and mixed datasets.
    Build,
    /// Write scale and direction variants from the build outputs.
    Ablate,
    /// Evaluate a model endpoint on the configured benchmarks.
    Eval(EvalArgs),
    /// Render tables and plot series from the results store.
    Report,
    /// Check dataset files against their manifests.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model id recorded with the results.
    #[arg(long)]
    pub model: String,
    /// Evaluate only the first N items of each benchmark.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Continue from the per-item logs of an interrupted run.
    #[arg(long)]
    pub resume: bool,
    /// Override the endpoint base URL.
    #[arg(long)]
    pub endpoint_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset files; defaults to every dataset in the output directory.
    pub paths: Vec<PathBuf>,
}

/// Map an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::PartialResults { .. } => EXIT_PARTIAL,
        e if e.is_network() => EXIT_TRANSPORT,
        _ => EXIT_VALIDATION,
    }
}

fn load_config(global: &GlobalArgs, endpoint_url: Option<String>) -> Result<PipelineConfig> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--config is required for this command".into()))?;
    let overrides = Overrides {
        language: global.language.clone(),
        seed: global.seed,
        output_dir: global.output_dir.clone(),
        endpoint_url,
    };
    PipelineConfig::load(path, &overrides)
}

fn write_snapshot(config: &PipelineConfig, command: &str) -> Result<()> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join(format!("{command}.resolved.toml"));
    fs::write(&path, config.snapshot()?).map_err(|e| Error::Io { path, source: e })
}

/// Run one parsed invocation; output lines go to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build => {
            let config = load_config(&cli.global, None)?;
            write_snapshot(&config, "build")?;
            let out = pipeline::cmd_build(&config)?;
            for p in [&out.alpaca, &out.translations, &out.crossalpaca] {
                println!("{}", p.display());
            }
        }
        Command::Ablate => {
            let config = load_config(&cli.global, None)?;
            write_snapshot(&config, "ablate")?;
            for p in pipeline::cmd_ablate(&config)? {
                println!("{}", p.display());
            }
        }
        Command::Eval(args) => {
            let config = load_config(&cli.global, args.endpoint_url.clone())?;
            write_snapshot(&config, "eval")?;
            let settings = EvalSettings {
                model: args.model,
                limit: args.limit,
                resume: args.resume,
            };
            let summary = evaluate::cmd_eval(&config, &settings)?;
            for r in &summary.results {
                println!(
                    "{}\t{}\t{}\t{}/{}\t{}",
                    r.model_id, r.benchmark, r.language, r.n_correct, r.n_items, r.accuracy
                );
            }
            let fresh: BTreeSet<String> = summary
                .store_files
                .iter()
                .filter_map(|p| fs::read(p).ok())
                .filter_map(|b| serde_json::from_slice::<evaluate::StoreEntry>(&b).ok())
                .map(|e| e.config_hash)
                .collect();
            reporting::cmd_report(&config, &fresh)?;
        }
        Command::Report => {
            let config = load_config(&cli.global, None)?;
            write_snapshot(&config, "report")?;
            let out = reporting::cmd_report(&config, &BTreeSet::new())?;
            for p in &out.files {
                println!("{}", p.display());
            }
        }
        Command::Validate(args) => {
            let config = match &cli.global.config {
                Some(_) => Some(load_config(&cli.global, None)?),
                None => None,
            };
            for v in pipeline::cmd_validate(config.as_ref(), &args.paths)? {
                println!("ok\t{}\t{}", v.path.display(), v.demonstrations);
            }
        }
    }
    Ok(())
}

/// Parse `args`, run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::InvalidArgument("x".into())),
            EXIT_VALIDATION
        );
        assert_eq!(
            exit_code(&Error::Transport {
                attempts: 1,
                message: "x".into()
            }),
            EXIT_TRANSPORT
        );
        assert_eq!(
            exit_code(&Error::Protocol {
                status: 401,
                body: String::new()
            }),
            EXIT_TRANSPORT
        );
        assert_eq!(
            exit_code(&Error::PartialResults {
                completed: 1,
                failed: 2,
                total: 3,
                log: None
            }),
            EXIT_PARTIAL
        );
    }

    #[test]
    fn usage_errors_exit_with_validation_code() {
        assert_eq!(
            main_with_args(["crossalpaca", "frobnicate"]),
            EXIT_VALIDATION
        );
        assert_eq!(main_with_args(["crossalpaca", "eval"]), EXIT_VALIDATION);
        assert_eq!(main_with_args(["crossalpaca", "--help"]), EXIT_OK);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "crossalpaca",
            "eval",
            "--config",
            "c.toml",
            "--model",
            "m",
            "--limit",
            "5",
            "--resume",
            "--endpoint-url",
            "http://h:1",
            "--seed",
            "3",
            "--language",
            "it",
        ])
        .unwrap();
        assert_eq!(cli.global.seed, Some(3));
        assert_eq!(cli.global.language.as_deref(), Some("it"));
        match cli.command {
            Command::Eval(a) => {
                assert_eq!(a.limit, Some(5));
                assert!(a.resume);
                assert_eq!(a.endpoint_url.as_deref(), Some("http://h:1"));
            }
            other => panic!("{other:?}"),
        }
    }
}
