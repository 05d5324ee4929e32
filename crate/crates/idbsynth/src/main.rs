use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use idbsynth::config::{Backend, ConfigError, PipelineConfig};
use idbsynth::pipeline::{self, PipelineError};

/// Synthetic identity-document barcode datasets.
///
/// Exit codes: 0 success, 1 quality gate failed, 2 configuration error,
/// 3 LLM error, 4 input/output error.
#[derive(Parser)]
#[command(name = "idbsynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline config (JSON). Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `parallelism`.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write record corpora.
    Generate {
        #[command(flatten)]
        common: Common,
        /// llm, template or both.
        #[arg(long)]
        backend: Option<String>,
        /// Overrides `count`.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Render the image dataset from the corpora.
    Build {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        backend: Option<String>,
    },
    /// Compare the diversity of two corpora.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus_a: Option<PathBuf>,
        #[arg(long)]
        corpus_b: Option<PathBuf>,
        /// Comma-separated field names.
        #[arg(long, value_delimiter = ',')]
        fields: Option<Vec<String>>,
    },
    /// Decode every barcode of a built dataset.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Dataset directory; `{out}/dataset` by default.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

fn load(common: &Common, backend: Option<&str>, count: Option<usize>) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output = o.clone();
    }
    if let Some(p) = common.parallelism {
        cfg.parallelism = p;
    }
    if let Some(b) = backend {
        cfg.backend = Backend::parse(b).ok_or_else(|| ConfigError::Invalid(format!("unknown backend {b:?}")))?;
    }
    if let Some(n) = count {
        cfg.count = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Generate { common, backend, count } => {
            let cfg = load(&common, backend.as_deref(), count)?;
            pipeline::cmd_generate(&cfg)?;
        }
        Command::Build { common, backend } => {
            let cfg = load(&common, backend.as_deref(), None)?;
            pipeline::cmd_build(&cfg)?;
        }
        Command::Audit { common, corpus_a, corpus_b, fields } => {
            let cfg = load(&common, None, None)?;
            let report = pipeline::cmd_audit(&cfg, corpus_a.as_deref(), corpus_b.as_deref(), fields.as_deref())?;
            print!("{}", report.to_text());
        }
        Command::Verify { common, dataset } => {
            let cfg = load(&common, None, None)?;
            let report = pipeline::cmd_verify(&cfg, dataset.as_deref())?;
            println!(
                "{{\"clean_rate\":{},\"augmented_rate\":{},\"bbox_valid_rate\":{},\"failures\":{}}}",
                report.clean.rate,
                report.augmented.rate,
                report.bbox_valid.rate,
                report.failures.len()
            );
            report.check(&cfg.verify)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
