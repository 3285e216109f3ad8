//! The `percept` command line.

pub mod config;
pub mod manifest;
mod stages;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::config::{Backend, RunConfig};
use crate::manifest::{hash_entries, FileHash, Manifest, Versions};

pub use stages::{PipelineSummary, SPLIT_FILE};

#[derive(Debug, Parser)]
#[command(name = "percept", version, about = "Science-media perception pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run config, or a manifest of an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write into this directory instead of a fresh timestamped one.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Model directory to read.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,
    #[arg(long, global = true)]
    pub port: Option<u16>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Strip outlet metadata from raw articles (paths.raw).
    Clean,
    /// Draw the balanced annotation batch (paths.corpus).
    Sample,
    /// Simulate annotators rating documents (paths.corpus).
    Simulate,
    /// Article profiles, rank tables and rating-rank agreement (paths.annotations).
    Aggregate,
    /// Krippendorff and Cronbach reliability (paths.annotations).
    Reliability,
    /// Train/validation/test split of labeled documents.
    Split,
    /// Train the statement scorer.
    Train,
    /// Per-dimension Pearson r of a model against labels.
    Evaluate,
    /// Score documents (paths.corpus) or a single text.
    Score {
        #[arg(long)]
        text: Option<String>,
    },
    /// Background factors against perception ratings.
    StudyPerception,
    /// Perception against engagement of posts (paths.posts).
    StudyEngagement,
    /// Run the HTTP service.
    Serve,
    /// Chain every stage; `--synthetic` generates all inputs.
    Pipeline {
        #[arg(long)]
        synthetic: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Clean => "clean",
            Command::Sample => "sample",
            Command::Simulate => "simulate",
            Command::Aggregate => "aggregate",
            Command::Reliability => "reliability",
            Command::Split => "split",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Score { .. } => "score",
            Command::StudyPerception => "study-perception",
            Command::StudyEngagement => "study-engagement",
            Command::Serve => "serve",
            Command::Pipeline { .. } => "pipeline",
        }
    }
}

/// Config file merged with flags; flags win.
pub fn effective_config(flags: &Flags) -> anyhow::Result<RunConfig> {
    let mut config = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(backend) = flags.backend {
        config.backend = backend;
    }
    if let Some(model) = &flags.model {
        config.paths.model_dir = Some(model.clone());
    }
    if let Some(port) = flags.port {
        config.service.port = port;
    }
    config.resolve()
}

/// Output location and bookkeeping of one invocation.
pub struct Run {
    pub dir: PathBuf,
    pub config: RunConfig,
    inputs: Vec<FileHash>,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

impl Run {
    pub fn new(dir: PathBuf, config: RunConfig) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, config, inputs: Vec::new(), outputs: Vec::new(), warnings: Vec::new() })
    }

    /// Records an external input by content hash.
    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let label = path.to_string_lossy().into_owned();
        self.inputs.extend(hash_entries(path, &label)?);
        Ok(())
    }

    /// Path of a new output, relative to the run directory.
    pub fn output(&mut self, rel: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        if !self.outputs.iter().any(|o| o == rel) {
            self.outputs.push(rel.to_string());
        }
        Ok(path)
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn finish(mut self, subcommand: &str) -> anyhow::Result<Manifest> {
        self.outputs.sort();
        let mut outputs = Vec::new();
        for rel in &self.outputs {
            outputs.extend(hash_entries(&self.dir.join(rel), rel)?);
        }
        let mut config = self.config.clone();
        config.paths.output_dir = None;
        let manifest = Manifest {
            subcommand: subcommand.to_string(),
            versions: Versions::current(),
            catalog_hash: percept_core::default_catalog().hash(),
            seed: config.seed,
            config,
            inputs: self.inputs,
            outputs,
            warnings: self.warnings,
        };
        manifest.write(&self.dir)?;
        Ok(manifest)
    }
}

/// `--output` as given, else a fresh `<base>/<subcommand>-<UTC timestamp>`.
pub fn run_directory(flags: &Flags, config: &RunConfig, subcommand: &str) -> anyhow::Result<PathBuf> {
    if let Some(out) = &flags.output {
        return Ok(out.clone());
    }
    let base = config.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let mut dir = base.join(format!("{subcommand}-{stamp}"));
    let mut n = 1;
    while dir.exists() {
        dir = base.join(format!("{subcommand}-{stamp}-{n}"));
        n += 1;
    }
    Ok(dir)
}

#[derive(Debug)]
pub enum Outcome {
    Manifest { dir: PathBuf, manifest: Box<Manifest> },
    Served,
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let config = effective_config(&cli.flags)?;
    let name = cli.command.name();
    if let Command::Serve = cli.command {
        stages::serve(&config)?;
        return Ok(Outcome::Served);
    }
    if let Command::Pipeline { synthetic: false } = cli.command {
        if config.paths.raw.is_none() {
            bail!("pipeline without --synthetic reads paths.raw, paths.annotations, paths.participants and paths.posts");
        }
    }
    let dir = run_directory(&cli.flags, &config, name)?;
    let mut run = Run::new(dir.clone(), config)?;
    match &cli.command {
        Command::Clean => stages::clean_cmd(&mut run)?,
        Command::Sample => stages::sample_cmd(&mut run)?,
        Command::Simulate => stages::simulate_cmd(&mut run)?,
        Command::Aggregate => stages::aggregate_cmd(&mut run)?,
        Command::Reliability => stages::reliability_cmd(&mut run)?,
        Command::Split => stages::split_cmd(&mut run)?,
        Command::Train => stages::train_cmd(&mut run)?,
        Command::Evaluate => stages::evaluate_cmd(&mut run)?,
        Command::Score { text } => stages::score_cmd(&mut run, text.as_deref())?,
        Command::StudyPerception => stages::study_perception_cmd(&mut run)?,
        Command::StudyEngagement => stages::study_engagement_cmd(&mut run)?,
        Command::Pipeline { synthetic } => {
            stages::pipeline(&mut run, *synthetic)?;
        }
        Command::Serve => unreachable!("handled above"),
    }
    let manifest = run.finish(name)?;
    Ok(Outcome::Manifest { dir, manifest: Box::new(manifest) })
}
