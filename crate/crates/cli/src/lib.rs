//! `dupq`: duplicate-question retrieval and confirmation-time prediction
//! pipeline.

pub mod commands;
pub mod config;
pub mod workspace;

use std::path::PathBuf;

use anyhow::{Context as _, Result};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};
use log::info;

use dupq_core::features::FeatureMode;
use dupq_core::synth::SynthConfig;

use commands::{Ctx, Method, ModelKind, QueryArgs};
use config::{extract_overrides, PipelineConfig};
use workspace::Workspace;

/// Any config key can also be set with a flag of the same dotted name,
/// e.g. `--retrieval.epochs 10` or `--node2vec.p=1.0`.
#[derive(Debug, Parser)]
#[command(name = "dupq", version, about = "Duplicate-question triage pipeline")]
pub struct Cli {
    /// JSON config file; merged over the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `text` or `text+network`.
    #[arg(long, global = true)]
    pub feature_mode: Option<FeatureMode>,
    /// Artifact directory (overrides paths.work_dir).
    #[arg(long, global = true)]
    pub work_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse Posts.xml and PostLinks.xml into the corpus archive.
    Ingest {
        #[arg(long)]
        posts: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
    },
    /// Build the tag co-occurrence graph.
    BuildGraph,
    /// Train word vectors (unless precomputed) and tag node vectors.
    TrainEmbeddings,
    /// Filter candidate sets for validation and test anchors.
    BuildCandidates,
    /// Train the siamese retrieval head.
    TrainRetrieval,
    /// Rank candidates and write a retrieval report.
    EvalRetrieval {
        #[arg(long, value_enum, default_value = "head")]
        method: Method,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Train a confirmation-time model.
    TrainTimepred {
        #[arg(long, value_enum, default_value = "mlp")]
        model: ModelKind,
    },
    /// Predict and rank test-pair confirmation times.
    EvalTimepred {
        #[arg(long, value_enum, default_value = "mlp")]
        model: ModelKind,
    },
    /// Rank existing questions against a free-text question.
    Query {
        #[arg(long)]
        title: String,
        #[arg(long, default_value = "")]
        body: String,
        /// Comma-separated tags.
        #[arg(long, value_delimiter = ',')]
        tags: Vec<String>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Posting time of the query (RFC 3339); defaults to now.
        #[arg(long)]
        created: Option<DateTime<Utc>>,
    },
    /// Print corpus, graph, candidate and report summaries.
    Stats,
    /// Write a synthetic dump with planted duplicates.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        questions: Option<usize>,
        #[arg(long)]
        synth_seed: Option<u64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::BuildGraph => "build-graph",
            Command::TrainEmbeddings => "train-embeddings",
            Command::BuildCandidates => "build-candidates",
            Command::TrainRetrieval => "train-retrieval",
            Command::EvalRetrieval { .. } => "eval-retrieval",
            Command::TrainTimepred { .. } => "train-timepred",
            Command::EvalTimepred { .. } => "eval-timepred",
            Command::Query { .. } => "query",
            Command::Stats => "stats",
            Command::Synth { .. } => "synth",
        }
    }
}

/// Parse `args` (program name first) and run the chosen command.
pub fn run(args: Vec<String>) -> Result<()> {
    let (rest, mut overrides) = extract_overrides(args)?;
    let cli = Cli::try_parse_from(rest)?;
    if let Some(seed) = cli.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(threads) = cli.threads {
        overrides.push(("threads".into(), threads.to_string()));
    }
    if let Some(mode) = cli.feature_mode {
        overrides.push(("feature_mode".into(), mode.as_str().into()));
    }
    if let Some(dir) = &cli.work_dir {
        overrides.push(("paths.work_dir".into(), serde_json::to_string(dir)?));
    }
    if let Command::Ingest { posts, links } = &cli.command {
        if let Some(p) = posts {
            overrides.push(("paths.posts".into(), serde_json::to_string(p)?));
        }
        if let Some(p) = links {
            overrides.push(("paths.links".into(), serde_json::to_string(p)?));
        }
    }
    let cfg = PipelineConfig::resolve(cli.config.as_deref(), &overrides)?;
    let name = cli.command.name();
    let resolved = serde_json::to_string_pretty(&cfg)?;
    info!(
        "{name}: seed {} threads {} feature mode {}; resolved config in {}",
        cfg.seed,
        cfg.threads,
        cfg.feature_mode,
        Workspace::new(&cfg.paths.work_dir).log_config(name).display()
    );
    log::debug!("resolved config:\n{resolved}");

    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .context("building thread pool")?;
        pool.install(|| dispatch(&cli.command, &cfg, &resolved))
    } else {
        dispatch(&cli.command, &cfg, &resolved)
    }
}

fn dispatch(command: &Command, cfg: &PipelineConfig, resolved: &str) -> Result<()> {
    if let Command::Synth { out, questions, synth_seed } = command {
        let mut sc = SynthConfig::default();
        if let Some(n) = questions {
            sc.questions = *n;
        }
        if let Some(s) = synth_seed {
            sc.seed = *s;
        }
        return commands::synth_cmd(out, &sc);
    }
    let ctx = Ctx {
        cfg,
        ws: Workspace::new(&cfg.paths.work_dir),
    };
    let log = ctx.ws.log_config(command.name());
    ctx.ws.prepare(&log)?;
    std::fs::write(&log, format!("{resolved}\n")).with_context(|| format!("writing {}", log.display()))?;
    match command {
        Command::Ingest { .. } => commands::ingest(&ctx),
        Command::BuildGraph => commands::build_graph_cmd(&ctx),
        Command::TrainEmbeddings => commands::train_embeddings(&ctx),
        Command::BuildCandidates => commands::build_candidates(&ctx),
        Command::TrainRetrieval => commands::train_retrieval(&ctx),
        Command::EvalRetrieval { method, split } => commands::eval_retrieval(&ctx, *method, split),
        Command::TrainTimepred { model } => commands::train_timepred(&ctx, *model),
        Command::EvalTimepred { model } => commands::eval_timepred(&ctx, *model),
        Command::Query {
            title,
            body,
            tags,
            top_k,
            created,
        } => commands::query(
            &ctx,
            &QueryArgs {
                title: title.clone(),
                body: body.clone(),
                tags: tags.iter().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect(),
                top_k: *top_k,
                created: *created,
            },
        ),
        Command::Stats => commands::stats(&ctx),
        Command::Synth { .. } => unreachable!("handled above"),
    }
}
