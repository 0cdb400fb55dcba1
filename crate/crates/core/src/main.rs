use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tcnet::embeddings::ModelKind;
use tcnet::pipeline::{self, CorpusSpec, PipelineError, RunConfig, Target};
use tcnet::specificity::Variant;
use tcnet::tcn::IndexKind;

/// Threshold concept specificity, embedding networks and alpha-cut analysis.
#[derive(Debug, Parser)]
#[command(name = "tcnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read corpora and write per-corpus lemma counts
    Ingest(RunArgs),
    /// Concept specificity tables and rank distributions
    Specificity(RunArgs),
    /// Power-law fits of every rank distribution
    Fit(RunArgs),
    /// Train embeddings and write vectors in word2vec text format
    Embed(RunArgs),
    /// Concept networks as edge and vertex lists
    Tcn(RunArgs),
    /// Cohesion and transitivity over all alpha cuts
    Cuts(RunArgs),
    /// Pairwise KS matrices across corpora
    Ks(RunArgs),
    /// Full run: distributions, fits, cut series and KS matrices
    All(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus as id=path:format (format: jsonl, tsv, text); repeatable
    #[arg(long = "corpus", value_name = "ID=PATH:FORMAT")]
    corpora: Vec<String>,
    /// Concept list, one lemma per line
    #[arg(long)]
    concepts: Option<PathBuf>,
    /// Compound lexicon word list
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// mu, c_only or s_only; repeatable
    #[arg(long = "variant")]
    variants: Vec<Variant>,
    /// sgns or cbow; repeatable
    #[arg(long = "model")]
    models: Vec<ModelKind>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long = "min-count")]
    min_count: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// cohesion or transitivity; repeatable
    #[arg(long = "index")]
    indices: Vec<IndexKind>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check the configuration and write an empty manifest
    #[arg(long)]
    validate_only: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, PipelineError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.corpora.is_empty() {
            c.corpora = self
                .corpora
                .iter()
                .map(|s| s.parse::<CorpusSpec>())
                .collect::<Result<_, _>>()?;
        }
        if self.concepts.is_some() {
            c.concepts_path = self.concepts;
        }
        if self.lexicon.is_some() {
            c.lexicon_path = self.lexicon;
        }
        if !self.variants.is_empty() {
            c.variants = self.variants;
        }
        if !self.models.is_empty() {
            c.models = self.models;
        }
        if !self.indices.is_empty() {
            c.indices = self.indices;
        }
        let e = &mut c.embedding;
        if let Some(v) = self.dim {
            e.dim = v;
        }
        if let Some(v) = self.window {
            e.window = v;
        }
        if let Some(v) = self.epochs {
            e.epochs = v;
        }
        if let Some(v) = self.negatives {
            e.negatives = v;
        }
        if let Some(v) = self.min_count {
            e.min_count = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.out {
            c.out_dir = v;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (target, args) = match cli.command {
        Command::Ingest(a) => (Target::Ingest, a),
        Command::Specificity(a) => (Target::Specificity, a),
        Command::Fit(a) => (Target::Fit, a),
        Command::Embed(a) => (Target::Embed, a),
        Command::Tcn(a) => (Target::Tcn, a),
        Command::Cuts(a) => (Target::Cuts, a),
        Command::Ks(a) => (Target::Ks, a),
        Command::All(a) => (Target::All, a),
    };
    let validate_only = args.validate_only;
    let result = args.into_config().and_then(|config| {
        if validate_only {
            pipeline::validate_only(&config, target)
        } else {
            pipeline::run_and_emit(&config, target)
        }
        .map(|m| (config.out_dir, m))
    });
    match result {
        Ok((out_dir, manifest)) => {
            for d in &manifest.diagnostics.low_fidelity {
                eprintln!("warning: corpus `{d}` read with the whitespace fallback");
            }
            for (key, oov) in &manifest.diagnostics.out_of_vocabulary {
                if !oov.is_empty() {
                    eprintln!("warning: {key}: {} concepts without vectors", oov.len());
                }
            }
            println!(
                "{}: wrote {} files to {}",
                target,
                manifest.files.len(),
                out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
