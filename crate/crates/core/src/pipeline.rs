//! End-to-end runs: configuration, stage execution and report emission.
//!
//! Stages run in order (ingest, specificity, fit, embed, tcn, cuts, ks). A
//! [`Target`] selects which stages run and which artifacts get written; the
//! full run writes rank distributions, fit records, KS matrices and cut series.
//! All outputs are computed in memory first, so a failing stage leaves the
//! output directory untouched.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compounds::Lexicon;
use crate::corpus::{self, CorpusFormat, CorpusIndex};
use crate::embeddings::{self, EmbeddingModel, ModelKind, TrainConfig};
use crate::specificity::{self, ConceptSet, RankDistribution, SpecificityRecord, Variant};
use crate::stats::{self, FitRecord, KsMatrix};
use crate::tcn::{self, CutSeries, IndexKind, ThresholdConceptNetwork};

/// Minimum lemma frequency for the corpus's own vocabulary to serve as lexicon.
pub const SELF_LEXICON_MIN_COUNT: u64 = 5;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FITS_FILE: &str = "fits.csv";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }
}

fn invalid(message: impl Into<String>) -> PipelineError {
    PipelineError::Validation(message.into())
}

fn failed(stage: &'static str, message: impl fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage,
        message: message.to_string(),
    }
}

/// What a run computes and emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Ingest,
    Specificity,
    Fit,
    Embed,
    Tcn,
    Cuts,
    Ks,
    All,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Ingest => "ingest",
            Target::Specificity => "specificity",
            Target::Fit => "fit",
            Target::Embed => "embed",
            Target::Tcn => "tcn",
            Target::Cuts => "cuts",
            Target::Ks => "ks",
            Target::All => "all",
        }
    }

    fn needs_specificity(self) -> bool {
        !matches!(self, Target::Ingest | Target::Embed)
    }

    fn needs_fit(self) -> bool {
        matches!(self, Target::Fit | Target::All)
    }

    fn needs_embedding(self) -> bool {
        matches!(
            self,
            Target::Embed | Target::Tcn | Target::Cuts | Target::Ks | Target::All
        )
    }

    fn needs_network(self) -> bool {
        matches!(self, Target::Tcn | Target::Cuts | Target::Ks | Target::All)
    }

    fn needs_ks(self) -> bool {
        matches!(self, Target::Ks | Target::All)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub id: String,
    pub path: PathBuf,
    pub format: CorpusFormat,
}

impl FromStr for CorpusSpec {
    type Err = PipelineError;

    /// `id=path:format`; without a `:format` suffix the format follows the
    /// file extension.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (id, rest) = s
            .split_once('=')
            .ok_or_else(|| invalid(format!("corpus `{s}`: expected id=path:format")))?;
        let (path, format) = match rest.rsplit_once(':') {
            Some((path, fmt)) if fmt.parse::<CorpusFormat>().is_ok() => {
                (path, fmt.parse::<CorpusFormat>().expect("checked"))
            }
            _ => {
                let ext = Path::new(rest)
                    .extension()
                    .and_then(|e| e.to_str())
                    .unwrap_or("");
                let format = match ext {
                    "jsonl" | "json" => CorpusFormat::Jsonl,
                    "tsv" | "conllu" | "conll" => CorpusFormat::Tsv,
                    "txt" => CorpusFormat::Text,
                    _ => {
                        return Err(invalid(format!(
                            "corpus `{s}`: cannot infer format, append :jsonl, :tsv or :text"
                        )))
                    }
                };
                (rest, format)
            }
        };
        Ok(CorpusSpec {
            id: id.to_string(),
            path: PathBuf::from(path),
            format,
        })
    }
}

/// Run configuration. In JSON form every field is optional except `corpora`,
/// which must end up non-empty; relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpora: Vec<CorpusSpec>,
    /// Concept list; the bundled list when absent.
    pub concepts_path: Option<PathBuf>,
    /// Compound lexicon; each corpus's own vocabulary when absent.
    pub lexicon_path: Option<PathBuf>,
    pub variants: Vec<Variant>,
    pub models: Vec<ModelKind>,
    /// Embedding hyperparameters. Its `seed` is replaced by the run seed.
    pub embedding: TrainConfig,
    pub indices: Vec<IndexKind>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpora: Vec::new(),
            concepts_path: None,
            lexicon_path: None,
            variants: Variant::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            embedding: TrainConfig::default(),
            indices: IndexKind::ALL.to_vec(),
            seed: 42,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for c in &mut self.corpora {
            join(&mut c.path);
        }
        if let Some(p) = &mut self.concepts_path {
            join(p);
        }
        if let Some(p) = &mut self.lexicon_path {
            join(p);
        }
        join(&mut self.out_dir);
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.embedding.clone()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.corpora.is_empty() {
            return Err(invalid("no corpora configured"));
        }
        let mut ids = HashSet::new();
        for c in &self.corpora {
            if c.id.is_empty()
                || c.id.starts_with('.')
                || c.id.chars().any(|ch| ch == '/' || ch == '\\' || ch.is_whitespace())
            {
                return Err(invalid(format!("corpus id `{}` is not usable in file names", c.id)));
            }
            if !ids.insert(c.id.as_str()) {
                return Err(invalid(format!("duplicate corpus id `{}`", c.id)));
            }
            if !c.path.is_file() {
                return Err(invalid(format!(
                    "corpus `{}`: {} is not a readable file",
                    c.id,
                    c.path.display()
                )));
            }
        }
        for (what, path) in [("concepts", &self.concepts_path), ("lexicon", &self.lexicon_path)] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(invalid(format!("{what}: {} is not a readable file", p.display())));
                }
            }
        }
        unique_nonempty("variants", &self.variants)?;
        unique_nonempty("models", &self.models)?;
        unique_nonempty("indices", &self.indices)?;
        self.train_config()
            .validate()
            .map_err(|e| invalid(format!("embedding: {e}")))
    }
}

fn unique_nonempty<T: fmt::Display + PartialEq>(what: &str, items: &[T]) -> Result<(), PipelineError> {
    if items.is_empty() {
        return Err(invalid(format!("{what}: empty selection")));
    }
    for (i, a) in items.iter().enumerate() {
        if items[..i].contains(a) {
            return Err(invalid(format!("{what}: `{a}` listed twice")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub total_tokens: BTreeMap<String, u64>,
    /// Corpora read through the whitespace fallback.
    pub low_fidelity: Vec<String>,
    /// Concepts without a vector, keyed `<corpus>_<model>`.
    pub out_of_vocabulary: BTreeMap<String, Vec<String>>,
}

/// Everything a run computed. Collections belonging to stages that did not
/// run are empty.
#[derive(Debug, Clone)]
pub struct Report {
    pub target: Target,
    pub corpora: Vec<CorpusIndex>,
    pub specificity: Vec<(String, Vec<SpecificityRecord>)>,
    pub distributions: Vec<RankDistribution>,
    pub fits: Vec<FitRecord>,
    pub models: Vec<(String, EmbeddingModel)>,
    pub networks: Vec<ThresholdConceptNetwork>,
    pub series: Vec<(String, ModelKind, CutSeries)>,
    pub ks_distributions: Vec<(Variant, KsMatrix)>,
    pub ks_cut_x: Vec<(ModelKind, IndexKind, KsMatrix)>,
    pub ks_cut_y: Vec<(ModelKind, IndexKind, KsMatrix)>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn empty(target: Target) -> Self {
        Report {
            target,
            corpora: Vec::new(),
            specificity: Vec::new(),
            distributions: Vec::new(),
            fits: Vec::new(),
            models: Vec::new(),
            networks: Vec::new(),
            series: Vec::new(),
            ks_distributions: Vec::new(),
            ks_cut_x: Vec::new(),
            ks_cut_y: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    /// File name and content of every artifact the target emits, in name order.
    pub fn artifacts(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let t = self.target;
        if t == Target::Ingest {
            for c in &self.corpora {
                out.push((format!("ingest_{}.csv", c.corpus_id), lemma_counts_csv(c)));
            }
        }
        if t == Target::Specificity {
            for (id, records) in &self.specificity {
                out.push((format!("specificity_{id}.csv"), specificity_csv(records)));
            }
        }
        if matches!(t, Target::Specificity | Target::All) {
            for d in &self.distributions {
                out.push((
                    format!("dist_{}_{}.csv", d.corpus_id, d.variant),
                    distribution_csv(d),
                ));
            }
        }
        if matches!(t, Target::Fit | Target::All) && !self.fits.is_empty() {
            out.push((FITS_FILE.to_string(), stats::write_fit_csv(&self.fits)));
        }
        if t == Target::Embed {
            for (id, m) in &self.models {
                out.push((format!("embed_{id}_{}.txt", m.kind), m.to_text()));
            }
        }
        if t == Target::Tcn {
            for n in &self.networks {
                let key = format!("{}_{}", n.corpus_id, n.model_kind);
                out.push((format!("tcn_edges_{key}.csv"), n.edges_csv()));
                out.push((format!("tcn_vertices_{key}.csv"), n.vertices_csv()));
            }
        }
        if matches!(t, Target::Cuts | Target::All) {
            for (id, kind, s) in &self.series {
                out.push((format!("cuts_{id}_{kind}_{}.csv", s.index_kind), s.to_csv()));
            }
        }
        if matches!(t, Target::Ks | Target::All) {
            for (v, m) in &self.ks_distributions {
                out.push((format!("ks_dist_{v}.csv"), m.to_csv()));
            }
            for (kind, index, m) in &self.ks_cut_x {
                out.push((format!("ks_cutx_{kind}_{index}.csv"), m.to_csv()));
            }
            for (kind, index, m) in &self.ks_cut_y {
                out.push((format!("ks_cuty_{kind}_{index}.csv"), m.to_csv()));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn lemma_counts_csv(index: &CorpusIndex) -> String {
    let mut w = csv_writer();
    w.write_record(["lemma", "count"]).expect("in-memory write");
    for (lemma, n) in &index.lemma_counts {
        w.write_record([lemma.as_str(), &n.to_string()])
            .expect("in-memory write");
    }
    finish(w)
}

fn specificity_csv(records: &[SpecificityRecord]) -> String {
    let mut w = csv_writer();
    w.write_record(["concept", "s_count", "c_count", "mu"])
        .expect("in-memory write");
    for r in records {
        w.write_record([
            r.concept.clone(),
            r.s_count.to_string(),
            r.c_count.to_string(),
            r.mu.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// `rank,concept,raw_count,per_million`, ranks from 1.
pub fn distribution_csv(d: &RankDistribution) -> String {
    let mut w = csv_writer();
    w.write_record(["rank", "concept", "raw_count", "per_million"])
        .expect("in-memory write");
    for (i, e) in d.entries.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.concept.clone(),
            e.raw_count.to_string(),
            e.per_million.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

fn load_concepts(config: &RunConfig) -> Result<ConceptSet, PipelineError> {
    match &config.concepts_path {
        Some(p) => ConceptSet::load(p).map_err(|e| invalid(format!("concepts: {e}"))),
        None => Ok(ConceptSet::bundled()),
    }
}

/// Runs the stages `target` depends on.
pub fn run_pipeline(config: &RunConfig, target: Target) -> Result<Report, PipelineError> {
    config.validate()?;
    let concepts = load_concepts(config)?;
    let shared_lexicon = match &config.lexicon_path {
        Some(p) => Some(Lexicon::load(p).map_err(|e| invalid(format!("lexicon: {e}")))?),
        None => None,
    };
    let mut report = Report::empty(target);

    report.corpora = config
        .corpora
        .par_iter()
        .map(|spec| {
            let index = corpus::load(&spec.path, spec.format)
                .map_err(|e| failed("ingest", format!("corpus `{}`: {e}", spec.id)))?
                .with_corpus_id(spec.id.clone());
            if index.total_tokens == 0 {
                return Err(failed("ingest", format!("corpus `{}`: no tokens", spec.id)));
            }
            Ok(index)
        })
        .collect::<Result<_, _>>()?;
    for c in &report.corpora {
        report
            .diagnostics
            .total_tokens
            .insert(c.corpus_id.clone(), c.total_tokens);
        if c.low_fidelity {
            report.diagnostics.low_fidelity.push(c.corpus_id.clone());
        }
    }

    if target.needs_specificity() {
        report.specificity = report
            .corpora
            .par_iter()
            .map(|index| {
                let mut lexicon = match &shared_lexicon {
                    Some(l) => l.clone(),
                    None => Lexicon::from_corpus(index, SELF_LEXICON_MIN_COUNT),
                };
                lexicon.extend(concepts.concepts());
                (
                    index.corpus_id.clone(),
                    specificity::specificity(index, &concepts, &lexicon),
                )
            })
            .collect();
        for (index, (id, records)) in report.corpora.iter().zip(&report.specificity) {
            for &v in &config.variants {
                let d = specificity::rank_distribution(id, records, v, index.total_tokens)
                    .map_err(|e| failed("specificity", format!("corpus `{id}`: {e}")))?;
                report.distributions.push(d);
            }
        }
    }

    if target.needs_fit() {
        report.fits = report
            .distributions
            .par_iter()
            .map(|d| {
                let counts: Vec<f64> = d
                    .raw_counts()
                    .into_iter()
                    .filter(|&n| n > 0)
                    .map(|n| n as f64)
                    .collect();
                let fit = stats::fit_power_law(&counts).map_err(|e| {
                    failed("fit", format!("corpus `{}` variant {}: {e}", d.corpus_id, d.variant))
                })?;
                Ok(FitRecord {
                    corpus: d.corpus_id.clone(),
                    variant: d.variant,
                    fit,
                })
            })
            .collect::<Result<_, _>>()?;
    }

    if target.needs_embedding() {
        let train_config = config.train_config();
        let jobs: Vec<(usize, ModelKind)> = (0..report.corpora.len())
            .flat_map(|i| config.models.iter().map(move |&m| (i, m)))
            .collect();
        report.models = jobs
            .par_iter()
            .map(|&(i, kind)| {
                let index = &report.corpora[i];
                embeddings::train(index, kind, &train_config, concepts.concepts())
                    .map(|m| (index.corpus_id.clone(), m))
                    .map_err(|e| {
                        failed("embed", format!("corpus `{}` model {kind}: {e}", index.corpus_id))
                    })
            })
            .collect::<Result<_, _>>()?;
    }

    if target.needs_network() {
        for (i, (id, model)) in report.models.iter().enumerate() {
            let records = &report.specificity[i / config.models.len()].1;
            let net = tcn::build_tcn(id, model, &concepts, records)
                .map_err(|e| failed("tcn", format!("corpus `{id}` model {}: {e}", model.kind)))?;
            report
                .diagnostics
                .out_of_vocabulary
                .insert(format!("{id}_{}", model.kind), net.out_of_vocabulary.clone());
            report.networks.push(net);
        }
        if target != Target::Tcn {
            for net in &report.networks {
                for &kind in &config.indices {
                    let s = net.index_series(kind).map_err(|e| {
                        failed(
                            "cuts",
                            format!("corpus `{}` model {}: {e}", net.corpus_id, net.model_kind),
                        )
                    })?;
                    report.series.push((net.corpus_id.clone(), net.model_kind, s));
                }
            }
        }
    }

    if target.needs_ks() && report.corpora.len() >= 2 {
        for &v in &config.variants {
            let series: Vec<(String, Vec<f64>)> = report
                .distributions
                .iter()
                .filter(|d| d.variant == v)
                .map(|d| (d.corpus_id.clone(), d.per_million()))
                .collect();
            let m = stats::ks_matrix(&series).map_err(|e| failed("ks", format!("variant {v}: {e}")))?;
            report.ks_distributions.push((v, m));
        }
        for &model in &config.models {
            for &index in &config.indices {
                let chosen: Vec<&(String, ModelKind, CutSeries)> = report
                    .series
                    .iter()
                    .filter(|(_, k, s)| *k == model && s.index_kind == index)
                    .collect();
                let axis = |f: fn(&CutSeries) -> &Vec<f64>| -> Vec<(String, Vec<f64>)> {
                    chosen
                        .iter()
                        .map(|(id, _, s)| (id.clone(), stats::min_max_scale(f(s))))
                        .collect()
                };
                let tag = |e: stats::StatsError| failed("ks", format!("{model} {index}: {e}"));
                let x = stats::ks_matrix(&axis(|s| &s.alphas)).map_err(tag)?;
                let y = stats::ks_matrix(&axis(|s| &s.values)).map_err(tag)?;
                report.ks_cut_x.push((model, index, x));
                report.ks_cut_y.push((model, index, y));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub target: Target,
    pub files: Vec<ManifestEntry>,
    pub diagnostics: Diagnostics,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every artifact of `report` plus the manifest into `out_dir`. Files
/// written before a failure are removed again.
pub fn emit_report(report: &Report, out_dir: &Path) -> Result<Manifest, PipelineError> {
    let emit_err = |e: std::io::Error| failed("emit", format!("{}: {e}", out_dir.display()));
    fs::create_dir_all(out_dir).map_err(emit_err)?;
    let artifacts = report.artifacts();
    let mut written: Vec<PathBuf> = Vec::new();
    let mut files = Vec::with_capacity(artifacts.len());
    let result = (|| {
        for (name, content) in &artifacts {
            let path = out_dir.join(name);
            fs::write(&path, content).map_err(emit_err)?;
            written.push(path);
            files.push(ManifestEntry {
                path: name.clone(),
                bytes: content.len() as u64,
                sha256: sha256_hex(content.as_bytes()),
            });
        }
        let manifest = Manifest {
            target: report.target,
            files: files.clone(),
            diagnostics: report.diagnostics.clone(),
        };
        fs::write(out_dir.join(MANIFEST_FILE), manifest.to_json()).map_err(emit_err)?;
        Ok(manifest)
    })();
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

/// Validates `config`, runs `target` and writes its artifacts to the
/// configured output directory.
pub fn run_and_emit(config: &RunConfig, target: Target) -> Result<Manifest, PipelineError> {
    let report = run_pipeline(config, target)?;
    emit_report(&report, &config.out_dir)
}

/// Checks `config` without running any stage and writes a manifest with no
/// data files.
pub fn validate_only(config: &RunConfig, target: Target) -> Result<Manifest, PipelineError> {
    config.validate()?;
    load_concepts(config)?;
    if let Some(p) = &config.lexicon_path {
        Lexicon::load(p).map_err(|e| invalid(format!("lexicon: {e}")))?;
    }
    emit_report(&Report::empty(target), &config.out_dir)
}
