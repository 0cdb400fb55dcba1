//! Skip-gram and CBOW word embeddings trained with negative sampling.
//!
//! Training follows the usual word2vec recipe: frequency subsampling, a
//! randomly shrunk window per center word, negatives drawn from the unigram
//! distribution raised to 0.75, and a learning rate decaying linearly over all
//! epochs. Context windows never cross sentence boundaries.
//!
//! With `workers == 1` (the default) a run is a pure function of corpus, config
//! and seed. With more workers each epoch is split into contiguous shards that
//! train on private copies of the parameters, which are then averaged. Results
//! then depend on the worker count.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusIndex;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("vocabulary is empty after min-count filtering")]
    EmptyVocabulary,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("undefined similarity: zero vector")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unknown model kind `{0}` (expected sgns or cbow)")]
    UnknownKind(String),
    #[error("vectors line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "sgns", alias = "skipgram")]
    SkipGram,
    #[serde(rename = "cbow")]
    Cbow,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::SkipGram, ModelKind::Cbow];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::SkipGram => "sgns",
            ModelKind::Cbow => "cbow",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgns" | "skipgram" | "skip-gram" => Ok(ModelKind::SkipGram),
            "cbow" => Ok(ModelKind::Cbow),
            other => Err(EmbeddingError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub start_lr: f64,
    pub end_lr: f64,
    /// Subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
    pub seed: u64,
    pub workers: usize,
    /// Keep each document with this probability before training.
    pub doc_fraction: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            epochs: 5,
            negatives: 5,
            min_count: 5,
            start_lr: 0.025,
            end_lr: 2.5e-4,
            subsample: 1e-3,
            seed: 42,
            workers: 1,
            doc_fraction: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.start_lr > 0.0 && self.end_lr >= 0.0 && self.end_lr <= self.start_lr) {
            return bad("learning rates must satisfy 0 <= end_lr <= start_lr, start_lr > 0");
        }
        if self.subsample < 0.0 {
            return bad("subsample must be non-negative");
        }
        if let Some(f) = self.doc_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad("doc_fraction must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Orders by descending count, then lemma.
    fn from_counts(mut entries: Vec<(String, u64)>) -> Self {
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Vocab {
            words,
            counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub kind: ModelKind,
    pub dim: usize,
    pub vocab: Vocab,
    pub input: Matrix,
    pub output: Matrix,
    pub config: TrainConfig,
    /// Mean per-example loss of each epoch; empty for loaded vectors.
    pub epoch_losses: Vec<f64>,
}

impl EmbeddingModel {
    pub fn vector(&self, lemma: &str) -> Option<&[f64]> {
        self.vocab.id(lemma).map(|i| self.input.row(i))
    }

    pub fn similarity(&self, a: &str, b: &str) -> Option<Result<f64, EmbeddingError>> {
        Some(cosine(self.vector(a)?, self.vector(b)?))
    }

    /// Plain-text vectors: `<vocab_size> <dim>` then `<lemma> v1 ... v_dim` per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.vocab.len(), self.dim)?;
        for (i, word) in self.vocab.words().iter().enumerate() {
            write!(out, "{word}")?;
            for v in self.input.row(i) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 lemmas")
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        fs::write(path, self.to_text()).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn parse_text(text: &str, kind: ModelKind) -> Result<Self, EmbeddingError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbeddingError::Format {
            line: 1,
            message: "missing header".into(),
        })?;
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| EmbeddingError::Format {
                line: 1,
                message: format!("bad header: {e}"),
            })?;
        let [size, dim] = fields[..] else {
            return Err(EmbeddingError::Format {
                line: 1,
                message: "header must be `<vocab_size> <dim>`".into(),
            });
        };
        let mut entries = Vec::with_capacity(size);
        let mut data = Vec::with_capacity(size * dim);
        for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap_or_default().to_string();
            let before = data.len();
            for p in parts {
                data.push(p.parse::<f64>().map_err(|e| EmbeddingError::Format {
                    line: i + 1,
                    message: e.to_string(),
                })?);
            }
            if data.len() - before != dim {
                return Err(EmbeddingError::Format {
                    line: i + 1,
                    message: format!("expected {dim} values, found {}", data.len() - before),
                });
            }
            entries.push(word);
        }
        if entries.len() != size {
            return Err(EmbeddingError::Format {
                line: 1,
                message: format!("header announces {size} vectors, found {}", entries.len()),
            });
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let vocab = Vocab {
            counts: vec![0; entries.len()],
            words: entries,
            index,
        };
        Ok(EmbeddingModel {
            kind,
            dim,
            output: Matrix::zeros(size, dim),
            input: Matrix {
                rows: size,
                cols: dim,
                data,
            },
            vocab,
            config: TrainConfig {
                dim,
                ..TrainConfig::default()
            },
            epoch_losses: Vec::new(),
        })
    }

    pub fn load(path: &Path, kind: ModelKind) -> Result<Self, EmbeddingError> {
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_text(&text, kind)
    }
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch(u.len(), v.len()));
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Negative-sampling loss of hidden vector `h` against output rows with
/// labels 1 (observed) or 0 (negative):
/// `sum_t -ln sigma(h . o_t)` for positives, `-ln sigma(-h . o_t)` for negatives.
pub fn ns_loss(h: &[f64], outputs: &[&[f64]], labels: &[f64]) -> f64 {
    outputs
        .iter()
        .zip(labels)
        .map(|(o, &label)| {
            let f = dot(h, o);
            if label > 0.5 {
                softplus(-f)
            } else {
                softplus(f)
            }
        })
        .sum()
}

/// One SGD step on the negative-sampling loss. Output rows are updated in
/// place; the gradient with respect to `h` is accumulated into `grad_h`
/// (the caller applies it). Returns the loss before the step.
pub fn ns_step(
    h: &[f64],
    output: &mut Matrix,
    targets: &[(usize, f64)],
    lr: f64,
    grad_h: &mut [f64],
) -> f64 {
    let mut loss = 0.0;
    for &(t, label) in targets {
        let row = output.row_mut(t);
        let f = dot(h, row);
        loss += if label > 0.5 { softplus(-f) } else { softplus(f) };
        let g = sigmoid(f) - label;
        for ((gh, o), x) in grad_h.iter_mut().zip(row.iter_mut()).zip(h) {
            *gh += g * *o;
            *o -= lr * g * x;
        }
    }
    loss
}

struct Prepared {
    vocab: Vocab,
    sentences: Vec<Vec<usize>>,
    total_words: u64,
    negatives: WeightedIndex<f64>,
}

fn prepare(
    index: &CorpusIndex,
    config: &TrainConfig,
    whitelist: &[String],
) -> Result<Prepared, EmbeddingError> {
    if index.sentence_count() == 0 {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut keep_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let sentences: Vec<Vec<&str>> = index
        .documents()
        .iter()
        .filter(|_| match config.doc_fraction {
            Some(f) => keep_rng.gen::<f64>() < f,
            None => true,
        })
        .flat_map(|d| d.sentences.iter())
        .map(|s| s.iter().map(|t| t.lemma.as_str()).collect())
        .collect();
    if sentences.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for w in sentences.iter().flatten() {
        *counts.entry(w).or_default() += 1;
    }
    let vocab = Vocab::from_counts(
        counts
            .iter()
            .filter(|(w, &c)| c >= config.min_count || whitelist.iter().any(|x| x == *w))
            .map(|(w, &c)| (w.to_string(), c))
            .collect(),
    );
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary);
    }
    let ids: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|w| vocab.id(w)).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    let total_words = ids.iter().map(|s| s.len() as u64).sum();
    let weights: Vec<f64> = vocab.counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let negatives = WeightedIndex::new(weights).expect("positive counts");
    Ok(Prepared {
        vocab,
        sentences: ids,
        total_words,
        negatives,
    })
}

struct Params {
    input: Matrix,
    output: Matrix,
}

struct EpochRun<'a> {
    config: &'a TrainConfig,
    kind: ModelKind,
    prep: &'a Prepared,
    /// Words processed before this shard/epoch, for the learning-rate schedule.
    words_before: u64,
    schedule_total: f64,
}

impl EpochRun<'_> {
    fn lr(&self, processed: u64) -> f64 {
        let progress = (processed as f64 / self.schedule_total).min(1.0);
        let c = self.config;
        c.start_lr - (c.start_lr - c.end_lr) * progress
    }

    fn keep(&self, word: usize, rng: &mut ChaCha8Rng) -> bool {
        let t = self.config.subsample;
        if t <= 0.0 {
            return true;
        }
        let f = self.prep.vocab.count(word) as f64;
        let threshold = t * self.prep.total_words as f64;
        let keep_prob = ((f / threshold).sqrt() + 1.0) * threshold / f;
        keep_prob >= 1.0 || rng.gen::<f64>() < keep_prob
    }

    fn targets(&self, positive: usize, rng: &mut ChaCha8Rng, buf: &mut Vec<(usize, f64)>) {
        buf.clear();
        buf.push((positive, 1.0));
        for _ in 0..self.config.negatives {
            let n = self.prep.negatives.sample(rng);
            if n != positive {
                buf.push((n, 0.0));
            }
        }
    }

    /// Returns (summed loss, number of examples).
    fn run(&self, sentences: &[Vec<usize>], params: &mut Params, rng: &mut ChaCha8Rng) -> (f64, u64) {
        let dim = self.config.dim;
        let mut grad = vec![0.0; dim];
        let mut hidden = vec![0.0; dim];
        let mut targets = Vec::with_capacity(self.config.negatives + 1);
        let mut loss = 0.0;
        let mut examples = 0u64;
        let mut processed = self.words_before;

        for sentence in sentences {
            let kept: Vec<usize> = sentence
                .iter()
                .copied()
                .filter(|&w| self.keep(w, rng))
                .collect();
            for (pos, &center) in kept.iter().enumerate() {
                let lr = self.lr(processed);
                let shrink = rng.gen_range(0..self.config.window);
                let reach = self.config.window - shrink;
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(kept.len() - 1);
                let context = (lo..=hi).filter(|&j| j != pos).map(|j| kept[j]);
                match self.kind {
                    ModelKind::SkipGram => {
                        for ctx in context {
                            self.targets(ctx, rng, &mut targets);
                            grad.iter_mut().for_each(|g| *g = 0.0);
                            hidden.copy_from_slice(params.input.row(center));
                            loss += ns_step(&hidden, &mut params.output, &targets, lr, &mut grad);
                            examples += 1;
                            for (x, g) in params.input.row_mut(center).iter_mut().zip(&grad) {
                                *x -= lr * g;
                            }
                        }
                    }
                    ModelKind::Cbow => {
                        let ctx: Vec<usize> = context.collect();
                        if ctx.is_empty() {
                            continue;
                        }
                        hidden.iter_mut().for_each(|h| *h = 0.0);
                        for &c in &ctx {
                            for (h, x) in hidden.iter_mut().zip(params.input.row(c)) {
                                *h += x;
                            }
                        }
                        let inv = 1.0 / ctx.len() as f64;
                        hidden.iter_mut().for_each(|h| *h *= inv);
                        self.targets(center, rng, &mut targets);
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        loss += ns_step(&hidden, &mut params.output, &targets, lr, &mut grad);
                        examples += 1;
                        for &c in &ctx {
                            for (x, g) in params.input.row_mut(c).iter_mut().zip(&grad) {
                                *x -= lr * g * inv;
                            }
                        }
                    }
                }
                processed += 1;
            }
        }
        (loss, examples)
    }
}

/// Trains a model on the lemma stream of `index`. Lemmas in `whitelist` enter
/// the vocabulary whenever they occur, regardless of `min_count`.
pub fn train(
    index: &CorpusIndex,
    kind: ModelKind,
    config: &TrainConfig,
    whitelist: &[String],
) -> Result<EmbeddingModel, EmbeddingError> {
    config.validate()?;
    let prep = prepare(index, config, whitelist)?;
    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input = Matrix::zeros(prep.vocab.len(), dim);
    for v in input.data.iter_mut() {
        *v = (rng.gen::<f64>() - 0.5) / dim as f64;
    }
    let mut params = Params {
        input,
        output: Matrix::zeros(prep.vocab.len(), dim),
    };
    let schedule_total = (config.epochs as u64 * prep.total_words).max(1) as f64;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let words_before = epoch as u64 * prep.total_words;
        let (loss, examples) = if config.workers == 1 {
            let run = EpochRun {
                config,
                kind,
                prep: &prep,
                words_before,
                schedule_total,
            };
            run.run(&prep.sentences, &mut params, &mut rng)
        } else {
            run_sharded(config, kind, &prep, &mut params, epoch, words_before, schedule_total)
        };
        epoch_losses.push(if examples > 0 {
            loss / examples as f64
        } else {
            0.0
        });
    }

    Ok(EmbeddingModel {
        kind,
        dim,
        vocab: prep.vocab,
        input: params.input,
        output: params.output,
        config: config.clone(),
        epoch_losses,
    })
}

fn run_sharded(
    config: &TrainConfig,
    kind: ModelKind,
    prep: &Prepared,
    params: &mut Params,
    epoch: usize,
    words_before: u64,
    schedule_total: f64,
) -> (f64, u64) {
    let shard_len = prep.sentences.len().div_ceil(config.workers).max(1);
    let shards: Vec<&[Vec<usize>]> = prep.sentences.chunks(shard_len).collect();
    let results: Vec<(Params, f64, u64)> = shards
        .par_iter()
        .enumerate()
        .map(|(s, shard)| {
            let mut local = Params {
                input: params.input.clone(),
                output: params.output.clone(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((epoch * config.workers + s + 1) as u64);
            let run = EpochRun {
                config,
                kind,
                prep,
                words_before,
                schedule_total,
            };
            let (loss, n) = run.run(shard, &mut local, &mut rng);
            (local, loss, n)
        })
        .collect();
    let scale = 1.0 / results.len() as f64;
    params.input.data.iter_mut().for_each(|v| *v = 0.0);
    params.output.data.iter_mut().for_each(|v| *v = 0.0);
    let (mut loss, mut examples) = (0.0, 0);
    for (local, l, n) in results {
        for (a, b) in params.input.data.iter_mut().zip(&local.input.data) {
            *a += b * scale;
        }
        for (a, b) in params.output.data.iter_mut().zip(&local.output.data) {
            *a += b * scale;
        }
        loss += l;
        examples += n;
    }
    (loss, examples)
}
