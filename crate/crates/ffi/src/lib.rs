//! C ABI over the `tcnet` library.
//!
//! Objects cross the boundary as opaque handles created by `tcn_*_parse` or
//! `tcn_*_load` and released with the matching `tcn_*_free`. Fallible calls
//! return a [`TcnStatus`]; on failure `tcn_last_error` describes the problem
//! for the calling thread. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use tcnet::compounds::{self, Lexicon};
use tcnet::corpus::{self, CorpusFormat, CorpusIndex};
use tcnet::embeddings::{self, ModelKind};
use tcnet::pipeline::{self, PipelineError, RunConfig, Target};
use tcnet::stats::{self, StatsError};
use tcnet::tcn::{CutSeries, IndexKind, ThresholdConceptNetwork, Vertex};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcnStatus {
    Ok = 0,
    NullPointer = 1,
    /// Configuration rejected before any work; same value as the CLI exit code.
    Validation = 2,
    /// A pipeline stage failed; same value as the CLI exit code.
    Stage = 3,
    InvalidArgument = 4,
    Parse = 5,
    DegenerateSample = 6,
    Io = 7,
    Panic = 99,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcnFormat {
    Jsonl = 0,
    Tsv = 1,
    Text = 2,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcnIndex {
    Cohesion = 0,
    Transitivity = 1,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcnTarget {
    Ingest = 0,
    Specificity = 1,
    Fit = 2,
    Embed = 3,
    Tcn = 4,
    Cuts = 5,
    Ks = 6,
    All = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TcnPowerLawFit {
    pub alpha: f64,
    pub x_min: f64,
    /// Loglikelihood ratio, power law against lognormal.
    pub r: f64,
    pub p: f64,
    pub n_tail: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TcnKsResult {
    pub d_stat: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Opaque corpus index.
pub struct TcnCorpus(CorpusIndex);

/// Opaque compound lexicon.
pub struct TcnLexicon(Lexicon);

/// Opaque alpha-cut index series.
pub struct TcnSeries(CutSeries);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let msg = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NUL bytes removed"));
}

struct Failure(TcnStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: TcnStatus, message: impl Into<String>) -> FfiResult<T> {
    Err(Failure(status, message.into()))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> TcnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TcnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TcnStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(TcnStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(TcnStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(TcnStatus::NullPointer, format!("{what} is null"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .map_or_else(|| fail(TcnStatus::NullPointer, format!("{what} is null")), Ok)
}

fn format_of(code: i32) -> FfiResult<CorpusFormat> {
    match code {
        c if c == TcnFormat::Jsonl as i32 => Ok(CorpusFormat::Jsonl),
        c if c == TcnFormat::Tsv as i32 => Ok(CorpusFormat::Tsv),
        c if c == TcnFormat::Text as i32 => Ok(CorpusFormat::Text),
        c => fail(TcnStatus::InvalidArgument, format!("unknown format code {c}")),
    }
}

fn index_of(code: i32) -> FfiResult<IndexKind> {
    match code {
        c if c == TcnIndex::Cohesion as i32 => Ok(IndexKind::Cohesion),
        c if c == TcnIndex::Transitivity as i32 => Ok(IndexKind::Transitivity),
        c => fail(TcnStatus::InvalidArgument, format!("unknown index code {c}")),
    }
}

fn target_of(code: i32) -> FfiResult<Target> {
    const TARGETS: [(TcnTarget, Target); 8] = [
        (TcnTarget::Ingest, Target::Ingest),
        (TcnTarget::Specificity, Target::Specificity),
        (TcnTarget::Fit, Target::Fit),
        (TcnTarget::Embed, Target::Embed),
        (TcnTarget::Tcn, Target::Tcn),
        (TcnTarget::Cuts, Target::Cuts),
        (TcnTarget::Ks, Target::Ks),
        (TcnTarget::All, Target::All),
    ];
    TARGETS
        .iter()
        .find(|(c, _)| *c as i32 == code)
        .map(|(_, t)| *t)
        .map_or_else(|| fail(TcnStatus::InvalidArgument, format!("unknown target code {code}")), Ok)
}

fn stats_failure(e: StatsError) -> Failure {
    let status = match e {
        StatsError::DegenerateSample => TcnStatus::DegenerateSample,
        _ => TcnStatus::InvalidArgument,
    };
    Failure(status, e.to_string())
}

/// Message of the calling thread's last failure; empty after a success. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tcn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses corpus `text`; `format` is a `TcnFormat` value.
///
/// # Safety
/// `text` and `corpus_id` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_corpus_parse(
    text: *const c_char,
    format: i32,
    corpus_id: *const c_char,
    out: *mut *mut TcnCorpus,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let id = str_arg(corpus_id, "corpus_id")?;
        let index = match format_of(format)? {
            CorpusFormat::Jsonl => corpus::read_jsonl(text, id),
            CorpusFormat::Tsv => corpus::read_tsv(text, id),
            CorpusFormat::Text => Ok(corpus::read_text(text, id)),
        }
        .or_else(|e| fail(TcnStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(TcnCorpus(index)));
        Ok(())
    })
}

/// Reads a corpus file; the corpus id is the file stem. `format` is a
/// `TcnFormat` value.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_corpus_load(
    path: *const c_char,
    format: i32,
    out: *mut *mut TcnCorpus,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let index = corpus::load(Path::new(path), format_of(format)?).map_err(|e| {
            let status = match e {
                corpus::CorpusError::Io { .. } => TcnStatus::Io,
                _ => TcnStatus::Parse,
            };
            Failure(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(TcnCorpus(index)));
        Ok(())
    })
}

/// Token count of the corpus; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tcn_corpus_total_tokens(corpus: *const TcnCorpus) -> u64 {
    corpus.as_ref().map_or(0, |c| c.0.total_tokens)
}

/// Occurrences of `lemma`; 0 for null arguments.
///
/// # Safety
/// `corpus` must be null or a live handle; `lemma` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tcn_corpus_lemma_count(
    corpus: *const TcnCorpus,
    lemma: *const c_char,
) -> u64 {
    match (corpus.as_ref(), str_arg(lemma, "lemma")) {
        (Some(c), Ok(l)) => c.0.count(l),
        _ => 0,
    }
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tcn_corpus_free(corpus: *mut TcnCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Builds a lexicon from a word list, one entry per line, `#` comments.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_lexicon_parse(
    text: *const c_char,
    out: *mut *mut TcnLexicon,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        *out = Box::into_raw(Box::new(TcnLexicon(Lexicon::parse(text))));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tcn_lexicon_free(lexicon: *mut TcnLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Segments `word`; `*out` receives the lexicon entries of the best cover
/// joined by `|`, or null when no cover exists. Free it with `tcn_string_free`.
///
/// # Safety
/// `word` must be NUL-terminated, `lexicon` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_segment(
    word: *const c_char,
    lexicon: *const TcnLexicon,
    out: *mut *mut c_char,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let word = str_arg(word, "word")?;
        let lexicon = lexicon
            .as_ref()
            .map_or_else(|| fail(TcnStatus::NullPointer, "lexicon is null"), Ok)?;
        *out = match compounds::segment(word, &lexicon.0) {
            Some(s) => {
                let joined: Vec<&str> = s.parts.iter().map(|p| p.component.as_str()).collect();
                CString::new(joined.join("|"))
                    .expect("lexicon entries contain no NUL")
                    .into_raw()
            }
            None => ptr::null_mut(),
        };
        Ok(())
    })
}

/// Sets `*out` when `word` reads as a compound containing `concept`.
///
/// # Safety
/// String arguments must be NUL-terminated, `lexicon` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_contains_component(
    word: *const c_char,
    concept: *const c_char,
    lexicon: *const TcnLexicon,
    out: *mut bool,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let word = str_arg(word, "word")?;
        let concept = str_arg(concept, "concept")?;
        let lexicon = lexicon
            .as_ref()
            .map_or_else(|| fail(TcnStatus::NullPointer, "lexicon is null"), Ok)?;
        *out = compounds::contains_component(word, concept, &lexicon.0);
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn tcn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Fits a power law to `len` positive values.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_fit_power_law(
    values: *const f64,
    len: usize,
    out: *mut TcnPowerLawFit,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let values = slice_arg(values, len, "values")?;
        let fit = stats::fit_power_law(values).map_err(stats_failure)?;
        *out = TcnPowerLawFit {
            alpha: fit.alpha,
            x_min: fit.x_min,
            r: fit.r,
            p: fit.p,
            n_tail: fit.n_tail.unwrap_or(0),
        };
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_ks_two_sample(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut TcnKsResult,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let a = slice_arg(a, na, "a")?;
        let b = slice_arg(b, nb, "b")?;
        let r = stats::ks_two_sample(a, b).map_err(stats_failure)?;
        *out = TcnKsResult {
            d_stat: r.d_stat,
            p_value: r.p_value,
            n1: r.n1,
            n2: r.n2,
        };
        Ok(())
    })
}

/// Cosine of two `dim`-dimensional vectors.
///
/// # Safety
/// `u` and `v` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_cosine(
    u: *const f64,
    v: *const f64,
    dim: usize,
    out: *mut f64,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let u = slice_arg(u, dim, "u")?;
        let v = slice_arg(v, dim, "v")?;
        *out = embeddings::cosine(u, v)
            .or_else(|e| fail(TcnStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Index series over all alpha cuts of the network whose raw edge weights are
/// the upper triangle of the row-major `n` x `n` matrix `weights`. `index` is
/// a `TcnIndex` value.
///
/// # Safety
/// `weights` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_index_series(
    weights: *const f64,
    n: usize,
    index: i32,
    out: *mut *mut TcnSeries,
) -> TcnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind = index_of(index)?;
        let cells = n
            .checked_mul(n)
            .map_or_else(|| fail(TcnStatus::InvalidArgument, "n too large"), Ok)?;
        let w = slice_arg(weights, cells, "weights")?;
        if w.iter().any(|x| !x.is_finite() || !(-1.0..=1.0).contains(x)) {
            return fail(TcnStatus::InvalidArgument, "weights must lie in [-1, 1]");
        }
        let vertices = (0..n)
            .map(|i| Vertex {
                label: i.to_string(),
                mu: 0.0,
            })
            .collect();
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, w[i * n + j])));
        let net = ThresholdConceptNetwork::from_edges("ffi", ModelKind::SkipGram, vertices, edges)
            .or_else(|e| fail(TcnStatus::InvalidArgument, e.to_string()))?;
        let series = net
            .index_series(kind)
            .or_else(|e| fail(TcnStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(TcnSeries(series)));
        Ok(())
    })
}

/// Number of alpha levels; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tcn_series_len(series: *const TcnSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.alphas.len())
}

/// Level `i` and its index value.
///
/// # Safety
/// `series` must be live; `alpha` and `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcn_series_get(
    series: *const TcnSeries,
    i: usize,
    alpha: *mut f64,
    value: *mut f64,
) -> TcnStatus {
    guard(|| {
        let s = series
            .as_ref()
            .map_or_else(|| fail(TcnStatus::NullPointer, "series is null"), Ok)?;
        let alpha = out_arg(alpha, "alpha")?;
        let value = out_arg(value, "value")?;
        if i >= s.0.alphas.len() {
            return fail(
                TcnStatus::InvalidArgument,
                format!("level {i} out of range ({} levels)", s.0.alphas.len()),
            );
        }
        *alpha = s.0.alphas[i];
        *value = s.0.values[i];
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tcn_series_free(series: *mut TcnSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Runs `target` (a `TcnTarget` value) with the JSON configuration at `config_path` and writes its
/// outputs. Returns `Validation` or `Stage` on the same conditions the CLI
/// exits with 2 or 3.
///
/// # Safety
/// `config_path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tcn_run_pipeline(config_path: *const c_char, target: i32) -> TcnStatus {
    guard(|| {
        let path = str_arg(config_path, "config_path")?;
        let target = target_of(target)?;
        let to_failure = |e: PipelineError| {
            let status = match e {
                PipelineError::Validation(_) => TcnStatus::Validation,
                PipelineError::Stage { .. } => TcnStatus::Stage,
            };
            Failure(status, e.to_string())
        };
        let config = RunConfig::load(Path::new(path)).map_err(to_failure)?;
        pipeline::run_and_emit(&config, target).map_err(to_failure)?;
        Ok(())
    })
}
