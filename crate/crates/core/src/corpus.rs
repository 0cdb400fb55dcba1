//! Annotated corpus ingestion.
//!
//! Two on-disk formats are understood:
//!
//! * JSONL: one document per line,
//!   `{"id": "...", "sentences": [[{"surface": "...", "lemma": "...", "pos": "..."}]]}`
//! * TSV: four tab-separated columns `ID FORM LEMMA UPOS`, a blank line closes a
//!   sentence and `# newdoc id = <id>` opens a document. Other `#` lines are comments.
//!
//! Both produce the same [`CorpusIndex`]. A whitespace tokenizer with identity
//! lemmatization covers plain text; indices built that way are flagged
//! `low_fidelity`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate document id `{id}`")]
    DuplicateDocument { line: usize, id: String },
    #[error("line {line}: expected 4 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: token before any `# newdoc id = ...` header")]
    TokenBeforeDocument { line: usize },
    #[error("unknown corpus format `{0}` (expected jsonl, tsv or text)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
    /// Plain text through the fallback tokenizer.
    Text,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "tsv" | "conll" => Ok(CorpusFormat::Tsv),
            "text" | "txt" => Ok(CorpusFormat::Text),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::Text => "text",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    /// Position of the sentence within its document.
    pub sentence_id: usize,
    pub doc_id: Arc<str>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: Arc<str>,
    /// Non-empty sentences in document order.
    pub sentences: Vec<Vec<AnnotatedToken>>,
}

impl Document {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Immutable lemma-frequency index over a parsed corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusIndex {
    pub corpus_id: String,
    pub total_tokens: u64,
    pub doc_count: usize,
    pub lemma_counts: BTreeMap<String, u64>,
    /// Set when the corpus went through the whitespace/identity fallback.
    pub low_fidelity: bool,
    documents: Arc<Vec<Document>>,
}

impl CorpusIndex {
    pub fn from_documents(corpus_id: impl Into<String>, documents: Vec<Document>) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut total = 0u64;
        for token in documents.iter().flat_map(|d| d.sentences.iter().flatten()) {
            *counts.entry(token.lemma.as_str()).or_default() += 1;
            total += 1;
        }
        let lemma_counts = counts
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<_, _>>();
        CorpusIndex {
            corpus_id: corpus_id.into(),
            total_tokens: total,
            doc_count: documents.len(),
            lemma_counts,
            low_fidelity: false,
            documents: Arc::new(documents),
        }
    }

    pub fn with_corpus_id(mut self, corpus_id: impl Into<String>) -> Self {
        self.corpus_id = corpus_id.into();
        self
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Shared handle to the ordered token stream.
    pub fn token_stream(&self) -> Arc<Vec<Document>> {
        Arc::clone(&self.documents)
    }

    /// Sentences as lemma sequences, in corpus order.
    pub fn lemma_sentences(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        self.documents
            .iter()
            .flat_map(|d| d.sentences.iter())
            .map(|s| s.iter().map(|t| t.lemma.as_str()).collect())
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn count(&self, lemma: &str) -> u64 {
        self.lemma_counts.get(lemma).copied().unwrap_or(0)
    }
}

fn default_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string())
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path, format: CorpusFormat) -> Result<CorpusIndex, CorpusError> {
    match format {
        CorpusFormat::Jsonl => parse_jsonl(path),
        CorpusFormat::Tsv => parse_tsv(path),
        CorpusFormat::Text => parse_text(path),
    }
}

pub fn parse_jsonl(path: &Path) -> Result<CorpusIndex, CorpusError> {
    read_jsonl(&read(path)?, &default_id(path))
}

pub fn parse_tsv(path: &Path) -> Result<CorpusIndex, CorpusError> {
    read_tsv(&read(path)?, &default_id(path))
}

pub fn parse_text(path: &Path) -> Result<CorpusIndex, CorpusError> {
    Ok(read_text(&read(path)?, &default_id(path)))
}

#[derive(Deserialize)]
struct JsonDoc {
    id: String,
    sentences: Vec<Vec<JsonToken>>,
}

#[derive(Serialize, Deserialize)]
struct JsonToken {
    surface: String,
    lemma: String,
    pos: String,
}

fn check_lemma(lemma: &str, line: usize) -> Result<(), CorpusError> {
    if lemma.trim().is_empty() {
        return Err(CorpusError::Malformed {
            line,
            message: "empty lemma".into(),
        });
    }
    Ok(())
}

fn parse_json_line(line_no: usize, line: &str) -> Result<Document, CorpusError> {
    let doc: JsonDoc = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    let id: Arc<str> = Arc::from(doc.id.as_str());
    let mut sentences = Vec::with_capacity(doc.sentences.len());
    for sentence in doc.sentences.into_iter().filter(|s| !s.is_empty()) {
        let sentence_id = sentences.len();
        let mut tokens = Vec::with_capacity(sentence.len());
        for t in sentence {
            check_lemma(&t.lemma, line_no)?;
            tokens.push(AnnotatedToken {
                surface: t.surface,
                lemma: t.lemma,
                pos: t.pos,
                sentence_id,
                doc_id: Arc::clone(&id),
            });
        }
        sentences.push(tokens);
    }
    Ok(Document { id, sentences })
}

/// Parses JSONL text. Blank lines are skipped; documents are parsed in parallel
/// and reassembled in file order.
pub fn read_jsonl(text: &str, corpus_id: &str) -> Result<CorpusIndex, CorpusError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let parsed: Vec<Result<Document, CorpusError>> = lines
        .par_iter()
        .map(|&(n, l)| parse_json_line(n, l))
        .collect();

    let mut seen = HashSet::new();
    let mut documents = Vec::with_capacity(parsed.len());
    for ((line, _), doc) in lines.iter().zip(parsed) {
        let doc = doc?;
        if !seen.insert(Arc::clone(&doc.id)) {
            return Err(CorpusError::DuplicateDocument {
                line: *line,
                id: doc.id.to_string(),
            });
        }
        documents.push(doc);
    }
    Ok(CorpusIndex::from_documents(corpus_id, documents))
}

fn newdoc_id(comment: &str) -> Option<&str> {
    let rest = comment.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix("newdoc")?.trim_start();
    let rest = rest.strip_prefix("id")?.trim_start();
    Some(rest.strip_prefix('=')?.trim())
}

pub fn read_tsv(text: &str, corpus_id: &str) -> Result<CorpusIndex, CorpusError> {
    let mut documents: Vec<Document> = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Vec<AnnotatedToken> = Vec::new();

    fn close_sentence(documents: &mut [Document], current: &mut Vec<AnnotatedToken>) {
        if let Some(doc) = documents.last_mut() {
            if !current.is_empty() {
                doc.sentences.push(std::mem::take(current));
            }
        }
    }

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            close_sentence(&mut documents, &mut current);
            continue;
        }
        if line.starts_with('#') {
            if let Some(id) = newdoc_id(line) {
                close_sentence(&mut documents, &mut current);
                let id: Arc<str> = Arc::from(id);
                if !seen.insert(Arc::clone(&id)) {
                    return Err(CorpusError::DuplicateDocument {
                        line: line_no,
                        id: id.to_string(),
                    });
                }
                documents.push(Document {
                    id,
                    sentences: Vec::new(),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(CorpusError::ColumnCount {
                line: line_no,
                found: cols.len(),
            });
        }
        let Some(doc) = documents.last() else {
            return Err(CorpusError::TokenBeforeDocument { line: line_no });
        };
        check_lemma(cols[2], line_no)?;
        current.push(AnnotatedToken {
            surface: cols[1].to_string(),
            lemma: cols[2].to_string(),
            pos: cols[3].to_string(),
            sentence_id: doc.sentences.len(),
            doc_id: Arc::clone(&doc.id),
        });
    }
    close_sentence(&mut documents, &mut current);
    Ok(CorpusIndex::from_documents(corpus_id, documents))
}

fn is_sentence_end(token: &str) -> bool {
    token.ends_with(['.', '!', '?'])
}

/// Fallback for unannotated text: blank-line separated blocks become documents,
/// `.`/`!`/`?` close sentences, lemma = surface with edge punctuation stripped.
pub fn read_text(text: &str, corpus_id: &str) -> CorpusIndex {
    let mut documents = Vec::new();
    for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
        let id: Arc<str> = Arc::from(format!("{corpus_id}-{}", documents.len() + 1).as_str());
        let mut sentences = Vec::new();
        let mut current = Vec::new();
        for raw in block.split_whitespace() {
            let word = raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '-');
            if !word.is_empty() {
                current.push(AnnotatedToken {
                    surface: word.to_string(),
                    lemma: word.to_string(),
                    pos: "X".to_string(),
                    sentence_id: sentences.len(),
                    doc_id: Arc::clone(&id),
                });
            }
            if is_sentence_end(raw) && !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            sentences.push(current);
        }
        documents.push(Document { id, sentences });
    }
    let mut index = CorpusIndex::from_documents(corpus_id, documents);
    index.low_fidelity = true;
    index
}

/// Serializes documents to the JSONL format.
pub fn write_jsonl(documents: &[Document]) -> String {
    let mut out = String::new();
    for doc in documents {
        let sentences: Vec<Vec<JsonToken>> = doc
            .sentences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|t| JsonToken {
                        surface: t.surface.clone(),
                        lemma: t.lemma.clone(),
                        pos: t.pos.clone(),
                    })
                    .collect()
            })
            .collect();
        let value = serde_json::json!({ "id": &*doc.id, "sentences": sentences });
        out.push_str(&value.to_string());
        out.push('\n');
    }
    out
}

/// Serializes documents to the TSV format.
pub fn write_tsv(documents: &[Document]) -> String {
    let mut out = String::new();
    for doc in documents {
        out.push_str(&format!("# newdoc id = {}\n", doc.id));
        for sentence in &doc.sentences {
            for (i, t) in sentence.iter().enumerate() {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, t.surface, t.lemma, t.pos));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_DOCS: &str = concat!(
        r#"{"id":"A","sentences":[[{"surface":"Kosten","lemma":"Kosten","pos":"NOUN"},{"surface":"steigen","lemma":"steigen","pos":"VERB"}]]}"#,
        "\n",
        r#"{"id":"B","sentences":[[{"surface":"Kosten","lemma":"Kosten","pos":"NOUN"},{"surface":"sinken","lemma":"sinken","pos":"VERB"}]]}"#,
        "\n"
    );

    const TWO_DOCS_TSV: &str = "# newdoc id = A\n1\tKosten\tKosten\tNOUN\n2\tsteigen\tsteigen\tVERB\n\n# newdoc id = B\n1\tKosten\tKosten\tNOUN\n2\tsinken\tsinken\tVERB\n\n";

    #[test]
    fn jsonl_two_docs() {
        let idx = read_jsonl(TWO_DOCS, "c").unwrap();
        assert_eq!(idx.total_tokens, 4);
        assert_eq!(idx.doc_count, 2);
        assert_eq!(idx.count("Kosten"), 2);
        assert_eq!(idx.count("steigen"), 1);
    }

    #[test]
    fn empty_inputs() {
        let idx = read_jsonl("", "c").unwrap();
        assert_eq!((idx.total_tokens, idx.doc_count), (0, 0));
        assert!(idx.lemma_counts.is_empty());
        let idx = read_tsv("# a comment\n\n# another\n\n", "c").unwrap();
        assert_eq!(idx.total_tokens, 0);
    }

    #[test]
    fn ten_tokens_three_sentences() {
        let mk = |w: &str| format!(r#"{{"surface":"{w}","lemma":"{w}","pos":"X"}}"#);
        let s = |ws: &[&str]| format!("[{}]", ws.iter().map(|w| mk(w)).collect::<Vec<_>>().join(","));
        let line = format!(
            r#"{{"id":"d","sentences":[{},{},{}]}}"#,
            s(&["a", "b", "c"]),
            s(&["d", "e", "f", "g"]),
            s(&["h", "i", "j"])
        );
        let idx = read_jsonl(&line, "c").unwrap();
        assert_eq!(idx.total_tokens, 10);
        assert_eq!(idx.doc_count, 1);
        assert_eq!(idx.sentence_count(), 3);
    }

    #[test]
    fn tsv_matches_jsonl() {
        let a = read_jsonl(TWO_DOCS, "c").unwrap();
        let b = read_tsv(TWO_DOCS_TSV, "c").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tsv_single_token() {
        let idx = read_tsv("# newdoc id = x\n1\tGrenzkosten\tGrenzkosten\tNOUN\n", "c").unwrap();
        assert_eq!(idx.count("Grenzkosten"), 1);
        assert_eq!(idx.total_tokens, 1);
    }

    #[test]
    fn tsv_errors_carry_line_numbers() {
        let err = read_tsv("# newdoc id = x\n1\tKosten\tKosten\n", "c").unwrap_err();
        assert!(matches!(err, CorpusError::ColumnCount { line: 2, found: 3 }));
        let err = read_tsv("1\tKosten\tKosten\tNOUN\n", "c").unwrap_err();
        assert!(matches!(err, CorpusError::TokenBeforeDocument { line: 1 }));
        let err = read_tsv("# newdoc id = x\n# newdoc id = x\n", "c").unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateDocument { line: 2, .. }));
    }

    #[test]
    fn jsonl_errors() {
        let bad = format!("{}{{not json}}\n", TWO_DOCS);
        match read_jsonl(&bad, "c").unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let dup = format!("{TWO_DOCS}{}", TWO_DOCS.lines().next().unwrap());
        assert!(matches!(
            read_jsonl(&dup, "c").unwrap_err(),
            CorpusError::DuplicateDocument { line: 3, .. }
        ));
        let empty_lemma = r#"{"id":"a","sentences":[[{"surface":"x","lemma":"  ","pos":"X"}]]}"#;
        assert!(matches!(
            read_jsonl(empty_lemma, "c").unwrap_err(),
            CorpusError::Malformed { line: 1, .. }
        ));
    }

    #[test]
    fn sentence_ids_non_decreasing() {
        let idx = read_tsv(TWO_DOCS_TSV, "c").unwrap();
        for doc in idx.documents() {
            let ids: Vec<_> = doc.sentences.iter().flatten().map(|t| t.sentence_id).collect();
            assert!(ids.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn text_fallback_is_flagged() {
        let idx = read_text("Die Kosten steigen. Der Gewinn sinkt!\n\nNeues Dokument", "t");
        assert!(idx.low_fidelity);
        assert_eq!(idx.doc_count, 2);
        assert_eq!(idx.sentence_count(), 3);
        assert_eq!(idx.count("Kosten"), 1);
        assert_eq!(idx.total_tokens, 8);
    }
}
