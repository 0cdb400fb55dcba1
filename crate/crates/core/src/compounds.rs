//! Lexicon-driven German compound segmentation.
//!
//! A word is covered left to right by lexicon entries. Every non-final
//! component may drop a final `e` (`Grenze` -> `Grenz-`) and may be followed by
//! one linking morpheme from [`LINKERS`]. The final component is the head and
//! must match an entry exactly, modulo the case of its first letter.
//!
//! Among all covers the winner has the fewest parts, then the longest head,
//! then the lexicographically smallest part sequence.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::corpus::{CorpusError, CorpusIndex};

pub const LINKERS: [&str; 7] = ["s", "es", "n", "en", "er", "e", "ens"];

/// Shortest admissible component surface, in characters.
pub const MIN_COMPONENT_CHARS: usize = 3;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashSet<String>,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Lexicon {
            entries: entries
                .into_iter()
                .map(Into::into)
                .filter(|s: &String| !s.trim().is_empty())
                .collect(),
        }
    }

    /// One lemma per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        Lexicon::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Lexicon::parse(&text))
    }

    /// Lemmas of the corpus occurring at least `min_count` times.
    pub fn from_corpus(index: &CorpusIndex, min_count: u64) -> Self {
        Lexicon::new(
            index
                .lemma_counts
                .iter()
                .filter(|(_, &c)| c >= min_count)
                .map(|(l, _)| l.clone()),
        )
    }

    pub fn extend<I, S>(&mut self, entries: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.entries.extend(entries.into_iter().map(Into::into));
    }

    pub fn contains(&self, entry: &str) -> bool {
        self.entries.contains(entry)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn without(&self, entry: &str) -> Lexicon {
        let mut entries = self.entries.clone();
        entries.remove(entry);
        Lexicon { entries }
    }

    /// Resolves a surface stem to a lexicon entry, trying the stem as written,
    /// then with its first letter upper-cased, then lower-cased.
    fn resolve(&self, stem: &str) -> Vec<String> {
        let mut hits = Vec::new();
        for form in [stem.to_string(), upper_first(stem), lower_first(stem)] {
            if self.entries.contains(&form) && !hits.contains(&form) {
                hits.push(form);
            }
        }
        hits
    }
}

pub fn upper_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// One component of a segmentation. Field order defines the tie-break order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Part {
    /// The lexicon entry this component resolves to.
    pub component: String,
    pub linker: Option<String>,
    /// The characters of the word spelling the component, without the linker.
    pub surface: String,
}

impl Part {
    pub fn span_len(&self) -> usize {
        self.surface.chars().count() + self.linker.as_deref().map_or(0, |l| l.chars().count())
    }

    /// True when the surface drops the entry's final `e`.
    pub fn elided(&self) -> bool {
        self.surface.chars().count() < self.component.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub original: String,
    pub parts: Vec<Part>,
    pub is_compound: bool,
}

impl Segmentation {
    fn new(original: &str, parts: Vec<Part>) -> Self {
        Segmentation {
            original: original.to_string(),
            is_compound: parts.len() >= 2,
            parts,
        }
    }

    pub fn head(&self) -> &Part {
        self.parts.last().expect("segmentation has at least one part")
    }

    pub fn modifiers(&self) -> &[Part] {
        &self.parts[..self.parts.len() - 1]
    }

    /// Surfaces and linkers concatenated; equals `original` exactly.
    pub fn reconstruct(&self) -> String {
        self.parts
            .iter()
            .map(|p| format!("{}{}", p.surface, p.linker.as_deref().unwrap_or("")))
            .collect()
    }
}

/// All analyses of `span` as one component. Non-final components may carry a
/// linker and an elided final `e`; the head may not.
pub fn piece_options(span: &str, lexicon: &Lexicon, is_final: bool) -> Vec<Part> {
    let mut out = Vec::new();
    let mut push = |stem: &str, linker: Option<&str>| {
        if stem.chars().count() < MIN_COMPONENT_CHARS {
            return;
        }
        let mut found = lexicon.resolve(stem);
        if !is_final {
            for entry in lexicon.resolve(&format!("{stem}e")) {
                if !found.contains(&entry) {
                    found.push(entry);
                }
            }
        }
        for component in found {
            out.push(Part {
                component,
                linker: linker.map(str::to_string),
                surface: stem.to_string(),
            });
        }
    };
    push(span, None);
    if !is_final {
        for linker in LINKERS {
            if let Some(stem) = span.strip_suffix(linker) {
                push(stem, Some(linker));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn char_slice(chars: &[char], from: usize, to: usize) -> String {
    chars[from..to].iter().collect()
}

fn segment_impl(word: &str, lexicon: &Lexicon, allow_single: bool) -> Option<Segmentation> {
    if word.is_empty() || lexicon.is_empty() {
        return None;
    }
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();

    // best[i]: fewest-parts, then lexicographically smallest, cover of chars[..i]
    // by non-final components.
    let mut best: Vec<Option<Vec<Part>>> = vec![None; n + 1];
    best[0] = Some(Vec::new());
    for i in 1..n {
        let mut winner: Option<Vec<Part>> = None;
        for j in 0..i {
            let Some(prefix) = &best[j] else { continue };
            for part in piece_options(&char_slice(&chars, j, i), lexicon, false) {
                let mut cand = prefix.clone();
                cand.push(part);
                let better = match &winner {
                    None => true,
                    Some(w) => (cand.len(), &cand) < (w.len(), w),
                };
                if better {
                    winner = Some(cand);
                }
            }
        }
        best[i] = winner;
    }

    // key: (parts, longer head first, sequence)
    let mut result: Option<(usize, usize, Vec<Part>)> = None;
    for j in 0..n {
        if j == 0 && !allow_single {
            continue;
        }
        let Some(prefix) = &best[j] else { continue };
        let head_len = n - j;
        for head in piece_options(&char_slice(&chars, j, n), lexicon, true) {
            let mut cand = prefix.clone();
            cand.push(head);
            let key = (cand.len(), usize::MAX - head_len);
            let better = match &result {
                None => true,
                Some((c, h, seq)) => (key.0, key.1, &cand) < (*c, *h, seq),
            };
            if better {
                result = Some((key.0, key.1, cand));
            }
        }
    }
    result.map(|(_, _, parts)| Segmentation::new(word, parts))
}

/// Best cover of `word` by lexicon entries, or `None` when no full cover exists.
/// A word that is itself an entry comes back as a single-part, non-compound
/// segmentation.
pub fn segment(word: &str, lexicon: &Lexicon) -> Option<Segmentation> {
    segment_impl(word, lexicon, true)
}

/// Best cover with at least two components, ignoring any entry for the whole
/// word. This is the compound reading of `word`.
pub fn compound_analysis(word: &str, lexicon: &Lexicon) -> Option<Segmentation> {
    segment_impl(word, lexicon, false)
}

/// Compares lemmas ignoring the case of the first letter.
pub fn same_component(a: &str, b: &str) -> bool {
    upper_first(a) == upper_first(b)
}

/// True when `word` reads as a compound with `concept` among its components.
pub fn contains_component(word: &str, concept: &str, lexicon: &Lexicon) -> bool {
    compound_analysis(word, lexicon)
        .map(|s| s.parts.iter().any(|p| same_component(&p.component, concept)))
        .unwrap_or(false)
}
