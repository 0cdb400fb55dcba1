//! Threshold concept networks and their alpha-cut sweeps.
//!
//! A network has one vertex per concept, weighted by specificity, and one edge
//! per pair of in-vocabulary concepts carrying the cosine of their embedding
//! vectors. Edge weights are min-max scaled from [-1, 1] onto [0, 1]; the
//! distinct scaled weights are the alpha levels, and the cut at level `a`
//! keeps every edge whose scaled weight is at least `a`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{cosine, EmbeddingModel, ModelKind};
use crate::specificity::{ConceptSet, SpecificityRecord};

/// Theoretical range of a cosine weight.
pub const RAW_MIN: f64 = -1.0;
pub const RAW_MAX: f64 = 1.0;

#[derive(Debug, Error)]
pub enum TcnError {
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("index needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("no levels: network has no edges")]
    NoLevels,
    #[error("no specificity record for concept `{0}`")]
    MissingRecord(String),
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("duplicate vertex label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown index `{0}` (expected cohesion or transitivity)")]
    UnknownIndex(String),
}

pub fn scale_weight(raw: f64) -> f64 {
    ((raw - RAW_MIN) / (RAW_MAX - RAW_MIN)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub label: String,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Endpoints with `a < b`.
    pub a: usize,
    pub b: usize,
    pub raw: f64,
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConceptNetwork {
    pub corpus_id: String,
    pub model_kind: ModelKind,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Concepts without an embedding vector; present as isolated vertices.
    pub out_of_vocabulary: Vec<String>,
}

impl ThresholdConceptNetwork {
    /// Assembles a network from explicit raw weights. Pairs are normalized to
    /// `a < b`; self-loops, out-of-range endpoints and repeated pairs are rejected.
    pub fn from_edges(
        corpus_id: impl Into<String>,
        model_kind: ModelKind,
        vertices: Vec<Vertex>,
        raw_edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, TcnError> {
        let mut labels = HashMap::new();
        for v in &vertices {
            if labels.insert(v.label.as_str(), ()).is_some() {
                return Err(TcnError::DuplicateLabel(v.label.clone()));
            }
        }
        let mut seen = HashMap::new();
        let mut edges = Vec::new();
        for (x, y, raw) in raw_edges {
            let (a, b) = (x.min(y), x.max(y));
            if a == b || b >= vertices.len() || seen.insert((a, b), ()).is_some() {
                return Err(TcnError::InvalidEdge(x, y));
            }
            edges.push(Edge {
                a,
                b,
                raw,
                scaled: scale_weight(raw),
            });
        }
        Ok(ThresholdConceptNetwork {
            corpus_id: corpus_id.into(),
            model_kind,
            vertices,
            edges,
            out_of_vocabulary: Vec::new(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Sorted distinct scaled weights.
    pub fn alpha_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = self.edges.iter().map(|e| e.scaled).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }

    pub fn alpha_cut(&self, alpha: f64) -> Result<CutGraph, TcnError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(TcnError::InvalidAlpha(alpha));
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| e.scaled >= alpha)
            .map(|e| (e.a, e.b))
            .collect();
        let mut vertices: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        vertices.sort_unstable();
        vertices.dedup();
        Ok(CutGraph {
            original_vertices: self.vertices.len(),
            vertices,
            edges,
        })
    }

    pub fn index_series(&self, kind: IndexKind) -> Result<CutSeries, TcnError> {
        let alphas = self.alpha_levels();
        if alphas.is_empty() {
            return Err(TcnError::NoLevels);
        }
        let n = self.vertices.len();
        let values = alphas
            .par_iter()
            .map(|&a| {
                let cut = self.alpha_cut(a)?;
                match kind {
                    IndexKind::Cohesion => cohesion(&cut, n),
                    IndexKind::Transitivity => Ok(transitivity(&cut)),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CutSeries {
            alphas,
            index_kind: kind,
            values,
        })
    }

    /// `label_a,label_b,raw_weight,scaled_weight`
    pub fn edges_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["label_a", "label_b", "raw_weight", "scaled_weight"])
            .expect("in-memory write");
        for e in &self.edges {
            w.write_record([
                self.vertices[e.a].label.clone(),
                self.vertices[e.b].label.clone(),
                e.raw.to_string(),
                e.scaled.to_string(),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    /// `label,mu`
    pub fn vertices_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["label", "mu"]).expect("in-memory write");
        for v in &self.vertices {
            w.write_record([v.label.clone(), v.mu.to_string()])
                .expect("in-memory write");
        }
        finish(w)
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

/// Builds the network of `concepts` over `model`. Each vertex takes the
/// combined specificity of its concept.
pub fn build_tcn(
    corpus_id: &str,
    model: &EmbeddingModel,
    concepts: &ConceptSet,
    records: &[SpecificityRecord],
) -> Result<ThresholdConceptNetwork, TcnError> {
    let by_concept: HashMap<&str, &SpecificityRecord> =
        records.iter().map(|r| (r.concept.as_str(), r)).collect();
    let mut vertices = Vec::with_capacity(concepts.len());
    let mut vectors: Vec<Option<&[f64]>> = Vec::with_capacity(concepts.len());
    let mut oov = Vec::new();
    for c in concepts.concepts() {
        let rec = by_concept
            .get(c.as_str())
            .ok_or_else(|| TcnError::MissingRecord(c.clone()))?;
        vertices.push(Vertex {
            label: c.clone(),
            mu: rec.mu as f64,
        });
        let v = model.vector(c).filter(|v| v.iter().any(|x| *x != 0.0));
        if v.is_none() {
            oov.push(c.clone());
        }
        vectors.push(v);
    }
    let mut raw_edges = Vec::new();
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            if let (Some(u), Some(v)) = (vectors[i], vectors[j]) {
                let raw = cosine(u, v).expect("non-zero vectors of equal dimension");
                raw_edges.push((i, j, raw));
            }
        }
    }
    let mut net = ThresholdConceptNetwork::from_edges(corpus_id, model.kind, vertices, raw_edges)?;
    net.out_of_vocabulary = oov;
    Ok(net)
}

/// The graph retained by an alpha cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutGraph {
    /// Vertex count of the network the cut came from.
    pub original_vertices: usize,
    /// Vertices incident to a retained edge.
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl CutGraph {
    fn adjacency(&self, n: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Fraction of the `C(n, 2)` vertex pairs joined by a path in the cut.
/// Vertices dropped by the cut count as isolated.
pub fn cohesion(cut: &CutGraph, n: usize) -> Result<f64, TcnError> {
    if n < 2 {
        return Err(TcnError::TooFewVertices(n));
    }
    let size = n.max(cut.original_vertices);
    let adj = cut.adjacency(size);
    let mut seen = vec![false; size];
    let mut connected_pairs = 0u64;
    let mut stack = Vec::new();
    for &start in &cut.vertices {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut component = 0u64;
        while let Some(v) = stack.pop() {
            component += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        connected_pairs += component * (component - 1) / 2;
    }
    let all_pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok(connected_pairs as f64 / all_pairs as f64)
}

/// Global clustering coefficient: closed over connected triplets, 0 when no
/// vertex has two neighbours.
pub fn transitivity(cut: &CutGraph) -> f64 {
    let n = cut
        .edges
        .iter()
        .map(|&(a, b)| a.max(b) + 1)
        .max()
        .unwrap_or(0);
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    let mut degree = vec![0u64; n];
    for &(a, b) in &cut.edges {
        bits[a * words + b / 64] |= 1 << (b % 64);
        bits[b * words + a / 64] |= 1 << (a % 64);
        degree[a] += 1;
        degree[b] += 1;
    }
    // Each triangle is seen once from each of its three edges.
    let closed: u64 = cut
        .edges
        .iter()
        .map(|&(a, b)| {
            let ra = &bits[a * words..(a + 1) * words];
            let rb = &bits[b * words..(b + 1) * words];
            ra.iter()
                .zip(rb)
                .map(|(x, y)| (x & y).count_ones() as u64)
                .sum::<u64>()
        })
        .sum();
    let triplets: u64 = degree.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
    if triplets == 0 {
        0.0
    } else {
        closed as f64 / triplets as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Cohesion,
    Transitivity,
}

impl IndexKind {
    pub const ALL: [IndexKind; 2] = [IndexKind::Cohesion, IndexKind::Transitivity];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexKind::Cohesion => "cohesion",
            IndexKind::Transitivity => "transitivity",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = TcnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cohesion" => Ok(IndexKind::Cohesion),
            "transitivity" | "clustering" => Ok(IndexKind::Transitivity),
            other => Err(TcnError::UnknownIndex(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSeries {
    pub alphas: Vec<f64>,
    pub index_kind: IndexKind,
    pub values: Vec<f64>,
}

impl CutSeries {
    /// `alpha,value`
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["alpha", "value"]).expect("in-memory write");
        for (a, v) in self.alphas.iter().zip(&self.values) {
            w.write_record([a.to_string(), v.to_string()])
                .expect("in-memory write");
        }
        finish(w)
    }
}
