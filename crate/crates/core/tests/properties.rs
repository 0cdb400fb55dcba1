use std::sync::Arc;

use proptest::prelude::*;

use tcnet::compounds::{segment, Lexicon};
use tcnet::corpus::{read_jsonl, read_tsv, write_jsonl, write_tsv, AnnotatedToken, CorpusIndex, Document};
use tcnet::embeddings::{cosine, ModelKind};
use tcnet::specificity::{rank_distribution, specificity, ConceptSet, SpecificityRecord, Variant};
use tcnet::stats::{fit_power_law, kolmogorov_q, ks_two_sample};
use tcnet::tcn::{cohesion, scale_weight, transitivity, ThresholdConceptNetwork, Vertex};

type RawDoc = Vec<Vec<(String, String, String)>>;

fn token_text() -> impl Strategy<Value = String> {
    "[A-Za-zäöüß.,]{1,8}"
}

fn raw_docs() -> impl Strategy<Value = Vec<RawDoc>> {
    let token = (token_text(), token_text(), "[A-Z]{1,5}");
    let sentence = prop::collection::vec(token, 1..8);
    let doc = prop::collection::vec(sentence, 1..5);
    prop::collection::vec(doc, 1..5)
}

fn documents(raw: &[RawDoc]) -> Vec<Document> {
    raw.iter()
        .enumerate()
        .map(|(d, sentences)| {
            let id: Arc<str> = Arc::from(format!("doc{d}"));
            Document {
                id: id.clone(),
                sentences: sentences
                    .iter()
                    .enumerate()
                    .map(|(s, toks)| {
                        toks.iter()
                            .map(|(surface, lemma, pos)| AnnotatedToken {
                                surface: surface.clone(),
                                lemma: lemma.clone(),
                                pos: pos.clone(),
                                sentence_id: s,
                                doc_id: id.clone(),
                            })
                            .collect()
                    })
                    .collect(),
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn jsonl_and_tsv_round_trip_to_the_same_index(raw in raw_docs()) {
        let docs = documents(&raw);
        let direct = CorpusIndex::from_documents("c", docs.clone());
        let from_jsonl = read_jsonl(&write_jsonl(&docs), "c").unwrap();
        let from_tsv = read_tsv(&write_tsv(&docs), "c").unwrap();
        prop_assert_eq!(&from_jsonl, &direct);
        prop_assert_eq!(&from_tsv, &direct);
        prop_assert_eq!(direct.lemma_counts.values().sum::<u64>(), direct.total_tokens);
    }

    #[test]
    fn document_order_does_not_change_counts(raw in raw_docs(), rotate in 0usize..5) {
        let docs = documents(&raw);
        let mut permuted = docs.clone();
        let k = rotate % permuted.len();
        permuted.rotate_left(k);
        permuted.reverse();
        let a = CorpusIndex::from_documents("c", docs);
        let b = read_jsonl(&write_jsonl(&permuted), "c").unwrap();
        prop_assert_eq!(a.lemma_counts, b.lemma_counts);
        prop_assert_eq!(a.total_tokens, b.total_tokens);
    }
}

fn lexicon_entries() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[aekns]{3,6}", 1..7)
}

/// Words assembled from lexicon entries with optional linkers, plus noise.
fn candidate_word(entries: Vec<String>) -> impl Strategy<Value = (Vec<String>, String)> {
    let n = entries.len();
    let piece = (0..n, prop::option::of(prop::sample::select(vec!["s", "en", "e", "n"])));
    (prop::collection::vec(piece, 1..4), "[aekns]{0,2}").prop_map(move |(pieces, noise)| {
        let mut w = String::new();
        for (i, (idx, linker)) in pieces.iter().enumerate() {
            w.push_str(&entries[*idx]);
            if i + 1 < pieces.len() {
                if let Some(l) = linker {
                    w.push_str(l);
                }
            }
        }
        w.push_str(&noise);
        (entries.clone(), w)
    })
}

proptest! {
    #[test]
    fn segmentations_reconstruct_the_word(
        (entries, word) in lexicon_entries().prop_flat_map(candidate_word)
    ) {
        let lex = Lexicon::new(&entries);
        if let Some(s) = segment(&word, &lex) {
            prop_assert_eq!(s.reconstruct(), word);
            for p in &s.parts {
                prop_assert!(lex.contains(&p.component));
            }
            prop_assert_eq!(s.is_compound, s.parts.len() >= 2);
        }
    }

    #[test]
    fn removing_entries_never_creates_a_segmentation(
        (entries, word) in lexicon_entries().prop_flat_map(candidate_word),
        drop in 0usize..7
    ) {
        let lex = Lexicon::new(&entries);
        let victim = &entries[drop % entries.len()];
        let smaller = lex.without(victim);
        if segment(&word, &lex).is_none() {
            prop_assert!(segment(&word, &smaller).is_none());
        }
    }
}

const CONCEPTS: [&str; 4] = ["Kosten", "Markt", "Preis", "Steuer"];
const VOCAB: [&str; 10] = [
    "Kosten", "Markt", "Preis", "Steuer", "Grenzkosten", "Marktpreis", "Steuersatz",
    "Preisbildung", "Haus", "der",
];

fn small_corpus(tokens: &[usize], docs: usize) -> CorpusIndex {
    let mut out = Vec::new();
    for d in 0..docs {
        let id: Arc<str> = Arc::from(format!("d{d}"));
        let sentence = tokens
            .iter()
            .map(|&t| AnnotatedToken {
                surface: VOCAB[t].to_string(),
                lemma: VOCAB[t].to_string(),
                pos: "X".into(),
                sentence_id: 0,
                doc_id: id.clone(),
            })
            .collect();
        out.push(Document { id, sentences: vec![sentence] });
    }
    CorpusIndex::from_documents("c", out)
}

fn fixture_lexicon() -> Lexicon {
    Lexicon::new(["Kosten", "Markt", "Preis", "Steuer", "Grenze", "Satz", "Bildung", "Haus"])
}

proptest! {
    #[test]
    fn specificity_invariants(tokens in prop::collection::vec(0usize..VOCAB.len(), 1..60)) {
        let concepts = ConceptSet::new(CONCEPTS, "test").unwrap();
        let lex = fixture_lexicon();
        let once = small_corpus(&tokens, 1);
        let twice = small_corpus(&tokens, 2);
        let r1 = specificity(&once, &concepts, &lex);
        let r2 = specificity(&twice, &concepts, &lex);
        for r in &r1 {
            prop_assert_eq!(r.mu, r.s_count + r.c_count);
        }
        for v in Variant::ALL {
            let d1 = rank_distribution("c", &r1, v, once.total_tokens).unwrap();
            let d2 = rank_distribution("c", &r2, v, twice.total_tokens).unwrap();
            prop_assert_eq!(d1.per_million(), d2.per_million());
        }
    }

    #[test]
    fn rank_order_survives_scaling(
        counts in prop::collection::vec((0u64..50, 0u64..50), 4),
        k in 1u64..20
    ) {
        let make = |m: u64| -> Vec<SpecificityRecord> {
            CONCEPTS
                .iter()
                .zip(&counts)
                .map(|(c, &(s, cc))| SpecificityRecord {
                    concept: c.to_string(),
                    s_count: s * m,
                    c_count: cc * m,
                    mu: (s + cc) * m,
                })
                .collect()
        };
        for v in Variant::ALL {
            let a = rank_distribution("c", &make(1), v, 1000).unwrap();
            let b = rank_distribution("c", &make(k), v, 1000).unwrap();
            let order = |d: &tcnet::specificity::RankDistribution| {
                d.entries.iter().map(|e| e.concept.clone()).collect::<Vec<_>>()
            };
            prop_assert_eq!(order(&a), order(&b));
            for w in a.entries.windows(2) {
                prop_assert!(w[0].raw_count >= w[1].raw_count);
                if w[0].raw_count == w[1].raw_count {
                    prop_assert!(w[0].concept < w[1].concept);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn ks_invariant_under_increasing_transform(
        a in prop::collection::vec(0i32..30, 1..40),
        b in prop::collection::vec(0i32..30, 1..40)
    ) {
        let f = |x: &i32| { let x = *x as f64; (x / 3.0).exp() + 5.0 * x * x * x };
        let af: Vec<f64> = a.iter().map(|&x| x as f64).collect();
        let bf: Vec<f64> = b.iter().map(|&x| x as f64).collect();
        let at: Vec<f64> = a.iter().map(f).collect();
        let bt: Vec<f64> = b.iter().map(f).collect();
        let r = ks_two_sample(&af, &bf).unwrap();
        let rt = ks_two_sample(&at, &bt).unwrap();
        prop_assert_eq!(r.d_stat, rt.d_stat);
        prop_assert!((0.0..=1.0).contains(&r.d_stat));
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn kolmogorov_q_bounded(l in 0.0f64..5.0) {
        let q = kolmogorov_q(l);
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn power_law_fit_ignores_duplication(
        values in prop::collection::vec(1u32..200, 8..40)
    ) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        prop_assume!(v.iter().any(|&x| x != v[0]));
        let doubled: Vec<f64> = v.iter().chain(v.iter()).copied().collect();
        match (fit_power_law(&v), fit_power_law(&doubled)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.x_min, b.x_min);
                prop_assert_eq!(a.alpha, b.alpha);
                prop_assert!((0.0..=1.0).contains(&a.p));
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn cosine_symmetric_and_bounded(
        u in prop::collection::vec(-10.0f64..10.0, 1..12),
        seed in prop::collection::vec(-10.0f64..10.0, 12)
    ) {
        let v: Vec<f64> = seed[..u.len()].to_vec();
        if let (Ok(a), Ok(b)) = (cosine(&u, &v), cosine(&v, &u)) {
            prop_assert_eq!(a, b);
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
    }
}

fn network(n: usize, raws: &[i8]) -> ThresholdConceptNetwork {
    let vertices = (0..n)
        .map(|i| Vertex { label: format!("v{i}"), mu: 1.0 })
        .collect();
    let mut k = 0;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, raws[k] as f64 / 10.0));
            k += 1;
        }
    }
    ThresholdConceptNetwork::from_edges("c", ModelKind::SkipGram, vertices, edges).unwrap()
}

proptest! {
    #[test]
    fn alpha_cut_invariants(n in 2usize..9, raws in prop::collection::vec(-10i8..=10, 36)) {
        let net = network(n, &raws);
        let levels = net.alpha_levels();
        prop_assert!(levels.windows(2).all(|w| w[0] < w[1]));
        let cuts: Vec<_> = levels.iter().map(|&a| net.alpha_cut(a).unwrap()).collect();
        for w in cuts.windows(2) {
            for e in &w[1].edges {
                prop_assert!(w[0].edges.contains(e));
            }
        }
        prop_assert_eq!(cuts[0].edges.len(), net.edges.len());
        let coh = net.index_series(tcnet::tcn::IndexKind::Cohesion).unwrap();
        prop_assert!(coh.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(coh.values[0], cohesion(&cuts[0], n).unwrap());
        for c in &cuts {
            let t = transitivity(c);
            prop_assert!((0.0..=1.0).contains(&t));
        }
        // scaling preserves the order of raw weights
        for a in &net.edges {
            for b in &net.edges {
                prop_assert_eq!(a.raw < b.raw, scale_weight(a.raw) < scale_weight(b.raw));
            }
        }
    }
}
