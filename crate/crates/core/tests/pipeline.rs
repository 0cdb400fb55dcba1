use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tcnet::embeddings::{EmbeddingModel, ModelKind};
use tcnet::pipeline::{emit_report, run_pipeline, sha256_hex, Manifest, RunConfig, Target, MANIFEST_FILE};
use tcnet::specificity::{ConceptSet, SpecificityRecord};
use tcnet::tcn::build_tcn;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini")
}

fn fixture_config(out: &Path) -> RunConfig {
    let mut c = RunConfig::load(&fixture().join("config.json")).unwrap();
    c.out_dir = out.to_path_buf();
    c
}

fn tcnet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tcnet"))
}

fn listing(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect()
}

#[test]
fn full_run_emits_every_configured_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config(dir.path());
    let report = run_pipeline(&config, Target::All).unwrap();
    let manifest = emit_report(&report, dir.path()).unwrap();

    let corpora = ["lehrbuch", "zeitung"];
    let mut expected = BTreeSet::new();
    for c in corpora {
        for v in ["mu", "c_only", "s_only"] {
            expected.insert(format!("dist_{c}_{v}.csv"));
        }
        for m in ["sgns", "cbow"] {
            for i in ["cohesion", "transitivity"] {
                expected.insert(format!("cuts_{c}_{m}_{i}.csv"));
            }
        }
    }
    expected.insert("fits.csv".into());
    for v in ["mu", "c_only", "s_only"] {
        expected.insert(format!("ks_dist_{v}.csv"));
    }
    for axis in ["cutx", "cuty"] {
        for m in ["sgns", "cbow"] {
            for i in ["cohesion", "transitivity"] {
                expected.insert(format!("ks_{axis}_{m}_{i}.csv"));
            }
        }
    }
    // |corpora| x |variants| + fits + matrices + |corpora| x |models| x |indices|
    assert_eq!(expected.len(), 2 * 3 + 1 + (3 + 2 * 2 * 2) + 2 * 2 * 2);
    let listed: BTreeSet<String> = manifest.files.iter().map(|f| f.path.clone()).collect();
    assert_eq!(listed, expected);

    let mut on_disk = listing(dir.path());
    assert!(on_disk.remove(MANIFEST_FILE));
    assert_eq!(on_disk, expected);

    for f in &manifest.files {
        let bytes = fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256, "{}", f.path);
        assert_eq!(bytes.len() as u64, f.bytes);
    }
    let parsed: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(parsed, manifest);
    assert!(manifest.diagnostics.low_fidelity.is_empty());
    assert_eq!(manifest.diagnostics.total_tokens["lehrbuch"], 1680);
    assert_eq!(manifest.diagnostics.total_tokens["zeitung"], 1750);

    // report shape: 2 distributions per variant, one matrix per variant,
    // 4 series per model
    assert_eq!(report.distributions.len(), 6);
    assert_eq!(report.ks_distributions.len(), 3);
    for m in [ModelKind::SkipGram, ModelKind::Cbow] {
        assert_eq!(report.series.iter().filter(|(_, k, _)| *k == m).count(), 4);
    }
}

#[test]
fn emission_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config(dir.path());
    let report = run_pipeline(&config, Target::Specificity).unwrap();
    let a = emit_report(&report, &dir.path().join("a")).unwrap();
    let b = emit_report(&report, &dir.path().join("a")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config(dir.path());
    let report = run_pipeline(&config, Target::All).unwrap();
    emit_report(&report, dir.path()).unwrap();
    let read = |name: &str| fs::read_to_string(dir.path().join(name)).unwrap();

    let dist = read("dist_lehrbuch_mu.csv");
    let mut lines = dist.lines();
    assert_eq!(lines.next(), Some("rank,concept,raw_count,per_million"));
    assert!(lines.next().unwrap().starts_with("1,Kosten,128,"));
    assert_eq!(dist.lines().count(), 9);

    let fits = read("fits.csv");
    assert!(fits.starts_with("corpus,variant,alpha,x_min,R,p,n_tail\n"));
    assert_eq!(fits.lines().count(), 7);
    assert!(tcnet::stats::parse_fit_csv(&fits).is_ok());

    let cuts = read("cuts_zeitung_cbow_cohesion.csv");
    assert!(cuts.starts_with("alpha,value\n"));
    // 8 concepts, all in vocabulary: C(8,2) distinct levels at most
    assert!(cuts.lines().count() <= 29);

    let ks = read("ks_dist_mu.csv");
    let rows: Vec<&str> = ks.lines().collect();
    assert_eq!(rows[0], ",lehrbuch,zeitung");
    assert!(rows[1].starts_with("lehrbuch,---,"));
    assert_eq!(rows[2], "zeitung,---,---");
    assert!(!ks.contains('\r'));
}

#[test]
fn stage_subcommands_write_their_own_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture().join("config.json");
    let run = |stage: &str| {
        let out = dir.path().join(stage);
        let st = tcnet()
            .args([stage, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--model", "cbow", "--dim", "16", "--epochs", "2"])
            .status()
            .unwrap();
        assert!(st.success(), "{stage}");
        let mut files = listing(&out);
        assert!(files.remove(MANIFEST_FILE));
        (out, files)
    };
    let (out, files) = run("ingest");
    assert_eq!(files, ["ingest_lehrbuch.csv", "ingest_zeitung.csv"].map(String::from).into());
    let counts = fs::read_to_string(out.join("ingest_lehrbuch.csv")).unwrap();
    assert!(counts.starts_with("lemma,count\n"));
    assert!(counts.lines().any(|l| l.starts_with("Grenzkosten,")));

    let (out, files) = run("specificity");
    assert!(files.contains("specificity_zeitung.csv"));
    assert_eq!(files.len(), 2 + 6);
    let spec = fs::read_to_string(out.join("specificity_zeitung.csv")).unwrap();
    assert!(spec.contains("\nSteuer,35,65,100\n"));

    let (_, files) = run("fit");
    assert_eq!(files, ["fits.csv".to_string()].into());

    let (out, files) = run("embed");
    assert_eq!(files, ["embed_lehrbuch_cbow.txt", "embed_zeitung_cbow.txt"].map(String::from).into());
    let vectors = fs::read_to_string(out.join("embed_lehrbuch_cbow.txt")).unwrap();
    let model = EmbeddingModel::parse_text(&vectors, ModelKind::Cbow).unwrap();
    assert_eq!(model.dim, 16);

    let (out, files) = run("tcn");
    assert_eq!(files.len(), 4);
    let edges = fs::read_to_string(out.join("tcn_edges_lehrbuch_cbow.csv")).unwrap();
    assert_eq!(edges.lines().next(), Some("label_a,label_b,raw_weight,scaled_weight"));
    assert_eq!(edges.lines().count(), 1 + 28);
    let vertices = fs::read_to_string(out.join("tcn_vertices_lehrbuch_cbow.csv")).unwrap();
    assert!(vertices.starts_with("label,mu\nKosten,128\n"));

    let (_, files) = run("cuts");
    assert_eq!(files.len(), 4);
    let (_, files) = run("ks");
    assert_eq!(files.len(), 3 + 2 * 2);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // zero corpora
    let st = tcnet().args(["all", "--out"]).arg(dir.path().join("x")).status().unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(!dir.path().join("x").exists());
    // unknown flag
    let st = tcnet().args(["all", "--bogus"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    // unreadable corpus path
    let st = tcnet()
        .args(["ingest", "--corpus", "a=/no/such/file.tsv:tsv"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));

    // malformed corpus fails the ingest stage and leaves nothing behind
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "# newdoc id = d\n1\tonly\ttwo\n").unwrap();
    let out = dir.path().join("out");
    let o = tcnet()
        .args(["all", "--corpus"])
        .arg(format!("bad={}:tsv", bad.display()))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ingest:"), "{err}");
    assert!(!out.exists());

    // validation only
    let good = fixture().join("lehrbuch.jsonl");
    let st = tcnet()
        .args(["all", "--validate-only", "--corpus"])
        .arg(format!("a={}:jsonl", good.display()))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert_eq!(listing(&out), [MANIFEST_FILE.to_string()].into());
    let m: Manifest = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert!(m.files.is_empty());
}

#[test]
fn flags_without_config_use_bundled_concepts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let st = tcnet()
        .args(["specificity", "--corpus"])
        .arg(format!("z={}", fixture().join("zeitung.tsv").display()))
        .args(["--variant", "mu", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let spec = fs::read_to_string(out.join("specificity_z.csv")).unwrap();
    assert_eq!(spec.lines().count(), 1 + 63);
    assert_eq!(listing(&out).len(), 3);
}

fn vectors_for(words: &[&str], dim: usize) -> EmbeddingModel {
    let mut text = format!("{} {dim}\n", words.len());
    for (i, w) in words.iter().enumerate() {
        let v: Vec<String> = (0..dim)
            .map(|k| (((i * 7 + k * 3) % 11) as f64 - 5.0).to_string())
            .collect();
        text.push_str(&format!("{w} {}\n", v.join(" ")));
    }
    EmbeddingModel::parse_text(&text, ModelKind::SkipGram).unwrap()
}

fn zero_records(concepts: &ConceptSet) -> Vec<SpecificityRecord> {
    concepts
        .concepts()
        .iter()
        .map(|c| SpecificityRecord {
            concept: c.clone(),
            s_count: 0,
            c_count: 0,
            mu: 0,
        })
        .collect()
}

#[test]
fn network_size_over_bundled_concepts() {
    let concepts = ConceptSet::bundled();
    assert_eq!(concepts.len(), 63);
    let words: Vec<&str> = concepts.concepts().iter().map(String::as_str).collect();
    let model = vectors_for(&words, 6);
    let net = build_tcn("c", &model, &concepts, &zero_records(&concepts)).unwrap();
    assert_eq!(net.vertex_count(), 63);
    assert_eq!(net.edges.len(), 1953);
    assert!(net.out_of_vocabulary.is_empty());

    let five = ConceptSet::new(["Kosten", "Markt", "Preis", "Gewinn", "Steuer"], "t").unwrap();
    let model = vectors_for(&["Kosten", "Markt", "Preis", "Gewinn"], 4);
    let net = build_tcn("c", &model, &five, &zero_records(&five)).unwrap();
    assert_eq!(net.vertex_count(), 5);
    assert_eq!(net.edges.len(), 6);
    assert_eq!(net.out_of_vocabulary, vec!["Steuer".to_string()]);
}
