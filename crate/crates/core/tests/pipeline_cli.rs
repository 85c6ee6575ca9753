mod common;

use std::collections::BTreeSet;
use std::process::Command;

use taxoforge::eval::generate_synthetic_corpus;
use taxoforge::taxonomy::TopicNode;
use taxoforge::{complete_taxonomy, PipelineConfig, Taxonomy};

fn taxoforge() -> Command {
    Command::new(env!("CARGO_BIN_EXE_taxoforge"))
}

fn child_terms(t: &Taxonomy, n: &TopicNode) -> Vec<BTreeSet<usize>> {
    n.children.iter().map(|&c| t.node(c).terms.keys().copied().collect()).collect()
}

#[test]
fn bundled_sample_gains_a_novel_node_and_keeps_invariants() {
    let (corpus, hierarchy) = common::sample_corpus();
    let partial = Taxonomy::parse(&hierarchy, &corpus).unwrap();
    let done = complete_taxonomy(&corpus, &partial, &PipelineConfig::default()).unwrap();
    let t = &done.taxonomy;

    // every input node survives with its name and parent
    for (i, n) in partial.nodes().iter().enumerate() {
        let m = t.node(i);
        assert_eq!(m.center_term, n.center_term);
        assert_eq!(m.parent, n.parent);
        assert!(!m.is_novel);
    }
    let novel: Vec<&TopicNode> = t.nodes().iter().filter(|n| n.is_novel).collect();
    assert!(!novel.is_empty());
    let t2 = corpus.vocab().id("t2").unwrap();
    assert!(novel.iter().any(|n| t.node(n.parent.unwrap()).center_term == Some(t2)));

    for n in t.nodes() {
        let terms: BTreeSet<usize> = n.terms.keys().copied().collect();
        let kids = child_terms(t, n);
        for (i, a) in kids.iter().enumerate() {
            for b in &kids[i + 1..] {
                assert!(a.is_disjoint(b), "sibling term sets overlap");
            }
            assert!(a.is_subset(&terms), "child terms outside the parent");
        }
        for &c in &n.children {
            assert!(t.node(c).docs.is_subset(&n.docs), "child docs outside the parent");
        }
    }
}

#[test]
fn full_hierarchy_gains_no_novel_nodes() {
    let synth = generate_synthetic_corpus(&common::planted_spec(1)).unwrap();
    let partial = synth.partial_taxonomy(&[]).unwrap();
    let done = complete_taxonomy(&synth.corpus, &partial, &PipelineConfig::default()).unwrap();
    let novel: Vec<String> = done
        .taxonomy
        .nodes()
        .iter()
        .filter(|n| n.is_novel)
        .map(|n| synth.corpus.vocab().term(n.center_term.unwrap()).to_owned())
        .collect();
    assert!(novel.is_empty(), "unexpected novel nodes {novel:?}");
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::data_dir();
    let missing = taxoforge().arg("--out").arg(dir.path().join("x.json")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "no_such_key = 3\n").unwrap();
    let out = taxoforge()
        .arg("--corpus")
        .arg(data.join("sample_corpus.txt"))
        .arg("--hierarchy")
        .arg(data.join("sample_hierarchy.txt"))
        .arg("--config")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = taxoforge()
        .arg("--corpus")
        .arg(dir.path().join("absent.txt"))
        .arg("--hierarchy")
        .arg(data.join("sample_hierarchy.txt"))
        .arg("--out")
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cli_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::data_dir();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = taxoforge()
            .arg("--corpus")
            .arg(data.join("sample_corpus.txt"))
            .arg("--hierarchy")
            .arg(data.join("sample_hierarchy.txt"))
            .args(["--seed", "7", "--workers", "1"])
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let tree: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(tree["children"].is_array());
}
