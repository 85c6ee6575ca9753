#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taxoforge::clustering::{cluster_node, ClusterConfig, NodeInput, SubtopicClustering};
use taxoforge::embedding::{objective_gradient, objective_value, EmbeddingSpace, ObjectiveBatch, SkipGramSample, Subtopic};
use taxoforge::eval::{generate_synthetic_corpus, score_prediction, PlantedCorpusSpec, ScoreReport};
use taxoforge::vmf::{random_unit, sample_vmf, VmfParams};
use taxoforge::{complete_taxonomy, Corpus, PipelineConfig};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn sample_corpus() -> (Corpus, String) {
    let dir = data_dir();
    let corpus = taxoforge::load_corpus(dir.join("sample_corpus.txt"), None).unwrap();
    let hierarchy = std::fs::read_to_string(dir.join("sample_hierarchy.txt")).unwrap();
    (corpus, hierarchy)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Plain BM25 straight from raw token lists.
pub fn naive_bm25(docs: &[Vec<usize>], t: usize, sub: &[usize], k1: f64, b: f64) -> f64 {
    let n = docs.len() as f64;
    let df = docs.iter().filter(|d| d.contains(&t)).count() as f64;
    if df == 0.0 {
        return 0.0;
    }
    let idf = (n / df).ln();
    let avg = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let mut total = 0.0;
    for &d in sub {
        let tf = docs[d].iter().filter(|&&x| x == t).count() as f64;
        if tf > 0.0 {
            let len = docs[d].len() as f64;
            total += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
        }
    }
    total
}

/// Triple loop over documents, clusters and tokens.
pub fn naive_assign(docs: &[Vec<usize>], labels: &[Option<usize>], k: usize) -> Vec<Option<usize>> {
    let n = docs.len() as f64;
    docs.iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            let mut distinct = d.clone();
            distinct.sort_unstable();
            distinct.dedup();
            for s in 0..k {
                let mut w = 0.0;
                for &t in &distinct {
                    if labels[t] == Some(s) {
                        let tf = d.iter().filter(|&&x| x == t).count() as f64;
                        let df = docs.iter().filter(|o| o.contains(&t)).count() as f64;
                        w += tf * (n / df).ln();
                    }
                }
                if w > 0.0 && best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((s, w));
                }
            }
            best.map(|(s, _)| s)
        })
        .collect()
}

pub fn random_docs(rng: &mut ChaCha8Rng, n_docs: usize, vocab: usize) -> Vec<Vec<usize>> {
    (0..n_docs)
        .map(|_| {
            let len = rng.random_range(1..25);
            (0..len).map(|_| rng.random_range(0..vocab)).collect()
        })
        .collect()
}

pub fn corpus_from_ids(docs: &[Vec<usize>]) -> Corpus {
    // names chosen so interning order equals first appearance; map back by name
    Corpus::from_token_lists(docs.iter().map(|d| d.iter().map(|t| format!("w{t}")).collect::<Vec<_>>())).unwrap()
}

/// Term id in `corpus` of raw id `t`.
pub fn tid(corpus: &Corpus, t: usize) -> Option<usize> {
    corpus.vocab().id(&format!("w{t}"))
}

/// Random embedding space with active hinge terms; `None` if some hinge
/// argument sits too close to its kink for a finite difference.
pub fn random_objective_point(rng: &mut ChaCha8Rng, margin: f64) -> Option<(EmbeddingSpace, ObjectiveBatch)> {
    let dim = 6;
    let n_terms = 8;
    let n_topics = 3;
    let terms: Vec<usize> = (100..100 + n_terms).collect();
    let target: Vec<f64> = (0..n_terms).flat_map(|_| random_unit(dim, rng)).collect();
    let context: Vec<f64> = (0..n_terms).flat_map(|_| random_unit(dim, rng)).collect();
    let first = random_unit(dim, rng);
    let topics: Vec<Subtopic> = (0..n_topics)
        .map(|k| {
            // the second mean is close to the first so repulsion is active
            let mu = if k == 1 { sample_vmf(&first, 40.0, rng) } else if k == 0 { first.clone() } else { random_unit(dim, rng) };
            Subtopic {
                id: k,
                center: terms[k],
                keywords: vec![],
                vmf: VmfParams::new(mu, rng.random_range(0.5..40.0)).unwrap(),
            }
        })
        .collect();
    let space = EmbeddingSpace::from_parts(dim, terms.clone(), target, context, topics).unwrap();
    let samples = (0..6)
        .map(|_| SkipGramSample {
            target: terms[rng.random_range(0..n_terms)],
            context: terms[rng.random_range(0..n_terms)],
            negatives: (0..2).map(|_| terms[rng.random_range(0..n_terms)]).collect(),
        })
        .collect();
    let keywords = (0..5).map(|_| (rng.random_range(0..n_topics), terms[rng.random_range(0..n_terms)])).collect();
    let batch = ObjectiveBatch { samples, keywords };

    // stay away from kinks
    let near = |x: f64| x.abs() < 1e-3;
    for s in &batch.samples {
        let t = space.target(s.target).unwrap();
        let pos = dot(t, space.context(s.context).unwrap());
        for &n in &s.negatives {
            if near(dot(t, space.context(n).unwrap()) - pos + margin) {
                return None;
            }
        }
    }
    let tops = space.topics();
    for i in 0..tops.len() {
        for j in i + 1..tops.len() {
            if near(dot(&tops[i].vmf.mu, &tops[j].vmf.mu) - margin) {
                return None;
            }
        }
    }
    for &(k, w) in &batch.keywords {
        if near(dot(space.target(w).unwrap(), &tops[k].vmf.mu) - margin) {
            return None;
        }
    }
    Some((space, batch))
}

fn tangent(rng: &mut ChaCha8Rng, x: &[f64]) -> Vec<f64> {
    let mut u = random_unit(x.len(), rng);
    let p = dot(&u, x);
    u.iter_mut().zip(x).for_each(|(a, b)| *a -= p * b);
    unit(u)
}

fn shifted(space: &EmbeddingSpace, dirs: &Dirs, h: f64) -> EmbeddingSpace {
    let dim = space.dim();
    let n = space.terms().len();
    let step = |x: &[f64], u: &[f64]| unit(x.iter().zip(u).map(|(a, b)| a + h * b).collect());
    let mut target = Vec::with_capacity(n * dim);
    let mut context = Vec::with_capacity(n * dim);
    for r in 0..n {
        target.extend(step(space.target_row(r), &dirs.target[r]));
        context.extend(step(space.context_row(r), &dirs.context[r]));
    }
    let topics = space
        .topics()
        .iter()
        .enumerate()
        .map(|(k, t)| Subtopic {
            vmf: VmfParams::new(step(&t.vmf.mu, &dirs.mu[k]), t.vmf.kappa + h * dirs.kappa[k]).unwrap(),
            ..t.clone()
        })
        .collect();
    EmbeddingSpace::from_parts(dim, space.terms().to_vec(), target, context, topics).unwrap()
}

struct Dirs {
    target: Vec<Vec<f64>>,
    context: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
    kappa: Vec<f64>,
}

/// Relative error between the analytic directional derivative along a
/// random tangent direction and a central difference of the objective.
pub fn gradient_check(rng: &mut ChaCha8Rng, margin: f64) -> f64 {
    let (space, batch) = loop {
        if let Some(p) = random_objective_point(rng, margin) {
            break p;
        }
    };
    let dim = space.dim();
    let n = space.terms().len();
    let dirs = Dirs {
        target: (0..n).map(|r| tangent(rng, space.target_row(r))).collect(),
        context: (0..n).map(|r| tangent(rng, space.context_row(r))).collect(),
        mu: space.topics().iter().map(|t| tangent(rng, &t.vmf.mu)).collect(),
        kappa: space.topics().iter().map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let g = objective_gradient(&space, &batch, margin);
    let mut analytic = 0.0;
    for r in 0..n {
        analytic += dot(&g.target[r * dim..(r + 1) * dim], &dirs.target[r]);
        analytic += dot(&g.context[r * dim..(r + 1) * dim], &dirs.context[r]);
    }
    for k in 0..space.topics().len() {
        analytic += dot(&g.topic_mu[k], &dirs.mu[k]) + g.kappa[k] * dirs.kappa[k];
    }
    let h = 1e-5;
    let fd = (objective_value(&shifted(&space, &dirs, h), &batch, margin)
        - objective_value(&shifted(&space, &dirs, -h), &batch, margin))
        / (2.0 * h);
    (fd - analytic).abs() / analytic.abs().max(1e-6)
}

/// Orthogonal basis-direction groups: three known sub-topics and two unseen
/// ones, each with its own terms and documents.
pub struct TwoNovelFixture {
    pub corpus: Corpus,
    pub space: EmbeddingSpace,
    pub terms: Vec<usize>,
    pub docs: Vec<usize>,
    /// Term ids of each group, known groups first.
    pub groups: Vec<Vec<usize>>,
}

pub fn two_novel_fixture(seed: u64) -> TwoNovelFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_groups, per_group, dim) = (5, 15, 20);
    let mut docs: Vec<Vec<String>> = Vec::new();
    for g in 0..n_groups {
        for _ in 0..30 {
            docs.push((0..30).map(|_| format!("g{g}_{}", rng.random_range(0..per_group))).collect());
        }
    }
    // make sure every term occurs
    for g in 0..n_groups {
        docs.push((0..per_group).map(|w| format!("g{g}_{w}")).collect());
    }
    let corpus = Corpus::from_token_lists(docs).unwrap();
    let id = |g: usize, w: usize| corpus.vocab().id(&format!("g{g}_{w}")).unwrap();
    let groups: Vec<Vec<usize>> = (0..n_groups).map(|g| (0..per_group).map(|w| id(g, w)).collect()).collect();
    let mut terms: Vec<usize> = groups.concat();
    terms.sort_unstable();
    let axis = |g: usize| -> Vec<f64> { (0..dim).map(|i| if i == g { 1.0 } else { 0.0 }).collect() };
    let mut vectors: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (g, ids) in groups.iter().enumerate() {
        for &t in ids {
            vectors.insert(t, sample_vmf(&axis(g), 1000.0, &mut rng));
        }
    }
    let target: Vec<f64> = terms.iter().flat_map(|t| vectors[t].clone()).collect();
    let context = target.clone();
    let topics = (0..3)
        .map(|g| Subtopic {
            id: g + 1,
            center: groups[g][0],
            keywords: vec![],
            vmf: VmfParams::new(axis(g), 100.0).unwrap(),
        })
        .collect();
    let space = EmbeddingSpace::from_parts(dim, terms.clone(), target, context, topics).unwrap();
    let docs = corpus.all_doc_ids();
    TwoNovelFixture {
        corpus,
        space,
        terms,
        docs,
        groups,
    }
}

pub fn cluster_fixture(f: &TwoNovelFixture, cfg: &ClusterConfig) -> SubtopicClustering {
    let input = NodeInput {
        corpus: &f.corpus,
        space: &f.space,
        terms: &f.terms,
        docs: &f.docs,
        depth: 0,
    };
    cluster_node(&input, cfg).unwrap()
}

/// The planted 3x3 setting used by the end-to-end checks.
pub fn planted_spec(seed: u64) -> PlantedCorpusSpec {
    PlantedCorpusSpec {
        level1_topics: 3,
        level2_per_topic: 3,
        terms_per_topic: 40,
        docs_per_topic: 200,
        doc_len: 60,
        kappa_topic: 50.0,
        vocab_noise_frac: 0.1,
        seed,
        ..PlantedCorpusSpec::default()
    }
}

pub struct PlantedRun {
    pub report: ScoreReport,
    pub elapsed: Duration,
    pub json: String,
}

pub fn planted_run(seed: u64, delete: &[&str], cfg: &PipelineConfig) -> PlantedRun {
    let synth = generate_synthetic_corpus(&planted_spec(seed)).unwrap();
    let partial = synth.partial_taxonomy(delete).unwrap();
    let truth = synth.ground_truth(delete).unwrap();
    let start = Instant::now();
    let done = complete_taxonomy(&synth.corpus, &partial, cfg).unwrap();
    let elapsed = start.elapsed();
    let json = done.taxonomy.serialize(&synth.corpus, cfg.top_k_output).unwrap();
    let report = score_prediction(&done.taxonomy.to_json_tree(&synth.corpus, cfg.top_k_output), &truth);
    PlantedRun { report, elapsed, json }
}
