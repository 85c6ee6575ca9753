//! Spherical k-means: Lloyd iterations maximizing the summed cosine between
//! each point and the normalized sum of its cluster.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{argmax, dot, normalize};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Stop once the relative objective gain drops to this value or below.
    /// Zero means iterate to an assignment fixpoint.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 0.0,
            restarts: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub means: Vec<Vec<f64>>,
    pub objective: f64,
    /// Objective after every iteration of the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn spherical_kmeans(vectors: &[&[f64]], k: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Config("k-means needs k >= 1".into()));
    }
    if vectors.len() < k {
        return Err(Error::TooFewVectors {
            needed: k,
            got: vectors.len(),
        });
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..cfg.restarts.max(1) {
        let seed = cfg.seed.wrapping_add((restart as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = seed_means(vectors, k, &mut rng);
        let run = lloyd(vectors, init, cfg);
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means++ style seeding with `1 - cos` as the distance.
fn seed_means<R: Rng>(vectors: &[&[f64]], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = vectors
        .iter()
        .map(|v| (1.0 - dot(v, vectors[chosen[0]])).max(0.0))
        .collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total <= 0.0 {
            // all remaining points coincide with a chosen one
            (0..n).find(|i| !chosen.contains(i)).expect("n >= k")
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        };
        chosen.push(next);
        for (d, v) in dist.iter_mut().zip(vectors) {
            *d = d.min((1.0 - dot(v, vectors[next])).max(0.0));
        }
    }
    chosen.into_iter().map(|i| vectors[i].to_vec()).collect()
}

fn objective(vectors: &[&[f64]], assign: &[usize], means: &[Vec<f64>]) -> f64 {
    vectors.iter().zip(assign).map(|(v, &a)| dot(v, &means[a])).sum()
}

fn lloyd(vectors: &[&[f64]], mut means: Vec<Vec<f64>>, cfg: &KMeansConfig) -> KMeansResult {
    let k = means.len();
    let dim = vectors[0].len();
    let mut assign = vec![usize::MAX; vectors.len()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let mut changed = false;
        for (i, v) in vectors.iter().enumerate() {
            let (mut a, best) = argmax(means.iter().map(|m| dot(v, m))).expect("k >= 1");
            // stay put on ties so duplicated points can reach a fixpoint
            if assign[i] != usize::MAX && dot(v, &means[assign[i]]) >= best {
                a = assign[i];
            }
            if a != assign[i] {
                assign[i] = a;
                changed = true;
            }
        }

        // re-seed empty clusters with the point farthest from its own mean,
        // taken from a cluster that can spare it
        let mut sizes = vec![0usize; k];
        assign.iter().for_each(|&a| sizes[a] += 1);
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..vectors.len())
                .filter(|&i| sizes[assign[i]] > 1)
                .min_by(|&i, &j| {
                    let ci = dot(vectors[i], &means[assign[i]]);
                    let cj = dot(vectors[j], &means[assign[j]]);
                    ci.total_cmp(&cj).then(i.cmp(&j))
                });
            if let Some(i) = far {
                sizes[assign[i]] -= 1;
                assign[i] = c;
                sizes[c] = 1;
                means[c] = vectors[i].to_vec();
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (v, &a) in vectors.iter().zip(&assign) {
            sums[a].iter_mut().zip(v.iter()).for_each(|(s, x)| *s += x);
        }
        for (mean, mut sum) in means.iter_mut().zip(sums) {
            if normalize(&mut sum) > 0.0 {
                *mean = sum;
            }
        }

        let obj = objective(vectors, &assign, &means);
        let gain = trace.last().map(|&prev: &f64| obj - prev);
        trace.push(obj);
        if !changed || (cfg.tol > 0.0 && gain.is_some_and(|g| g <= cfg.tol * obj.abs())) {
            converged = true;
            break;
        }
    }

    KMeansResult {
        objective: objective(vectors, &assign, &means),
        assignments: assign,
        means,
        trace,
        iterations,
        converged,
    }
}
