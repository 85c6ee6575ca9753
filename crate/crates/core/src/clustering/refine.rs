//! Concentration estimates and the choice of the novel-cluster count.

use crate::error::{Error, Result};
use crate::vmf::VmfParams;

#[derive(Debug, Clone)]
pub struct VmfFit {
    pub params: VmfParams,
    /// Length of the mean resultant vector, `r_bar`.
    pub mean_resultant: f64,
    /// Set when the resultant vanished and `mu` is an arbitrary basis vector.
    pub degenerate: bool,
}

/// Moment approximation `kappa = r(d - r^2) / (1 - r^2)` on the mean
/// resultant length, clamped to `[0, kappa_max]`.
pub fn estimate_vmf(vectors: &[&[f64]], kappa_max: f64) -> Result<VmfFit> {
    if vectors.len() < 2 {
        return Err(Error::TooFewVectors {
            needed: 2,
            got: vectors.len(),
        });
    }
    let dim = vectors[0].len();
    let mut sum = vec![0.0; dim];
    for v in vectors {
        sum.iter_mut().zip(v.iter()).for_each(|(s, x)| *s += x);
    }
    let len = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = (len / vectors.len() as f64).min(1.0);
    if len <= 1e-12 {
        let mut mu = vec![0.0; dim];
        mu[0] = 1.0;
        return Ok(VmfFit {
            params: VmfParams::new(mu, 0.0)?,
            mean_resultant: 0.0,
            degenerate: true,
        });
    }
    let d = dim as f64;
    let kappa = if r >= 1.0 - 1e-12 {
        kappa_max
    } else {
        (r * (d - r * r) / (1.0 - r * r)).clamp(0.0, kappa_max)
    };
    Ok(VmfFit {
        params: VmfParams::new(sum, kappa)?,
        mean_resultant: r,
        degenerate: false,
    })
}

/// Population standard deviation; zero for fewer than two values.
pub fn concentration_stdev(kappas: &[f64]) -> f64 {
    if kappas.len() < 2 {
        return 0.0;
    }
    let n = kappas.len() as f64;
    let mean = kappas.iter().sum::<f64>() / n;
    (kappas.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Picks the candidate count whose novel concentrations, pooled with the
/// known ones, have the smallest spread. Ties go to the smaller count.
pub fn choose_k_by_concentration(known: &[f64], candidates: &[(usize, Vec<f64>)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, novel) in candidates {
        let pooled: Vec<f64> = known.iter().chain(novel).copied().collect();
        let sd = concentration_stdev(&pooled);
        let better = match best {
            None => true,
            Some((bk, bsd)) => sd < bsd || (sd == bsd && *k < bk),
        };
        if better {
            best = Some((*k, sd));
        }
    }
    best.map(|(k, _)| k)
}
