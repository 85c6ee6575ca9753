//! von Mises-Fisher distribution on the unit sphere S^{d-1}.
//!
//! The normalizing constant is evaluated in the log domain from the power
//! series of the modified Bessel function, with the `(kappa/2)^nu` prefactor
//! cancelled analytically so that `kappa = 0` is handled without a limit.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{dot, normalize};

/// Mean direction and concentration of one sub-topic cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmfParams {
    pub mu: Vec<f64>,
    pub kappa: f64,
    /// Cached `log C_d(kappa)`.
    pub log_c: f64,
}

impl VmfParams {
    /// `mu` is normalized here; callers may pass any non-zero direction.
    pub fn new(mut mu: Vec<f64>, kappa: f64) -> Result<Self> {
        if kappa < 0.0 || kappa.is_nan() {
            return Err(Error::NegativeKappa(kappa));
        }
        if normalize(&mut mu) == 0.0 {
            return Err(Error::Config("vMF mean direction must be non-zero".into()));
        }
        let log_c = log_norm_const(mu.len(), kappa);
        Ok(Self { mu, kappa, log_c })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn set_kappa(&mut self, kappa: f64) {
        self.kappa = kappa;
        self.log_c = log_norm_const(self.mu.len(), kappa);
    }
}

/// `log sum_k (x^2/4)^k Gamma(nu+1) / (k! Gamma(k+nu+1))`, i.e.
/// `log I_nu(x) - nu log(x/2) + ln Gamma(nu+1)`.
fn log_scaled_bessel_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let log_q = (0.25 * x * x).ln();
    let mut log_term = 0.0f64;
    let mut reference = 0.0f64;
    let mut sum = 1.0f64;
    let mut k = 0.0f64;
    loop {
        k += 1.0;
        log_term += log_q - k.ln() - (k + nu).ln();
        if log_term > reference {
            sum = sum * (reference - log_term).exp() + 1.0;
            reference = log_term;
        } else {
            sum += (log_term - reference).exp();
            // terms decrease monotonically past the peak
            if log_term < reference - 40.0 {
                break;
            }
        }
    }
    reference + sum.ln()
}

/// `log I_nu(x)` for `nu >= 0`, `x > 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + log_scaled_bessel_series(nu, x)
}

/// `log C_d(kappa) = (d/2-1) log kappa - (d/2) log 2pi - log I_{d/2-1}(kappa)`.
pub fn log_norm_const(dim: usize, kappa: f64) -> f64 {
    let d = dim as f64;
    let nu = 0.5 * d - 1.0;
    nu * std::f64::consts::LN_2 + ln_gamma(nu + 1.0)
        - 0.5 * d * (2.0 * std::f64::consts::PI).ln()
        - log_scaled_bessel_series(nu, kappa)
}

/// Mean resultant length `A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa)`,
/// which is also `-d/dkappa log C_d(kappa)`. Evaluated with the modified
/// Lentz algorithm on the Gauss continued fraction.
pub fn bessel_ratio(dim: usize, kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let nu = 0.5 * dim as f64;
    let b = |k: f64| 2.0 * (nu + k) / kappa;
    let mut f = b(0.0);
    if f == 0.0 {
        f = TINY;
    }
    let mut c = f;
    let mut d = 0.0;
    for k in 1..200_000 {
        let bk = b(k as f64);
        d += bk;
        if d == 0.0 {
            d = TINY;
        }
        d = 1.0 / d;
        c = bk + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `log C_d(kappa) + kappa * t.mu`; `t` is assumed unit-norm.
pub fn vmf_log_density(t: &[f64], params: &VmfParams) -> Result<f64> {
    if params.kappa < 0.0 {
        return Err(Error::NegativeKappa(params.kappa));
    }
    Ok(params.log_c + params.kappa * dot(t, &params.mu))
}

/// Uniform direction on S^{dim-1}.
pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) > 1e-12 {
            return v;
        }
    }
}

/// Draws one sample from vMF(mu, kappa) with Wood's rejection scheme.
pub fn sample_vmf<R: Rng + ?Sized>(mu: &[f64], kappa: f64, rng: &mut R) -> Vec<f64> {
    let dim = mu.len();
    if kappa <= 0.0 {
        return random_unit(dim, rng);
    }
    let dm1 = (dim - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt()) / dm1;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * dm1, 0.5 * dm1).expect("valid beta parameters");
    let w = loop {
        let z: f64 = beta.sample(rng);
        let u: f64 = rng.random();
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };

    // uniform direction in the tangent space at mu
    let mut v = random_unit(dim, rng);
    let proj = dot(&v, mu);
    for (vi, mi) in v.iter_mut().zip(mu) {
        *vi -= proj * mi;
    }
    normalize(&mut v);
    let s = (1.0 - w * w).max(0.0).sqrt();
    mu.iter().zip(&v).map(|(m, vi)| w * m + s * vi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_limit_is_inverse_surface_area() {
        for dim in [2usize, 3, 4, 7, 100] {
            let d = dim as f64;
            let area = 2.0 * std::f64::consts::PI.powf(d / 2.0) / ln_gamma(d / 2.0).exp();
            assert!((log_norm_const(dim, 0.0) + area.ln()).abs() < 1e-12, "dim {dim}");
        }
    }

    #[test]
    fn three_dimensional_closed_forms() {
        // C_3(k) = k / (4 pi sinh k), A_3(k) = coth k - 1/k
        for kappa in [0.01f64, 0.5, 2.0, 10.0, 80.0] {
            let expected = (kappa / (4.0 * std::f64::consts::PI * kappa.sinh())).ln();
            let got = log_norm_const(3, kappa);
            assert!((got - expected).abs() < 1e-10 * expected.abs().max(1.0), "kappa {kappa}");
            let a = 1.0 / kappa.tanh() - 1.0 / kappa;
            assert!((bessel_ratio(3, kappa) - a).abs() < 1e-12, "kappa {kappa}");
        }
    }

    #[test]
    fn ratio_is_derivative_of_log_const() {
        for dim in [2usize, 5, 10, 100] {
            for kappa in [0.3, 5.0, 50.0, 400.0] {
                let h = 1e-5 * kappa;
                let fd = (log_norm_const(dim, kappa + h) - log_norm_const(dim, kappa - h)) / (2.0 * h);
                let a = bessel_ratio(dim, kappa);
                assert!((fd + a).abs() < 1e-6 * a.max(1e-3), "dim {dim} kappa {kappa}: {fd} vs {a}");
            }
        }
    }

    #[test]
    fn log_bessel_matches_integer_order_values() {
        // I_0(1) = 1.2660658777520082, I_1(2) = 1.5906368546373291
        assert!((log_bessel_i(0.0, 1.0) - 1.2660658777520082f64.ln()).abs() < 1e-14);
        assert!((log_bessel_i(1.0, 2.0) - 1.590_636_854_637_329f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn large_kappa_is_finite() {
        let lc = log_norm_const(100, 1000.0);
        assert!(lc.is_finite());
        let a = bessel_ratio(100, 1000.0);
        assert!(a > 0.9 && a < 1.0);
    }

    #[test]
    fn density_peaks_at_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = VmfParams::new(random_unit(6, &mut rng), 4.0).unwrap();
        let at_mode = vmf_log_density(&p.mu, &p).unwrap();
        for _ in 0..100 {
            let t = random_unit(6, &mut rng);
            assert!(vmf_log_density(&t, &p).unwrap() <= at_mode);
        }
    }

    #[test]
    fn negative_kappa_rejected() {
        assert!(matches!(VmfParams::new(vec![1.0, 0.0], -1.0), Err(Error::NegativeKappa(_))));
        let mut p = VmfParams::new(vec![1.0, 0.0], 1.0).unwrap();
        p.kappa = -2.0;
        assert!(vmf_log_density(&[1.0, 0.0], &p).is_err());
    }

    #[test]
    fn samples_are_unit_and_concentrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mu = random_unit(8, &mut rng);
        let mean_cos: f64 = (0..2000)
            .map(|_| {
                let x = sample_vmf(&mu, 30.0, &mut rng);
                assert!((dot(&x, &x) - 1.0).abs() < 1e-12);
                dot(&x, &mu)
            })
            .sum::<f64>()
            / 2000.0;
        // E[t.mu] = A_d(kappa)
        assert!((mean_cos - bessel_ratio(8, 30.0)).abs() < 0.01);
    }
}
