use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taxoforge::clustering::estimate_vmf;
use taxoforge::vmf::{bessel_ratio, log_norm_const, random_unit, sample_vmf, vmf_log_density, VmfParams};

/// Midpoint rule over (polar, azimuth) on S^2.
fn integrate_s2(params: &VmfParams, n: usize) -> f64 {
    let (dt, dp) = (std::f64::consts::PI / n as f64, 2.0 * std::f64::consts::PI / (2 * n) as f64);
    let mut total = 0.0;
    for i in 0..n {
        let th = (i as f64 + 0.5) * dt;
        for j in 0..2 * n {
            let ph = (j as f64 + 0.5) * dp;
            let x = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            total += vmf_log_density(&x, params).unwrap().exp() * th.sin() * dt * dp;
        }
    }
    total
}

#[test]
fn density_integrates_to_one_on_s2() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kappa in [0.0, 2.0, 10.0] {
        let p = VmfParams::new(random_unit(3, &mut rng), kappa).unwrap();
        let total = integrate_s2(&p, 400);
        assert!((total - 1.0).abs() < 1e-4, "kappa {kappa}: {total}");
    }
}

#[test]
fn kappa_is_recovered_from_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (dim, kappa) in [(10, 50.0), (5, 10.0), (50, 200.0)] {
        let mu = random_unit(dim, &mut rng);
        let xs: Vec<Vec<f64>> = (0..10_000).map(|_| sample_vmf(&mu, kappa, &mut rng)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let fit = estimate_vmf(&refs, 1e4).unwrap();
        assert!((fit.params.kappa / kappa - 1.0).abs() < 0.1, "d={dim}: {}", fit.params.kappa);
        let c: f64 = fit.params.mu.iter().zip(&mu).map(|(a, b)| a * b).sum();
        assert!(c > 0.99);
    }
}

proptest! {
    #[test]
    fn bessel_ratio_is_in_unit_interval_and_increasing(dim in 2usize..200, k in 0.01f64..500.0) {
        let a = bessel_ratio(dim, k);
        let b = bessel_ratio(dim, k * 1.1);
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(b >= a);
    }

    #[test]
    fn log_norm_const_slope_is_minus_bessel_ratio(dim in 2usize..150, k in 0.1f64..300.0) {
        let h = 1e-4 * k.max(1.0);
        let fd = (log_norm_const(dim, k + h) - log_norm_const(dim, k - h)) / (2.0 * h);
        prop_assert!((fd + bessel_ratio(dim, k)).abs() < 1e-6, "fd {} ratio {}", fd, bessel_ratio(dim, k));
    }
}
