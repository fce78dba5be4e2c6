use std::f64::consts::PI;

use hspde::hermite::{
    calibrate_sup_bound, delta_partial_sum, hermite_batch, hermite_fn, mode_ode_residual, neg_i_pow,
    PI_POW_NEG_QUARTER,
};
use proptest::prelude::*;

#[test]
fn values_at_the_origin() {
    assert!((hermite_fn(0, 0.0).unwrap() - 0.751_125_544).abs() < 1e-9);
    assert_eq!(hermite_fn(1, 0.0).unwrap(), 0.0);
    // H₂ = 4x² − 2 in the normalized formula
    let psi2 = -2.0 / (8.0f64.sqrt() * PI.powf(0.25));
    assert!((hermite_fn(2, 0.0).unwrap() - psi2).abs() < 1e-15);
    assert!((psi2 + 0.531_125_966).abs() < 1e-9);
    let b = hermite_batch(2, 0.0).unwrap();
    assert_eq!(b, vec![hermite_fn(0, 0.0).unwrap(), 0.0, hermite_fn(2, 0.0).unwrap()]);
    let g = hermite_batch(0, 3.5).unwrap();
    assert!((g[0] - PI_POW_NEG_QUARTER * (-6.125f64).exp()).abs() < 1e-18);
}

#[test]
fn matches_extended_precision_reference() {
    let text = include_str!("data/hermite_reference.csv");
    let mut worst = 0.0f64;
    let mut count = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let n: usize = f[0].parse().unwrap();
        let x: f64 = f[1].parse().unwrap();
        let reference: f64 = f[2].parse().unwrap();
        let v = hermite_fn(n, x).unwrap();
        assert!(v.is_finite());
        if reference != 0.0 {
            let rel = ((v - reference) / reference).abs();
            worst = worst.max(rel);
            assert!(rel < 1e-10, "n={n} x={x}: {v} vs {reference} (rel {rel:e})");
            count += 1;
        }
    }
    assert!(count > 690);
    println!("worst relative error {worst:e} over {count} points");
}

#[test]
fn orthonormal_up_to_fifty() {
    const M: usize = 50;
    let h = 1e-3;
    let k_max: i64 = 30_000;
    let mut gram = vec![vec![0.0f64; M + 1]; M + 1];
    for k in -k_max..=k_max {
        let x = k as f64 * h;
        let w = if k.abs() == k_max { 0.5 * h } else { h };
        let v = hermite_batch(M, x).unwrap();
        for m in 0..=M {
            let vm = w * v[m];
            for n in m..=M {
                gram[m][n] += vm * v[n];
            }
        }
    }
    for m in 0..=M {
        for n in m..=M {
            let target = if m == n { 1.0 } else { 0.0 };
            assert!((gram[m][n] - target).abs() < 1e-8, "({m},{n}) {}", gram[m][n]);
        }
    }
}

#[test]
fn fourier_eigenfunctions() {
    // (2π)^{-1/2} Σ e^{−ixξ} Ψₙ(x) h over a fine grid
    let h = 5e-3;
    let xs: Vec<f64> = (-6000..=6000).map(|k| k as f64 * h).collect();
    for n in [0usize, 1, 2, 5, 10] {
        let vals: Vec<f64> = xs.iter().map(|&x| hermite_fn(n, x).unwrap()).collect();
        for &xi in &[0.0, 0.4, 1.3, 2.7] {
            let (mut re, mut im) = (0.0, 0.0);
            for (x, v) in xs.iter().zip(&vals) {
                re += v * (x * xi).cos();
                im -= v * (x * xi).sin();
            }
            let s = h / (2.0 * PI).sqrt();
            let (er, ei) = neg_i_pow(n);
            let psi = hermite_fn(n, xi).unwrap();
            assert!((re * s - er * psi).abs() < 1e-10, "n={n} xi={xi}");
            assert!((im * s - ei * psi).abs() < 1e-10, "n={n} xi={xi}");
        }
    }
}

#[test]
fn sup_bound_calibration() {
    let cal = calibrate_sup_bound(200).unwrap();
    let psi1_max = 2.0 / (1f64.exp() * PI.sqrt());
    assert!((cal.max_sq[1] - psi1_max).abs() < 1e-6);
    assert!(cal.d >= 0.4151);
    for n in 1..=200 {
        let r = (n as f64).powf(1.0 / 6.0) * cal.max_sq[n];
        assert!(r >= cal.c && r <= cal.d);
    }
    assert!(cal.c > 0.0 && cal.d < 1.0);
    for k in -100..=100 {
        let x = k as f64 * 0.05;
        assert!(hermite_fn(0, x).unwrap().powi(2) <= 1.0 / PI.sqrt() + 1e-16);
    }
}

#[test]
fn delta_sum_acts_like_a_delta() {
    assert!((delta_partial_sum(0, 0.0, 0.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
    let x0 = 0.3;
    let bump = |x: f64| (-(x - 0.5) * (x - 0.5)).exp() * (0.2 * x).cos();
    let h = 2e-3;
    let mut errs = Vec::new();
    for &n in &[10usize, 40, 160] {
        let s: f64 = (-6000..=6000)
            .map(|k| {
                let x = k as f64 * h;
                delta_partial_sum(n, x, x0).unwrap() * bump(x) * h
            })
            .sum();
        errs.push((s - bump(x0)).abs());
    }
    assert!(errs[2] < errs[0] && errs[2] < 1e-6, "{errs:?}");
}

#[test]
fn mode_ode_residual_examples() {
    assert!(mode_ode_residual(0, 0.7, 1e-3).unwrap() < 1e-5);
    assert!(mode_ode_residual(3, 1.2, 1e-3).unwrap() < 1e-4);
    for n in [0usize, 1, 3, 10] {
        let r1 = mode_ode_residual(n, 0.9, 0.02).unwrap();
        let r2 = mode_ode_residual(n, 0.9, 0.01).unwrap();
        assert!(((r1 / r2) - 4.0).abs() < 0.2, "n={n}: {}", r1 / r2);
    }
}

proptest! {
    #[test]
    fn parity(n in 0usize..400, x in -40.0f64..40.0) {
        let a = hermite_fn(n, x).unwrap();
        let b = hermite_fn(n, -x).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((a - sign * b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn batch_equals_single(n in 0usize..60, x in -15.0f64..15.0) {
        let b = hermite_batch(n, x).unwrap();
        for (k, v) in b.iter().enumerate() {
            prop_assert_eq!(v.to_bits(), hermite_fn(k, x).unwrap().to_bits());
        }
    }

    #[test]
    fn never_overflows(n in 0usize..10_000, x in -1e3f64..1e3) {
        let v = hermite_fn(n, x).unwrap();
        prop_assert!(v.is_finite() && v.abs() < 1.0);
    }

    #[test]
    fn delta_sum_is_symmetric(n in 0usize..40, x in -6.0f64..6.0, y in -6.0f64..6.0) {
        let a = delta_partial_sum(n, x, y).unwrap();
        let b = delta_partial_sum(n, y, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
    }
}
