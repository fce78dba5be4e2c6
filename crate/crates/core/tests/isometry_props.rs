use std::f64::consts::PI;

use hspde::hermite::hermite_fn;
use hspde::isometry::time::{increment_factor, var_factor};
use hspde::isometry::{
    beta_factor, continuity_modulus_1d, fit_log_slope, increment_moments, qn_integrals, t0_bound, variance,
    variance_1d, variance_2d, Probe,
};
use hspde::kernels::{f1, mode_amplitude};
use hspde::model::{MeasureKind, ModelParams, SpectralMeasureSpec};
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Double-exponential rule on (a, b); tolerates integrable endpoint singularities.
fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let r = 0.5 * (b - a);
    let h = 1.0 / 64.0;
    let mut s = 0.0;
    for k in -400..=400 {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        // distance to the nearer endpoint, 1 − tanh|u|, without cancellation
        let d = r * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let p = if u >= 0.0 { b - d } else { a + d };
        if d > 0.0 && w > 1e-300 {
            s += w * f(p);
        }
    }
    s * h * r
}

fn power_law(beta: f64) -> SpectralMeasureSpec {
    SpectralMeasureSpec::new(MeasureKind::PowerLaw { beta }, 1).unwrap()
}

fn radial(gamma: f64) -> SpectralMeasureSpec {
    SpectralMeasureSpec::new(MeasureKind::RadialPower { gamma }, 2).unwrap()
}

#[test]
fn one_dimensional_variance_matches_direct_quadrature() {
    for &(t, x, n) in &[(1.0, 0.0, 8usize), (0.6, 0.9, 16), (2.0, -1.4, 12)] {
        let inner = |s: f64| {
            let h = 0.01;
            (-1600..=1600).map(|k| f1(s, x, k as f64 * h, n).unwrap().norm_sqr()).sum::<f64>() * h
        };
        let brute = simpson(inner, 0.0, t, 400);
        let r = variance_1d(t, x, n).unwrap();
        assert!((r.value - brute).abs() < 1e-6 * brute, "{} vs {brute}", r.value);
    }
}

#[test]
fn two_dimensional_variance_matches_radial_substitution() {
    // with b = 0 and x = 0 the η-integral becomes (t/k)∫₀^∞ (1+v⁴)^{-β}(1 − sinc(2√k t v)) dv
    let (beta, t, n) = (0.3, 1.0, 8usize);
    let p = ModelParams::two_dim(1.0, 0.0).unwrap();
    let r = variance_2d(t, 0.0, 0.0, n, &p, &power_law(beta)).unwrap();
    let sinc = |z: f64| if z.abs() < 1e-8 { 1.0 } else { z.sin() / z };
    let cut = 2000.0;
    let mut oracle = 0.0;
    for m in (0..=n).step_by(2) {
        let k = (2 * m + 1) as f64;
        let a = 2.0 * k.sqrt() * t;
        let head = simpson(|v| (1.0 + v.powi(4)).powf(-beta) * (1.0 - sinc(a * v)), 0.0, cut, 4_000_000);
        let tail = cut.powf(1.0 - 4.0 * beta) / (4.0 * beta - 1.0);
        let psi = hermite_fn(m, 0.0).unwrap().powi(2);
        oracle += 2.0 / (4.0 * PI * PI) * psi * t / k * (head + tail);
    }
    assert!((r.value - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", r.value);
    assert!((r.value - 0.174_80).abs() < 5e-6);
}

#[test]
fn mode_contributions_are_positive_and_accumulate() {
    let r = variance_1d(1.3, 0.4, 40).unwrap();
    assert!(r.per_mode.iter().all(|&c| c >= 0.0));
    let rows = r.mode_rows();
    assert!(rows.windows(2).all(|w| w[1].n == w[0].n + 1 && w[1].cumulative >= w[0].cumulative));
    let p = ModelParams::two_dim(1.0, 0.3).unwrap();
    let r = variance_2d(1.0, 0.5, 0.0, 6, &p, &power_law(0.4)).unwrap();
    assert!(r.per_mode.iter().all(|&c| c > 0.0));
}

#[test]
fn two_dimensional_variance_is_even_in_x() {
    let p = ModelParams::two_dim(1.0, 0.5).unwrap();
    let spec = power_law(0.4);
    let a = variance_2d(1.0, 0.7, 0.0, 6, &p, &spec).unwrap();
    let b = variance_2d(1.0, -0.7, 3.0, 6, &p, &spec).unwrap();
    assert!((a.value - b.value).abs() < 1e-7 * a.value);
}

#[test]
fn truncation_error_is_certified() {
    for &(t, x) in &[(1.0, 0.0), (0.5, 1.7)] {
        for n in [2usize, 8, 32] {
            let a = variance_1d(t, x, n).unwrap();
            let b = variance_1d(t, x, 4 * n).unwrap();
            assert!((b.value - a.value).abs() <= a.tail_error, "N={n}");
        }
    }
    let p = ModelParams::two_dim(1.0, 0.0).unwrap();
    let spec = power_law(0.4);
    for n in [2usize, 4] {
        let a = variance(Probe::new(1.0, 0.3), n, &p, Some(&spec), None).unwrap();
        let b = variance(Probe::new(1.0, 0.3), 4 * n, &p, Some(&spec), None).unwrap();
        assert!((b.value - a.value).abs() <= a.tail_error + a.quad_error + b.quad_error, "N={n}");
    }
}

#[test]
fn zeroth_mode_stays_below_its_majorant() {
    let p = ModelParams::two_dim(1.0, 0.5).unwrap();
    let spec = power_law(0.4);
    for t in [0.3, 1.0, 2.0] {
        let r = variance(Probe::new(t, 0.0), 2, &p, Some(&spec), None).unwrap();
        assert!(r.t0 <= t0_bound(t, &p, &spec).unwrap());
    }
    let p = ModelParams::three_dim(1.0, 1.0, 0.0).unwrap();
    let spec = radial(1.5);
    let r = variance(Probe::new(1.0, 0.0), 1, &p, Some(&spec), None).unwrap();
    assert!(r.t0 <= t0_bound(1.0, &p, &spec).unwrap());
}

#[test]
fn qhat_decreases_and_scales_like_one_over_n() {
    let ns = [1usize, 4, 16, 64, 256, 1024];
    let p = ModelParams::three_dim(1.0, 1.0, 0.0).unwrap();
    let q = qn_integrals(&ns, &p, &radial(1.5)).unwrap();
    assert!(q.windows(2).all(|w| w[1] < w[0]));
    // ρₙ ≥ μ|η̂|(2n+1), so (2n+1) q̂ₙ ≤ ∫ |η̂|^{-1/2} ν̂₃ / μ, which in polar form is
    // ∫|cos θ|^{-1/2} dθ · ∫ r^{1/2}(1+r²)^{-3/2} dr = 4 arc · Γ(3/4)² / (2 Γ(3/2))
    let arc = tanh_sinh(|th| th.cos().powf(-0.5), 0.0, 0.5 * PI);
    let gamma_34 = 1.225_416_702_465_177_6;
    let limit = 4.0 * arc * gamma_34 * gamma_34 / PI.sqrt();
    let scaled: Vec<f64> = ns.iter().zip(&q).map(|(&n, &v)| (2 * n + 1) as f64 * v).collect();
    assert!(scaled.windows(2).all(|w| w[1] > w[0]), "{scaled:?}");
    assert!(scaled.iter().all(|&s| s < limit), "{scaled:?} vs {limit}");
    assert!(scaled[ns.len() - 1] > 0.95 * limit);
    let p2 = ModelParams::three_dim(2.0, 1.0, 0.0).unwrap();
    let q2 = qn_integrals(&[1024], &p2, &radial(1.5)).unwrap();
    let ratio = q2[0] / q[ns.len() - 1];
    assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
}

#[test]
fn beta_factor_matches_angular_quadrature() {
    let (p, q) = (0.87, 0.13);
    let direct = tanh_sinh(|th| th.cos().powf(0.5 - p) * th.sin().powf(-2.0 * q), 0.0, 0.5 * PI);
    assert!((beta_factor(p, q) - direct).abs() < 1e-8 * direct, "{} vs {direct}", beta_factor(p, q));
    let direct = tanh_sinh(|th| th.cos().powf(-0.5), 0.0, 0.5 * PI);
    assert!((beta_factor(1.0, 0.0) - direct).abs() < 1e-8 * direct);
}

#[test]
fn space_modulus_bound_and_order() {
    let (t, x, n) = (1.0, 0.3, 64usize);
    let hs: Vec<f64> = (4..=10).map(|k| 2f64.powi(-k)).collect();
    let s: Vec<f64> = hs.iter().map(|&h| continuity_modulus_1d(t, x, h, n).unwrap()).collect();
    // mean value bound with sup|Ψₙ'| ≤ (√(n/2) + √((n+1)/2)) π^{-1/4}
    for (&h, &v) in hs.iter().zip(&s) {
        let bound: f64 = (0..=n)
            .map(|m| {
                let d = ((m as f64 / 2.0).sqrt() + ((m + 1) as f64 / 2.0).sqrt()).powi(2) / PI.sqrt();
                mode_amplitude((2 * m + 1) as f64, t).unwrap().powi(2) * d * h * h
            })
            .sum();
        assert!(v <= bound, "h={h}");
    }
    let (slope, _) = fit_log_slope(&hs, &s);
    assert!(slope >= 1.0, "slope {slope}");
    assert!(s.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn time_increment_parts_match_quadrature() {
    let (t, x, n) = (0.8, 0.5, 10usize);
    let p = ModelParams::one_dim();
    for h in [0.3, 0.05, 0.004] {
        let m = increment_moments(Probe::new(t, x), h, 0.0, n, &p, None, None).unwrap();
        let mut j1 = 0.0;
        let mut j2 = 0.0;
        for k in 0..=n {
            let rho = (2 * k + 1) as f64;
            let psi = hermite_fn(k, x).unwrap().powi(2);
            let a = |s: f64| mode_amplitude(rho, s).unwrap();
            j1 += psi * simpson(|s| (a(t + h - s) - a(t - s)).powi(2), 0.0, t, 2000);
            j2 += psi * simpson(|s| a(t + h - s).powi(2), t, t + h, 2000);
        }
        assert!((m.j1 - j1).abs() < 1e-8 * j1.max(1e-12), "h={h}: {} vs {j1}", m.j1);
        assert!((m.j2 - j2).abs() < 1e-8 * j2.max(1e-12), "h={h}: {} vs {j2}", m.j2);
    }
}

#[test]
fn time_increment_shrinks_with_the_step() {
    let p = ModelParams::one_dim();
    let j1: Vec<f64> = (1..=10)
        .map(|k| increment_moments(Probe::new(1.0, 0.2), 2f64.powi(-k), 0.0, 64, &p, None, None).unwrap().j1)
        .collect();
    assert!(j1.windows(2).all(|w| w[1] < w[0]), "{j1:?}");
}

proptest! {
    #[test]
    fn time_factors_match_simpson(rho in 0.0f64..400.0, t in 0.0f64..3.0, h in 0.0f64..1.0) {
        let a = |s: f64| mode_amplitude(rho, s).unwrap();
        let v = simpson(|s| a(s).powi(2), 0.0, t, 4000);
        prop_assert!((var_factor(rho, t) - v).abs() <= 1e-9 * (1.0 + v));
        let j = simpson(|s| (a(s + h) - a(s)).powi(2), 0.0, t, 4000);
        prop_assert!((increment_factor(rho, t, h) - j).abs() <= 1e-9 * (1.0 + j));
    }

    #[test]
    fn one_dimensional_variance_is_even_and_monotone_in_n(
        t in 0.0f64..3.0, x in -4.0f64..4.0, n in 1usize..80,
    ) {
        let a = variance_1d(t, x, n).unwrap();
        let b = variance_1d(t, -x, n).unwrap();
        let c = variance_1d(t, x, n - 1).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-13 * (1.0 + a.value));
        prop_assert!(a.value >= c.value);
    }
}
