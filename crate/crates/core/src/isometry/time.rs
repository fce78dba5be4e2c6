//! Closed-form time integrals of the squared mode amplitude.
//!
//! With `A(τ) = sin(ωτ)/ω` and `ρ = ω²`:
//!
//! ```text
//! V(ρ, t)    = ∫₀ᵗ A(τ)² dτ            = (t / 2ρ)(1 − sinc(2ωt))
//! J(ρ, t, h) = ∫₀ᵗ (A(τ+h) − A(τ))² dτ = h² sinc²(ωh/2) (t/2)(1 + cos(ω(t+h)) sinc(ωt))
//! ```
//!
//! The `*_times_rho` variants return `ρ·V` and `ρ·J`, which stay bounded as
//! ρ grows and let callers divide by ρ in log space.

const SERIES_SWITCH: f64 = 1e-2;

#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Σ_{k=1}^{5} (−1)^{k+1} 2^{2k−1} ρ^{k−1} t^{2k+1} / ((2k)! (2k+1)), accurate for ρt² < 1e-2.
fn var_series(rho: f64, t: f64) -> f64 {
    const C: [f64; 5] = [
        1.0 / 3.0,
        -8.0 / (24.0 * 5.0),
        32.0 / (720.0 * 7.0),
        -128.0 / (40_320.0 * 9.0),
        512.0 / (3_628_800.0 * 11.0),
    ];
    let z = rho * t * t;
    let poly = C[0] + z * (C[1] + z * (C[2] + z * (C[3] + z * C[4])));
    t * t * t * poly
}

/// `∫₀ᵗ sin²(√ρ s)/ρ ds`.
pub fn var_factor(rho: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if rho * t * t < SERIES_SWITCH {
        var_series(rho, t)
    } else {
        let w = rho.sqrt();
        0.5 * t * (1.0 - sinc(2.0 * w * t)) / rho
    }
}

/// `ρ · var_factor(ρ, t)`.
pub fn var_factor_times_rho(rho: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if rho * t * t < SERIES_SWITCH {
        rho * var_series(rho, t)
    } else {
        0.5 * t * (1.0 - sinc(2.0 * rho.sqrt() * t))
    }
}

/// `∫₀ᵗ (A(τ+h) − A(τ))² dτ`.
pub fn increment_factor(rho: f64, t: f64, h: f64) -> f64 {
    if t <= 0.0 || h == 0.0 {
        return 0.0;
    }
    let w = rho.sqrt();
    let s = sinc(0.5 * w * h);
    h * h * s * s * 0.5 * t * (1.0 + (w * (t + h)).cos() * sinc(w * t))
}

/// `ρ · increment_factor(ρ, t, h)`.
pub fn increment_factor_times_rho(rho: f64, t: f64, h: f64) -> f64 {
    if t <= 0.0 || h == 0.0 {
        return 0.0;
    }
    let w = rho.sqrt();
    if w * h < 1e-4 {
        return rho * increment_factor(rho, t, h);
    }
    let s = (0.5 * w * h).sin();
    4.0 * s * s * 0.5 * t * (1.0 + (w * (t + h)).cos() * sinc(w * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn var_factor_matches_antiderivative() {
        for &(rho, t) in &[(1.0, std::f64::consts::PI), (3.0, 0.7), (1e-5, 2.0), (0.004, 1.5), (250.0, 1.0)] {
            let w: f64 = f64::sqrt(rho);
            let exact = (t / 2.0 - (2.0 * w * t).sin() / (4.0 * w)) / rho;
            let v = var_factor(rho, t);
            assert!(((v - exact) / exact).abs() < 1e-9, "rho={rho} t={t} {v} {exact}");
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        let t = 1.0;
        let below = var_factor(SERIES_SWITCH * (1.0 - 1e-12), t);
        let above = var_factor(SERIES_SWITCH * (1.0 + 1e-12), t);
        assert!(((below - above) / above).abs() < 1e-12);
        assert_eq!(var_factor(0.0, 2.0), 8.0 / 3.0);
    }

    #[test]
    fn increment_factor_matches_quadrature() {
        for &(rho, t, h) in &[(1.0, 1.0, 0.5), (7.0, 2.0, 0.01), (0.0, 1.0, 0.3), (40.0, 0.3, 1.0)] {
            let w = f64::sqrt(rho);
            let a = |tau: f64| if w == 0.0 { tau } else { (w * tau).sin() / w };
            let oracle = simpson(|tau| (a(tau + h) - a(tau)).powi(2), 0.0, t, 20_000);
            let v = increment_factor(rho, t, h);
            assert!((v - oracle).abs() < 1e-12 * oracle.max(1.0), "{rho} {t} {h}: {v} vs {oracle}");
            if rho > 0.0 {
                assert!((increment_factor_times_rho(rho, t, h) / rho - v).abs() < 1e-13);
            }
        }
    }
}
