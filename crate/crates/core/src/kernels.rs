//! Truncated Hermite-series fundamental solutions and their certified tails.
//!
//! Every kernel is a sum over modes of `A(ρₙ, t) = sin(√ρₙ t)/√ρₙ` times a
//! product of Hermite functions; the 2-d and 3-d kernels evaluate the modes at
//! the scaled arguments `|η̂|^{1/2} x` and `ξ₀ / |η̂|^{1/2}`. All kernels vanish
//! for `t < 0` and use `H(0) = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{finite, Error, Result};
use crate::hermite::{calibrated_d, hermite_batch, neg_i_pow};
use crate::model::{rho_unchecked, Dim, ModelParams};

/// Below this ρ the amplitude switches to its Taylor series.
pub const SMALL_RHO: f64 = 1e-12;
/// Largest truncation [`choose_truncation`] will return.
pub const MAX_TRUNCATION: f64 = 1e8;
/// Truncation used when no tolerance is requested.
pub const DEFAULT_TRUNCATION: usize = 64;

/// `sin(√ρ t)/√ρ`, continuous down to ρ = 0 where it equals t.
pub fn mode_amplitude(rho: f64, t: f64) -> Result<f64> {
    finite(rho, "rho")?;
    finite(t, "t")?;
    if rho < 0.0 {
        return Err(Error::invalid(format!(
            "negative mode weight {rho}; the Levi condition must hold upstream"
        )));
    }
    if t < 0.0 {
        return Err(Error::invalid("mode_amplitude needs t >= 0"));
    }
    Ok(amplitude(rho, t))
}

#[inline]
pub(crate) fn amplitude(rho: f64, t: f64) -> f64 {
    if rho <= SMALL_RHO {
        let t2 = t * t;
        t * (1.0 - rho * t2 / 6.0 + rho * rho * t2 * t2 / 120.0)
    } else {
        let w = rho.sqrt();
        (w * t).sin() / w
    }
}

fn check_time(t: f64) -> Result<bool> {
    finite(t, "t")?;
    Ok(t >= 0.0)
}

/// Fundamental solution of the 1-d problem, truncated after mode `n_trunc`.
pub fn e1(t: f64, x: f64, x0: f64, n_trunc: usize) -> Result<f64> {
    let hx = hermite_batch(n_trunc, x)?;
    let h0 = hermite_batch(n_trunc, x0)?;
    if !check_time(t)? {
        return Ok(0.0);
    }
    let s: f64 = (0..=n_trunc)
        .map(|n| amplitude((2 * n + 1) as f64, t) * h0[n] * hx[n])
        .sum();
    Ok(-s)
}

/// Coefficients `cₙ` with `F₁(t, x; ξ₀) = Σ cₙ Ψₙ(ξ₀)`.
pub fn f1_coefficients(t: f64, x: f64, n_trunc: usize) -> Result<Vec<Complex64>> {
    let hx = hermite_batch(n_trunc, x)?;
    if !check_time(t)? {
        return Ok(vec![Complex64::new(0.0, 0.0); n_trunc + 1]);
    }
    Ok((0..=n_trunc)
        .map(|n| {
            let (re, im) = neg_i_pow(n);
            -Complex64::new(re, im) * (amplitude((2 * n + 1) as f64, t) * hx[n])
        })
        .collect())
}

/// Spatial Fourier transform in `x₀` of [`e1`] (unitary convention).
pub fn f1(t: f64, x: f64, xi0: f64, n_trunc: usize) -> Result<Complex64> {
    let c = f1_coefficients(t, x, n_trunc)?;
    let h = hermite_batch(n_trunc, xi0)?;
    Ok(c.iter().zip(&h).map(|(c, h)| c * h).sum())
}

fn check_eta(eta: f64) -> Result<f64> {
    finite(eta, "eta_hat")?;
    if eta == 0.0 {
        return Err(Error::invalid("eta_hat = 0 is excluded: the scaled argument xi0/|eta|^(1/2) is undefined"));
    }
    Ok(eta.abs().sqrt())
}

/// Coefficients `cₙ` with `𝙵(t, x, y[, z]; ξ₀, η̂[, ζ̂]) = Σ cₙ Ψₙ(ξ₀/|η̂|^{1/2})`.
///
/// Covers both `𝙵₂` (ζ̂ = 0, z ignored) and `𝙵₃`; the mode weight is
/// `ρₙ(−η̂, ζ̂)`.
pub fn scaled_coefficients(
    params: &ModelParams,
    t: f64,
    x: f64,
    phase: f64,
    eta: f64,
    zeta: f64,
    n_trunc: usize,
) -> Result<Vec<Complex64>> {
    params.require_levi()?;
    let s = check_eta(eta)?;
    finite(zeta, "zeta_hat")?;
    finite(phase, "phase")?;
    let hx = hermite_batch(n_trunc, s * x)?;
    if !check_time(t)? {
        return Ok(vec![Complex64::new(0.0, 0.0); n_trunc + 1]);
    }
    let front = -Complex64::from_polar(1.0 / (2.0 * PI), phase);
    Ok((0..=n_trunc)
        .map(|n| {
            let (re, im) = neg_i_pow(n);
            let rho = rho_unchecked(params, n, -eta, zeta);
            front * Complex64::new(re, im) * (amplitude(rho, t) * hx[n])
        })
        .collect())
}

fn eval_scaled(coef: &[Complex64], xi0: f64, eta: f64) -> Result<Complex64> {
    let h = hermite_batch(coef.len() - 1, xi0 / eta.abs().sqrt())?;
    Ok(coef.iter().zip(&h).map(|(c, h)| c * h).sum())
}

/// `𝙵₂(t, x, y; ξ₀, η̂)`.
pub fn f2(t: f64, x: f64, y: f64, xi0: f64, eta: f64, n_trunc: usize, params: &ModelParams) -> Result<Complex64> {
    if params.dim != Dim::Two {
        return Err(Error::invalid("f2 needs 2-d model parameters"));
    }
    finite(y, "y")?;
    let c = scaled_coefficients(params, t, x, y * eta, eta, 0.0, n_trunc)?;
    eval_scaled(&c, xi0, eta)
}

/// `𝙵₃(t, x, y, z; ξ₀, η̂, ζ̂)`.
#[allow(clippy::too_many_arguments)]
pub fn f3(
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    xi0: f64,
    eta: f64,
    zeta: f64,
    n_trunc: usize,
    params: &ModelParams,
) -> Result<Complex64> {
    if params.dim != Dim::Three {
        return Err(Error::invalid("f3 needs 3-d model parameters"));
    }
    finite(y, "y")?;
    finite(z, "z")?;
    let c = scaled_coefficients(params, t, x, y * eta + z * zeta, eta, zeta, n_trunc)?;
    eval_scaled(&c, xi0, eta)
}

fn e_hat(t: f64, x: f64, eta: f64, zeta: f64, x0: f64, n_trunc: usize, params: &ModelParams) -> Result<f64> {
    params.require_levi()?;
    let s = check_eta(eta)?;
    finite(zeta, "zeta")?;
    let hx = hermite_batch(n_trunc, s * x)?;
    let h0 = hermite_batch(n_trunc, s * x0)?;
    if !check_time(t)? {
        return Ok(0.0);
    }
    let sum: f64 = (0..=n_trunc)
        .map(|n| amplitude(rho_unchecked(params, n, eta, zeta), t) * h0[n] * hx[n])
        .sum();
    Ok(-s * sum)
}

/// Partially transformed 2-d kernel `Ê₂(t, x, η; x₀)`.
pub fn e2_hat(t: f64, x: f64, eta: f64, x0: f64, n_trunc: usize, params: &ModelParams) -> Result<f64> {
    if params.dim != Dim::Two {
        return Err(Error::invalid("e2_hat needs 2-d model parameters"));
    }
    e_hat(t, x, eta, 0.0, x0, n_trunc, params)
}

/// Partially transformed 3-d kernel `Ê₃(t, x, η, ζ; x₀)`.
pub fn e3_hat(t: f64, x: f64, eta: f64, zeta: f64, x0: f64, n_trunc: usize, params: &ModelParams) -> Result<f64> {
    if params.dim != Dim::Three {
        return Err(Error::invalid("e3_hat needs 3-d model parameters"));
    }
    e_hat(t, x, eta, zeta, x0, n_trunc, params)
}

/// `D t · 3 (N−1)^{-1/6}`, which majorizes `D t Σ_{n≥N} (2n+1)^{-1} n^{-1/6}`.
pub fn tail_bound(n_trunc: usize, t: f64, d_cal: f64) -> Result<f64> {
    finite(t, "t")?;
    finite(d_cal, "d_cal")?;
    if n_trunc < 2 {
        return Err(Error::invalid("tail_bound needs N >= 2"));
    }
    Ok(d_cal * t * 3.0 * ((n_trunc - 1) as f64).powf(-1.0 / 6.0))
}

/// Majorant of `Σ_{n>N} (2n+1)^{-1} n^{-1/6}`, the series left out by a
/// truncation keeping modes `0..=N`.
pub fn omitted_series_bound(n_trunc: usize) -> f64 {
    if n_trunc == 0 {
        1.0 / 3.0 + 3.0
    } else {
        3.0 * (n_trunc as f64).powf(-1.0 / 6.0)
    }
}

/// Smallest N ≥ 2 with `tail_bound(N, t, D) ≤ tol`.
pub fn choose_truncation(tol: f64, t: f64, d_cal: f64) -> Result<usize> {
    finite(tol, "tol")?;
    if tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let estimate = (1.0 + (3.0 * d_cal * t / tol).powi(6)).ceil();
    if !(estimate <= MAX_TRUNCATION) {
        return Err(Error::TruncationRefused {
            tol,
            needed: estimate,
            limit: MAX_TRUNCATION,
        });
    }
    let mut n = (estimate as usize).max(2);
    while n > 2 && tail_bound(n - 1, t, d_cal)? <= tol {
        n -= 1;
    }
    while tail_bound(n, t, d_cal)? > tol {
        n += 1;
    }
    Ok(n)
}

/// A kernel truncated after mode `n_trunc`, with its certified tail.
#[derive(Debug, Clone)]
pub struct TruncatedKernel {
    pub params: ModelParams,
    pub n_trunc: usize,
    pub horizon: f64,
    /// Calibrated sup-bound constant for modes up to `4 n_trunc`.
    pub d_cal: f64,
    /// `D t Σ_{n>N} (2n+1)^{-1} n^{-1/6}` bound: the measure-free factor of
    /// every truncation error in this crate.
    pub tail_certificate: f64,
}

impl TruncatedKernel {
    pub fn new(params: ModelParams, n_trunc: usize, horizon: f64) -> Result<Self> {
        params.require_levi()?;
        finite(horizon, "horizon")?;
        if horizon < 0.0 {
            return Err(Error::invalid("horizon must be nonnegative"));
        }
        let d_cal = calibrated_d((4 * n_trunc).max(10))?;
        Ok(Self {
            params,
            n_trunc,
            horizon,
            d_cal,
            tail_certificate: d_cal * horizon * omitted_series_bound(n_trunc),
        })
    }

    /// Truncation chosen from a tolerance on the tail certificate.
    pub fn from_tol(params: ModelParams, tol: f64, horizon: f64) -> Result<Self> {
        params.require_levi()?;
        let d = calibrated_d(1024)?;
        let n = choose_truncation(tol, horizon, d)?;
        Self::new(params, n, horizon)
    }
}
