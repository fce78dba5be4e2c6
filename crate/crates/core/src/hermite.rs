//! Normalized Hermite functions Ψₙ and the identities the kernel series use.
//!
//! Values come from the three-term recurrence for the *normalized* functions,
//!
//! ```text
//! Ψ₀(x)   = π^{-1/4} e^{-x²/2}
//! Ψ₁(x)   = √2 x Ψ₀(x)
//! Ψₙ₊₁(x) = x √(2/(n+1)) Ψₙ(x) − √(n/(n+1)) Ψₙ₋₁(x)
//! ```
//!
//! run on the polynomial part with the Gaussian factor kept in a separate
//! exponent. The polynomial part is rescaled by exact powers of two whenever
//! it grows past 2^500, so neither overflow nor premature underflow of
//! `e^{-x²/2}` can occur for large |x|. Raw Hermite polynomials Hₙ are never
//! formed.
//!
//! Fourier convention: wherever an eigenrelation is used (`ℱΨₙ = (−i)ⁿΨₙ`)
//! the transform is the unitary one, `ℱφ(ξ) = (2π)^{-1/2} ∫ e^{-ixξ} φ(x) dx`.
//! With that choice Parseval holds with constant 1, which is what every
//! kernel and isometry routine in this crate assumes.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{finite, Error, Result};

/// π^{-1/4}
pub const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;

const RESCALE_THRESHOLD: f64 = 3.273_390_607_896_142e150; // 2^500
const RESCALE_FACTOR: f64 = 3.054_936_363_499_605e-151; // 2^-500
const RESCALE_LOG: f64 = 346.573_590_279_972_6; // 500 ln 2
/// Values below this magnitude are flushed to zero.
pub const FLUSH_BELOW: f64 = 1e-300;

/// A single evaluated Hermite function value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteValue {
    pub n: usize,
    pub x: f64,
    pub value: f64,
}

/// Recurrence state: polynomial part `p` and a log-scale such that
/// `Ψₙ(x) = p · exp(log_scale − x²/2) · π^{-1/4}`.
struct Recurrence {
    x: f64,
    half_x2: f64,
    prev: f64,
    cur: f64,
    log_scale: f64,
    n: usize,
}

impl Recurrence {
    fn new(x: f64) -> Self {
        Self {
            x,
            half_x2: 0.5 * x * x,
            prev: 0.0,
            cur: 1.0,
            log_scale: 0.0,
            n: 0,
        }
    }

    fn advance(&mut self) {
        let n = self.n as f64;
        let next = if self.n == 0 {
            std::f64::consts::SQRT_2 * self.x * self.cur
        } else {
            self.x * (2.0 / (n + 1.0)).sqrt() * self.cur - (n / (n + 1.0)).sqrt() * self.prev
        };
        self.prev = self.cur;
        self.cur = next;
        self.n += 1;
        if self.cur.abs() > RESCALE_THRESHOLD {
            self.cur *= RESCALE_FACTOR;
            self.prev *= RESCALE_FACTOR;
            self.log_scale += RESCALE_LOG;
        }
    }

    fn value(&self) -> f64 {
        let p = self.cur;
        if p == 0.0 {
            return 0.0;
        }
        let expo = self.log_scale - self.half_x2;
        let g = expo.exp();
        let v = if g > 1e-290 {
            p * g * PI_POW_NEG_QUARTER
        } else {
            // combine in log space so a tiny exponent and a large `p` do not underflow separately
            p.signum() * (expo + p.abs().ln()).exp() * PI_POW_NEG_QUARTER
        };
        if v.abs() < FLUSH_BELOW {
            0.0
        } else {
            v
        }
    }
}

/// Ψₙ(x) via the normalized recurrence.
pub fn hermite_fn(n: usize, x: f64) -> Result<f64> {
    finite(x, "x")?;
    let mut r = Recurrence::new(x);
    for _ in 0..n {
        r.advance();
    }
    Ok(r.value())
}

/// Ψ₀(x), …, Ψ_{n_max}(x) from one recurrence pass.
///
/// Element `n` is bitwise identical to `hermite_fn(n, x)`.
pub fn hermite_batch(n_max: usize, x: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max + 1);
    hermite_batch_into(n_max, x, &mut out)?;
    Ok(out)
}

/// Like [`hermite_batch`] but reuses `out`'s allocation.
pub fn hermite_batch_into(n_max: usize, x: f64, out: &mut Vec<f64>) -> Result<()> {
    finite(x, "x")?;
    out.clear();
    let mut r = Recurrence::new(x);
    out.push(r.value());
    for _ in 0..n_max {
        r.advance();
        out.push(r.value());
    }
    Ok(())
}

/// Σ_{n=0}^{N} Ψₙ(x) Ψₙ(x₀): the truncated completeness (delta) kernel.
pub fn delta_partial_sum(n_trunc: usize, x: f64, x0: f64) -> Result<f64> {
    let a = hermite_batch(n_trunc, x)?;
    let b = hermite_batch(n_trunc, x0)?;
    Ok(a.iter().zip(&b).map(|(p, q)| p * q).sum())
}

/// Central-difference residual |Ψₙ″ − x²Ψₙ + (2n+1)Ψₙ| with step `h`.
pub fn mode_ode_residual(n: usize, x: f64, h: f64) -> Result<f64> {
    finite(h, "h")?;
    if h <= 0.0 {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let f0 = hermite_fn(n, x)?;
    let fp = hermite_fn(n, x + h)?;
    let fm = hermite_fn(n, x - h)?;
    let second = (fp - 2.0 * f0 + fm) / (h * h);
    Ok((second - x * x * f0 + (2.0 * n as f64 + 1.0) * f0).abs())
}

/// Empirical constants for `C n^{-1/6} < max_x Ψₙ²(x) < D n^{-1/6}`.
#[derive(Debug, Clone)]
pub struct SupBound {
    pub n_max: usize,
    pub c: f64,
    pub d: f64,
    /// `max_x Ψₙ²(x)` for n = 0..=n_max.
    pub max_sq: Vec<f64>,
}

impl SupBound {
    /// Upper bound on `Ψₙ²(x)` valid for every x (n = 0 uses the Gaussian peak).
    pub fn psi_sq_bound(&self, n: usize) -> f64 {
        if n == 0 {
            1.0 / PI.sqrt()
        } else {
            self.d * (n as f64).powf(-1.0 / 6.0)
        }
    }
}

/// Calibration is refused when the fitted D exceeds this cap; Cramér's
/// inequality bounds every Ψₙ² by about 0.67, so anything larger means the
/// recurrence has gone wrong.
pub const SUP_BOUND_SANITY_CAP: f64 = 2.0;
const CALIBRATION_MARGIN: f64 = 0.01;

/// Scans Ψₙ² on a dense grid over `0 ≤ x ≤ √(2 n_max + 1) + 5` (parity covers
/// x < 0) and refines each per-mode maximum with a parabolic step.
pub fn calibrate_sup_bound(n_max: usize) -> Result<SupBound> {
    if n_max < 10 {
        return Err(Error::invalid("calibrate_sup_bound needs n_max >= 10"));
    }
    let x_end = (2.0 * n_max as f64 + 1.0).sqrt() + 5.0;
    let step = (0.1 * PI / (2.0 * n_max as f64 + 1.0).sqrt()).min(0.02);
    let points = (x_end / step).ceil() as usize + 1;

    // per mode: (grid max, index of grid max) plus neighbours for refinement
    let mut best = vec![(0.0f64, 0usize); n_max + 1];
    let mut row = Vec::with_capacity(n_max + 1);
    for k in 0..points {
        let x = k as f64 * step;
        hermite_batch_into(n_max, x, &mut row)?;
        for (n, v) in row.iter().enumerate() {
            let sq = v * v;
            if sq > best[n].0 {
                best[n] = (sq, k);
            }
        }
    }

    let mut max_sq = vec![0.0; n_max + 1];
    for n in 0..=n_max {
        let (grid_max, k) = best[n];
        let mut m = grid_max;
        if k > 0 && k + 1 < points {
            let xs = [(k - 1) as f64 * step, k as f64 * step, (k + 1) as f64 * step];
            let ys = [
                hermite_fn(n, xs[0])?.powi(2),
                grid_max,
                hermite_fn(n, xs[2])?.powi(2),
            ];
            let denom = ys[0] - 2.0 * ys[1] + ys[2];
            if denom < 0.0 {
                let offset = 0.5 * (ys[0] - ys[2]) / denom;
                if offset.abs() <= 1.0 {
                    let xv = xs[1] + offset * step;
                    m = m.max(hermite_fn(n, xv)?.powi(2));
                }
            }
        }
        max_sq[n] = m;
    }

    let ratios = (1..=n_max).map(|n| (n as f64).powf(1.0 / 6.0) * max_sq[n]);
    let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    let c = lo * (1.0 - CALIBRATION_MARGIN);
    let d = hi * (1.0 + CALIBRATION_MARGIN);
    if !(d <= SUP_BOUND_SANITY_CAP) {
        return Err(Error::Calibration {
            d,
            cap: SUP_BOUND_SANITY_CAP,
        });
    }
    Ok(SupBound { n_max, c, d, max_sq })
}

const CACHED_N_MAX: usize = 1024;
static CALIBRATION: OnceLock<SupBound> = OnceLock::new();

/// Calibrated D covering modes 1..=n_max.
///
/// Requests up to 1024 modes share one calibration published on first use;
/// its D is valid for any smaller range. Larger requests calibrate afresh.
pub fn calibrated_d(n_max: usize) -> Result<f64> {
    if n_max <= CACHED_N_MAX {
        if let Some(cal) = CALIBRATION.get() {
            return Ok(cal.d);
        }
        let cal = calibrate_sup_bound(CACHED_N_MAX)?;
        Ok(CALIBRATION.get_or_init(|| cal).d)
    } else {
        Ok(calibrate_sup_bound(n_max)?.d)
    }
}

/// Sequence (−i)ⁿ as (re, im) pairs.
#[inline]
pub fn neg_i_pow(n: usize) -> (f64, f64) {
    match n % 4 {
        0 => (1.0, 0.0),
        1 => (0.0, -1.0),
        2 => (-1.0, 0.0),
        _ => (0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_origin() {
        assert!((hermite_fn(0, 0.0).unwrap() - PI_POW_NEG_QUARTER).abs() < 1e-15);
        assert_eq!(hermite_fn(1, 0.0).unwrap(), 0.0);
        // H₂ = 4x² − 2 → Ψ₂(0) = −2 / √(8√π)
        let expected = -1.0 / (std::f64::consts::SQRT_2 * PI.powf(0.25));
        assert!((hermite_fn(2, 0.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected + 0.531_125_966).abs() < 1e-9);
    }

    #[test]
    fn batch_matches_single_bitwise() {
        for &x in &[0.0, 0.3, -1.7, 3.5, 12.0, -49.0] {
            let b = hermite_batch(40, x).unwrap();
            for (n, v) in b.iter().enumerate() {
                assert_eq!(v.to_bits(), hermite_fn(n, x).unwrap().to_bits(), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn batch_of_zero_is_gaussian() {
        let b = hermite_batch(0, 3.5).unwrap();
        assert_eq!(b.len(), 1);
        let expected = PI_POW_NEG_QUARTER * (-6.125f64).exp();
        assert!((b[0] - expected).abs() < 1e-16);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(hermite_fn(3, f64::NAN).is_err());
        assert!(hermite_batch(3, f64::INFINITY).is_err());
        assert!(mode_ode_residual(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn far_tail_flushes_to_zero() {
        assert_eq!(hermite_fn(3, 60.0).unwrap(), 0.0);
        // inside the oscillatory region of a high mode the value is O(1)
        let v = hermite_fn(10_000, 50.0).unwrap();
        assert!(v != 0.0 && v.abs() < 1.0);
    }

    #[test]
    fn delta_sum_small_cases() {
        let v = delta_partial_sum(0, 0.0, 0.0).unwrap();
        assert!((v - 1.0 / PI.sqrt()).abs() < 1e-15);
        let a = delta_partial_sum(7, 0.4, -1.1).unwrap();
        let b = delta_partial_sum(7, -1.1, 0.4).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn calibration_rejects_small_range() {
        assert!(calibrate_sup_bound(5).is_err());
    }

    #[test]
    fn neg_i_cycle() {
        assert_eq!(neg_i_pow(0), (1.0, 0.0));
        assert_eq!(neg_i_pow(5), (0.0, -1.0));
        assert_eq!(neg_i_pow(7), (0.0, 1.0));
    }
}
