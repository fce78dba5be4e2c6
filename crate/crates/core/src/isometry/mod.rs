//! Second moments of the random field solutions via the isometry.
//!
//! Every report is a sum over Hermite modes. Time integrals are closed form
//! (see [`time`]); only frequency integrals are numeric.

mod spectral;
pub mod time;

use std::f64::consts::PI;

pub use spectral::{beta_factor, Quantity, SpectralOptions};

use crate::error::{finite, Error, Result};
use crate::hermite::{calibrated_d, hermite_batch};
use crate::kernels::{amplitude, omitted_series_bound};
use crate::model::{
    admissibility_nu2, admissibility_nu3, rho_unchecked, Dim, ModelParams, SpectralMeasureSpec,
};
use spectral::{psi_sq_sup, radial_decay_floor, Component, Engine};
use time::{increment_factor, var_factor};

/// A space-time evaluation point. Unused coordinates are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Probe {
    pub fn new(t: f64, x: f64) -> Self {
        Self { t, x, y: 0.0, z: 0.0 }
    }

    pub fn with_yz(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }
}

/// How the mode-truncation bound depends on the truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `scale · Σ_{n>N} (2n+1)^{-1} n^{-1/6}` majorant.
    Series { scale: f64 },
    /// `scale · Σ_{n>N} n^{-1/6-p}` majorant (3-d).
    Young { scale: f64, p: f64 },
    Unavailable,
}

impl TailModel {
    /// Bound on the contribution of every mode above `n_trunc`.
    pub fn bound(&self, n_trunc: usize) -> f64 {
        match *self {
            TailModel::Series { scale } => scale * omitted_series_bound(n_trunc),
            TailModel::Young { scale, p } => {
                let e = p - 5.0 / 6.0;
                let sum = if n_trunc == 0 {
                    1.0 + 1.0 / e
                } else {
                    (n_trunc as f64).powf(-e) / e
                };
                scale * sum
            }
            TailModel::Unavailable => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub params: ModelParams,
    pub measure: Option<SpectralMeasureSpec>,
    pub probe: Probe,
    pub n_trunc: usize,
    pub value: f64,
    pub per_mode: Vec<f64>,
    pub quad_error: f64,
    pub tail_error: f64,
    /// The n = 0 contribution.
    pub t0: f64,
    pub d_cal: f64,
    /// Frequency cutoff used by the quadrature (0 for the 1-d model).
    pub cutoff: f64,
    pub tail_model: TailModel,
}

/// One row of the per-mode table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRow {
    pub n: usize,
    pub contribution: f64,
    pub cumulative: f64,
    pub tail_bound: f64,
}

impl VarianceReport {
    pub fn mode_rows(&self) -> Vec<ModeRow> {
        let mut cumulative = 0.0;
        self.per_mode
            .iter()
            .enumerate()
            .map(|(n, &c)| {
                cumulative += c;
                ModeRow {
                    n,
                    contribution: c,
                    cumulative,
                    tail_bound: self.tail_model.bound(n),
                }
            })
            .collect()
    }
}

fn check_probe(p: &Probe) -> Result<()> {
    finite(p.t, "t")?;
    finite(p.x, "x")?;
    finite(p.y, "y")?;
    finite(p.z, "z")?;
    if p.t < 0.0 {
        return Err(Error::invalid("probe time must be nonnegative"));
    }
    Ok(())
}

fn d_for(n_trunc: usize) -> Result<f64> {
    calibrated_d((4 * n_trunc).max(10))
}

fn total(per_mode: &[f64]) -> f64 {
    per_mode.iter().sum()
}

/// Variance of u₁(t, x) from modes `0..=n_trunc`.
pub fn variance_1d(t: f64, x: f64, n_trunc: usize) -> Result<VarianceReport> {
    let probe = Probe::new(t, x);
    check_probe(&probe)?;
    let h = hermite_batch(n_trunc, x)?;
    let per_mode: Vec<f64> = (0..=n_trunc)
        .map(|n| h[n] * h[n] * var_factor((2 * n + 1) as f64, t))
        .collect();
    let d_cal = d_for(n_trunc)?;
    let tail_model = TailModel::Series { scale: d_cal * t };
    Ok(VarianceReport {
        params: ModelParams::one_dim(),
        measure: None,
        probe,
        n_trunc,
        value: total(&per_mode),
        t0: per_mode[0],
        per_mode,
        quad_error: 0.0,
        tail_error: tail_model.bound(n_trunc),
        d_cal,
        cutoff: 0.0,
        tail_model,
    })
}

fn mode_components(params: &ModelParams, n_trunc: usize, multiplier: f64, d_cal: f64) -> Vec<Component> {
    (0..=n_trunc)
        .map(|n| {
            let base = (2 * n + 1) as f64 * params.mu;
            Component {
                n,
                k_plus: base + params.b,
                k_minus: base - params.b,
                spatial_bound: multiplier * psi_sq_sup(n, d_cal),
            }
        })
        .collect()
}

/// Result of a frequency-integrated mode sum.
#[derive(Debug, Clone)]
pub struct SpectralSum {
    pub per_mode: Vec<f64>,
    pub quad_error: f64,
    pub tail_model: TailModel,
    pub d_cal: f64,
    pub cutoff: f64,
}

impl SpectralSum {
    pub fn value(&self) -> f64 {
        total(&self.per_mode)
    }
}

fn series_1d(quantity: Quantity, x: f64, n_trunc: usize) -> Result<SpectralSum> {
    let h0 = hermite_batch(n_trunc, x)?;
    let h1 = match quantity {
        Quantity::SpaceIncrement { h, .. } => Some(hermite_batch(n_trunc, x + h)?),
        _ => None,
    };
    let per_mode = (0..=n_trunc)
        .map(|n| {
            let rho = (2 * n + 1) as f64;
            let spatial = match &h1 {
                Some(h1) => (h1[n] - h0[n]).powi(2),
                None => h0[n] * h0[n],
            };
            let time = match quantity {
                Quantity::Variance { t } | Quantity::SpaceIncrement { t, .. } => var_factor(rho, t),
                Quantity::TimeIncrement { t, h } => increment_factor(rho, t, h),
                Quantity::InverseRho => 1.0 / rho,
            };
            spatial * time
        })
        .collect();
    let d_cal = d_for(n_trunc)?;
    let c = quantity.inverse_rho_constant() * quantity.spatial_multiplier();
    Ok(SpectralSum {
        per_mode,
        quad_error: 0.0,
        tail_model: TailModel::Series { scale: d_cal * c },
        d_cal,
        cutoff: 0.0,
    })
}

/// The mode sum of `quantity` at position x for any model dimension.
///
/// For dims 2 and 3 the measure must pass its admissibility check and the
/// parameters the Levi gate.
pub fn spectral_sum(
    quantity: Quantity,
    x: f64,
    n_trunc: usize,
    params: &ModelParams,
    spec: Option<&SpectralMeasureSpec>,
    opts: SpectralOptions,
) -> Result<SpectralSum> {
    finite(x, "x")?;
    params.require_levi()?;
    if params.dim == Dim::One {
        return series_1d(quantity, x, n_trunc);
    }
    let spec = spec.ok_or_else(|| Error::invalid("the 2-d and 3-d models need a noise measure"))?;
    if spec.dim_hat != params.dim.dim_hat() {
        return Err(Error::invalid(format!(
            "a {}-d model needs a dim_hat = {} measure",
            params.dim.as_u8(),
            params.dim.dim_hat()
        )));
    }
    let d_cal = d_for(n_trunc)?;
    let comps = mode_components(params, n_trunc, quantity.spatial_multiplier(), d_cal);
    let engine = Engine {
        params,
        spec,
        quantity,
        x,
        comps,
        opts,
    };
    let c = quantity.inverse_rho_constant() * quantity.spatial_multiplier();
    let eps_b = params.levi_margin();
    let (out, tail_model) = match params.dim {
        Dim::Two => {
            let adm = admissibility_nu2(spec)?;
            adm.require()?;
            let out = engine.run_2d()?;
            // Σ_{n>N} ≤ (K / 4π² ε_b) · c D Σ (2n+1)^{-1} n^{-1/6}
            let tail = match adm.proof_moment.as_ref() {
                Some(k) if k.verdict == crate::model::Verdict::Admissible => TailModel::Series {
                    scale: k.value / (4.0 * PI * PI * eps_b) * c * d_cal,
                },
                _ => TailModel::Unavailable,
            };
            (out, tail)
        }
        Dim::Three => {
            admissibility_nu3(spec)?.require()?;
            let out = engine.run_3d()?;
            (out, young_tail_model(params, spec, c * d_cal)?)
        }
        Dim::One => unreachable!(),
    };
    Ok(SpectralSum {
        per_mode: out.values,
        quad_error: out.quad_error,
        tail_model,
        d_cal,
        cutoff: out.cutoff,
    })
}

/// Exponent q used for the mode tail bound in 3-d: the midpoint of the
/// interval allowed by the measure's decay and by p = 1 − q > 5/6.
fn mode_tail_q(spec: &SpectralMeasureSpec) -> Option<f64> {
    let lo = radial_decay_floor(spec)?;
    (lo < 1.0 / 6.0).then(|| 0.5 * (lo + 1.0 / 6.0))
}

/// `∫₀^∞ r^{p} w(r²) dr` with an analytic tail beyond 1e8.
fn radial_moment(spec: &SpectralMeasureSpec, p: f64) -> Result<f64> {
    use crate::quad::{integrate_vec, QuadOptions};
    let far = spec.support_radius().unwrap_or(1e8).min(1e8);
    let opts = QuadOptions::default().with_rel_tol(1e-10).with_max_intervals(20_000);
    // v = √r on [0, 1], u = ln r beyond
    let mut vb = vec![0.0];
    vb.extend(spec.breakpoints().iter().filter(|&&k| k < 1.0).map(|k| k.sqrt()));
    vb.push(far.min(1.0).sqrt());
    let head = integrate_vec(
        |v, o: &mut [f64]| o[0] = if v > 0.0 { 2.0 * v * (v * v).powf(p) * spec.profile(v * v) } else { 0.0 },
        1,
        &vb,
        opts,
    );
    let mut value = head.values[0];
    if far > 1.0 {
        let mut ub: Vec<f64> = crate::quad::uniform_edges(0.0, far.ln(), 64);
        ub.extend(spec.breakpoints().iter().filter(|&&k| k > 1.0 && k < far).map(|k| k.ln()));
        ub.sort_by(f64::total_cmp);
        let body = integrate_vec(
            |u, o: &mut [f64]| o[0] = ((p + 1.0) * u + spec.ln_profile(u.exp())).exp(),
            1,
            &ub,
            opts,
        );
        value += body.values[0];
    }
    let tail = spec
        .tail_moment(p, far)
        .ok_or_else(|| Error::Quadrature(format!("radial moment of order {p} diverges")))?;
    Ok(value + tail)
}

fn young_tail_model(params: &ModelParams, spec: &SpectralMeasureSpec, scale: f64) -> Result<TailModel> {
    let Some(q) = mode_tail_q(spec) else {
        return Ok(TailModel::Unavailable);
    };
    let p = 1.0 - q;
    let m = radial_moment(spec, 0.5 - q)?;
    // q̂ₙ ≤ 4 B(p,q) pᵖ q^q (2nμ)^{-p} a^{-q} M_q
    let young = 4.0 * beta_factor(p, q) * p.powf(p) * q.powf(q) * (2.0 * params.mu).powf(-p) * params.a.powf(-q) * m;
    Ok(TailModel::Young {
        scale: scale * young / (4.0 * PI * PI),
        p,
    })
}

fn report_from_sum(
    sum: SpectralSum,
    params: &ModelParams,
    spec: Option<&SpectralMeasureSpec>,
    probe: Probe,
    n_trunc: usize,
) -> VarianceReport {
    VarianceReport {
        params: *params,
        measure: spec.cloned(),
        probe,
        n_trunc,
        value: sum.value(),
        t0: sum.per_mode[0],
        tail_error: sum.tail_model.bound(n_trunc),
        per_mode: sum.per_mode,
        quad_error: sum.quad_error,
        d_cal: sum.d_cal,
        cutoff: sum.cutoff,
        tail_model: sum.tail_model,
    }
}

/// Variance of u₂(t, x, y). Independent of y.
pub fn variance_2d(
    t: f64,
    x: f64,
    y: f64,
    n_trunc: usize,
    params: &ModelParams,
    spec: &SpectralMeasureSpec,
) -> Result<VarianceReport> {
    variance_2d_with(t, x, y, n_trunc, params, spec, SpectralOptions::default())
}

pub fn variance_2d_with(
    t: f64,
    x: f64,
    y: f64,
    n_trunc: usize,
    params: &ModelParams,
    spec: &SpectralMeasureSpec,
    opts: SpectralOptions,
) -> Result<VarianceReport> {
    if params.dim != Dim::Two {
        return Err(Error::invalid("variance_2d needs 2-d model parameters"));
    }
    let probe = Probe::with_yz(t, x, y, 0.0);
    check_probe(&probe)?;
    let sum = spectral_sum(Quantity::Variance { t }, x, n_trunc, params, Some(spec), opts)?;
    Ok(report_from_sum(sum, params, Some(spec), probe, n_trunc))
}

/// Variance of u₃(t, x, y, z). Independent of (y, z).
pub fn variance_3d(
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    n_trunc: usize,
    params: &ModelParams,
    spec: &SpectralMeasureSpec,
) -> Result<VarianceReport> {
    variance_3d_with(t, x, y, z, n_trunc, params, spec, SpectralOptions::polar())
}

#[allow(clippy::too_many_arguments)]
pub fn variance_3d_with(
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    n_trunc: usize,
    params: &ModelParams,
    spec: &SpectralMeasureSpec,
    opts: SpectralOptions,
) -> Result<VarianceReport> {
    if params.dim != Dim::Three {
        return Err(Error::invalid("variance_3d needs 3-d model parameters"));
    }
    let probe = Probe::with_yz(t, x, y, z);
    check_probe(&probe)?;
    let sum = spectral_sum(Quantity::Variance { t }, x, n_trunc, params, Some(spec), opts)?;
    Ok(report_from_sum(sum, params, Some(spec), probe, n_trunc))
}

/// Variance at any dimension, dispatching on `params.dim`.
pub fn variance(
    probe: Probe,
    n_trunc: usize,
    params: &ModelParams,
    spec: Option<&SpectralMeasureSpec>,
    opts: Option<SpectralOptions>,
) -> Result<VarianceReport> {
    match params.dim {
        Dim::One => variance_1d(probe.t, probe.x, n_trunc),
        Dim::Two => {
            let spec = spec.ok_or_else(|| Error::invalid("the 2-d model needs a noise measure"))?;
            variance_2d_with(probe.t, probe.x, probe.y, n_trunc, params, spec, opts.unwrap_or_default())
        }
        Dim::Three => {
            let spec = spec.ok_or_else(|| Error::invalid("the 3-d model needs a noise measure"))?;
            let opts = opts.unwrap_or_else(SpectralOptions::polar);
            variance_3d_with(probe.t, probe.x, probe.y, probe.z, n_trunc, params, spec, opts)
        }
    }
}

/// `q̂ₙ = ∫ |η̂|^{1/2} / ρₙ(−η̂, ζ̂) ν̂₃(dη̂, dζ̂)` for each requested n.
pub fn qn_integrals(ns: &[usize], params: &ModelParams, spec: &SpectralMeasureSpec) -> Result<Vec<f64>> {
    let ks: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let base = (2 * n + 1) as f64 * params.mu;
            (base + params.b, base - params.b)
        })
        .collect();
    qhat_with_weights(&ks, params, spec)
}

pub fn qn_integral(n: usize, params: &ModelParams, spec: &SpectralMeasureSpec) -> Result<f64> {
    Ok(qn_integrals(&[n], params, spec)?[0])
}

/// `∫ |η̂|^{1/2} / (k_± |η̂| + a ζ̂²) ν̂₃`, where k₊ applies for η̂ > 0.
fn qhat_with_weights(ks: &[(f64, f64)], params: &ModelParams, spec: &SpectralMeasureSpec) -> Result<Vec<f64>> {
    if params.dim != Dim::Three {
        return Err(Error::invalid("q-hat integrals need 3-d model parameters"));
    }
    params.require_levi()?;
    if spec.dim_hat != 2 {
        return Err(Error::invalid("q-hat integrals need a dim_hat = 2 measure"));
    }
    admissibility_nu3(spec)?.require()?;
    let comps = ks
        .iter()
        .map(|&(k_plus, k_minus)| Component {
            n: 0,
            k_plus,
            k_minus,
            spatial_bound: 1.0,
        })
        .collect();
    let engine = Engine {
        params,
        spec,
        quantity: Quantity::InverseRho,
        x: 0.0,
        comps,
        opts: SpectralOptions::polar().with_rel_tol(1e-9),
    };
    Ok(engine.run_3d()?.values)
}

/// Majorant of the n = 0 term: `t/(4π^{9/4} ε_b) ∫ |η̂|^{-1/2} ν̂₂` in 2-d and
/// `t/(4π^{9/4}) ∫ |η̂|^{1/2}/(aζ̂² + ε_b|η̂|) ν̂₃` in 3-d.
pub fn t0_bound(t: f64, params: &ModelParams, spec: &SpectralMeasureSpec) -> Result<f64> {
    let front = t / (4.0 * PI.powf(2.25));
    let eps_b = params.levi_margin();
    match params.dim {
        Dim::Two => {
            let adm = admissibility_nu2(spec)?;
            match adm.proof_moment {
                Some(k) if k.verdict == crate::model::Verdict::Admissible => Ok(front * k.value / eps_b),
                _ => Err(Error::Undecided(
                    "the moment of |eta|^(-1/2) under the measure is not finite".into(),
                )),
            }
        }
        Dim::Three => Ok(front * qhat_with_weights(&[(eps_b, eps_b)], params, spec)?[0]),
        Dim::One => Err(Error::invalid("t0_bound applies to the 2-d and 3-d models")),
    }
}

/// `S₁(t, x, h) = Σ A(2n+1, t)² (Ψₙ(x+h) − Ψₙ(x))²`.
pub fn continuity_modulus_1d(t: f64, x: f64, h: f64, n_trunc: usize) -> Result<f64> {
    finite(h, "h")?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let a = hermite_batch(n_trunc, x)?;
    let b = hermite_batch(n_trunc, x + h)?;
    Ok((0..=n_trunc)
        .map(|n| amplitude((2 * n + 1) as f64, t.max(0.0)).powi(2) * (b[n] - a[n]).powi(2))
        .sum())
}

/// `S₃(t, η̂, ζ̂, x, h) = Σ A(ρₙ(−η̂, ζ̂), t)² (Ψₙ(|η̂|^{1/2}(x+h)) − Ψₙ(|η̂|^{1/2}x))²`.
#[allow(clippy::too_many_arguments)]
pub fn continuity_modulus_3d(
    t: f64,
    x: f64,
    h: f64,
    n_trunc: usize,
    eta: f64,
    zeta: f64,
    params: &ModelParams,
) -> Result<f64> {
    params.require_levi()?;
    finite(h, "h")?;
    finite(eta, "eta")?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let s = eta.abs().sqrt();
    let a = hermite_batch(n_trunc, s * x)?;
    let b = hermite_batch(n_trunc, s * (x + h))?;
    Ok((0..=n_trunc)
        .map(|n| amplitude(rho_unchecked(params, n, -eta, zeta), t.max(0.0)).powi(2) * (b[n] - a[n]).powi(2))
        .sum())
}

/// `S′(t, x, h) = Σ (A(ρₙ, t+h) − A(ρₙ, t))² Ψₙ(x)²` in 1-d (first power of ρ).
pub fn time_modulus_1d(t: f64, x: f64, h: f64, n_trunc: usize) -> Result<f64> {
    finite(h, "h")?;
    let a = hermite_batch(n_trunc, x)?;
    Ok((0..=n_trunc)
        .map(|n| {
            let rho = (2 * n + 1) as f64;
            (amplitude(rho, (t + h).max(0.0)) - amplitude(rho, t.max(0.0))).powi(2) * a[n] * a[n]
        })
        .sum())
}

/// Second moments of field increments at a probe.
#[derive(Debug, Clone)]
pub struct IncrementMoments {
    /// `E|u(t, x+h) − u(t, x)|²`.
    pub space: f64,
    /// `∫₀ᵗ ∫ |𝙵(t+h−s) − 𝙵(t−s)|²`.
    pub j1: f64,
    /// `∫_t^{t+h} ∫ |𝙵(t+h−s)|²`, equal to the variance at time h.
    pub j2: f64,
    pub quad_error: f64,
}

/// Increment moments for `h_time` in time and `h_space` in x.
pub fn increment_moments(
    probe: Probe,
    h_time: f64,
    h_space: f64,
    n_trunc: usize,
    params: &ModelParams,
    spec: Option<&SpectralMeasureSpec>,
    opts: Option<SpectralOptions>,
) -> Result<IncrementMoments> {
    check_probe(&probe)?;
    finite(h_time, "h_time")?;
    finite(h_space, "h_space")?;
    if h_time < 0.0 {
        return Err(Error::invalid("time increment must be nonnegative"));
    }
    let opts = opts.unwrap_or(match params.dim {
        Dim::Three => SpectralOptions::polar(),
        _ => SpectralOptions::default(),
    });
    let t = probe.t;
    let run = |q: Quantity| -> Result<(f64, f64)> {
        let s = spectral_sum(q, probe.x, n_trunc, params, spec, opts)?;
        Ok((s.value(), s.quad_error))
    };
    let (space, e0) = if h_space == 0.0 {
        (0.0, 0.0)
    } else {
        run(Quantity::SpaceIncrement { t, h: h_space })?
    };
    let (j1, j2, e1, e2) = if h_time == 0.0 {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let (j1, e1) = run(Quantity::TimeIncrement { t, h: h_time })?;
        let (j2, e2) = run(Quantity::Variance { t: h_time })?;
        (j1, j2, e1, e2)
    };
    Ok(IncrementMoments {
        space,
        j1,
        j2,
        quad_error: e0 + e1 + e2,
    })
}

/// `D t (π^{-1/2} + Σ_{n≥1} (2n+1)^{-1} n^{-1/6})`, the finiteness bound for the 1-d variance.
pub fn lemma_bound_1d(t: f64, d_cal: f64) -> f64 {
    d_cal * t * (1.0 / PI.sqrt() + lemma_series())
}

/// Upper bound on `Σ_{n≥1} (2n+1)^{-1} n^{-1/6}`: exact partial sum to 10⁶
/// plus the integral of the decreasing summand beyond.
pub fn lemma_series() -> f64 {
    const M: usize = 1_000_000;
    let partial: f64 = (1..=M).rev().map(|n| 1.0 / ((2 * n + 1) as f64 * (n as f64).powf(1.0 / 6.0))).sum();
    // ∫_M^∞ dx / ((2x+1) x^{1/6}) in u = ln x
    let tail = crate::quad::integrate(
        |u| {
            let x = u.exp();
            x / ((2.0 * x + 1.0) * x.powf(1.0 / 6.0))
        },
        (M as f64).ln(),
        (M as f64).ln() + 400.0,
        crate::quad::QuadOptions::default().with_rel_tol(1e-12),
    );
    partial + tail.value + tail.error
}

/// Least-squares slope of `ln y` against `ln n`, with the RMS residual.
pub fn fit_log_slope(ns: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = ns.len() as f64;
    let lx: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let rms = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    (slope, rms)
}
