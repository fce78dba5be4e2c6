//! Numeric classification of the improper integrals that decide whether a
//! noise measure is admissible.
//!
//! Partial integrals are extended over doubling cutoffs `R, 2R, 4R, …`. The
//! integral is declared convergent once three successive increments are each
//! at most `1e-9` of the running partial, divergent once the increments have
//! failed to decrease over four successive doublings, and undecided if the
//! cutoff passes `1e300` with neither pattern.

use std::f64::consts::LN_2;

use super::measure::{ln_power_decay, SpectralMeasureSpec};
use crate::error::{Error, Result};
use crate::quad::{integrate_vec, QuadOptions};

/// First cutoff of the doubling ladder.
pub const START_CUTOFF: f64 = 1024.0;
pub const CONVERGENCE_RTOL: f64 = 1e-9;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
const CONVERGENT_RUN: usize = 3;
const DIVERGENT_RUN: usize = 4;
const MAX_CUTOFF: f64 = 1e300;
/// Number of α values tried by [`admissibility_nu3`].
pub const ALPHA_GRID_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Admissible,
    Inadmissible,
    Undecided,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Admissible => "admissible",
            Verdict::Inadmissible => "inadmissible",
            Verdict::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffStep {
    pub cutoff: f64,
    pub increment: f64,
    pub partial: f64,
}

#[derive(Debug, Clone)]
pub struct ImproperOutcome {
    /// Admissible here means "convergent".
    pub verdict: Verdict,
    /// Partial integral at the last cutoff.
    pub value: f64,
    pub trace: Vec<CutoffStep>,
}

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub verdict: Verdict,
    /// The hypothesis integral (for ν̂₃: at the witness α, or the last α tried).
    pub integral: ImproperOutcome,
    /// ν̂₂ only: `∫_{|η̂|≤1} |η̂|^{-1/2} ν̂₂(dη̂)`.
    pub origin_moment: Option<f64>,
    /// ν̂₂: `∫ |η̂|^{-1/2} ν̂₂(dη̂)`; ν̂₃: `∫₀^∞ r^{1/3+δ} w(r²) dr`.
    pub proof_moment: Option<ImproperOutcome>,
    pub witness_alpha: Option<f64>,
    pub delta: Option<f64>,
    pub alpha_trials: Vec<(f64, Verdict)>,
}

impl AdmissibilityReport {
    /// `Ok(())` when admissible, otherwise the matching error.
    pub fn require(&self) -> Result<()> {
        match self.verdict {
            Verdict::Admissible => Ok(()),
            Verdict::Inadmissible => Err(Error::Inadmissible(self.summary())),
            Verdict::Undecided => Err(Error::Undecided(self.summary())),
        }
    }

    pub fn summary(&self) -> String {
        let last = self.integral.trace.last();
        let mut s = format!("verdict {}", self.verdict.as_str());
        if let Some(step) = last {
            s += &format!(
                " (cutoff {:e}, partial {:e}, last increment {:e})",
                step.cutoff, step.partial, step.increment
            );
        }
        if let Some(a) = self.witness_alpha {
            s += &format!(", witness alpha {a}");
        }
        s
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions::default().with_rel_tol(1e-12).with_max_intervals(2000)
}

/// Classifies `∫₀^∞ f(r) dr` with the doubling rule.
///
/// `kinks` lists interior points where `f` is not smooth. The head `[0, R₀]`
/// is integrated in `v = √r`, which removes `r^{-1/2}` endpoint singularities.
pub fn classify_improper<F>(f: F, kinks: &[f64]) -> ImproperOutcome
where
    F: Fn(f64) -> f64,
{
    let mut head_breaks = vec![0.0];
    head_breaks.extend(
        kinks
            .iter()
            .filter(|&&k| k > 0.0 && k < START_CUTOFF)
            .map(|k| k.sqrt()),
    );
    head_breaks.push(START_CUTOFF.sqrt());
    head_breaks.sort_by(f64::total_cmp);
    head_breaks.dedup();
    let head = integrate_vec(
        |v, out: &mut [f64]| out[0] = if v > 0.0 { 2.0 * v * f(v * v) } else { 0.0 },
        1,
        &head_breaks,
        quad_opts(),
    );

    let mut partial = head.values[0];
    let mut trace = vec![CutoffStep {
        cutoff: START_CUTOFF,
        increment: partial,
        partial,
    }];
    if !partial.is_finite() {
        return ImproperOutcome {
            verdict: Verdict::Undecided,
            value: partial,
            trace,
        };
    }

    let mut cutoff = START_CUTOFF;
    let mut prev_inc: Option<f64> = None;
    let mut small_run = 0;
    let mut growth_run = 0;
    let verdict = loop {
        let next = 2.0 * cutoff;
        if next > MAX_CUTOFF {
            break Verdict::Undecided;
        }
        let mut breaks = vec![cutoff];
        breaks.extend(kinks.iter().copied().filter(|&k| k > cutoff && k < next));
        breaks.push(next);
        let inc = integrate_vec(|r, out: &mut [f64]| out[0] = f(r), 1, &breaks, quad_opts()).values[0];
        if !inc.is_finite() {
            break Verdict::Undecided;
        }
        partial += inc;
        cutoff = next;
        trace.push(CutoffStep {
            cutoff,
            increment: inc,
            partial,
        });

        if inc.abs() <= CONVERGENCE_RTOL * partial.abs() {
            small_run += 1;
        } else {
            small_run = 0;
        }
        match prev_inc {
            Some(p) if inc > 0.0 && inc >= p * (1.0 - 1e-9) => growth_run += 1,
            _ => growth_run = 0,
        }
        prev_inc = Some(inc);

        if small_run >= CONVERGENT_RUN {
            break Verdict::Admissible;
        }
        if growth_run >= DIVERGENT_RUN {
            break Verdict::Inadmissible;
        }
    };
    ImproperOutcome {
        verdict,
        value: partial,
        trace,
    }
}

/// Checks `∫ (1 + |η̂|^{1/2})^{-1} ν̂₂(dη̂) < ∞`.
///
/// Also reports `∫ |η̂|^{-1/2} ν̂₂(dη̂)`, which the variance bound needs near
/// η̂ = 0 and which is not implied by the condition above.
pub fn admissibility_nu2(spec: &SpectralMeasureSpec) -> Result<AdmissibilityReport> {
    if spec.dim_hat != 1 {
        return Err(Error::invalid("admissibility_nu2 needs a dim_hat = 1 measure"));
    }
    let kinks = spec.breakpoints();
    // even measure: both half-lines
    let integral = classify_improper(|r| (LN_2 - r.sqrt().ln_1p() + spec.ln_profile(r)).exp(), &kinks);

    let mut origin_breaks = vec![0.0];
    origin_breaks.extend(kinks.iter().filter(|&&k| k < 1.0).map(|k| k.sqrt()));
    origin_breaks.push(1.0);
    let origin = integrate_vec(
        |v, out: &mut [f64]| out[0] = 4.0 * spec.profile(v * v),
        1,
        &origin_breaks,
        quad_opts(),
    )
    .values[0];
    let k_moment = classify_improper(
        |r| if r > 0.0 { (LN_2 - 0.5 * r.ln() + spec.ln_profile(r)).exp() } else { 0.0 },
        &kinks,
    );

    Ok(AdmissibilityReport {
        verdict: integral.verdict,
        integral,
        origin_moment: Some(origin),
        proof_moment: Some(k_moment),
        witness_alpha: None,
        delta: None,
        alpha_trials: Vec::new(),
    })
}

/// Searches `α_j = j/99, j = 1..=32` for the smallest α < 1/3 with
/// `∫ (1 + |η̂|² + |ζ̂|²)^{-α} ν̂₃ < ∞`.
pub fn admissibility_nu3(spec: &SpectralMeasureSpec) -> Result<AdmissibilityReport> {
    if spec.dim_hat != 2 {
        return Err(Error::invalid("admissibility_nu3 needs a dim_hat = 2 radial measure"));
    }
    let kinks = spec.breakpoints();
    let mut trials = Vec::with_capacity(ALPHA_GRID_LEN);
    let mut witness = None;
    let mut last = None;
    for j in 1..=ALPHA_GRID_LEN {
        let alpha = j as f64 / 99.0;
        let out = classify_improper(
            |r| (LN_2PI + r.ln() + ln_power_decay(r, alpha) + spec.ln_profile(r)).exp(),
            &kinks,
        );
        trials.push((alpha, out.verdict));
        let hit = out.verdict == Verdict::Admissible;
        last = Some(out);
        if hit {
            witness = Some(alpha);
            break;
        }
    }
    let integral = last.expect("alpha grid is nonempty");
    let verdict = if witness.is_some() {
        Verdict::Admissible
    } else if trials.iter().any(|t| t.1 == Verdict::Undecided) {
        Verdict::Undecided
    } else {
        Verdict::Inadmissible
    };

    let (delta, proof_moment) = match witness {
        Some(alpha) => {
            let delta = (2.0 / 3.0 - 2.0 * alpha).min(1.0 / 12.0);
            let m = classify_improper(
                |r| ((1.0 / 3.0 + delta) * r.ln() + spec.ln_profile(r)).exp(),
                &kinks,
            );
            (Some(delta), Some(m))
        }
        None => (None, None),
    };

    Ok(AdmissibilityReport {
        verdict,
        integral,
        origin_moment: None,
        proof_moment,
        witness_alpha: witness,
        delta,
        alpha_trials: trials,
    })
}
