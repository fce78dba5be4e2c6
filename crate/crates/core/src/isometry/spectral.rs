//! Frequency quadrature for the 2-d and 3-d isometry integrals.
//!
//! The time factor depends on the frequency only through the mode weight
//! `ρ = k± |η̂| + a ζ̂²` (`k± = (2n+1)μ ± b` for the two signs of η̂), so each
//! integral is rewritten as `∫ T(ρ) m(ρ) dρ` with `m` the density of the
//! frequency measure pushed forward to ρ. In 2-d `m` is explicit; in 3-d it
//! is an adaptive integral over the polar angle θ, with `θ = π/2 − ψ²`
//! removing the `cos θ^{1/2}` endpoint singularity.
//!
//! All oscillation of `T` is then in `ω = √ρ`. It is resolved by quadrature
//! up to a cap ω_c; beyond it only the phase mean of `ρT` is integrated and
//! the oscillating part is bounded by the second mean value theorem.
//! Integrands are assembled in log space so that cutoffs near 1e250 do not
//! overflow.

use std::f64::consts::PI;

use super::time::{increment_factor_times_rho, var_factor_times_rho};
use crate::error::{Error, Result};
use crate::hermite::{hermite_fn, PI_POW_NEG_QUARTER};
use crate::model::{ModelParams, SpectralMeasureSpec};
use crate::quad::{integrate_vec, uniform_edges, QuadOptions, VecQuadResult};

const LN_4PI2: f64 = 3.675_754_132_818_691; // ln(4π²)
/// Arc integral `∫₀^{π/2} cos θ^{-1/2} dθ = B(1/4, 1/2)/2`.
const ARC_INV_SQRT: f64 = 2.622_057_554_292_119_8;

/// Which second moment to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    /// `∫₀ᵗ |𝙵(t−s)|²`: the variance at time t.
    Variance { t: f64 },
    /// `∫₀ᵗ |𝙵(t−s, x+h) − 𝙵(t−s, x)|²`.
    SpaceIncrement { t: f64, h: f64 },
    /// `∫₀ᵗ |𝙵(t+h−s) − 𝙵(t−s)|²`, the J₁ part of a time increment.
    TimeIncrement { t: f64, h: f64 },
    /// `|η̂|^{1/2}/ρ` with no Hermite or time factor (q̂ₙ integrals).
    InverseRho,
}

impl Quantity {
    /// `ρ · T(ρ)` for the time factor T.
    #[inline]
    pub(crate) fn t_times_rho(&self, rho: f64) -> f64 {
        match *self {
            Quantity::Variance { t } | Quantity::SpaceIncrement { t, .. } => var_factor_times_rho(rho, t),
            Quantity::TimeIncrement { t, h } => increment_factor_times_rho(rho, t, h),
            Quantity::InverseRho => 1.0,
        }
    }

    /// Constant c with `T(ρ) ≤ c/ρ`.
    pub(crate) fn inverse_rho_constant(&self) -> f64 {
        match *self {
            Quantity::Variance { t } | Quantity::SpaceIncrement { t, .. } => t,
            Quantity::TimeIncrement { t, .. } => 4.0 * t,
            Quantity::InverseRho => 1.0,
        }
    }

    /// Bound on `T(ρ)` valid for every ρ ≥ 0 (None when unbounded).
    pub(crate) fn uniform_bound(&self) -> Option<f64> {
        match *self {
            Quantity::Variance { t } | Quantity::SpaceIncrement { t, .. } => Some(t * t * t / 3.0),
            Quantity::TimeIncrement { t, h } => Some(h * h * t),
            Quantity::InverseRho => None,
        }
    }

    /// Multiplier on `sup Ψₙ²` bounding the spatial factor.
    pub(crate) fn spatial_multiplier(&self) -> f64 {
        match self {
            Quantity::SpaceIncrement { .. } => 4.0,
            _ => 1.0,
        }
    }

    pub(crate) fn has_prefactor(&self) -> bool {
        !matches!(self, Quantity::InverseRho)
    }

    pub(crate) fn is_trivial(&self) -> bool {
        match *self {
            Quantity::Variance { t } => t <= 0.0,
            Quantity::SpaceIncrement { t, h } | Quantity::TimeIncrement { t, h } => t <= 0.0 || h == 0.0,
            Quantity::InverseRho => false,
        }
    }

    /// Mean of `ρ · T(ρ)` over all phases.
    pub(crate) fn smooth_times_rho(&self) -> f64 {
        match *self {
            Quantity::Variance { t } | Quantity::SpaceIncrement { t, .. } => 0.5 * t,
            Quantity::TimeIncrement { t, .. } => t,
            Quantity::InverseRho => 1.0,
        }
    }

    /// `ρ · T(ρ)` with the fast terms (frequencies ≥ 2t in ω = √ρ) removed.
    ///
    /// `ρV = t/2 − sin(2tω)/(4ω)` and
    /// `ρJ = t(1 − cos hω) + ω⁻¹[¼ sin 2hω − ½ sin hω] + ω⁻¹[½ sin((2t+h)ω) − ¼ sin((2t+2h)ω) − ¼ sin 2tω]`.
    pub(crate) fn slow_times_rho(&self, w: f64) -> f64 {
        match *self {
            Quantity::TimeIncrement { t, h } => {
                let hw = h * w;
                if hw < 1e-3 {
                    // t(1 − cos z) + (h/z)(¼ sin 2z − ½ sin z), z = hω
                    let z2 = hw * hw;
                    return t * z2 * (0.5 - z2 / 24.0) + h * z2 * (-0.25 + z2 / 16.0);
                }
                t * (1.0 - hw.cos()) + (0.25 * (2.0 * hw).sin() - 0.5 * hw.sin()) / w
            }
            _ => self.smooth_times_rho(),
        }
    }

    /// Order-of-magnitude envelope of `ρ · T(ρ)`, used only to set tolerances.
    pub(crate) fn envelope_times_rho(&self, w: f64) -> f64 {
        match *self {
            Quantity::TimeIncrement { t, h } => t * (0.5 * h * h * w * w).min(1.0),
            _ => self.smooth_times_rho(),
        }
    }

    /// Largest angular frequency in ω = √ρ of `ρ · T(ρ)` (0 when it does not oscillate).
    pub(crate) fn max_frequency(&self) -> f64 {
        match *self {
            Quantity::Variance { t } | Quantity::SpaceIncrement { t, .. } => 2.0 * t,
            Quantity::TimeIncrement { t, h } => 2.0 * (t + h),
            Quantity::InverseRho => 0.0,
        }
    }

    /// Frequency of the slow terms, if any.
    pub(crate) fn slow_frequency(&self) -> Option<f64> {
        match *self {
            Quantity::TimeIncrement { h, .. } => Some(h),
            _ => None,
        }
    }

    /// `B(ω)` with `|∫_{ω₀}^{ω₁} fast(ω) m(ω²) 2/ω dω| ≤ B(ω₀) m(ω₀²)` for
    /// nonincreasing m (second mean value theorem, term by term).
    pub(crate) fn fast_bound(&self, w: f64) -> f64 {
        match *self {
            Quantity::Variance { t } | Quantity::SpaceIncrement { t, .. } => 1.0 / (2.0 * t * w * w),
            Quantity::TimeIncrement { t, h } => {
                let s = 0.5 / (2.0 * t + h) + 0.25 / (2.0 * t + 2.0 * h) + 0.25 / (2.0 * t);
                4.0 * s / (w * w)
            }
            Quantity::InverseRho => 0.0,
        }
    }

    /// Same as [`Quantity::fast_bound`] for the oscillating slow terms.
    pub(crate) fn slow_bound(&self, w: f64) -> f64 {
        match *self {
            Quantity::TimeIncrement { t, h } => 4.0 * t / (w * h) + (0.5 / h + 2.0 / h) / (w * w),
            _ => 0.0,
        }
    }
}
/// One output component of the engine.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Component {
    /// Hermite index for the spatial factor.
    pub n: usize,
    pub k_plus: f64,
    pub k_minus: f64,
    /// Upper bound on the spatial factor for the analytic remainders.
    pub spatial_bound: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub rel_tol: f64,
    /// Inner edge ε of the excluded central cell.
    pub eps: f64,
    /// Initial cells on `[ln ε, ln 1e4]` of the radial (or |η̂|) partition.
    pub cells: usize,
    /// Hard ceiling on the frequency cutoff.
    pub max_cutoff: f64,
    pub max_intervals: usize,
}

impl SpectralOptions {
    /// Coarser starting grid for the nested 3-d rule; adaptivity refines it.
    pub fn polar() -> Self {
        Self {
            rel_tol: 1e-6,
            cells: 64,
            max_intervals: 20_000,
            ..Self::default()
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            eps: 1e-6,
            cells: 1024,
            max_cutoff: 1e250,
            max_intervals: 200_000,
        }
    }
}

/// Oscillations resolved by quadrature before the mean-value bound takes over.
const MAX_CYCLES: f64 = 2.0e4;
/// Radius of the initial frequency window.
const HEAD_RADIUS: f64 = 1e4;

#[derive(Debug, Clone)]
pub(crate) struct EngineOutput {
    pub values: Vec<f64>,
    pub quad_error: f64,
    pub cutoff: f64,
}

pub(crate) struct Engine<'a> {
    pub params: &'a ModelParams,
    pub spec: &'a SpectralMeasureSpec,
    pub quantity: Quantity,
    pub x: f64,
    pub comps: Vec<Component>,
    pub opts: SpectralOptions,
}

impl Engine<'_> {
    fn is_3d(&self) -> bool {
        self.params.a > 0.0
    }

    fn k_bounds(&self) -> (f64, f64) {
        let lo = self.comps.iter().map(|c| c.k_plus.min(c.k_minus)).fold(f64::INFINITY, f64::min);
        let hi = self.comps.iter().map(|c| c.k_plus.max(c.k_minus)).fold(0.0, f64::max);
        (lo, hi)
    }

    /// Largest ρ attained on the circle of radius r.
    fn rho_at(&self, r: f64) -> f64 {
        self.k_bounds().1 * r + self.params.a * r * r
    }

    /// Smallest radius on which ρ is attained.
    fn radius_for(&self, rho: f64) -> f64 {
        let k = self.k_bounds().1;
        2.0 * rho / (k + (k * k + 4.0 * self.params.a * rho).sqrt())
    }

    fn ln_prefactor(&self) -> f64 {
        let base = if self.quantity.has_prefactor() { -LN_4PI2 } else { 0.0 };
        if self.is_3d() {
            base + std::f64::consts::LN_2
        } else {
            base
        }
    }

    /// Spatial factor of mode n at scale s = |η̂|^{1/2}.
    fn spatial(&self, n: usize, s: f64) -> f64 {
        match self.quantity {
            Quantity::InverseRho => 1.0,
            Quantity::SpaceIncrement { h, .. } => {
                let d = hermite_fn(n, s * (self.x + h)).expect("finite") - hermite_fn(n, s * self.x).expect("finite");
                d * d
            }
            _ => {
                let v = hermite_fn(n, s * self.x).expect("finite");
                v * v
            }
        }
    }

    /// Mode-wise density of the push-forward of the frequency measure to ρ.
    fn density(&self, dens: &Density, rho: f64, out: &mut [f64]) {
        if self.is_3d() {
            self.density_3d(dens, rho, out)
        } else {
            self.density_2d(dens, rho, out)
        }
    }

    fn density_2d(&self, dens: &Density, rho: f64, out: &mut [f64]) {
        for (j, c) in self.comps.iter().enumerate() {
            let mut acc = 0.0;
            for k in [c.k_plus, c.k_minus] {
                let eta = rho / k;
                let lp = self.spec.ln_profile(eta);
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let x = match &dens.fixed {
                    Some(f) => f[j],
                    None => self.spatial(c.n, eta.sqrt()),
                };
                acc += (dens.pre + 0.5 * eta.ln() + lp - k.ln()).exp() * x;
            }
            out[j] = acc;
        }
    }

    fn density_3d(&self, dens: &Density, rho: f64, out: &mut [f64]) {
        let a = self.params.a;
        // θ where k r cos θ = a r² sin² θ; below it r ≈ ρ/(k cos θ) is nearly constant
        let balance = |k: f64| k.atan2((0.5 * a * rho).sqrt());
        let mut thetas: Vec<f64> = vec![balance(dens.k_lo), balance(dens.k_hi)];
        for &rk in &dens.kinks {
            for &k in &dens.ks {
                // a R² c² − k R c + (ρ − a R²) = 0
                let (qa, qb, qc) = (a * rk * rk, -k * rk, rho - a * rk * rk);
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    continue;
                }
                for c in [(-qb + disc.sqrt()) / (2.0 * qa), (-qb - disc.sqrt()) / (2.0 * qa)] {
                    if c > 0.0 && c < 1.0 {
                        thetas.push(c.acos());
                    }
                }
            }
        }
        let eval = |theta: f64, ln_jac: f64, o: &mut [f64]| {
            let (s, c) = theta.sin_cos();
            if c <= 0.0 {
                o.iter_mut().for_each(|v| *v = 0.0);
                return;
            }
            let lead = dens.pre + ln_jac;
            for (j, comp) in self.comps.iter().enumerate() {
                let mut acc = 0.0;
                for k in [comp.k_plus, comp.k_minus] {
                    let kc = k * c;
                    let r = 2.0 * rho / (kc + (kc * kc + 4.0 * a * s * s * rho).sqrt());
                    let lp = self.spec.ln_profile(r);
                    if lp == f64::NEG_INFINITY {
                        continue;
                    }
                    let rc = r * c;
                    let x = match &dens.fixed {
                        Some(f) => f[j],
                        None => self.spatial(comp.n, rc.sqrt()),
                    };
                    let jac = kc + 2.0 * a * r * s * s;
                    acc += (lead + r.ln() + 0.5 * rc.ln() + lp - jac.ln()).exp() * x;
                }
                o[j] = acc;
            }
        };
        let quarter = 0.25 * PI;

        // [θ₀, π/4] in v = ln θ, with the plateau [0, θ₀] taken at its θ₀ value
        let theta0 = 1e-12 * thetas.iter().copied().fold(quarter, f64::min);
        let mut vb: Vec<f64> = thetas.iter().filter(|&&t| t > theta0 && t < quarter).map(|t| t.ln()).collect();
        vb.extend(uniform_edges(theta0.ln(), quarter.ln(), 8));
        vb.sort_by(f64::total_cmp);
        vb.dedup();
        let low = integrate_vec(|v: f64, o: &mut [f64]| eval(v.exp(), v, o), out.len(), &vb, dens.inner);
        eval(theta0, theta0.ln(), out);
        for (o, l) in out.iter_mut().zip(&low.values) {
            *o += l;
        }

        // [π/4, π/2] in ψ = (π/2 − θ)^{1/2}
        let psi_max = quarter.sqrt();
        let mut pb = vec![0.0, psi_max];
        pb.extend(
            thetas
                .iter()
                .filter(|&&t| t > quarter && t < 0.5 * PI)
                .map(|t| (0.5 * PI - t).sqrt()),
        );
        pb.sort_by(f64::total_cmp);
        pb.dedup();
        let high = integrate_vec(
            |psi: f64, o: &mut [f64]| {
                if psi <= 0.0 {
                    o.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    eval(0.5 * PI - psi * psi, (2.0 * psi).ln(), o)
                }
            },
            out.len(),
            &pb,
            dens.inner,
        );
        for (o, h) in out.iter_mut().zip(&high.values) {
            *o += h;
        }
    }

    fn density_setup(&self) -> Density {
        let fixed = match self.quantity {
            Quantity::SpaceIncrement { .. } => None,
            Quantity::InverseRho => Some(vec![1.0; self.comps.len()]),
            _ if self.x == 0.0 => Some(self.comps.iter().map(|c| self.spatial(c.n, 0.0)).collect()),
            _ => None,
        };
        let (k_lo, k_hi) = self.k_bounds();
        let mut ks: Vec<f64> = self.comps.iter().flat_map(|c| [c.k_plus, c.k_minus]).collect();
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        Density {
            pre: self.ln_prefactor(),
            fixed,
            k_lo,
            k_hi,
            ks,
            kinks: self.spec.breakpoints(),
            inner: QuadOptions::default()
                .with_rel_tol((self.opts.rel_tol * 1e-1).max(1e-13))
                .with_max_intervals(4000),
        }
    }

    /// Analytic bound on the part of the integral with frequency radius above `cutoff`.
    fn remainder(&self, cutoff: f64) -> Option<f64> {
        let pre = if self.quantity.has_prefactor() { (-LN_4PI2).exp() } else { 1.0 };
        let c_t = self.quantity.inverse_rho_constant();
        if !self.is_3d() {
            let tm = self.spec.tail_moment(-0.5, cutoff)?;
            let s: f64 = self.comps.iter().map(|c| c.spatial_bound / c.k_plus.min(c.k_minus)).sum();
            return Some(pre * c_t * s * 2.0 * tm);
        }
        // Young: |η|^{1/2}/(k|η| + aζ²) ≤ p^p q^q k^{-p} a^{-q} |η|^{1/2-p} |ζ|^{-2q}
        // q close to 1/2 gives the fastest decay in the cutoff
        let q = match radial_decay_floor(self.spec) {
            Some(lo) if lo < 0.5 => 0.5 - (0.5 - lo) / 8.0,
            _ => return None,
        };
        let p = 1.0 - q;
        let tm = self.spec.tail_moment(0.5 - q, cutoff)?;
        let young = 4.0 * beta_factor(p, q) * p.powf(p) * q.powf(q) * self.params.a.powf(-q);
        let s: f64 = self
            .comps
            .iter()
            .map(|c| c.spatial_bound * c.k_plus.min(c.k_minus).powf(-p))
            .sum();
        Some(pre * c_t * young * s * tm)
    }

    /// Bound on the part of the integral with frequency radius below `eps`.
    fn central(&self, eps: f64) -> f64 {
        let pre = if self.quantity.has_prefactor() { (-LN_4PI2).exp() } else { 1.0 };
        let sup_w = self.spec.sup_profile(0.0, eps);
        let inv_k: f64 = self
            .comps
            .iter()
            .map(|c| c.spatial_bound / c.k_plus.min(c.k_minus))
            .sum();
        let uniform: Option<f64> = self
            .quantity
            .uniform_bound()
            .map(|tb| self.comps.iter().map(|c| c.spatial_bound * tb).sum());
        if !self.is_3d() {
            // ∫_{|η|<ε} |η|^{1/2} … ≤ X · T_max · sup w · (4/3) ε^{3/2}
            let per = uniform.unwrap_or(inv_k * 3.0 / eps);
            return pre * per * sup_w * (4.0 / 3.0) * eps.powf(1.5);
        }
        let total = match uniform {
            // ∫_{r<ε} r^{3/2} dr ∫ |cos θ|^{1/2} dθ ≤ (2/5) ε^{5/2} · 2π
            Some(u) => u * 0.4 * eps.powf(2.5) * 2.0 * PI,
            // |η|^{1/2}/ρ ≤ |η|^{-1/2}/k: ∫ r^{1/2} dr ∫ |cos θ|^{-1/2} dθ
            None => inv_k * (2.0 / 3.0) * eps.powf(1.5) * 4.0 * ARC_INV_SQRT,
        };
        pre * total * sup_w
    }

    fn run(&self) -> Result<EngineOutput> {
        let dim = self.comps.len();
        if self.quantity.is_trivial() {
            return Ok(EngineOutput { values: vec![0.0; dim], quad_error: 0.0, cutoff: 0.0 });
        }
        let dens = self.density_setup();
        let opts = QuadOptions::default()
            .with_rel_tol(self.opts.rel_tol)
            .with_max_intervals(self.opts.max_intervals);
        let eps = self.opts.eps;
        let k_lo = self.k_bounds().0;
        let rho_eps = if self.is_3d() {
            (k_lo * eps / std::f64::consts::SQRT_2).min(0.5 * self.params.a * eps * eps)
        } else {
            k_lo * eps
        };
        let support = self.spec.support_radius();
        if support.is_some_and(|s| s <= eps) {
            return Err(Error::invalid("measure support lies inside the excluded central cell"));
        }
        let support_rho = support.map(|s| self.rho_at(s));
        let mut rho_r = support_rho.unwrap_or(f64::INFINITY).min(self.rho_at(HEAD_RADIUS));

        // kinks of the 2-d density in ρ
        let kinks: Vec<f64> = if self.is_3d() {
            Vec::new()
        } else {
            dens.kinks.iter().flat_map(|&r| dens.ks.iter().map(move |&k| k * r)).collect()
        };
        let edges = |lo: f64, hi: f64, cells: usize, map: &dyn Fn(f64) -> f64| -> Vec<f64> {
            let mut e = uniform_edges(lo, hi, cells.max(1));
            e.extend(kinks.iter().map(|&k| map(k)).filter(|&k| k > lo && k < hi));
            e.sort_by(f64::total_cmp);
            e.dedup();
            e
        };
        let mut m = vec![0.0; dim];
        let quantity = self.quantity;
        let part_value = |part: Part, rho: f64| match part {
            Part::Full => quantity.t_times_rho(rho),
            Part::Slow => quantity.slow_times_rho(rho.sqrt()),
            Part::Smooth => quantity.smooth_times_rho(),
            Part::Envelope => quantity.envelope_times_rho(rho.sqrt()),
        };
        let in_u = |lo: f64, hi: f64, cells: usize, part: Part| {
            let mut m = vec![0.0; dim];
            integrate_vec(
                |u: f64, out: &mut [f64]| {
                    let rho = u.exp();
                    self.density(&dens, rho, &mut m);
                    let f = part_value(part, rho);
                    out.iter_mut().zip(&m).for_each(|(o, v)| *o = f * v);
                },
                dim,
                &edges(lo.ln(), hi.ln(), cells, &|k: f64| k.ln()),
                opts,
            )
        };
        // dρ/ρ = 2 dω/ω
        let in_w = |lo: f64, hi: f64, cells: usize, part: Part| {
            let mut m = vec![0.0; dim];
            integrate_vec(
                |w: f64, out: &mut [f64]| {
                    let rho = w * w;
                    self.density(&dens, rho, &mut m);
                    let f = part_value(part, rho) * 2.0 / w;
                    out.iter_mut().zip(&m).for_each(|(o, v)| *o = f * v);
                },
                dim,
                &edges(lo, hi, cells, &|k: f64| k.sqrt()),
                opts,
            )
        };
        let add = |acc: &mut (Vec<f64>, f64, bool), r: VecQuadResult| {
            acc.0.iter_mut().zip(&r.values).for_each(|(v, o)| *v += o);
            acc.1 += r.error;
            acc.2 &= r.converged;
        };

        let lambda = quantity.max_frequency();
        let omega_1 = if lambda > 0.0 { 4.0 * PI / lambda } else { f64::INFINITY };
        let rho_1 = (omega_1 * omega_1).min(rho_r);

        let head = in_u(rho_eps, rho_1, self.opts.cells, Part::Full);
        let mut scale: f64 = head.values.iter().sum::<f64>().abs();
        let mut acc = (vec![0.0; dim], 0.0, true);
        add(&mut acc, head);
        if rho_1 < rho_r {
            let est = in_u(rho_1, rho_r, self.opts.cells / 4, Part::Envelope);
            scale += est.values.iter().sum::<f64>().abs();
        }
        let target = 0.1 * self.opts.rel_tol * scale;

        let done = |rho: f64| support_rho.is_some_and(|s| s <= rho);
        let rest_at = |rho: f64| -> Result<f64> {
            if done(rho) {
                return Ok(0.0);
            }
            self.remainder(self.radius_for(rho))
                .ok_or_else(|| Error::Quadrature("no analytic majorant for the frequency tail of this measure".into()))
        };
        let mut rest = rest_at(rho_r)?;
        if rest > target {
            // remainders are power laws in the cutoff radius
            let r_cut = self.radius_for(rho_r);
            // ρ grows like r² in 3-d
            let ceiling = if self.is_3d() { self.opts.max_cutoff.sqrt() } else { self.opts.max_cutoff };
            let far = support.unwrap_or(ceiling).min(ceiling);
            let r2 = self.remainder(2.0 * r_cut).unwrap_or(rest);
            let slope = (rest / r2).log2().max(1e-3);
            let want = r_cut * (rest / target).powf(1.0 / slope);
            rho_r = self.rho_at(want.min(far).max(2.0 * r_cut));
            rest = rest_at(rho_r)?;
        }

        let mut fast_err = 0.0;
        let mut slow_err = 0.0;
        if lambda == 0.0 && rho_1 < rho_r {
            let len = rho_r.ln() - rho_1.ln();
            add(&mut acc, in_u(rho_1, rho_r, (2.0 * len).ceil().max(16.0) as usize, Part::Full));
        } else if rho_1 < rho_r {
            let omega_r = rho_r.sqrt();
            // sampled sup of the amplitude on [w, ∞)
            let sup_bound = |w: f64, bound: &dyn Fn(f64) -> f64, m: &mut [f64]| -> f64 {
                let mut worst: f64 = 0.0;
                for f in [1.0, 2.0, 4.0] {
                    self.density(&dens, (f * w) * (f * w), m);
                    worst = worst.max(bound(f * w) * m.iter().sum::<f64>());
                }
                worst
            };
            let ladder = |start: f64, freq: f64, bound: &dyn Fn(f64) -> f64, m: &mut [f64]| -> (f64, f64) {
                let mut w = start;
                loop {
                    if w >= omega_r {
                        return (omega_r, 0.0);
                    }
                    let b = sup_bound(w, bound, m);
                    if b <= target || freq * w / (2.0 * PI) > MAX_CYCLES {
                        return (w, b);
                    }
                    w *= 2.0;
                }
            };
            let (omega_c, fe) = ladder(omega_1, lambda, &|w| quantity.fast_bound(w), &mut m);
            fast_err = fe;
            if omega_c > omega_1 {
                let cells = ((omega_c - omega_1) * lambda / PI).ceil().max(1.0) as usize;
                add(&mut acc, in_w(omega_1, omega_c, cells, Part::Full));
            }
            let mut omega_s = omega_c;
            if let Some(hs) = quantity.slow_frequency() {
                let (w, se) = ladder(omega_c.max(2.0 * PI / hs), hs, &|w| quantity.slow_bound(w), &mut m);
                omega_s = w;
                slow_err = se;
                if omega_s > omega_c {
                    let cells = ((omega_s - omega_c) * hs / PI).ceil().max(1.0) as usize;
                    add(&mut acc, in_w(omega_c, omega_s, cells, Part::Slow));
                }
            }
            let rho_s = omega_s * omega_s;
            if rho_s < rho_r {
                let len = rho_r.ln() - rho_s.ln();
                add(&mut acc, in_u(rho_s, rho_r, (2.0 * len).ceil().max(16.0) as usize, Part::Smooth));
            }
        }

        let (values, error, converged) = acc;
        let total: f64 = values.iter().sum();
        if !converged && error > 1e-4 * total.abs() {
            return Err(Error::Quadrature(format!(
                "frequency quadrature up to rho = {rho_r:e} stopped at error {error:e} (value {total:e})"
            )));
        }
        Ok(EngineOutput {
            values,
            quad_error: error + fast_err + slow_err + rest + self.central(eps),
            cutoff: self.radius_for(rho_r),
        })
    }

    pub fn run_2d(&self) -> Result<EngineOutput> {
        self.run()
    }

    pub fn run_3d(&self) -> Result<EngineOutput> {
        self.run()
    }
}

#[derive(Clone, Copy)]
enum Part {
    Full,
    Slow,
    Smooth,
    Envelope,
}

struct Density {
    pre: f64,
    /// Spatial factors when they do not depend on the frequency.
    fixed: Option<Vec<f64>>,
    k_lo: f64,
    k_hi: f64,
    ks: Vec<f64>,
    kinks: Vec<f64>,
    inner: QuadOptions,
}

/// Smallest `q ≥ 0` with `∫^∞ r^{1/2−q} w(r²) dr` finite is `> floor`
/// (`None` if no q works, e.g. Lebesgue).
pub(crate) fn radial_decay_floor(spec: &SpectralMeasureSpec) -> Option<f64> {
    use crate::model::MeasureKind;
    match &spec.kind {
        MeasureKind::RadialPower { gamma } => Some((1.5 - 2.0 * gamma).max(0.0)),
        MeasureKind::Compact { .. } | MeasureKind::Table { .. } => Some(0.0),
        MeasureKind::PowerLaw { beta } => Some((1.5 - 2.0 * beta).max(0.0)),
        MeasureKind::Lebesgue => None,
    }
}

/// `Γ(3/4 − p/2) Γ(1/2 − q) / (2 Γ(5/4 − p/2 − q)) = ∫₀^{π/2} cos θ^{1/2−p} sin θ^{−2q} dθ`.
pub fn beta_factor(p: f64, q: f64) -> f64 {
    let g = libm::tgamma;
    g(0.75 - 0.5 * p) * g(0.5 - q) / (2.0 * g(1.25 - 0.5 * p - q))
}

/// `sup_x Ψₙ(x)²` majorant used by the analytic remainders.
pub(crate) fn psi_sq_sup(n: usize, d_cal: f64) -> f64 {
    let cramer = PI_POW_NEG_QUARTER * PI_POW_NEG_QUARTER;
    if n == 0 {
        cramer
    } else {
        cramer.min(d_cal * (n as f64).powf(-1.0 / 6.0))
    }
}
