//! Spectral synthesis of the noise and Monte Carlo sampling of the random
//! field solutions.
//!
//! The noise is discretized on a frequency grid whose cells come in `±`
//! pairs; only the positive representative of each pair is stored. On each
//! time sub-step the sampler draws independent Gaussians, forms the spectral
//! increments and accumulates `Σ 𝙵(t − s_mid, probe; cell) ΔŴ(cell)` for
//! every probe.
//!
//! In the 1-d model the `ξ₀` axis is cut into Lebesgue cells on `[−R₀, R₀]`.
//! In the 2-d and 3-d models the noise is Lebesgue in `ξ₀` and the scaled
//! Hermite functions `Ψₙ(ξ₀/|η̂|^{1/2})` are orthogonal there, so the `ξ₀`
//! integral is carried out exactly by drawing one increment per mode and
//! `(η̂, ζ̂)` cell.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{finite, Error, Result};
use crate::hermite::{hermite_batch, hermite_fn};
use crate::isometry::{variance, Probe};
use crate::kernels::{f1_coefficients, scaled_coefficients, TruncatedKernel};
use crate::model::{admissibility_nu2, admissibility_nu3, Dim, MeasureKind, SpectralMeasureSpec};
use crate::quad::{geometric_edges, integrate, pairwise_sum, QuadOptions};

/// Largest acceptable fraction of the weighted spectral mass left off the grid.
pub const TAIL_FRACTION_TARGET: f64 = 1e-3;
/// Empirical variance above this multiple of the grid oracle aborts a run.
pub const BLOWUP_FACTOR: f64 = 10.0;
/// Largest tolerated imaginary part of a sample that should be real.
pub const REALITY_TOLERANCE: f64 = 1e-10;

/// `R₀ = √(2N+1) + 10`, the default `ξ₀` cutoff of the 1-d grid.
pub fn default_xi_cutoff(n_trunc: usize) -> f64 {
    ((2 * n_trunc + 1) as f64).sqrt() + 10.0
}

/// Positive representative of a `±` cell pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCell {
    /// `(ξ₀, 0)` in 1-d, `(η̂, 0)` in 2-d, `(η̂, ζ̂)` in 3-d; the first
    /// coordinate is always positive.
    pub freq: [f64; 2],
    /// Measure of one cell of the pair.
    pub mass: f64,
}

/// Geometry of a noise grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    /// `R₀` in 1-d, the largest `|η̂|` or `(η̂² + ζ̂²)^{1/2}` otherwise.
    pub cutoff: f64,
    /// Smallest radius covered in 2-d and 3-d; ignored in 1-d.
    pub inner: f64,
    /// Cells per half-line (1-d, 2-d) or radial cells (3-d).
    pub cells: usize,
    /// Angular cells over the half-plane η̂ > 0 (3-d only).
    pub angular: usize,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
}

impl GridShape {
    pub fn new(cutoff: f64, cells: usize, dt: f64, steps: usize, seed: u64) -> Self {
        Self {
            cutoff,
            inner: 1e-6,
            cells,
            angular: 32,
            dt,
            steps,
            seed,
        }
    }

    pub fn with_inner(mut self, inner: f64) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_angular(mut self, angular: usize) -> Self {
        self.angular = angular;
        self
    }
}

#[derive(Debug, Clone)]
pub struct NoiseGrid {
    pub dim: Dim,
    pub spec: SpectralMeasureSpec,
    pub shape: GridShape,
    pub cells: Vec<NoiseCell>,
    /// Mass of the grid support counting both cells of every pair.
    pub total_mass: f64,
    /// Weighted mass off the grid as a fraction of the weighted total.
    pub tail_fraction: f64,
}

impl NoiseGrid {
    pub fn dt(&self) -> f64 {
        self.shape.dt
    }

    pub fn steps(&self) -> usize {
        self.shape.steps
    }

    pub fn seed(&self) -> u64 {
        self.shape.seed
    }

    pub fn horizon(&self) -> f64 {
        self.shape.dt * self.shape.steps as f64
    }

    pub fn tail_ok(&self) -> bool {
        self.tail_fraction < TAIL_FRACTION_TARGET
    }
}

fn check_shape(shape: &GridShape) -> Result<()> {
    finite(shape.cutoff, "cutoff")?;
    finite(shape.dt, "dt")?;
    finite(shape.inner, "inner")?;
    if shape.cutoff <= 0.0 {
        return Err(Error::invalid("grid cutoff must be positive"));
    }
    if shape.dt <= 0.0 || shape.steps == 0 {
        return Err(Error::invalid("grid needs dt > 0 and at least one step"));
    }
    if shape.cells == 0 {
        return Err(Error::invalid("grid needs at least one cell"));
    }
    Ok(())
}

/// Radial edges on `[inner, cutoff]` refined at the profile breakpoints.
fn radial_edges(spec: &SpectralMeasureSpec, shape: &GridShape) -> Result<Vec<f64>> {
    if !(shape.inner > 0.0 && shape.inner < shape.cutoff) {
        return Err(Error::invalid("grid needs 0 < inner < cutoff"));
    }
    let mut edges = geometric_edges(shape.inner, shape.cutoff, shape.cells);
    edges.extend(
        spec.breakpoints()
            .into_iter()
            .filter(|&r| r > shape.inner && r < shape.cutoff),
    );
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    Ok(edges)
}

/// Weighted mass `∫ r^p f(r) dr` over `[0, inner]`, bounded by the sup of
/// the profile.
fn inner_moment(spec: &SpectralMeasureSpec, inner: f64, p: f64) -> f64 {
    spec.sup_profile(0.0, inner) * inner.powf(p + 1.0) / (p + 1.0)
}

fn tail_fraction(spec: &SpectralMeasureSpec, edges: &[f64], p: f64) -> f64 {
    let on_grid = pairwise_sum(
        &edges
            .windows(2)
            .map(|w| {
                let r = 0.5 * (w[0] + w[1]);
                spec.profile(r) * r.powf(p) * (w[1] - w[0])
            })
            .collect::<Vec<_>>(),
    );
    let cutoff = *edges.last().expect("edges are nonempty");
    let off = inner_moment(spec, edges[0], p) + spec.tail_moment(p, cutoff).unwrap_or(f64::INFINITY);
    if off.is_infinite() {
        1.0
    } else {
        off / (on_grid + off)
    }
}

/// Discretizes the noise measure of the `dim` model.
///
/// Cell masses use the midpoint rule. The 1-d model takes the white
/// measure (`Lebesgue`, `dim_hat = 0`) on `[−R₀, R₀]` in uniform cells;
/// the 2-d grid is geometric in `|η̂|`; the 3-d grid is polar, geometric in
/// the radius and uniform in the angle.
pub fn build_noise_grid(spec: &SpectralMeasureSpec, dim: Dim, shape: GridShape) -> Result<NoiseGrid> {
    check_shape(&shape)?;
    if spec.dim_hat != dim.dim_hat() {
        return Err(Error::invalid(format!(
            "a {}-d model needs a dim_hat = {} measure",
            dim.as_u8(),
            dim.dim_hat()
        )));
    }
    match dim {
        Dim::One => {
            if spec.kind != MeasureKind::Lebesgue {
                return Err(Error::invalid("the 1-d model is driven by spatially white noise"));
            }
            let w = shape.cutoff / shape.cells as f64;
            let level = spec.profile(0.0);
            let cells: Vec<NoiseCell> = (0..shape.cells)
                .map(|i| NoiseCell {
                    freq: [(i as f64 + 0.5) * w, 0.0],
                    mass: level * w,
                })
                .collect();
            Ok(NoiseGrid {
                dim,
                spec: spec.clone(),
                shape,
                total_mass: 2.0 * level * shape.cutoff,
                tail_fraction: hermite_tail_fraction(modes_covered(shape.cutoff), shape.cutoff)?,
                cells,
            })
        }
        Dim::Two => {
            admissibility_nu2(spec)?.require()?;
            let edges = radial_edges(spec, &shape)?;
            let cells: Vec<NoiseCell> = edges
                .windows(2)
                .map(|w| {
                    let eta = 0.5 * (w[0] + w[1]);
                    NoiseCell {
                        freq: [eta, 0.0],
                        mass: spec.profile(eta) * (w[1] - w[0]),
                    }
                })
                .collect();
            let total_mass = 2.0 * pairwise_sum(&cells.iter().map(|c| c.mass).collect::<Vec<_>>());
            Ok(NoiseGrid {
                dim,
                spec: spec.clone(),
                shape,
                total_mass,
                tail_fraction: tail_fraction(spec, &edges, -0.5),
                cells,
            })
        }
        Dim::Three => {
            admissibility_nu3(spec)?.require()?;
            if shape.angular == 0 {
                return Err(Error::invalid("the 3-d grid needs angular cells"));
            }
            let edges = radial_edges(spec, &shape)?;
            let dtheta = PI / shape.angular as f64;
            let mut cells = Vec::with_capacity((edges.len() - 1) * shape.angular);
            for w in edges.windows(2) {
                let r = 0.5 * (w[0] + w[1]);
                let mass = spec.profile(r) * r * (w[1] - w[0]) * dtheta;
                for j in 0..shape.angular {
                    let theta = -0.5 * PI + (j as f64 + 0.5) * dtheta;
                    cells.push(NoiseCell {
                        freq: [r * theta.cos(), r * theta.sin()],
                        mass,
                    });
                }
            }
            let total_mass = 2.0 * pairwise_sum(&cells.iter().map(|c| c.mass).collect::<Vec<_>>());
            Ok(NoiseGrid {
                dim,
                spec: spec.clone(),
                shape,
                total_mass,
                // r dr measure weighted by r^{-1/2}
                tail_fraction: tail_fraction(spec, &edges, 0.5),
                cells,
            })
        }
    }
}

/// Largest N whose default cutoff does not exceed `cutoff`.
fn modes_covered(cutoff: f64) -> usize {
    let s = (cutoff - 10.0).max(1.0);
    ((s * s - 1.0) / 2.0).floor() as usize
}

/// Largest `1 − ∫_{−R₀}^{R₀} Ψₙ²` over `n ≤ n_trunc`: the part of each mode
/// the 1-d grid misses.
pub fn hermite_tail_fraction(n_trunc: usize, cutoff: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 0..=n_trunc {
        let r = integrate(
            |x| hermite_fn(n, x).map(|v| v * v).unwrap_or(f64::NAN),
            0.0,
            cutoff,
            QuadOptions::default().with_rel_tol(1e-13),
        );
        worst = worst.max((1.0 - 2.0 * r.value).max(0.0));
    }
    Ok(worst)
}

/// How the 1-d sampler realizes the `ξ₀` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Synthesis {
    /// One complex increment per cell and sub-step.
    Cells,
    /// The cell sums `Σ_c Ψₙ(ξ_c) ΔŴ_c` drawn jointly through the Cholesky
    /// factor of their covariance. Same law as [`Synthesis::Cells`] with
    /// `N + 1` draws instead of one per cell.
    #[default]
    ModeProjection,
}

#[derive(Debug, Clone, Default)]
pub struct SampleOptions {
    pub synthesis: Synthesis,
    /// Interior edges of time windows; each probe value is split into the
    /// contributions of the noise in each window.
    pub windows: Vec<f64>,
}

/// Real-valued samples of the field at a set of probes.
///
/// When the operator has `b ≠ 0` its fundamental solution is complex and the
/// imaginary parts are kept in `imag`; the variance is then `E|u|²`.
#[derive(Debug, Clone)]
pub struct FieldEnsemble {
    pub probes: Vec<Probe>,
    /// `samples[replica][probe]`.
    pub samples: Vec<Vec<f64>>,
    pub imag: Option<Vec<Vec<f64>>>,
    /// RNG stream of each replica (the grid seed selects the key).
    pub seeds: Vec<u64>,
    pub grid_seed: u64,
    pub empirical_mean: Vec<f64>,
    pub empirical_var: Vec<f64>,
    /// Standard error of `empirical_var`.
    pub stderr: Vec<f64>,
    /// Standard error of `empirical_mean`.
    pub mean_stderr: Vec<f64>,
    /// Exact variance of the discretized field at each probe.
    pub grid_oracle: Vec<f64>,
    /// Largest `|Im u|` seen when the field is real.
    pub imag_residue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeStats {
    pub mean: f64,
    pub var: f64,
    pub stderr: f64,
    pub mean_stderr: f64,
}

/// Mean, unbiased variance and their standard errors, summed in a fixed
/// pairwise order.
pub fn probe_stats(re: &[f64], im: Option<&[f64]>) -> ProbeStats {
    let n = re.len() as f64;
    let mean_re = pairwise_sum(re) / n;
    let mean_im = im.map_or(0.0, |v| pairwise_sum(v) / n);
    let sq: Vec<f64> = (0..re.len())
        .map(|i| {
            let dr = re[i] - mean_re;
            let di = im.map_or(0.0, |v| v[i] - mean_im);
            dr * dr + di * di
        })
        .collect();
    let m2 = pairwise_sum(&sq) / n;
    let m4 = pairwise_sum(&sq.iter().map(|s| s * s).collect::<Vec<_>>()) / n;
    let var = if re.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    ProbeStats {
        mean: mean_re,
        var,
        stderr: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        mean_stderr: (var / n).sqrt(),
    }
}

impl FieldEnsemble {
    pub fn replicas(&self) -> usize {
        self.samples.len()
    }

    /// Statistics of probe `p` recomputed from the stored samples.
    pub fn recompute(&self, p: usize) -> ProbeStats {
        let re: Vec<f64> = self.samples.iter().map(|s| s[p]).collect();
        let im: Option<Vec<f64>> = self.imag.as_ref().map(|m| m.iter().map(|s| s[p]).collect());
        probe_stats(&re, im.as_deref())
    }
}

/// One sub-step of the time grid.
#[derive(Debug, Clone, Copy)]
struct SubStep {
    len: f64,
    mid: f64,
    end: f64,
}

/// Uniform steps of the grid with the probe times and window edges
/// inserted as extra edges.
fn sub_steps(horizon: f64, dt: f64, steps: usize, extra: &[f64]) -> Vec<SubStep> {
    let mut edges: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    edges[steps] = horizon;
    edges.extend(extra.iter().copied().filter(|&e| e > 0.0 && e < horizon));
    edges.sort_by(f64::total_cmp);
    let tol = 1e-12 * horizon;
    edges.dedup_by(|a, b| (*a - *b).abs() <= tol);
    edges
        .windows(2)
        .map(|w| SubStep {
            len: w[1] - w[0],
            mid: 0.5 * (w[0] + w[1]),
            end: w[1],
        })
        .collect()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return Err(Error::invalid(
                        "the 1-d cell covariance is singular; use more xi0 cells than modes",
                    ));
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Linear map from the standard normals of one sub-step to the probes:
/// probe `p` receives `Σ_k α[k][p] x_k + β[k][p] y_k`.
struct StepMap {
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
    bucket: Vec<usize>,
}

struct Plan {
    atoms: usize,
    probes: usize,
    buckets: usize,
    steps: Vec<SubStep>,
    windows: Vec<f64>,
    /// Edges closer than this were merged.
    tol: f64,
}

impl Plan {
    fn bucket_of(&self, s: f64) -> usize {
        self.windows.iter().filter(|&&w| w <= s).count()
    }
}

/// Builds the per-sub-step linear maps, calling `visit` with each one in
/// time order.
struct Mapper<'a> {
    kernel: &'a TruncatedKernel,
    grid: &'a NoiseGrid,
    probes: &'a [Probe],
    synthesis: Synthesis,
    /// `gram_chol[n][k]` for the projected 1-d sampler.
    chol: Option<Vec<Vec<f64>>>,
}

impl<'a> Mapper<'a> {
    fn new(kernel: &'a TruncatedKernel, grid: &'a NoiseGrid, probes: &'a [Probe], synthesis: Synthesis) -> Result<Self> {
        let chol = if grid.dim == Dim::One && synthesis == Synthesis::ModeProjection {
            let n1 = kernel.n_trunc + 1;
            let mut gram = vec![vec![0.0; n1]; n1];
            for c in &grid.cells {
                let h = hermite_batch(kernel.n_trunc, c.freq[0])?;
                for i in 0..n1 {
                    for j in 0..=i {
                        gram[i][j] += c.mass * h[i] * h[j];
                    }
                }
            }
            for i in 0..n1 {
                for j in 0..i {
                    gram[j][i] = gram[i][j];
                }
            }
            Some(cholesky(&gram)?)
        } else {
            None
        };
        Ok(Self {
            kernel,
            grid,
            probes,
            synthesis,
            chol,
        })
    }

    fn atoms(&self) -> usize {
        let n1 = self.kernel.n_trunc + 1;
        match (self.grid.dim, self.synthesis) {
            (Dim::One, Synthesis::Cells) => self.grid.cells.len(),
            _ if self.grid.dim == Dim::One => n1,
            _ => self.grid.cells.len() * n1,
        }
    }

    fn map(&self, plan: &Plan, step: &SubStep) -> Result<StepMap> {
        let (k_atoms, n_p) = (plan.atoms, plan.probes);
        let zero = Complex64::new(0.0, 0.0);
        let mut alpha = vec![zero; k_atoms * n_p];
        let mut beta = vec![zero; k_atoms * n_p];
        let bucket = vec![plan.bucket_of(step.mid); n_p];
        let n_trunc = self.kernel.n_trunc;
        let n1 = n_trunc + 1;
        for (p, probe) in self.probes.iter().enumerate() {
            if step.end > probe.t + plan.tol {
                continue;
            }
            let tau = probe.t - step.mid;
            match self.grid.dim {
                Dim::One => {
                    let c = f1_coefficients(tau, probe.x, n_trunc)?;
                    if let Some(l) = &self.chol {
                        let s = (2.0 * step.len).sqrt();
                        for k in 0..n1 {
                            let e: Complex64 = (k..n1).map(|n| c[n] * l[n][k]).sum();
                            alpha[k * n_p + p] = Complex64::new(s * e.re, 0.0);
                            beta[k * n_p + p] = Complex64::new(-s * e.im, 0.0);
                        }
                    } else {
                        for (k, cell) in self.grid.cells.iter().enumerate() {
                            let h = hermite_batch(n_trunc, cell.freq[0])?;
                            let f: Complex64 = c.iter().zip(&h).map(|(c, h)| c * h).sum();
                            let s = (2.0 * cell.mass * step.len).sqrt();
                            alpha[k * n_p + p] = Complex64::new(s * f.re, 0.0);
                            beta[k * n_p + p] = Complex64::new(-s * f.im, 0.0);
                        }
                    }
                }
                Dim::Two | Dim::Three => {
                    let params = &self.kernel.params;
                    for (ci, cell) in self.grid.cells.iter().enumerate() {
                        let [eta, zeta] = cell.freq;
                        let phase = probe.y * eta + probe.z * zeta;
                        let plus = scaled_coefficients(params, tau, probe.x, phase, eta, zeta, n_trunc)?;
                        let minus = scaled_coefficients(params, tau, probe.x, -phase, -eta, -zeta, n_trunc)?;
                        let sigma = (eta.sqrt() * cell.mass * step.len * 0.5).sqrt();
                        for n in 0..n1 {
                            // the mirror cell carries (−1)ⁿ conj of the same increment
                            let d = if n % 2 == 0 { minus[n] } else { -minus[n] };
                            let k = ci * n1 + n;
                            alpha[k * n_p + p] = sigma * (plus[n] + d);
                            beta[k * n_p + p] = Complex64::new(0.0, sigma) * (plus[n] - d);
                        }
                    }
                }
            }
        }
        Ok(StepMap { alpha, beta, bucket })
    }
}

struct Raw {
    /// `values[replica][probe * buckets + bucket]`.
    values: Vec<Vec<Complex64>>,
    /// Exact variance per `probe * buckets + bucket`.
    oracle: Vec<f64>,
}

fn check_inputs(kernel: &TruncatedKernel, grid: &NoiseGrid, probes: &[Probe], replicas: usize) -> Result<()> {
    if kernel.params.dim != grid.dim {
        return Err(Error::invalid("kernel and noise grid belong to different models"));
    }
    if replicas < 2 {
        return Err(Error::invalid("need at least two replicas"));
    }
    if probes.is_empty() {
        return Err(Error::invalid("no probes given"));
    }
    let horizon = grid.horizon().min(kernel.horizon);
    for (i, p) in probes.iter().enumerate() {
        for v in [p.t, p.x, p.y, p.z] {
            finite(v, "probe coordinate")?;
        }
        if p.t < 0.0 || p.t > horizon * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "probe {i} at t = {} is outside the horizon [0, {horizon}]",
                p.t
            )));
        }
    }
    Ok(())
}

fn simulate(
    kernel: &TruncatedKernel,
    grid: &NoiseGrid,
    probes: &[Probe],
    replicas: usize,
    opts: &SampleOptions,
) -> Result<Raw> {
    check_inputs(kernel, grid, probes, replicas)?;
    if grid.dim != Dim::One && opts.synthesis == Synthesis::Cells {
        return Err(Error::invalid("per-cell xi0 synthesis exists only for the 1-d model"));
    }
    let mut windows = opts.windows.clone();
    windows.sort_by(f64::total_cmp);
    let mut extra: Vec<f64> = probes.iter().map(|p| p.t).collect();
    extra.extend(&windows);
    let mapper = Mapper::new(kernel, grid, probes, opts.synthesis)?;
    let plan = Plan {
        atoms: mapper.atoms(),
        probes: probes.len(),
        buckets: windows.len() + 1,
        steps: sub_steps(grid.horizon(), grid.dt(), grid.steps(), &extra),
        windows,
        tol: 1e-12 * grid.horizon(),
    };
    let width = plan.probes * plan.buckets;
    let mut oracle = vec![0.0; width];

    struct Replica {
        rng: ChaCha8Rng,
        acc: Vec<Complex64>,
        draws: Vec<f64>,
    }
    let mut reps: Vec<Replica> = (0..replicas)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(grid.seed());
            rng.set_stream(r as u64);
            Replica {
                rng,
                acc: vec![Complex64::new(0.0, 0.0); width],
                draws: vec![0.0; 2 * plan.atoms],
            }
        })
        .collect();

    let last_end = probes.iter().map(|p| p.t).fold(0.0, f64::max);
    for step in plan.steps.iter().filter(|s| s.end <= last_end + plan.tol) {
        let m = mapper.map(&plan, step)?;
        let n_p = plan.probes;
        for p in 0..n_p {
            let slot = p * plan.buckets + m.bucket[p];
            for k in 0..plan.atoms {
                oracle[slot] += m.alpha[k * n_p + p].norm_sqr() + m.beta[k * n_p + p].norm_sqr();
            }
        }
        // atoms that reach no probe still consume draws to keep streams aligned
        reps.par_iter_mut().for_each(|rep| {
            for v in rep.draws.iter_mut() {
                *v = rep.rng.sample(StandardNormal);
            }
            for k in 0..plan.atoms {
                let (x, y) = (rep.draws[2 * k], rep.draws[2 * k + 1]);
                for p in 0..n_p {
                    let slot = p * plan.buckets + m.bucket[p];
                    rep.acc[slot] += m.alpha[k * n_p + p] * x + m.beta[k * n_p + p] * y;
                }
            }
        });
    }
    Ok(Raw {
        values: reps.into_iter().map(|r| r.acc).collect(),
        oracle,
    })
}

fn field_is_real(kernel: &TruncatedKernel) -> bool {
    kernel.params.b == 0.0
}

/// Draws `replicas` independent realizations of the field at `probes`.
pub fn sample_field(
    kernel: &TruncatedKernel,
    grid: &NoiseGrid,
    probes: &[Probe],
    replicas: usize,
) -> Result<FieldEnsemble> {
    sample_field_with(kernel, grid, probes, replicas, &SampleOptions::default())
}

pub fn sample_field_with(
    kernel: &TruncatedKernel,
    grid: &NoiseGrid,
    probes: &[Probe],
    replicas: usize,
    opts: &SampleOptions,
) -> Result<FieldEnsemble> {
    let opts = SampleOptions {
        windows: Vec::new(),
        ..opts.clone()
    };
    let raw = simulate(kernel, grid, probes, replicas, &opts)?;
    let real = field_is_real(kernel);
    let residue = if real {
        raw.values
            .iter()
            .flat_map(|v| v.iter().map(|z| z.im.abs()))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    if residue >= REALITY_TOLERANCE {
        return Err(Error::Internal(format!(
            "imaginary residue {residue:e} in a field that must be real"
        )));
    }
    let samples: Vec<Vec<f64>> = raw.values.iter().map(|v| v.iter().map(|z| z.re).collect()).collect();
    let imag = (!real).then(|| raw.values.iter().map(|v| v.iter().map(|z| z.im).collect()).collect());
    let mut ens = FieldEnsemble {
        probes: probes.to_vec(),
        samples,
        imag,
        seeds: (0..replicas as u64).collect(),
        grid_seed: grid.seed(),
        empirical_mean: Vec::new(),
        empirical_var: Vec::new(),
        stderr: Vec::new(),
        mean_stderr: Vec::new(),
        grid_oracle: raw.oracle,
        imag_residue: residue,
    };
    for p in 0..probes.len() {
        let s = ens.recompute(p);
        let oracle = ens.grid_oracle[p];
        if oracle > 0.0 && s.var > BLOWUP_FACTOR * oracle {
            return Err(Error::VarianceBlowup {
                probe: p,
                empirical: s.var,
                oracle,
            });
        }
        ens.empirical_mean.push(s.mean);
        ens.empirical_var.push(s.var);
        ens.stderr.push(s.stderr);
        ens.mean_stderr.push(s.mean_stderr);
    }
    Ok(ens)
}

/// Contributions to `u(probe)` from the noise in each time window.
///
/// `edges` are the interior window boundaries; the result is indexed
/// `[replica][window]` and keeps only real parts.
pub fn sample_windows(
    kernel: &TruncatedKernel,
    grid: &NoiseGrid,
    probe: Probe,
    edges: &[f64],
    replicas: usize,
) -> Result<Vec<Vec<f64>>> {
    let opts = SampleOptions {
        windows: edges.to_vec(),
        ..SampleOptions::default()
    };
    let raw = simulate(kernel, grid, &[probe], replicas, &opts)?;
    Ok(raw.values.into_iter().map(|v| v.into_iter().map(|z| z.re).collect()).collect())
}

/// Variance of the discretized field at each probe, computed exactly.
pub fn grid_oracle(kernel: &TruncatedKernel, grid: &NoiseGrid, probes: &[Probe]) -> Result<Vec<f64>> {
    Ok(simulate(kernel, grid, probes, 2, &SampleOptions::default())?.oracle)
}

/// Isometry value of the untruncated-in-frequency model for the grid's
/// measure, used as the discretization-free oracle.
pub fn isometry_oracle(kernel: &TruncatedKernel, grid: &NoiseGrid, probe: Probe) -> Result<f64> {
    let spec = (grid.dim != Dim::One).then_some(&grid.spec);
    Ok(variance(probe, kernel.n_trunc, &kernel.params, spec, None)?.value)
}

/// `|empirical − oracle|` against the allowance `4·stderr + budget`, where
/// the budget is the gap between the discretized and the exact variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryCheck {
    pub empirical: f64,
    pub stderr: f64,
    pub oracle: f64,
    pub grid_oracle: f64,
    pub budget: f64,
    pub gap: f64,
    pub z_score: f64,
}

impl IsometryCheck {
    pub fn new(empirical: f64, stderr: f64, oracle: f64, grid_oracle: f64) -> Self {
        let gap = (empirical - oracle).abs();
        Self {
            empirical,
            stderr,
            oracle,
            grid_oracle,
            budget: (grid_oracle - oracle).abs(),
            gap,
            z_score: if stderr > 0.0 { (empirical - grid_oracle) / stderr } else { 0.0 },
        }
    }

    pub fn passes(&self) -> bool {
        self.gap <= 4.0 * self.stderr + self.budget
    }
}

/// One refinement level of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub dt: f64,
    pub cells: usize,
    pub empirical_var: f64,
    pub stderr: f64,
    pub grid_oracle: f64,
    pub oracle: f64,
    pub gap: f64,
}

/// Samples one probe on each `(dt, cells)` rung, keeping the rest of `base`.
///
/// Rungs must refine strictly: dt not increasing, cells not decreasing, and
/// at least one of them changing.
pub fn convergence_sweep(
    kernel: &TruncatedKernel,
    spec: &SpectralMeasureSpec,
    probe: Probe,
    base: GridShape,
    ladder: &[(f64, usize)],
    replicas: usize,
) -> Result<Vec<SweepRow>> {
    for w in ladder.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.0 > a.0 || b.1 < a.1 || (b.0 == a.0 && b.1 == a.1) {
            return Err(Error::invalid("sweep ladder must refine strictly"));
        }
    }
    let mut oracle = None;
    let mut rows = Vec::with_capacity(ladder.len());
    for &(dt, cells) in ladder {
        let steps = (probe.t / dt).ceil().max(1.0) as usize;
        let shape = GridShape { dt, cells, steps, ..base };
        let grid = build_noise_grid(spec, kernel.params.dim, shape)?;
        let exact = match oracle {
            Some(v) => v,
            None => {
                let v = isometry_oracle(kernel, &grid, probe)?;
                oracle = Some(v);
                v
            }
        };
        let ens = sample_field(kernel, &grid, &[probe], replicas)?;
        rows.push(SweepRow {
            dt,
            cells,
            empirical_var: ens.empirical_var[0],
            stderr: ens.stderr[0],
            grid_oracle: ens.grid_oracle[0],
            oracle: exact,
            gap: (ens.empirical_var[0] - exact).abs(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::variance_1d;
    use crate::model::ModelParams;

    fn white() -> SpectralMeasureSpec {
        SpectralMeasureSpec::new(MeasureKind::Lebesgue, 0).unwrap()
    }

    #[test]
    fn time_grid_inserts_probe_times() {
        let s = sub_steps(1.0, 0.25, 4, &[0.3, 0.5]);
        let ends: Vec<f64> = s.iter().map(|s| s.end).collect();
        assert_eq!(ends, vec![0.25, 0.3, 0.5, 0.75, 1.0]);
        let total: f64 = s.iter().map(|s| s.len).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let a = vec![vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 1.0]];
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - a[i][j]).abs() < 1e-14);
            }
        }
        assert!(cholesky(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
    }

    #[test]
    fn projection_and_cells_share_the_grid_oracle() {
        let kernel = TruncatedKernel::new(ModelParams::one_dim(), 4, 1.0).unwrap();
        let grid = build_noise_grid(&white(), Dim::One, GridShape::new(default_xi_cutoff(4), 60, 0.125, 8, 1)).unwrap();
        let probes = [Probe::new(1.0, 0.0), Probe::new(0.5, 0.7)];
        let proj = grid_oracle(&kernel, &grid, &probes).unwrap();
        let opts = SampleOptions {
            synthesis: Synthesis::Cells,
            ..SampleOptions::default()
        };
        let cells = simulate(&kernel, &grid, &probes, 2, &opts).unwrap().oracle;
        for (a, b) in proj.iter().zip(&cells) {
            assert!((a - b).abs() < 1e-12 * b, "{a} {b}");
        }
        // close to the continuous value at this resolution
        let exact = variance_1d(1.0, 0.0, 4).unwrap().value;
        assert!((proj[0] - exact).abs() < 2e-3 * exact, "{} {exact}", proj[0]);
    }

    #[test]
    fn probe_beyond_horizon_is_rejected() {
        let kernel = TruncatedKernel::new(ModelParams::one_dim(), 2, 4.0).unwrap();
        let grid = build_noise_grid(&white(), Dim::One, GridShape::new(8.0, 20, 0.1, 10, 1)).unwrap();
        assert!(sample_field(&kernel, &grid, &[Probe::new(1.5, 0.0)], 4).is_err());
    }

    #[test]
    fn stats_of_a_known_sample() {
        let s = probe_stats(&[1.0, -1.0, 1.0, -1.0], None);
        assert_eq!(s.mean, 0.0);
        assert!((s.var - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.stderr, 0.0);
    }
}
