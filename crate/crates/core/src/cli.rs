//! Command orchestration, CSV emission and exit codes.
//!
//! Every output file starts with a provenance comment carrying the crate
//! version, the command, the config hash and the seed, followed by a header
//! row. Reals are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{config_hash, Command, ExperimentConfig};
use crate::error::{Error, Result};
use crate::hermite::calibrate_sup_bound;
use crate::isometry::{
    continuity_modulus_1d, increment_moments, time_modulus_1d, variance, Probe, SpectralOptions, VarianceReport,
};
use crate::kernels::{f1_coefficients, scaled_coefficients, TruncatedKernel};
use crate::model::{admissibility_nu2, admissibility_nu3, levi_check, rho, Dim, Verdict};
use crate::noise::{build_noise_grid, isometry_oracle, sample_field, GridShape, IsometryCheck};

/// Exit status of a run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
/// Expected negative outcomes: Levi violation or inadmissible measure.
pub const EXIT_REJECTED: i32 = 2;

/// Largest truncation a tolerance may ask for.
const MAX_TOL_TRUNCATION: usize = 4096;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
    pub message: String,
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::LeviViolation(_) | Error::Inadmissible(_) => EXIT_REJECTED,
        _ => EXIT_FAILURE,
    }
}

/// Formats a real with 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table held in memory until it is written.
pub struct Table {
    name: String,
    text: String,
}

impl Table {
    fn new(name: &str, provenance: &str, header: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "{provenance}");
        let _ = writeln!(text, "{}", header.join(","));
        Self {
            name: name.to_string(),
            text,
        }
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    command: Command,
    provenance: String,
    tables: Vec<Table>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ExperimentConfig, command: Command) -> Self {
        let provenance = format!(
            "# hspde {} command={} config={} seed={}",
            env!("CARGO_PKG_VERSION"),
            command.as_str(),
            config_hash(cfg),
            cfg.numerics.seed
        );
        Self {
            cfg,
            command,
            provenance,
            tables: Vec::new(),
        }
    }

    fn table(&mut self, name: &str, header: &[&str]) -> &mut Table {
        let t = Table::new(&format!("{}_{name}", self.command.as_str()), &self.provenance, header);
        self.tables.push(t);
        self.tables.last_mut().expect("just pushed")
    }

    /// Writes every table as `<prefix><command>_<name>.csv`.
    fn flush(self) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::with_capacity(self.tables.len());
        for t in self.tables {
            let path = PathBuf::from(format!("{}{}.csv", self.cfg.output, t.name));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, t.text)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Runs `command` and writes its outputs. Errors are mapped to exit codes;
/// files produced before a rejection (such as a Levi report) are kept.
pub fn run(cfg: &ExperimentConfig, command: Command) -> Outcome {
    let mut r = Run::new(cfg, command);
    let result = match command {
        Command::Kernel => kernel(&mut r),
        Command::Variance => variance_cmd(&mut r),
        Command::Admissibility => admissibility(&mut r),
        Command::Simulate => simulate(&mut r),
        Command::Continuity => continuity(&mut r),
        Command::Calibrate => calibrate(&mut r),
    };
    let (code, message) = match result {
        Ok(msg) => (EXIT_OK, msg),
        Err(e) => (exit_code(&e), e.to_string()),
    };
    match r.flush() {
        Ok(files) => Outcome { code, files, message },
        Err(e) => Outcome {
            code: EXIT_FAILURE,
            files: Vec::new(),
            message: format!("{message}; writing outputs failed: {e}"),
        },
    }
}

fn spectral_opts(cfg: &ExperimentConfig) -> Option<SpectralOptions> {
    cfg.numerics.rel_tol.map(|tol| {
        let base = match cfg.model.dim {
            Dim::Three => SpectralOptions::polar(),
            _ => SpectralOptions::default(),
        };
        base.with_rel_tol(tol)
    })
}

fn measure_for_model(cfg: &ExperimentConfig) -> Option<&crate::model::SpectralMeasureSpec> {
    (cfg.model.dim != Dim::One).then_some(&cfg.measure)
}

fn probe_cells(i: usize, p: &Probe) -> Vec<String> {
    vec![i.to_string(), real(p.t), real(p.x), real(p.y), real(p.z)]
}

fn kernel(r: &mut Run) -> Result<String> {
    let cfg = r.cfg;
    let report = levi_check(&cfg.model);
    let t = r.table("levi", &["dim", "mu", "b", "margin", "holds"]);
    t.row(&[
        cfg.model.dim.as_u8().to_string(),
        real(cfg.model.mu),
        real(cfg.model.b),
        real(cfg.model.levi_margin()),
        report.passed.to_string(),
    ]);
    let horizon = cfg.probes.iter().map(|p| p.t).fold(0.0, f64::max);
    let k = TruncatedKernel::new(cfg.model, cfg.numerics.n_trunc, horizon)?;
    let (eta, zeta) = (cfg.numerics.eta, cfg.numerics.zeta);
    let mut rows = Vec::new();
    for (i, p) in cfg.probes.iter().enumerate() {
        let (coef, weights): (Vec<_>, Vec<f64>) = match cfg.model.dim {
            Dim::One => (
                f1_coefficients(p.t, p.x, k.n_trunc)?,
                (0..=k.n_trunc).map(|n| (2 * n + 1) as f64).collect(),
            ),
            _ => {
                let phase = p.y * eta + p.z * zeta;
                (
                    scaled_coefficients(&cfg.model, p.t, p.x, phase, eta, zeta, k.n_trunc)?,
                    (0..=k.n_trunc)
                        .map(|n| rho(&cfg.model, n, -eta, zeta))
                        .collect::<Result<_>>()?,
                )
            }
        };
        for (n, (c, w)) in coef.iter().zip(&weights).enumerate() {
            let mut cells = probe_cells(i, p);
            cells.extend([n.to_string(), real(*w), real(c.re), real(c.im)]);
            rows.push(cells);
        }
    }
    let t = r.table("coefficients", &["probe", "t", "x", "y", "z", "n", "rho", "coef_re", "coef_im"]);
    for row in rows {
        t.row(&row);
    }
    let t = r.table("tail", &["n_trunc", "horizon", "d_cal", "tail_certificate"]);
    t.row(&[k.n_trunc.to_string(), real(k.horizon), real(k.d_cal), real(k.tail_certificate)]);
    Ok(format!("kernel: {} modes, tail certificate {:e}", k.n_trunc + 1, k.tail_certificate))
}

/// Smallest truncation whose tail bound meets `tol`.
fn truncation_for(tol: f64, probe: Probe, cfg: &ExperimentConfig) -> Result<usize> {
    let probe0 = variance(probe, 0, &cfg.model, measure_for_model(cfg), spectral_opts(cfg))?;
    let model = probe0.tail_model;
    (0..=MAX_TOL_TRUNCATION)
        .find(|&n| model.bound(n) <= tol)
        .ok_or(Error::TruncationRefused {
            tol,
            needed: f64::INFINITY,
            limit: MAX_TOL_TRUNCATION as f64,
        })
}

fn variance_cmd(r: &mut Run) -> Result<String> {
    let cfg = r.cfg;
    cfg.model.require_levi()?;
    let mut reports: Vec<VarianceReport> = Vec::new();
    for p in &cfg.probes {
        let n = match cfg.numerics.tol {
            Some(tol) => truncation_for(tol, *p, cfg)?,
            None => cfg.numerics.n_trunc,
        };
        reports.push(variance(*p, n, &cfg.model, measure_for_model(cfg), spectral_opts(cfg))?);
    }
    let t = r.table(
        "summary",
        &["probe", "t", "x", "y", "z", "n_trunc", "value", "quad_error", "tail_error", "t0", "d_cal", "cutoff"],
    );
    for (i, rep) in reports.iter().enumerate() {
        let mut cells = probe_cells(i, &rep.probe);
        cells.extend([
            rep.n_trunc.to_string(),
            real(rep.value),
            real(rep.quad_error),
            real(rep.tail_error),
            real(rep.t0),
            real(rep.d_cal),
            real(rep.cutoff),
        ]);
        t.row(&cells);
    }
    let t = r.table("modes", &["probe", "n", "contribution", "cumulative", "tail_bound"]);
    for (i, rep) in reports.iter().enumerate() {
        for m in rep.mode_rows() {
            t.row(&[i.to_string(), m.n.to_string(), real(m.contribution), real(m.cumulative), real(m.tail_bound)]);
        }
    }
    if let Some(tol) = cfg.numerics.tol {
        if let Some((i, rep)) = reports.iter().enumerate().find(|(_, r)| r.tail_error + r.quad_error > tol) {
            return Err(Error::Quadrature(format!(
                "probe {i}: error certificate {:e} exceeds tol {tol:e}",
                rep.tail_error + rep.quad_error
            )));
        }
    }
    Ok(format!("variance: {} probe(s)", reports.len()))
}

fn admissibility(r: &mut Run) -> Result<String> {
    let spec = &r.cfg.measure;
    let rep = match spec.dim_hat {
        1 => admissibility_nu2(spec)?,
        2 => admissibility_nu3(spec)?,
        _ => return Err(Error::invalid("admissibility needs a dim_hat = 1 or 2 measure")),
    };
    let t = r.table("trace", &["step", "cutoff", "increment", "partial"]);
    for (i, s) in rep.integral.trace.iter().enumerate() {
        t.row(&[i.to_string(), real(s.cutoff), real(s.increment), real(s.partial)]);
    }
    let opt = |v: Option<f64>| v.map(real).unwrap_or_default();
    let t = r.table(
        "summary",
        &["measure", "dim_hat", "verdict", "integral", "origin_moment", "proof_moment", "witness_alpha", "delta"],
    );
    t.row(&[
        spec.kind.name().to_string(),
        spec.dim_hat.to_string(),
        rep.verdict.as_str().to_string(),
        real(rep.integral.value),
        opt(rep.origin_moment),
        opt(rep.proof_moment.as_ref().map(|m| m.value)),
        opt(rep.witness_alpha),
        opt(rep.delta),
    ]);
    if !rep.alpha_trials.is_empty() {
        let t = r.table("alpha", &["alpha", "verdict"]);
        for (a, v) in &rep.alpha_trials {
            t.row(&[real(*a), v.as_str().to_string()]);
        }
    }
    match rep.verdict {
        Verdict::Admissible => Ok(format!("admissibility: {}", rep.summary())),
        _ => rep.require().map(|_| String::new()),
    }
}

fn simulate(r: &mut Run) -> Result<String> {
    let cfg = r.cfg;
    let n = &cfg.numerics;
    let dim = cfg.model.dim;
    let horizon = cfg.probes.iter().map(|p| p.t).fold(0.0, f64::max);
    let steps = n.steps.unwrap_or_else(|| (horizon / n.dt).ceil().max(1.0) as usize);
    let shape = GridShape::new(n.cutoff_for(dim), n.cells_for(dim), n.dt, steps, n.seed)
        .with_inner(n.inner)
        .with_angular(n.angular);
    let kernel = TruncatedKernel::new(cfg.model, n.n_trunc, horizon)?;
    let grid = build_noise_grid(&cfg.measure, dim, shape)?;
    let ens = sample_field(&kernel, &grid, &cfg.probes, n.replicas)?;

    let t = r.table("grid", &["cells", "total_mass", "tail_fraction", "dt", "steps", "horizon"]);
    t.row(&[
        grid.cells.len().to_string(),
        real(grid.total_mass),
        real(grid.tail_fraction),
        real(grid.dt()),
        grid.steps().to_string(),
        real(grid.horizon()),
    ]);
    let mut checks = Vec::new();
    for (i, p) in cfg.probes.iter().enumerate() {
        let oracle = isometry_oracle(&kernel, &grid, *p)?;
        checks.push(IsometryCheck::new(ens.empirical_var[i], ens.stderr[i], oracle, ens.grid_oracle[i]));
    }
    let t = r.table(
        "summary",
        &[
            "probe", "t", "x", "y", "z", "mean", "var", "stderr", "oracle", "grid_oracle", "budget", "z_score", "pass",
        ],
    );
    for (i, (p, c)) in cfg.probes.iter().zip(&checks).enumerate() {
        let mut cells = probe_cells(i, p);
        cells.extend([
            real(ens.empirical_mean[i]),
            real(c.empirical),
            real(c.stderr),
            real(c.oracle),
            real(c.grid_oracle),
            real(c.budget),
            real(c.z_score),
            c.passes().to_string(),
        ]);
        t.row(&cells);
    }
    let header: &[&str] = if ens.imag.is_some() {
        &["replica", "probe", "value", "imag"]
    } else {
        &["replica", "probe", "value"]
    };
    let t = r.table("samples", header);
    for (rep, row) in ens.samples.iter().enumerate() {
        for (p, v) in row.iter().enumerate() {
            let mut cells = vec![rep.to_string(), p.to_string(), real(*v)];
            if let Some(im) = &ens.imag {
                cells.push(real(im[rep][p]));
            }
            t.row(&cells);
        }
    }
    let passed = checks.iter().filter(|c| c.passes()).count();
    Ok(format!(
        "simulate: {} replicas, {passed}/{} probes within 4 stderr + budget",
        ens.replicas(),
        checks.len()
    ))
}

fn continuity(r: &mut Run) -> Result<String> {
    let cfg = r.cfg;
    let n = &cfg.numerics;
    cfg.model.require_levi()?;
    let hs: Vec<f64> = (0..=n.levels).map(|k| n.h_max * 0.5f64.powi(k as i32)).collect();
    let mut rows = Vec::new();
    for (i, p) in cfg.probes.iter().enumerate() {
        for (k, &h) in hs.iter().enumerate() {
            let vals = match cfg.model.dim {
                Dim::One => [
                    continuity_modulus_1d(p.t, p.x, h, n.n_trunc)?,
                    time_modulus_1d(p.t, p.x, h, n.n_trunc)?,
                    0.0,
                ],
                _ => {
                    let h_space = if n.space_increments { h } else { 0.0 };
                    let m = increment_moments(*p, h, h_space, n.n_trunc, &cfg.model, Some(&cfg.measure), spectral_opts(cfg))?;
                    [m.space, m.j1, m.j2]
                }
            };
            rows.push((i, k, h, vals));
        }
    }
    let header: &[&str] = match cfg.model.dim {
        Dim::One => &["probe", "k", "h", "space_modulus", "time_modulus", "unused"],
        _ => &["probe", "k", "h", "space_increment", "j1", "j2"],
    };
    let t = r.table("ladder", header);
    for (i, k, h, v) in rows {
        t.row(&[i.to_string(), k.to_string(), real(h), real(v[0]), real(v[1]), real(v[2])]);
    }
    Ok(format!("continuity: {} levels", hs.len()))
}

fn calibrate(r: &mut Run) -> Result<String> {
    let cal = calibrate_sup_bound(r.cfg.numerics.calibrate_n)?;
    let t = r.table("modes", &["n", "max_psi_sq", "bound"]);
    for (n, m) in cal.max_sq.iter().enumerate() {
        t.row(&[n.to_string(), real(*m), real(cal.psi_sq_bound(n))]);
    }
    let t = r.table("summary", &["n_max", "c", "d"]);
    t.row(&[cal.n_max.to_string(), real(cal.c), real(cal.d)]);
    Ok(format!("calibrate: C = {:.6}, D = {:.6}", cal.c, cal.d))
}

/// True when `path` lies under the directory part of `prefix`.
pub fn within_prefix(path: &Path, prefix: &str) -> bool {
    path.to_string_lossy().starts_with(prefix)
}
