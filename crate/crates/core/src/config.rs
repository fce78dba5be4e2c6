//! Run configuration: a flat `key = value` text format with dotted section
//! names.
//!
//! ```text
//! # comments start with '#'
//! command = variance
//! model.dim = 2
//! model.mu = 1
//! measure.kind = power_law
//! measure.beta = 0.3
//! probes = 1, 0; pi, 0.7
//!
//! [numerics]          # keys below are read as numerics.<key>
//! n = 16
//! ```
//!
//! Every key has a default, so an empty file is a valid configuration. The
//! canonical serialization lists every key in a fixed order and is a fixed
//! point of `parse ∘ serialize`.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::isometry::Probe;
use crate::kernels::DEFAULT_TRUNCATION;
use crate::model::{parse_table_nodes, Dim, MeasureKind, ModelParams, SpectralMeasureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Kernel,
    Variance,
    Admissibility,
    Simulate,
    Continuity,
    Calibrate,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Kernel,
        Command::Variance,
        Command::Admissibility,
        Command::Simulate,
        Command::Continuity,
        Command::Calibrate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Variance => "variance",
            Command::Admissibility => "admissibility",
            Command::Simulate => "simulate",
            Command::Continuity => "continuity",
            Command::Calibrate => "calibrate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// Numerical settings. `None` fields resolve to dimension-dependent defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub n_trunc: usize,
    /// Target for the truncation plus quadrature error of variance reports.
    pub tol: Option<f64>,
    /// Relative tolerance of the spectral quadrature.
    pub rel_tol: Option<f64>,
    /// Frequency cells per half-line (radial cells in 3-d).
    pub cells: Option<usize>,
    pub cutoff: Option<f64>,
    pub inner: f64,
    pub angular: usize,
    pub dt: f64,
    pub steps: Option<usize>,
    pub replicas: usize,
    pub seed: u64,
    /// Frequencies at which the `kernel` command evaluates 2-d/3-d kernels.
    pub eta: f64,
    pub zeta: f64,
    /// Largest increment of the continuity ladder.
    pub h_max: f64,
    /// Halvings of the continuity ladder.
    pub levels: usize,
    /// Also compute spatial increments in 2-d/3-d continuity runs.
    pub space_increments: bool,
    pub calibrate_n: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_trunc: DEFAULT_TRUNCATION,
            tol: None,
            rel_tol: None,
            cells: None,
            cutoff: None,
            inner: 1e-8,
            angular: 32,
            dt: 1.0 / 256.0,
            steps: None,
            replicas: 10_000,
            seed: 1,
            eta: 1.0,
            zeta: 0.0,
            h_max: 1.0,
            levels: 10,
            space_increments: false,
            calibrate_n: 1024,
        }
    }
}

impl Numerics {
    pub fn cells_for(&self, dim: Dim) -> usize {
        self.cells.unwrap_or(match dim {
            Dim::One => 1024,
            Dim::Two => 288,
            Dim::Three => 64,
        })
    }

    pub fn cutoff_for(&self, dim: Dim) -> f64 {
        self.cutoff.unwrap_or(match dim {
            Dim::One => crate::noise::default_xi_cutoff(self.n_trunc),
            Dim::Two => 1e40,
            Dim::Three => 1e6,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub model: ModelParams,
    pub measure: SpectralMeasureSpec,
    pub numerics: Numerics,
    pub probes: Vec<Probe>,
    /// Path prefix of every output file.
    pub output: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            model: ModelParams::one_dim(),
            measure: SpectralMeasureSpec::new(MeasureKind::Lebesgue, 0).expect("white measure is valid"),
            numerics: Numerics::default(),
            probes: vec![Probe::new(1.0, 0.0)],
            output: "out/".to_string(),
        }
    }
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

/// Parses a real number; also accepts `pi`, `k*pi` and `pi/k`.
pub fn parse_real(text: &str) -> Option<f64> {
    let s = text.trim();
    let pi = std::f64::consts::PI;
    if s == "pi" {
        return Some(pi);
    }
    if let Some(k) = s.strip_suffix("*pi") {
        return k.trim().parse::<f64>().ok().map(|k| k * pi);
    }
    if let Some(k) = s.strip_prefix("pi/") {
        return k.trim().parse::<f64>().ok().map(|k| pi / k);
    }
    s.parse().ok()
}

/// Parses `t, x[, y[, z]]` groups separated by `;`.
pub fn parse_probes(text: &str) -> Result<Vec<Probe>> {
    let mut probes = Vec::new();
    for (i, group) in text.split(';').map(str::trim).filter(|g| !g.is_empty()).enumerate() {
        let vals: Vec<f64> = group
            .split(',')
            .map(|v| parse_real(v).filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::invalid(format!("probe {i}: `{group}` is not a list of finite reals")))?;
        if !(2..=4).contains(&vals.len()) {
            return Err(Error::invalid(format!("probe {i}: expected t, x[, y[, z]], got {} values", vals.len())));
        }
        if vals[0] < 0.0 {
            return Err(Error::invalid(format!("probe {i}: time must be nonnegative")));
        }
        let get = |k: usize| vals.get(k).copied().unwrap_or(0.0);
        probes.push(Probe::with_yz(vals[0], vals[1], get(2), get(3)));
    }
    if probes.is_empty() {
        return Err(Error::invalid("probe list is empty"));
    }
    Ok(probes)
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Raw measure keys, resolved once the model dimension is known.
#[derive(Default)]
struct MeasureKeys {
    kind: Option<String>,
    dim_hat: Option<u8>,
    scale: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    radius: Option<f64>,
    level: Option<f64>,
    nodes: Option<Vec<(f64, f64)>>,
    line: usize,
}

/// Parses configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut section = String::new();
    let (mut dim, mut mu, mut a, mut b) = (1u8, None, None, None);
    let mut model_line = 0;
    let mut m = MeasureKeys::default();
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line, "unterminated section header"))?
                .trim();
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(cfg_err(line, format!("bad section name `{name}`")));
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| cfg_err(line, format!("expected `key = value`, got `{body}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(cfg_err(line, "empty key"));
        }
        let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        if !seen.insert(key.clone()) {
            return Err(cfg_err(line, format!("duplicate key `{key}`")));
        }
        let real = || -> Result<f64> {
            parse_real(v)
                .filter(|x| x.is_finite())
                .ok_or_else(|| cfg_err(line, format!("`{key}`: `{v}` is not a finite real")))
        };
        let int = || -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| cfg_err(line, format!("`{key}`: `{v}` is not a nonnegative integer")))
        };
        let positive = || -> Result<f64> {
            let x = real()?;
            if x > 0.0 {
                Ok(x)
            } else {
                Err(cfg_err(line, format!("`{key}` must be positive")))
            }
        };
        let n = &mut cfg.numerics;
        match key.as_str() {
            "command" => {
                cfg.command = Some(
                    Command::parse(v).ok_or_else(|| cfg_err(line, format!("unknown command `{v}`")))?,
                )
            }
            "model.dim" => {
                dim = v
                    .parse()
                    .ok()
                    .filter(|d| (1..=3).contains(d))
                    .ok_or_else(|| cfg_err(line, "model.dim must be 1, 2 or 3"))?;
                model_line = line;
            }
            "model.mu" => mu = Some(real()?),
            "model.a" => a = Some(real()?),
            "model.b" => b = Some(real()?),
            "measure.kind" => {
                m.kind = Some(v.to_string());
                m.line = line;
            }
            "measure.dim_hat" => {
                m.dim_hat = Some(
                    v.parse()
                        .ok()
                        .filter(|d| *d <= 2)
                        .ok_or_else(|| cfg_err(line, "measure.dim_hat must be 0, 1 or 2"))?,
                )
            }
            "measure.scale" => m.scale = Some(positive()?),
            "measure.beta" => m.beta = Some(real()?),
            "measure.gamma" => m.gamma = Some(real()?),
            "measure.radius" => m.radius = Some(real()?),
            "measure.level" => m.level = Some(real()?),
            "measure.nodes" => {
                m.nodes = Some(parse_table_nodes(v).map_err(|e| cfg_err(line, e.to_string()))?)
            }
            "numerics.n" => n.n_trunc = int()?,
            "numerics.tol" => n.tol = Some(positive()?),
            "numerics.rel_tol" => n.rel_tol = Some(positive()?),
            "numerics.cells" => {
                n.cells = Some(int()?.max(1));
            }
            "numerics.cutoff" => n.cutoff = Some(positive()?),
            "numerics.inner" => n.inner = positive()?,
            "numerics.angular" => n.angular = int()?,
            "numerics.dt" => n.dt = positive()?,
            "numerics.steps" => n.steps = Some(int()?),
            "numerics.replicas" => n.replicas = int()?,
            "numerics.seed" => {
                n.seed = v
                    .parse()
                    .map_err(|_| cfg_err(line, format!("`{key}`: `{v}` is not a u64")))?
            }
            "numerics.eta" => n.eta = real()?,
            "numerics.zeta" => n.zeta = real()?,
            "numerics.h_max" => n.h_max = positive()?,
            "numerics.levels" => n.levels = int()?,
            "numerics.space_increments" => {
                n.space_increments = v
                    .parse()
                    .map_err(|_| cfg_err(line, "numerics.space_increments must be true or false"))?
            }
            "numerics.calibrate_n" => n.calibrate_n = int()?,
            "probes" => cfg.probes = parse_probes(v).map_err(|e| cfg_err(line, e.to_string()))?,
            "output.prefix" => {
                if v.is_empty() {
                    return Err(cfg_err(line, "output.prefix is empty"));
                }
                cfg.output = v.to_string();
            }
            _ => return Err(cfg_err(line, format!("unknown key `{key}`"))),
        }
    }

    let dim = Dim::from_u8(dim).map_err(|e| cfg_err(model_line, e.to_string()))?;
    let (mu_d, a_d) = match dim {
        Dim::One => (1.0, 0.0),
        Dim::Two => (1.0, 0.0),
        Dim::Three => (1.0, 1.0),
    };
    cfg.model = ModelParams::new(dim, mu.unwrap_or(mu_d), a.unwrap_or(a_d), b.unwrap_or(0.0))
        .map_err(|e| cfg_err(model_line, e.to_string()))?;
    cfg.measure = resolve_measure(&m, dim)?;
    Ok(cfg)
}

fn resolve_measure(m: &MeasureKeys, dim: Dim) -> Result<SpectralMeasureSpec> {
    let line = m.line;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| cfg_err(line, format!("measure needs `{name}`")));
    let kind = match m.kind.as_deref() {
        None => match dim {
            Dim::One => MeasureKind::Lebesgue,
            _ => return Err(cfg_err(line, "the 2-d and 3-d models need measure.kind")),
        },
        Some("lebesgue") => MeasureKind::Lebesgue,
        Some("power_law") => MeasureKind::PowerLaw { beta: need(m.beta, "beta")? },
        Some("radial_power") => MeasureKind::RadialPower { gamma: need(m.gamma, "gamma")? },
        Some("compact") => MeasureKind::Compact {
            radius: need(m.radius, "radius")?,
            level: m.level.unwrap_or(1.0),
        },
        Some("table") => MeasureKind::Table {
            nodes: m.nodes.clone().ok_or_else(|| cfg_err(line, "measure needs `nodes`"))?,
        },
        Some(other) => return Err(cfg_err(line, format!("unknown measure kind `{other}`"))),
    };
    let dim_hat = m.dim_hat.unwrap_or(dim.dim_hat());
    SpectralMeasureSpec::with_scale(kind, dim_hat, m.scale.unwrap_or(1.0)).map_err(|e| cfg_err(line, e.to_string()))
}

fn write_body(cfg: &ExperimentConfig, out: &mut String, with_output: bool) {
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    if let Some(c) = cfg.command {
        kv("command", c.as_str().into());
    }
    kv("model.dim", cfg.model.dim.as_u8().to_string());
    kv("model.mu", fmt_real(cfg.model.mu));
    kv("model.a", fmt_real(cfg.model.a));
    kv("model.b", fmt_real(cfg.model.b));
    let m = &cfg.measure;
    kv("measure.kind", m.kind.name().into());
    kv("measure.dim_hat", m.dim_hat.to_string());
    kv("measure.scale", fmt_real(m.scale));
    match &m.kind {
        MeasureKind::Lebesgue => {}
        MeasureKind::PowerLaw { beta } => kv("measure.beta", fmt_real(*beta)),
        MeasureKind::RadialPower { gamma } => kv("measure.gamma", fmt_real(*gamma)),
        MeasureKind::Compact { radius, level } => {
            kv("measure.radius", fmt_real(*radius));
            kv("measure.level", fmt_real(*level));
        }
        MeasureKind::Table { nodes } => {
            let s: Vec<String> = nodes.iter().map(|(r, w)| format!("{}:{}", fmt_real(*r), fmt_real(*w))).collect();
            kv("measure.nodes", s.join(", "));
        }
    }
    let n = &cfg.numerics;
    kv("numerics.n", n.n_trunc.to_string());
    if let Some(t) = n.tol {
        kv("numerics.tol", fmt_real(t));
    }
    if let Some(t) = n.rel_tol {
        kv("numerics.rel_tol", fmt_real(t));
    }
    if let Some(c) = n.cells {
        kv("numerics.cells", c.to_string());
    }
    if let Some(c) = n.cutoff {
        kv("numerics.cutoff", fmt_real(c));
    }
    kv("numerics.inner", fmt_real(n.inner));
    kv("numerics.angular", n.angular.to_string());
    kv("numerics.dt", fmt_real(n.dt));
    if let Some(s) = n.steps {
        kv("numerics.steps", s.to_string());
    }
    kv("numerics.replicas", n.replicas.to_string());
    kv("numerics.seed", n.seed.to_string());
    kv("numerics.eta", fmt_real(n.eta));
    kv("numerics.zeta", fmt_real(n.zeta));
    kv("numerics.h_max", fmt_real(n.h_max));
    kv("numerics.levels", n.levels.to_string());
    kv("numerics.space_increments", n.space_increments.to_string());
    kv("numerics.calibrate_n", n.calibrate_n.to_string());
    let probes: Vec<String> = cfg
        .probes
        .iter()
        .map(|p| format!("{}, {}, {}, {}", fmt_real(p.t), fmt_real(p.x), fmt_real(p.y), fmt_real(p.z)))
        .collect();
    kv("probes", probes.join("; "));
    if with_output {
        kv("output.prefix", cfg.output.clone());
    }
}

/// Canonical text of a configuration.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    write_body(cfg, &mut s, true);
    s
}

/// SHA-256 of the canonical text without the output prefix, as 16 hex
/// digits. Runs that differ only in where they write share a hash.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    write_body(cfg, &mut s, false);
    let digest = Sha256::digest(s.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
