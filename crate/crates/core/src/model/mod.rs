//! Operator coefficients, mode weights and the strict Levi gate.

mod admissibility;
mod measure;

use std::fmt;

pub use admissibility::{
    admissibility_nu2, admissibility_nu3, classify_improper, AdmissibilityReport, CutoffStep,
    ImproperOutcome, Verdict, ALPHA_GRID_LEN, CONVERGENCE_RTOL, START_CUTOFF,
};
pub use measure::{parse_table_nodes, MeasureKind, SpectralMeasureSpec};

use crate::error::{finite, Error, Result};

/// Spatial dimension of the model operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
    Three,
}

impl Dim {
    pub fn as_u8(self) -> u8 {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_u8(d: u8) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::invalid(format!("model dimension must be 1, 2 or 3, got {d}"))),
        }
    }

    /// Dimension of the (η̂) or (η̂, ζ̂) marginal of the noise measure.
    pub fn dim_hat(self) -> u8 {
        self.as_u8() - 1
    }
}

/// Coefficients of P₁, P₂ or P₃.
///
/// The constructor only checks syntax. A Levi violation is representable so
/// that it can be reported; every kernel constructor calls
/// [`ModelParams::require_levi`] before doing anything else.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub dim: Dim,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    pub fn new(dim: Dim, mu: f64, a: f64, b: f64) -> Result<Self> {
        finite(mu, "mu")?;
        finite(a, "a")?;
        finite(b, "b")?;
        match dim {
            Dim::One => {
                if mu != 1.0 || a != 0.0 || b != 0.0 {
                    return Err(Error::invalid("the 1-d operator has fixed coefficients (mu, a, b) = (1, 0, 0)"));
                }
            }
            Dim::Two => {
                if mu <= 0.0 {
                    return Err(Error::invalid("mu must be positive"));
                }
                if a != 0.0 {
                    return Err(Error::invalid("the 2-d operator has no zeta term; set a = 0"));
                }
            }
            Dim::Three => {
                if mu <= 0.0 {
                    return Err(Error::invalid("mu must be positive"));
                }
                if a <= 0.0 {
                    return Err(Error::invalid("the 3-d operator needs a > 0"));
                }
            }
        }
        Ok(Self { dim, mu, a, b })
    }

    pub fn one_dim() -> Self {
        Self {
            dim: Dim::One,
            mu: 1.0,
            a: 0.0,
            b: 0.0,
        }
    }

    pub fn two_dim(mu: f64, b: f64) -> Result<Self> {
        Self::new(Dim::Two, mu, 0.0, b)
    }

    pub fn three_dim(mu: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(Dim::Three, mu, a, b)
    }

    /// μ − |b|, the Levi margin.
    pub fn levi_margin(&self) -> f64 {
        self.mu - self.b.abs()
    }

    pub fn require_levi(&self) -> Result<()> {
        let report = levi_check(self);
        if report.passed {
            Ok(())
        } else {
            Err(Error::LeviViolation(report))
        }
    }
}

/// Outcome of [`levi_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LeviReport {
    pub passed: bool,
    pub mu: f64,
    pub b: f64,
    pub margin: f64,
}

impl fmt::Display for LeviReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            write!(f, "Levi condition holds: |b| = {} < mu = {} (margin {})", self.b.abs(), self.mu, self.margin)
        } else {
            let side = if self.b > 0.0 { "eta < 0" } else { "eta > 0" };
            write!(
                f,
                "Levi condition violated: margin mu - |b| = {} <= 0 (mu = {}, b = {}); \
                 rho_0(-eta) = (mu + sgn(eta) b)|eta| is nonpositive for {side}, \
                 so the kernel cannot be constructed",
                self.margin, self.mu, self.b
            )
        }
    }
}

/// Strict check `|b| < μ`.
pub fn levi_check(params: &ModelParams) -> LeviReport {
    let margin = params.levi_margin();
    LeviReport {
        passed: margin > 0.0,
        mu: params.mu,
        b: params.b,
        margin,
    }
}

/// ρₙ(η, ζ) = μ|η|(2n+1) + aζ² − bη, without validation.
#[inline]
pub(crate) fn rho_unchecked(p: &ModelParams, n: usize, eta: f64, zeta: f64) -> f64 {
    p.mu * eta.abs() * (2 * n + 1) as f64 + p.a * zeta * zeta - p.b * eta
}

/// ρₙ(η, ζ) after the Levi gate. For the 2-d model ζ must be 0.
pub fn rho(params: &ModelParams, n: usize, eta: f64, zeta: f64) -> Result<f64> {
    params.require_levi()?;
    finite(eta, "eta")?;
    finite(zeta, "zeta")?;
    if params.dim == Dim::Two && zeta != 0.0 {
        return Err(Error::invalid("the 2-d mode weight takes zeta = 0"));
    }
    Ok(rho_unchecked(params, n, eta, zeta))
}

/// A mode weight together with its arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeWeight {
    pub n: usize,
    pub eta: f64,
    pub zeta: f64,
    pub value: f64,
}

impl ModeWeight {
    pub fn new(params: &ModelParams, n: usize, eta: f64, zeta: f64) -> Result<Self> {
        Ok(Self {
            n,
            eta,
            zeta,
            value: rho(params, n, eta, zeta)?,
        })
    }
}
