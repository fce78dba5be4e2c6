use crate::error::{Error, Result};

/// Closed catalogue of noise spectral densities.
///
/// Every density is even (dim_hat = 1) or radial (dim_hat = 2) and is
/// described by a profile `f(r)` with r = |η̂| or r = (η̂² + ζ̂²)^{1/2}.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    /// `f(r) = 1`.
    Lebesgue,
    /// `f(r) = (1 + r²)^{-β}`, dim_hat = 1 only.
    PowerLaw { beta: f64 },
    /// `w(r²) = (1 + r²)^{-γ}`, dim_hat = 2 only.
    RadialPower { gamma: f64 },
    /// `f(r) = level` for r ≤ radius, 0 beyond.
    Compact { radius: f64, level: f64 },
    /// Piecewise-linear profile through `(r, f)` nodes, flat before the
    /// first node and zero after the last.
    Table { nodes: Vec<(f64, f64)> },
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Lebesgue => "lebesgue",
            MeasureKind::PowerLaw { .. } => "power_law",
            MeasureKind::RadialPower { .. } => "radial_power",
            MeasureKind::Compact { .. } => "compact",
            MeasureKind::Table { .. } => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasureSpec {
    pub kind: MeasureKind,
    pub dim_hat: u8,
    /// Positive multiplier applied to the profile.
    pub scale: f64,
}

impl SpectralMeasureSpec {
    pub fn new(kind: MeasureKind, dim_hat: u8) -> Result<Self> {
        Self::with_scale(kind, dim_hat, 1.0)
    }

    pub fn with_scale(kind: MeasureKind, dim_hat: u8, scale: f64) -> Result<Self> {
        if dim_hat > 2 {
            return Err(Error::invalid("dim_hat must be 0, 1 or 2"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("measure scale must be positive and finite"));
        }
        match &kind {
            MeasureKind::Lebesgue => {}
            MeasureKind::PowerLaw { beta } => {
                if dim_hat != 1 {
                    return Err(Error::invalid("power_law is a dim_hat = 1 density"));
                }
                if !(beta.is_finite() && *beta >= 0.0) {
                    return Err(Error::invalid("power_law beta must be finite and >= 0"));
                }
            }
            MeasureKind::RadialPower { gamma } => {
                if dim_hat != 2 {
                    return Err(Error::invalid("radial_power is a dim_hat = 2 density"));
                }
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(Error::invalid("radial_power gamma must be finite and >= 0"));
                }
            }
            MeasureKind::Compact { radius, level } => {
                if dim_hat == 0 {
                    return Err(Error::invalid("compact needs dim_hat 1 or 2"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::invalid("compact radius must be positive"));
                }
                if !(level.is_finite() && *level >= 0.0) {
                    return Err(Error::invalid("compact level must be nonnegative"));
                }
            }
            MeasureKind::Table { nodes } => {
                if dim_hat == 0 {
                    return Err(Error::invalid("table needs dim_hat 1 or 2"));
                }
                validate_nodes(nodes)?;
            }
        }
        Ok(Self { kind, dim_hat, scale })
    }

    /// Profile value at radius `r ≥ 0`.
    pub fn profile(&self, r: f64) -> f64 {
        let r = r.abs();
        self.scale
            * match &self.kind {
                MeasureKind::Lebesgue => 1.0,
                MeasureKind::PowerLaw { beta } => power_decay(r, *beta),
                MeasureKind::RadialPower { gamma } => power_decay(r, *gamma),
                MeasureKind::Compact { radius, level } => {
                    if r <= *radius {
                        *level
                    } else {
                        0.0
                    }
                }
                MeasureKind::Table { nodes } => interpolate(nodes, r),
            }
    }

    /// `ln f(r)` including the scale; `-inf` where the profile vanishes.
    ///
    /// Lets callers multiply by growing powers of r without intermediate
    /// underflow.
    pub fn ln_profile(&self, r: f64) -> f64 {
        let r = r.abs();
        let base = match &self.kind {
            MeasureKind::Lebesgue => 0.0,
            MeasureKind::PowerLaw { beta } => ln_power_decay(r, *beta),
            MeasureKind::RadialPower { gamma } => ln_power_decay(r, *gamma),
            _ => return self.profile(r).ln(),
        };
        self.scale.ln() + base
    }

    /// Radius beyond which the profile vanishes.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.kind {
            MeasureKind::Compact { radius, .. } => Some(*radius),
            MeasureKind::Table { nodes } => nodes.last().map(|n| n.0),
            _ => None,
        }
    }

    /// Interior points where the profile has a kink or jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            MeasureKind::Compact { radius, .. } => vec![*radius],
            MeasureKind::Table { nodes } => nodes.iter().map(|n| n.0).filter(|r| *r > 0.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Upper bound on `∫_R^∞ r^p f(r) dr` (one side, scale included), or
    /// `None` when the integral diverges for this profile.
    pub fn tail_moment(&self, p: f64, cutoff: f64) -> Option<f64> {
        if let Some(s) = self.support_radius() {
            if cutoff >= s {
                return Some(0.0);
            }
        }
        let decay = match &self.kind {
            MeasureKind::PowerLaw { beta } => *beta,
            MeasureKind::RadialPower { gamma } => *gamma,
            MeasureKind::Lebesgue => return None,
            // bounded support beyond the cutoff: bound by sup · ∫ r^p over the rest
            MeasureKind::Compact { .. } | MeasureKind::Table { .. } => {
                let s = self.support_radius().unwrap_or(cutoff);
                let sup = self.sup_profile(cutoff, s);
                let moment = if (p + 1.0).abs() < 1e-12 {
                    (s / cutoff).ln()
                } else {
                    (s.powf(p + 1.0) - cutoff.powf(p + 1.0)) / (p + 1.0)
                };
                return Some(sup * moment);
            }
        };
        // (1 + r²)^{-d} ≤ r^{-2d}
        let e = 2.0 * decay - p - 1.0;
        if e <= 0.0 || cutoff <= 0.0 {
            return None;
        }
        Some(self.scale * (-e * cutoff.ln()).exp() / e)
    }

    /// Maximum of the profile over `[lo, hi]`.
    pub fn sup_profile(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            MeasureKind::Lebesgue | MeasureKind::PowerLaw { .. } | MeasureKind::RadialPower { .. } => {
                self.profile(lo.max(0.0))
            }
            MeasureKind::Compact { radius, level } => {
                if lo <= *radius {
                    self.scale * level
                } else {
                    0.0
                }
            }
            MeasureKind::Table { nodes } => {
                let mut m = self.profile(lo).max(self.profile(hi));
                for &(r, w) in nodes {
                    if r >= lo && r <= hi {
                        m = m.max(self.scale * w);
                    }
                }
                m
            }
        }
    }
}

/// `ln (1 + r²)^{-d}` without overflowing r² for huge r.
#[inline]
pub(crate) fn ln_power_decay(r: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if r <= 1.0 {
        -d * (r * r).ln_1p()
    } else {
        -2.0 * d * r.ln() - d * (1.0 / (r * r)).ln_1p()
    }
}

#[inline]
fn power_decay(r: f64, d: f64) -> f64 {
    ln_power_decay(r, d).exp()
}

fn interpolate(nodes: &[(f64, f64)], r: f64) -> f64 {
    let first = nodes[0];
    if r <= first.0 {
        return first.1;
    }
    let last = nodes[nodes.len() - 1];
    if r > last.0 {
        return 0.0;
    }
    let k = nodes.partition_point(|n| n.0 < r);
    let (r0, w0) = nodes[k - 1];
    let (r1, w1) = nodes[k];
    if r1 == r0 {
        return w1;
    }
    w0 + (w1 - w0) * (r - r0) / (r1 - r0)
}

fn validate_nodes(nodes: &[(f64, f64)]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::invalid("table needs at least one node"));
    }
    let mut prev = -1.0;
    for &(r, w) in nodes {
        if !(r.is_finite() && w.is_finite()) {
            return Err(Error::invalid("table nodes must be finite"));
        }
        if r < 0.0 || w < 0.0 {
            return Err(Error::invalid("table radii and weights must be nonnegative"));
        }
        if r <= prev {
            return Err(Error::invalid("table radii must be strictly increasing"));
        }
        prev = r;
    }
    Ok(())
}

/// Parses `r:w` pairs separated by commas and/or whitespace.
pub fn parse_table_nodes(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut nodes = Vec::new();
    for item in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        let (r, w) = item
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("table node `{item}` is not of the form r:w")))?;
        let r: f64 = r
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad table radius `{r}`")))?;
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad table weight `{w}`")))?;
        nodes.push((r, w));
    }
    validate_nodes(&nodes)?;
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_respect_dim_hat() {
        assert!(SpectralMeasureSpec::new(MeasureKind::PowerLaw { beta: 0.3 }, 2).is_err());
        assert!(SpectralMeasureSpec::new(MeasureKind::RadialPower { gamma: 0.75 }, 1).is_err());
        assert!(SpectralMeasureSpec::new(MeasureKind::RadialPower { gamma: 0.75 }, 2).is_ok());
        assert!(SpectralMeasureSpec::with_scale(MeasureKind::Lebesgue, 0, 0.0).is_err());
    }

    #[test]
    fn power_profile_is_overflow_safe() {
        let m = SpectralMeasureSpec::new(MeasureKind::PowerLaw { beta: 0.3 }, 1).unwrap();
        assert_eq!(m.profile(0.0), 1.0);
        let big = m.profile(1e200);
        assert!(big > 0.0 && (big.ln() + 0.6 * 1e200f64.ln()).abs() < 1e-9);
        assert!((m.profile(2.0) - 5f64.powf(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn table_interpolates_and_truncates() {
        let nodes = parse_table_nodes("0:2, 1:1 3:0.5").unwrap();
        let m = SpectralMeasureSpec::new(MeasureKind::Table { nodes }, 1).unwrap();
        assert_eq!(m.profile(0.5), 1.5);
        assert_eq!(m.profile(2.0), 0.75);
        assert_eq!(m.profile(3.5), 0.0);
        assert_eq!(m.support_radius(), Some(3.0));
        assert!(parse_table_nodes("1:1, 0:1").is_err());
        assert!(parse_table_nodes("1;1").is_err());
        assert!(parse_table_nodes("").is_err());
    }

    #[test]
    fn tail_moment_majorizes() {
        let m = SpectralMeasureSpec::new(MeasureKind::PowerLaw { beta: 0.8 }, 1).unwrap();
        // ∫_R^∞ r^{-1/2}(1+r²)^{-0.8} dr ≤ R^{-1.1}/1.1
        let bound = m.tail_moment(-0.5, 10.0).unwrap();
        assert!((bound - 10f64.powf(-1.1) / 1.1).abs() < 1e-15);
        assert!(m.tail_moment(1.0, 10.0).is_none());
        let c = SpectralMeasureSpec::new(MeasureKind::Compact { radius: 2.0, level: 1.0 }, 1).unwrap();
        assert_eq!(c.tail_moment(3.0, 5.0), Some(0.0));
        assert!((c.tail_moment(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }
}
