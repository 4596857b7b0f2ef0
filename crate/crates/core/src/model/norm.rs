use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A monotone, absolutely homogeneous bundle quantifier.
///
/// The fairness notions in this crate only rely on monotonicity and
/// continuity, but all the provided variants are genuine norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L1,
    L2,
    Linf,
    /// General `L_p` with finite `p >= 1`.
    Lp(f64),
}

impl Norm {
    pub fn lp(p: f64) -> Result<Norm> {
        let norm = Norm::Lp(p);
        norm.validate()?;
        Ok(norm)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Norm::Lp(p) if !(p.is_finite() && p >= 1.0) => Err(Error::InvalidInstance(format!(
                "lp norm needs a finite exponent p >= 1, got {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// Exponent of the norm; `None` for `L∞`.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Norm::L1 => Some(1.0),
            Norm::L2 => Some(2.0),
            Norm::Linf => None,
            Norm::Lp(p) => Some(p),
        }
    }

    pub fn is_finite_p(&self) -> bool {
        self.exponent().is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Linf => x.iter().fold(0.0, |acc, v| acc.max(v.abs())),
            Norm::Lp(p) => {
                // Scale by the largest coordinate so large p does not overflow.
                let scale = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                scale
                    * x.iter()
                        .map(|v| (v.abs() / scale).powf(p))
                        .sum::<f64>()
                        .powf(1.0 / p)
            }
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => f.write_str("l1"),
            Norm::L2 => f.write_str("l2"),
            Norm::Linf => f.write_str("linf"),
            Norm::Lp(p) => write!(f, "lp:{p}"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Norm> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l_inf" | "inf" => Ok(Norm::Linf),
            other => {
                let p = other
                    .strip_prefix("lp:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidInstance(format!(
                            "unknown norm `{s}`; expected l1, l2, linf or lp:<p>"
                        ))
                    })?;
                if p.is_infinite() {
                    return Ok(Norm::Linf);
                }
                Norm::lp(p)
            }
        }
    }
}
