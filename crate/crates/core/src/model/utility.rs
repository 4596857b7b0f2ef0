use serde::{Deserialize, Serialize};

use super::norm::Norm;

/// A bundle of goods as produced by a parsimonious bundle representation.
///
/// Utility levels above a satiation cap have no bundle achieving them; they
/// map to [`Bundle::Infinite`] rather than to some large numeric value.
#[derive(Debug, Clone, PartialEq)]
pub enum Bundle {
    Finite(Vec<f64>),
    Infinite,
}

impl Bundle {
    pub fn as_finite(&self) -> Option<&[f64]> {
        match self {
            Bundle::Finite(x) => Some(x),
            Bundle::Infinite => None,
        }
    }

    pub fn into_finite(self) -> Option<Vec<f64>> {
        match self {
            Bundle::Finite(x) => Some(x),
            Bundle::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Bundle::Finite(_))
    }
}

/// What a tabulated representation does past its last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Utility is capped at the last breakpoint's level.
    Satiate,
    /// The last segment's direction is extended indefinitely.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub w: Vec<f64>,
}

/// A perfectly complementary utility given through its parsimonious bundle
/// representation `w(t)`, linearly interpolated between breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub breakpoints: Vec<Breakpoint>,
    pub tail: Tail,
}

/// An agent's preferences over bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    /// `u(x) = min_{j: r_j > 0} x_j / r_j`.
    Leontief { r: Vec<f64> },
    /// Leontief capped at level 1, reached at the bundle `r` itself.
    SatiableLeontief { r: Vec<f64> },
    TabulatedPc(Tabulated),
}

impl Utility {
    pub fn leontief(r: impl Into<Vec<f64>>) -> Utility {
        Utility::Leontief { r: r.into() }
    }

    pub fn satiable_leontief(r: impl Into<Vec<f64>>) -> Utility {
        Utility::SatiableLeontief { r: r.into() }
    }

    /// Builds a tabulated utility from `(t, w(t))` pairs.
    pub fn tabulated(points: &[(f64, &[f64])], tail: Tail) -> Utility {
        Utility::TabulatedPc(Tabulated {
            breakpoints: points
                .iter()
                .map(|&(t, w)| Breakpoint { t, w: w.to_vec() })
                .collect(),
            tail,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Utility::Leontief { .. } => "leontief",
            Utility::SatiableLeontief { .. } => "satiable_leontief",
            Utility::TabulatedPc(_) => "tabulated_pc",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Utility::Leontief { r } | Utility::SatiableLeontief { r } => r.len(),
            Utility::TabulatedPc(tab) => tab.breakpoints.first().map_or(0, |b| b.w.len()),
        }
    }

    /// Demand proportions for the Leontief family.
    pub fn proportions(&self) -> Option<&[f64]> {
        match self {
            Utility::Leontief { r } | Utility::SatiableLeontief { r } => Some(r),
            Utility::TabulatedPc(_) => None,
        }
    }

    /// Maximal attainable utility level, if the utility is satiable.
    pub fn cap(&self) -> Option<f64> {
        match self {
            Utility::Leontief { .. } => None,
            Utility::SatiableLeontief { .. } => Some(1.0),
            Utility::TabulatedPc(tab) => match tab.tail {
                Tail::Satiate => Some(tab.last().t),
                Tail::Linear => None,
            },
        }
    }

    pub fn is_satiable(&self) -> bool {
        self.cap().is_some()
    }

    /// Whether good `j` is ever needed to raise this utility.
    pub fn demands(&self, j: usize) -> bool {
        match self {
            Utility::Leontief { r } | Utility::SatiableLeontief { r } => r[j] > 0.0,
            Utility::TabulatedPc(tab) => tab.breakpoints.iter().any(|b| b.w[j] > 0.0),
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), String> {
        match self {
            Utility::Leontief { r } | Utility::SatiableLeontief { r } => {
                if r.len() != m {
                    return Err(format!("proportions have length {} but there are {m} goods", r.len()));
                }
                if r.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err("proportions must be finite and nonnegative".into());
                }
                if r.iter().all(|v| *v == 0.0) {
                    return Err("proportions must not all be zero".into());
                }
                Ok(())
            }
            Utility::TabulatedPc(tab) => tab.validate(m),
        }
    }

    /// Utility level of bundle `x`.
    pub fn level(&self, x: &[f64]) -> f64 {
        match self {
            Utility::Leontief { r } => leontief_level(r, x),
            Utility::SatiableLeontief { r } => leontief_level(r, x).min(1.0),
            Utility::TabulatedPc(tab) => tab.level(x),
        }
    }

    /// The parsimonious bundle `w(t)` achieving level `t`.
    pub fn bundle_at(&self, t: f64) -> Bundle {
        debug_assert!(t >= 0.0);
        match self {
            Utility::Leontief { r } => Bundle::Finite(scale(r, t)),
            Utility::SatiableLeontief { r } => {
                if t > 1.0 {
                    Bundle::Infinite
                } else {
                    Bundle::Finite(scale(r, t))
                }
            }
            Utility::TabulatedPc(tab) => tab.bundle_at(t),
        }
    }

    /// The smallest bundle below `x` with the same utility.
    pub fn parsimonize(&self, x: &[f64]) -> Vec<f64> {
        let t = self.level(x);
        self.bundle_at(t)
            .into_finite()
            .expect("level of a finite bundle never exceeds the cap")
    }

    /// Whether a strictly higher level always has a strictly larger norm.
    pub fn is_compatible(&self, norm: &Norm) -> bool {
        if norm.is_finite_p() {
            return true;
        }
        match self {
            Utility::Leontief { .. } | Utility::SatiableLeontief { .. } => true,
            Utility::TabulatedPc(tab) => tab.max_norm_strictly_increasing(),
        }
    }
}

fn leontief_level(r: &[f64], x: &[f64]) -> f64 {
    r.iter()
        .zip(x)
        .filter(|(rj, _)| **rj > 0.0)
        .map(|(rj, xj)| xj / rj)
        .fold(f64::INFINITY, f64::min)
}

fn scale(r: &[f64], t: f64) -> Vec<f64> {
    r.iter().map(|rj| rj * t).collect()
}

impl Tabulated {
    fn last(&self) -> &Breakpoint {
        self.breakpoints.last().expect("validated: at least two breakpoints")
    }

    fn validate(&self, m: usize) -> Result<(), String> {
        let bps = &self.breakpoints;
        if bps.len() < 2 {
            return Err("a tabulated utility needs at least two breakpoints".into());
        }
        if bps[0].t != 0.0 || bps[0].w.iter().any(|v| *v != 0.0) {
            return Err("the first breakpoint must be t = 0 with the zero bundle".into());
        }
        for (k, b) in bps.iter().enumerate() {
            if b.w.len() != m {
                return Err(format!("breakpoint {k} has {} coordinates but there are {m} goods", b.w.len()));
            }
            if !b.t.is_finite() || b.w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(format!("breakpoint {k} must be finite and nonnegative"));
            }
        }
        for (k, pair) in bps.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if b.t <= a.t {
                return Err(format!("breakpoint levels must strictly increase (segment {k})"));
            }
            if a.w.iter().zip(&b.w).any(|(x, y)| y < x) {
                return Err(format!("w must be coordinate-wise non-decreasing (segment {k})"));
            }
            if a.w.iter().zip(&b.w).all(|(x, y)| y <= x) {
                return Err(format!("w must strictly increase on every segment (segment {k} is flat)"));
            }
        }
        Ok(())
    }

    /// Slope of coordinate `j` on segment `k` (between breakpoints `k` and `k + 1`).
    fn slope(&self, k: usize, j: usize) -> f64 {
        let (a, b) = (&self.breakpoints[k], &self.breakpoints[k + 1]);
        (b.w[j] - a.w[j]) / (b.t - a.t)
    }

    fn bundle_at(&self, t: f64) -> Bundle {
        let bps = &self.breakpoints;
        let last = bps.len() - 1;
        if t > bps[last].t {
            return match self.tail {
                Tail::Satiate => Bundle::Infinite,
                Tail::Linear => {
                    let dt = t - bps[last].t;
                    Bundle::Finite(
                        (0..bps[last].w.len())
                            .map(|j| bps[last].w[j] + self.slope(last - 1, j) * dt)
                            .collect(),
                    )
                }
            };
        }
        // Segment k with t_k <= t <= t_{k+1}.
        let k = bps.partition_point(|b| b.t <= t).saturating_sub(1).min(last - 1);
        let (a, b) = (&bps[k], &bps[k + 1]);
        let lambda = (t - a.t) / (b.t - a.t);
        Bundle::Finite(
            a.w.iter()
                .zip(&b.w)
                .map(|(x, y)| x + lambda * (y - x))
                .collect(),
        )
    }

    /// `max { t : w(t) <= x }`, resolved per coordinate and then minimised.
    fn level(&self, x: &[f64]) -> f64 {
        let bps = &self.breakpoints;
        let last = bps.len() - 1;
        let mut level = match self.tail {
            Tail::Satiate => bps[last].t,
            Tail::Linear => f64::INFINITY,
        };
        for (j, &xj) in x.iter().enumerate() {
            // Breakpoints with w_j <= x_j form a prefix; the first always qualifies.
            let k = bps.partition_point(|b| b.w[j] <= xj) - 1;
            let tj = if k == last {
                match self.tail {
                    Tail::Satiate => bps[last].t,
                    Tail::Linear => {
                        let d = self.slope(last - 1, j);
                        if d > 0.0 {
                            bps[last].t + (xj - bps[last].w[j]) / d
                        } else {
                            f64::INFINITY
                        }
                    }
                }
            } else {
                let (a, b) = (&bps[k], &bps[k + 1]);
                // b.w[j] > x_j >= a.w[j], so the segment is strictly rising in j.
                a.t + (xj - a.w[j]) * (b.t - a.t) / (b.w[j] - a.w[j])
            };
            level = level.min(tj);
        }
        level
    }

    /// `‖w(t)‖∞` is convex and piecewise linear on each segment, so it is
    /// strictly increasing there iff some maximal coordinate at the segment
    /// start has positive slope.
    fn max_norm_strictly_increasing(&self) -> bool {
        (0..self.breakpoints.len() - 1).all(|k| {
            let w = &self.breakpoints[k].w;
            let top = w.iter().cloned().fold(0.0, f64::max);
            (0..w.len())
                .filter(|&j| w[j] >= top - 1e-12)
                .any(|j| self.slope(k, j) > 0.0)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tab_two_segments() -> Utility {
        Utility::tabulated(
            &[(0.0, &[0.0, 0.0]), (1.0, &[1.0, 0.5]), (2.0, &[1.0, 1.0])],
            Tail::Linear,
        )
    }

    #[test]
    fn leontief_level_uses_support() {
        assert_eq!(Utility::leontief([2.0, 1.0]).level(&[1.0, 0.3]), 0.3);
        assert_eq!(Utility::leontief([1.0, 0.0]).level(&[0.4, 0.0]), 0.4);
        assert_eq!(Utility::satiable_leontief([0.4, 0.4]).level(&[1.0, 1.0]), 1.0);
    }

    #[test]
    fn tabulated_level_inverts_w() {
        let u = Utility::tabulated(&[(0.0, &[0.0, 0.0]), (1.0, &[1.0, 2.0])], Tail::Satiate);
        assert!((u.level(&[0.5, 2.0]) - 0.5).abs() < 1e-15);
        // Plateau on coordinate 0 resolves to the largest level.
        let u = tab_two_segments();
        assert!((u.level(&[1.0, 0.75]) - 1.5).abs() < 1e-15);
        assert!((u.level(&[5.0, 2.0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bundle_at_cases() {
        assert_eq!(
            Utility::leontief([2.0, 1.0]).bundle_at(0.5),
            Bundle::Finite(vec![1.0, 0.5])
        );
        assert_eq!(Utility::satiable_leontief([0.4, 0.4]).bundle_at(1.2), Bundle::Infinite);
        assert_eq!(
            Utility::satiable_leontief([0.4, 0.4]).bundle_at(1.0),
            Bundle::Finite(vec![0.4, 0.4])
        );
        assert_eq!(tab_two_segments().bundle_at(0.0), Bundle::Finite(vec![0.0, 0.0]));
        assert_eq!(tab_two_segments().bundle_at(3.0), Bundle::Finite(vec![1.0, 1.5]));
        let sat = Utility::tabulated(&[(0.0, &[0.0]), (2.0, &[1.0])], Tail::Satiate);
        assert_eq!(sat.bundle_at(2.5), Bundle::Infinite);
    }

    #[test]
    fn parsimonize_examples() {
        assert_eq!(Utility::leontief([1.0, 1.0]).parsimonize(&[0.3, 0.7]), vec![0.3, 0.3]);
        assert_eq!(Utility::leontief([1.0, 1.0]).parsimonize(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(
            Utility::satiable_leontief([0.4, 0.4]).parsimonize(&[1.0, 1.0]),
            vec![0.4, 0.4]
        );
    }

    #[test]
    fn compatibility() {
        assert!(Utility::leontief([2.0, 1.0]).is_compatible(&Norm::Linf));
        assert!(!tab_two_segments().is_compatible(&Norm::Linf));
        assert!(tab_two_segments().is_compatible(&Norm::L1));
        // Max coordinate flat at first, then overtaken: still not strictly increasing.
        let u = Utility::tabulated(
            &[(0.0, &[0.0, 0.0]), (1.0, &[1.0, 0.5]), (2.0, &[1.0, 1.5])],
            Tail::Satiate,
        );
        assert!(!u.is_compatible(&Norm::Linf));
        let u = Utility::tabulated(
            &[(0.0, &[0.0, 0.0]), (1.0, &[1.0, 0.5]), (2.0, &[2.0, 0.5])],
            Tail::Satiate,
        );
        assert!(u.is_compatible(&Norm::Linf));
    }

    #[test]
    fn tabulated_validation() {
        let flat = Utility::tabulated(&[(0.0, &[0.0]), (1.0, &[1.0]), (2.0, &[1.0])], Tail::Linear);
        assert!(flat.validate(1).is_err());
        let decreasing = Utility::tabulated(&[(0.0, &[0.0, 0.0]), (1.0, &[1.0, 1.0]), (2.0, &[2.0, 0.5])], Tail::Linear);
        assert!(decreasing.validate(2).is_err());
        let bad_origin = Utility::tabulated(&[(0.0, &[0.1]), (1.0, &[1.0])], Tail::Linear);
        assert!(bad_origin.validate(1).is_err());
        assert!(tab_two_segments().validate(2).is_ok());
        assert!(Utility::leontief([0.0, 0.0]).validate(2).is_err());
        assert!(Utility::leontief([1.0]).validate(2).is_err());
    }

    #[test]
    fn json_shape() {
        let u: Utility = serde_json::from_str(r#"{"kind":"leontief","r":[1.0,0.5]}"#).unwrap();
        assert_eq!(u, Utility::leontief([1.0, 0.5]));
        let u: Utility = serde_json::from_str(
            r#"{"kind":"tabulated_pc","breakpoints":[{"t":0,"w":[0]},{"t":1,"w":[2]}],"tail":"satiate"}"#,
        )
        .unwrap();
        assert_eq!(u.cap(), Some(1.0));
    }
}
