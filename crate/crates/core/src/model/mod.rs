//! Instances, utilities and their parsimonious bundle representations.
//!
//! A perfectly complementary utility is fully described by the map
//! `t ↦ w(t)` sending each utility level to the smallest bundle achieving it.
//! Every solver in this crate works through that map: [`Utility::level`]
//! inverts it, [`Utility::bundle_at`] evaluates it, and
//! [`Utility::parsimonize`] composes the two.

mod instance;
mod norm;
mod utility;

pub use instance::{Agent, Allocation, Good, Instance};
pub use norm::Norm;
pub use utility::{Breakpoint, Bundle, Tabulated, Tail, Utility};

/// Absolute tolerance used for feasibility and entitlement checks.
pub const TOL: f64 = 1e-9;

/// Coordinate-wise minimum of two bundles.
pub fn pointwise_min(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a.min(*b)).collect()
}

/// `x <= y` coordinate-wise, up to `tol`.
pub fn dominated_by(x: &[f64], y: &[f64], tol: f64) -> bool {
    x.iter().zip(y).all(|(a, b)| *a <= *b + tol)
}
