//! Fair division of divisible resources among agents whose preferences are
//! perfectly complementary: an agent only values goods in fixed proportions,
//! so any amount beyond its current bottleneck is wasted on it.
//!
//! Two fairness notions are implemented:
//!
//! * [`grf`] computes the unique allocation that is fair with respect to a
//!   norm (L1, L2, L∞ or any Lp), by water-filling on entitlement-scaled
//!   norms of the agents' bundles.
//! * [`market`] computes bottleneck-based fair (BBF) allocations from the
//!   equilibrium of a Fisher market with budgets equal to entitlements.
//!
//! [`checks`] verifies the properties these allocations are supposed to
//! have, independently of the solvers that produced them.
//!
//! ```
//! use fairshare::{grf_allocate, Instance, Norm, Utility};
//!
//! let third = 1.0 / 3.0;
//! let instance = Instance::from_parts(
//!     &[1.0, 1.0],
//!     vec![
//!         (third, Utility::leontief([1.0, 0.0])),
//!         (third, Utility::leontief([0.0, 1.0])),
//!         (third, Utility::leontief([1.0, 1.0])),
//!     ],
//! )?;
//! let fair = grf_allocate(&instance, &Norm::Linf)?;
//! assert_eq!(fair.allocation.row(2), &[0.5, 0.5]);
//! # Ok::<(), fairshare::Error>(())
//! ```

pub mod checks;
mod error;
pub mod grf;
pub mod market;
pub mod model;
pub mod random;

pub use checks::{fairer_than, Fairer, PropertyReport, Witness};
pub use error::{Error, Result};
pub use grf::{grf_allocate, GrfSolution};
pub use market::{bbf_allocate, BbfSolution};
pub use model::{Agent, Allocation, Bundle, Good, Instance, Norm, Tail, Utility};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/utilities.md")]
    mod utilities {}
    #[doc = include_str!("../../../book/src/water-filling.md")]
    mod water_filling {}
    #[doc = include_str!("../../../book/src/markets.md")]
    mod markets {}
    #[doc = include_str!("../../../book/src/checks.md")]
    mod checks {}
}
