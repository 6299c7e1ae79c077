//! Core library for a coupled-map-lattice workbench.
//!
//! The crate evolves finite particle configurations under composed
//! local-map/interaction dynamics, detects condensation and
//! synchronization, and numerically certifies the transfer-operator
//! machinery behind those phenomena: bounded-variation norms,
//! Lasota-Yorke inequalities, discontinuous-perturbation bounds and the
//! nonlinear mean-field operator on the circle.
//!
//! Modules:
//! - [`space`]: phase spaces (interval, circle, products), configurations
//!   and geometric primitives.
//! - [`maps`]: piecewise-affine local maps with expansion metadata.
//! - [`interact`]: interaction maps (threshold, closest-neighbor,
//!   potential-weighted, diffusive, graph-restricted) and cluster
//!   decompositions.
//! - [`measure`]: signed measures on a uniform grid with variation norms.
//! - [`ulam`]: Ulam discretization of transfer operators and the
//!   certification experiments built on it.
//! - [`sim`]: the lattice simulator, seeded ensembles and the exact
//!   special-purpose experiments.
//! - [`meanfield`]: the measure-dependent mean-field operator.

pub mod interact;
pub mod maps;
pub mod meanfield;
pub mod measure;
pub mod sim;
pub mod space;
pub mod ulam;

/// Exact rational scalar used for map data, Ulam matrix entries and all
/// certification arithmetic.
pub type Rat = num_rational::BigRational;

pub(crate) mod numutil {
    use super::Rat;
    use num_bigint::BigInt;
    use num_traits::FromPrimitive;

    pub fn rat_int(n: i64) -> Rat {
        Rat::from_integer(BigInt::from(n))
    }

    pub fn ratio(num: i64, den: i64) -> Rat {
        Rat::new(BigInt::from(num), BigInt::from(den))
    }

    /// Exact conversion; every finite f64 is a dyadic rational.
    pub fn rat_from_f64(x: f64) -> Option<Rat> {
        Rat::from_f64(x)
    }

    pub fn rat_to_f64(x: &Rat) -> f64 {
        num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
    }
}

pub use numutil::{rat_from_f64, rat_to_f64};
