//! Numerical probes of the inertial force field `∇P` of incompressible flow.

// `!(a > b)` checks reject NaN; index loops mirror the component formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fields;
pub mod flux;
pub mod geometry;
pub mod pressure;
pub mod quadrature;
pub mod scalar;
pub mod semigroup;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Mat3, Real, Vec3};

/// `f64` instantiations of the main types.
pub mod aliases {
    pub type GridField = crate::fields::GridField<f64>;
    pub type PeriodicGrid = crate::semigroup::PeriodicGrid<f64>;
    pub type StandardField = crate::fields::StandardField<f64>;
    pub type FourierModes = crate::fields::FourierModes<f64>;
    pub type Block = crate::geometry::Block<f64>;
    pub type Surface = crate::geometry::Surface<f64>;
    pub type SimState = crate::sim::SimState<f64>;
    pub type Trajectory = crate::sim::Trajectory<f64>;
}
