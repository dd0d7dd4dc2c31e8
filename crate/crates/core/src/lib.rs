//! Numerics on the Heisenberg group ℍⁿ: group law, exact kernel calculus, cubature,
//! smooth atoms with vanishing moments, their Newtonian potentials and the maximal functions
//! that control the potentials.

pub mod error;
pub mod gauss;
pub mod group;
pub mod kernel;
pub mod polar;
pub mod quadrature;
pub mod testfn;
pub mod atoms;
pub mod potential;
pub mod table;
pub mod optimize;
pub mod maximal;

pub use error::{AtomError, GroupError, KernelError, MaximalError, PotentialError, QuadError};
pub use group::{GroupContext, HPoint, KoranyiBall, Scalar};
pub use kernel::{KernelExpr, MultiIndex, Side};
pub use quadrature::{QuadResult, QuadSpec};

/// Double-precision point, the type used throughout the numerical modules.
pub type Point = HPoint<f64>;
/// Single-precision point.
pub type Point32 = HPoint<f32>;
/// Exact rational point.
pub type ExactPoint = HPoint<num_rational::BigRational>;
