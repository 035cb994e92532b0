//! Third-order equations describing pseudospherical surfaces: frame
//! verification, second fundamental forms, a periodic solver and immersion.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod families;
pub mod functions;
pub mod immersion;
pub mod jetspace;
pub mod lattice;
pub mod ode;
pub mod pdesolver;
pub mod reference;
pub mod sampling;
pub mod secondform;
pub mod scalar;
pub mod taylor;
pub mod verifier;

pub use scalar::Scalar;

pub type Jet64 = jetspace::Jet<f64>;
pub type FamilySpec64 = families::FamilySpec<f64>;
pub type FrameCoeffs64 = families::FrameCoeffs<f64>;
pub type Grid64 = pdesolver::Grid1D<f64>;
pub type SolutionField64 = pdesolver::SolutionField<f64>;
