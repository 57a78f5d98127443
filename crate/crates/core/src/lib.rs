//! Numerical workbench for Weyl multipliers on C^n and Fourier multipliers on
//! the Heisenberg group, built on a truncated Hermite basis.
//!
//! Layers, bottom up: [`hermite`] (basis and ladder algebra), [`weyl`]
//! (grid functions and the Weyl transform), [`derivation`] (non-commutative
//! derivations, dyadic conditions, heat bands), [`maximal`] (dyadic maximal
//! functions and weights), [`rbound`] (Rademacher averages and multiplier
//! families), [`fiber`] (λ-fibers of Heisenberg-group functions) and
//! [`experiment`] (named, reproducible experiment runs).

pub mod derivation;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod hermite;
pub mod maximal;
pub mod rbound;
pub mod spectral;
pub mod weyl;

pub use error::{Error, Result};
pub use hermite::{Basis, HermiteContext, OperatorMatrix};
pub use weyl::{PhaseGrid, PhaseGridFunction, WeylEngine};

pub type C64 = num_complex::Complex64;
