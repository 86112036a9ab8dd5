//! Heat transport out of an isotropic XY spin chain coupled at one end to a
//! Gaussian heat bath.
//!
//! The chain is diagonalised by free fermions ([`spectrum`]); the bath enters
//! through the finite-time spectral function ([`bath`]); the second-order
//! master equation is applied without forming superoperators
//! ([`liouvillian`]) and integrated with the concatenation scheme
//! ([`dynamics`]). [`secular`] holds the closed-form rate-equation limit and
//! [`spinflip`] the unitary response to a boundary spin flip.

pub mod bath;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod liouvillian;
pub mod quad;
pub mod random;
pub mod secular;
pub mod spectrum;
pub mod spinflip;
pub mod state;
pub mod validate;

pub use bath::BathParams;
pub use dynamics::{IntegratorConfig, Scheme, Trajectory};
pub use error::{Error, Result};
pub use liouvillian::{Matrix, Memory, WindowMode};
pub use spectrum::{ChainParams, OccupationConfig};
pub use state::DensityMatrix;
