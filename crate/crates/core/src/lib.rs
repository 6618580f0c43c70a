//! Numerical toolkit for classical and semiclassical scattering by Stark
//! Hamiltonians h = ½(η² + |ζ|²) − x + q(x, y) with short-range q.

pub mod classical;
pub mod dd;
pub mod error;
pub mod fit;
pub mod kernel;
pub mod ode;
pub mod oscillatory;
pub mod parabolic;
pub mod potentials;
pub mod quadrature;
pub mod special;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
