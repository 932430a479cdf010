//! Numerical laboratory for the semiclassical operator calculus on SL(2,R):
//! coadjoint orbits and their canonical measure, symbols on the dual of the
//! Lie algebra, the tempered spherical principal series in the circle model,
//! the quantizer `Op_h`, Frobenius-type functionals (synthetic and built from
//! Maass cusp form data), torus contraction experiments on the nilpotent cone
//! and SL(2,Z) lattice counting.

pub mod contraction;
pub mod error;
pub mod fitting;
pub mod frobenius;
pub mod lattice;
pub mod lie;
pub(crate) mod nufft;
pub mod orbits;
pub(crate) mod quad;
pub mod quantize;
pub mod repn;
pub mod symbols;

pub use error::Error;

/// Library version stamped into experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Convenient complex alias used throughout.
pub type C64 = num_complex::Complex64;
