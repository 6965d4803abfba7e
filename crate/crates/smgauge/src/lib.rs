//! m-equivariant Schrödinger maps from ℝ² into the hyperbolic plane H²,
//! written in the Coulomb-gauge variables ψ⁺, ψ⁻.
//!
//! The crate is `no_std` with `alloc`. It contains:
//!
//! * [`bessel`] and [`hankel`]: Bessel functions, Bessel zeros and the
//!   order-k quasi-discrete Hankel transform (exact free propagator).
//! * [`grid`] and [`gauge`]: the cell-centered radial grid, equivariant
//!   fields and the gauge-field algebra (A₂, A₀, residuals).
//! * [`reconstruct`] and [`frame`]: the comp1 solver, pair completion and
//!   the moving-frame reconstruction of the map.
//! * [`evolution`]: Strang splitting of the gauged Schrödinger system.
//! * [`diagnostics`]: momenta, virial identities and norm trackers.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bessel;
pub mod diagnostics;
mod error;
pub mod evolution;
pub mod frame;
pub mod gauge;
pub mod grid;
pub mod hankel;
pub mod interp;
mod linalg;
pub mod reconstruct;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Target selector μ: −1 is the hyperbolic plane H², +1 the sphere.
///
/// Formulas carry μ symbolically; every solver that depends on the
/// H² geometry rejects [`Target::Sphere`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Hyperbolic,
    Sphere,
}

impl Target {
    pub fn mu(self) -> f64 {
        match self {
            Target::Hyperbolic => -1.0,
            Target::Sphere => 1.0,
        }
    }

    pub fn from_mu(mu: i32) -> Option<Self> {
        match mu {
            -1 => Some(Target::Hyperbolic),
            1 => Some(Target::Sphere),
            _ => None,
        }
    }

    pub(crate) fn require_hyperbolic(self) -> Result<()> {
        match self {
            Target::Hyperbolic => Ok(()),
            Target::Sphere => Err(Error::UnsupportedTarget),
        }
    }
}

impl Default for Target {
    fn default() -> Self {
        Target::Hyperbolic
    }
}
