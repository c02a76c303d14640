//! Ignition-type reaction-diffusion fronts in stationary random media.
//!
//! The crate simulates `u_t = Δu + f(x, u, ω)` on uniform grids, measures arrival
//! times, front speeds and transition widths over seed ensembles, evolves the
//! effective Hamilton-Jacobi dynamics, and compares rescaled solutions against it.

pub mod edt;
pub mod error;
pub mod fftconv;
pub mod grid;
pub mod hj;
pub mod homog;
pub mod init;
pub mod io;
pub mod medium;
pub mod par;
pub mod quad;
pub mod solver;
pub mod speed;

pub use error::{Error, Result};
