//! Simulation of two-dimensional spatial adiabatic passage of a single atom
//! in three tunnel-coupled harmonic traps arranged in a triangle, and of the
//! single-atom interferometer built on the level crossing at the critical
//! trap angle.
//!
//! Two backends solve the same protocol:
//!
//! * [`three_mode`] — the analytic 3×3 model spanned by the asymptotic trap
//!   ground states, with closed-form spectrum and midpoint-exponential
//!   propagation,
//! * [`grid2d`] — the full 2D Schrödinger (optionally Gross–Pitaevskii)
//!   equation on a periodic grid, integrated by spectral split-operator
//!   stepping over the moving truncated-harmonic landscape.
//!
//! Everything is expressed in trap natural units: ħ = m = ω = 1, lengths in
//! α⁻¹ = √(ħ/mω), times in ω⁻¹, energies in ħω.

pub mod config;
pub mod couplings;
pub mod grid2d;
pub mod interferometer;
pub mod output;
pub mod pulses;
pub mod three_mode;

mod error;

pub use error::{Error, Result};
