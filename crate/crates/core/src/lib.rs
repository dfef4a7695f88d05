//! Steady-state and dynamical simulation of a four-level Rydberg
//! electromagnetically-induced-transparency (EIT) ladder with a microwave
//! field coupling two Rydberg states and a mean-field interaction shift that
//! produces optical bistability and scan-direction hysteresis.
//!
//! Level ordering is fixed: `g` (0) ground, `i` (1) intermediate, `r1` (2)
//! first Rydberg state, `r2` (3) microwave-coupled Rydberg state. The probe
//! couples (g, i), the coupling laser (i, r1), the microwave (r1, r2).
//!
//! Unit conventions, used everywhere without exception:
//! - angular frequencies (Rabi frequencies, detunings, decay rates) in rad/us;
//!   config files and the CLI take plain MHz and multiply by 2*pi,
//! - positive detuning = blue detuning,
//! - velocities in m/s (numerically equal to um/us), wavelengths in nm,
//! - time in us.

pub mod analysis;
pub mod config;
pub mod model;
pub mod output;
pub mod selfcheck;
pub mod solver;
pub mod sweep;
pub mod units;

pub use model::ModelConfig;
pub use solver::DensityMatrix;
