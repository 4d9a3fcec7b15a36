//! Pseudo-spectral solver for the compressible Navier-Stokes-Poisson system on
//! a periodic box, written in the (h, c, I) variables: `h = Λ⁻¹(ρ - ρ̄)`, the
//! compressible velocity part `c = Λ⁻¹div u` and the incompressible part
//! `I = Λ⁻¹curl u`.
//!
//! Alongside the solver lives a Littlewood-Paley analysis engine (dyadic
//! blocks, homogeneous and hybrid Besov norms) and an energy monitor that
//! evaluates the per-shell functionals αₖ² along trajectories.
//!
//! Module map:
//! - [`spectral`]: grids, Fourier fields, multipliers, Poisson and Helmholtz.
//! - [`littlewood_paley`]: cutoff profile, dyadic blocks, Besov norms, product and composition ratios.
//! - [`model`]: fluid parameters, state, nonlinear terms, the ζ density guard.
//! - [`stepper`]: frequency truncation, exact linear propagator, ETDRK2 / IMEX-BDF2.
//! - [`energy`]: estimate constants, shell energies, damping/smoothing diagnostics.
//! - [`harness`]: configuration, initial data, experiment drivers, record sinks.

pub mod energy;
pub mod error;
pub mod harness;
pub mod littlewood_paley;
pub mod model;
pub mod spectral;
pub mod stepper;

pub use error::{NspError, Result};
