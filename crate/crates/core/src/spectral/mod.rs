//! Periodic-grid Fourier machinery: grids, spectral fields, FFTs, Fourier
//! multipliers and the Helmholtz (div-curl) split.

mod fft;
mod field;
mod grid;
mod helmholtz;
mod ops;

pub use field::{pair_index, transform_to_physical, transform_to_spectral, FieldKind, RealField, SpectralField};
pub use grid::Grid;
pub use helmholtz::{helmholtz_decompose, helmholtz_recompose, HelmholtzPair};
pub use ops::{
    antisym_entry, apply_lambda, curl, div_antisymmetric, div_div, divergence, gradient, jacobian, lambda_symbol,
    laplacian, poisson_solve, MEAN_FREE_TOLERANCE,
};

pub(crate) use fft::{forward_real_many, inverse_real_many};
