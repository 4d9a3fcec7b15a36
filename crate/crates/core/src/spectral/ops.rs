//! Fourier multipliers: `Λˢ`, derivatives, Poisson solve.
//!
//! Zero-mode convention: every `Λˢ` with `s ≠ 0` and every `Λ⁻¹`-type
//! operator annihilates the zero mode.

use num_complex::Complex64;

use super::field::{pair_index, FieldKind, SpectralField};
use crate::error::{NspError, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative tolerance on the zero mode for operators requiring mean-free input.
pub const MEAN_FREE_TOLERANCE: f64 = 1e-10;

/// `Λˢ f`: multiply by `|ξ|ˢ`.
pub fn apply_lambda(f: &SpectralField, s: f64) -> Result<SpectralField> {
    if !s.is_finite() {
        return Err(NspError::NonFiniteExponent(s));
    }
    let mut out = f.clone();
    if s == 0.0 {
        return Ok(out);
    }
    let grid = f.grid().clone();
    let mag = grid.magnitude();
    out.apply_multiplier(|p| if mag[p] > 0.0 { mag[p].powf(s) } else { 0.0 });
    Ok(out)
}

/// `|ξ|ˢ` with the zero-mode convention, for callers working per mode.
#[inline]
pub fn lambda_symbol(r: f64, s: f64) -> f64 {
    if r > 0.0 {
        if s == 1.0 {
            r
        } else if s == -1.0 {
            1.0 / r
        } else {
            r.powf(s)
        }
    } else if s == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn check_mean_free(f: &SpectralField) -> Result<()> {
    let mean = f.mean_magnitude();
    let norm = f.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if mean > MEAN_FREE_TOLERANCE * norm {
        return Err(NspError::ChargeImbalance { mean, norm });
    }
    Ok(())
}

/// Solves `Δφ = θ` for mean-free `θ`; the potential is normalized to zero mean.
pub fn poisson_solve(theta: &SpectralField) -> Result<SpectralField> {
    theta.expect_kind(FieldKind::Scalar)?;
    check_mean_free(theta)?;
    let mut out = theta.clone();
    let grid = theta.grid().clone();
    let mag = grid.magnitude();
    out.apply_multiplier(|p| if mag[p] > 0.0 { -1.0 / (mag[p] * mag[p]) } else { 0.0 });
    Ok(out)
}

/// `Δf` component-wise.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    let grid = f.grid().clone();
    let mag = grid.magnitude();
    out.apply_multiplier(|p| -mag[p] * mag[p]);
    out
}

/// `∂_axis` of one coefficient slice into `dst`.
fn partial_into(grid_xi: &[f64], src: &[Complex64], dst: &mut [Complex64]) {
    for ((d, s), &k) in dst.iter_mut().zip(src).zip(grid_xi) {
        *d = I * k * s;
    }
}

/// `∇f` of a scalar.
pub fn gradient(f: &SpectralField) -> Result<SpectralField> {
    f.expect_kind(FieldKind::Scalar)?;
    let grid = f.grid().clone();
    let mut out = SpectralField::zeros(&grid, FieldKind::Vector);
    for a in 0..grid.dim() {
        partial_into(grid.wavevector(a), f.component(0), out.component_mut(a));
    }
    Ok(out)
}

/// All first derivatives `∂_j u_i` of a vector field; component `i * N + j`.
pub fn jacobian(u: &SpectralField) -> Result<Vec<Vec<Complex64>>> {
    u.expect_kind(FieldKind::Vector)?;
    let grid = u.grid();
    let dim = grid.dim();
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut d = grid.zero_buffer();
            partial_into(grid.wavevector(j), u.component(i), &mut d);
            out.push(d);
        }
    }
    Ok(out)
}

/// `div u = Σ_j ∂_j u_j`.
pub fn divergence(u: &SpectralField) -> Result<SpectralField> {
    u.expect_kind(FieldKind::Vector)?;
    let grid = u.grid().clone();
    let mut out = SpectralField::zeros(&grid, FieldKind::Scalar);
    let dst = out.component_mut(0);
    for a in 0..grid.dim() {
        for ((d, s), &k) in dst.iter_mut().zip(u.component(a)).zip(grid.wavevector(a)) {
            *d += I * k * s;
        }
    }
    Ok(out)
}

/// `(curl u)_{ij} = ∂_j u_i - ∂_i u_j`, stored as the `i < j` entries.
pub fn curl(u: &SpectralField) -> Result<SpectralField> {
    u.expect_kind(FieldKind::Vector)?;
    let grid = u.grid().clone();
    let dim = grid.dim();
    let mut out = SpectralField::zeros(&grid, FieldKind::Antisymmetric);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let (xi_i, xi_j) = (grid.wavevector(i), grid.wavevector(j));
            let (ui, uj) = (u.component(i), u.component(j));
            let dst = out.component_mut(pair_index(dim, i, j));
            for p in 0..grid.len() {
                dst[p] = I * (xi_j[p] * ui[p] - xi_i[p] * uj[p]);
            }
        }
    }
    Ok(out)
}

/// Entry `(i, j)` of an antisymmetric field as a signed view.
pub fn antisym_entry(a: &SpectralField, i: usize, j: usize) -> Option<(&[Complex64], f64)> {
    let dim = a.grid().dim();
    if i == j {
        None
    } else if i < j {
        Some((a.component(pair_index(dim, i, j)), 1.0))
    } else {
        Some((a.component(pair_index(dim, j, i)), -1.0))
    }
}

/// `(div A)_i = Σ_j ∂_j A_{ij}` for antisymmetric `A`.
pub fn div_antisymmetric(a: &SpectralField) -> Result<SpectralField> {
    a.expect_kind(FieldKind::Antisymmetric)?;
    let grid = a.grid().clone();
    let dim = grid.dim();
    let mut out = SpectralField::zeros(&grid, FieldKind::Vector);
    for i in 0..dim {
        for j in 0..dim {
            let Some((aij, sign)) = antisym_entry(a, i, j) else {
                continue;
            };
            let xi_j = grid.wavevector(j);
            let dst = out.component_mut(i);
            for p in 0..grid.len() {
                dst[p] += I * (sign * xi_j[p]) * aij[p];
            }
        }
    }
    Ok(out)
}

/// `div div A = Σ_{ij} ∂_i ∂_j A_{ij}`; vanishes for antisymmetric `A`.
pub fn div_div(a: &SpectralField) -> Result<SpectralField> {
    divergence(&div_antisymmetric(a)?)
}
