//! Div-curl splitting of a velocity field into `c = Λ⁻¹div u` and
//! `I = Λ⁻¹curl u`, and the inverse `u = -Λ⁻¹∇c - Λ⁻¹div I`.

use num_complex::Complex64;

use super::field::{pair_index, FieldKind, SpectralField};
use super::ops::{self, MEAN_FREE_TOLERANCE};
use crate::error::{NspError, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Compressible and incompressible parts of a velocity field.
#[derive(Clone, Debug)]
pub struct HelmholtzPair {
    /// Scalar `c = Λ⁻¹div u`.
    pub c: SpectralField,
    /// Antisymmetric `I = Λ⁻¹curl u`.
    pub i: SpectralField,
}

impl HelmholtzPair {
    pub fn zeros(grid: &super::Grid) -> Self {
        HelmholtzPair {
            c: SpectralField::zeros(grid, FieldKind::Scalar),
            i: SpectralField::zeros(grid, FieldKind::Antisymmetric),
        }
    }
}

pub fn helmholtz_decompose(u: &SpectralField) -> Result<HelmholtzPair> {
    u.expect_kind(FieldKind::Vector)?;
    let mean = u.mean_magnitude();
    let norm = u.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if mean > MEAN_FREE_TOLERANCE * norm {
        return Err(NspError::NonzeroMeanVelocity(mean));
    }

    let grid = u.grid().clone();
    let dim = grid.dim();
    let mag = grid.magnitude();
    let mut c = SpectralField::zeros(&grid, FieldKind::Scalar);
    let mut inc = SpectralField::zeros(&grid, FieldKind::Antisymmetric);

    {
        let dst = c.component_mut(0);
        for p in 1..grid.len() {
            let inv = ops::lambda_symbol(mag[p], -1.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                acc += I * grid.wavevector(a)[p] * u.component(a)[p];
            }
            dst[p] = acc * inv;
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let (xi_i, xi_j) = (grid.wavevector(i), grid.wavevector(j));
            let (ui, uj) = (u.component(i), u.component(j));
            let dst = inc.component_mut(pair_index(dim, i, j));
            for p in 1..grid.len() {
                let inv = ops::lambda_symbol(mag[p], -1.0);
                dst[p] = I * (xi_j[p] * ui[p] - xi_i[p] * uj[p]) * inv;
            }
        }
    }
    Ok(HelmholtzPair { c, i: inc })
}

pub fn helmholtz_recompose(pair: &HelmholtzPair) -> Result<SpectralField> {
    pair.c.expect_kind(FieldKind::Scalar)?;
    pair.i.expect_kind(FieldKind::Antisymmetric)?;
    pair.c.grid().ensure_same(pair.i.grid())?;

    let grid = pair.c.grid().clone();
    let mut u = ops::div_antisymmetric(&pair.i)?;
    let grad = ops::gradient(&pair.c)?;
    u.axpy(1.0, &grad)?;
    let mag = grid.magnitude();
    u.apply_multiplier(|p| -ops::lambda_symbol(mag[p], -1.0));
    Ok(u)
}
