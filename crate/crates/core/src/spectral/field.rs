use num_complex::Complex64;

use super::fft::{self, Direction};
use super::grid::Grid;
use crate::error::{NspError, Result};

/// Shape of a field's component set.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FieldKind {
    Scalar,
    /// `N` components.
    Vector,
    /// Antisymmetric `N x N` matrix stored as its `N(N-1)/2` upper entries
    /// `(i, j)`, `i < j`, in lexicographic order.
    Antisymmetric,
}

impl FieldKind {
    pub fn components(self, dim: usize) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => dim,
            FieldKind::Antisymmetric => dim * (dim - 1) / 2,
        }
    }
}

/// Storage slot of the antisymmetric entry `(i, j)`, `i < j`.
pub fn pair_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    // rows before i contribute (dim-1) + (dim-2) + ... entries
    i * (2 * dim - i - 1) / 2 + (j - i - 1)
}

/// Fourier coefficients of a real field on a periodic grid.
///
/// Coefficients are stored component-major, each component in the grid's
/// lexicographic lattice order.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    kind: FieldKind,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid, kind: FieldKind) -> Self {
        let n = kind.components(grid.dim()) * grid.len();
        SpectralField {
            grid: grid.clone(),
            kind,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_coeffs(grid: &Grid, kind: FieldKind, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = kind.components(grid.dim()) * grid.len();
        if coeffs.len() != expected {
            return Err(NspError::SizeMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            kind,
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn ncomp(&self) -> usize {
        self.kind.components(self.grid.dim())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    pub(crate) fn expect_kind(&self, kind: FieldKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(NspError::KindMismatch {
                expected: kind,
                found: self.kind,
            })
        }
    }

    pub(crate) fn ensure_compatible(&self, other: &SpectralField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        other.expect_kind(self.kind)
    }

    /// Multiplies every component by the real lattice multiplier `m(p)`.
    pub fn apply_multiplier(&mut self, m: impl Fn(usize) -> f64) {
        let n = self.grid.len();
        for comp in self.coeffs.chunks_mut(n) {
            for (p, z) in comp.iter_mut().enumerate() {
                *z *= m(p);
            }
        }
    }

    /// Zeroes every coefficient where `keep` is false.
    pub fn retain(&mut self, keep: &[bool]) {
        let n = self.grid.len();
        for comp in self.coeffs.chunks_mut(n) {
            for (z, &k) in comp.iter_mut().zip(keep) {
                if !k {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    pub fn zero_nyquist(&mut self) {
        let grid = self.grid.clone();
        let keep: Vec<bool> = grid.nyquist_mask().iter().map(|&n| !n).collect();
        self.retain(&keep);
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|z| *z *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.ensure_compatible(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `‖f‖_{L²}` over the box, `(L^N Σ |f̂|²)^{1/2}`, summed over components.
    pub fn norm_l2(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Real `L²` inner product `∫ f·g dx`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.ensure_compatible(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(self.grid.volume() * s)
    }

    /// Zero-mode coefficient (spatial mean) of component `c`.
    pub fn mean(&self, c: usize) -> Complex64 {
        self.component(c)[0]
    }

    /// Largest zero-mode magnitude over components.
    pub fn mean_magnitude(&self) -> f64 {
        (0..self.ncomp()).map(|c| self.mean(c).norm()).fold(0.0, f64::max)
    }

    pub fn remove_mean(&mut self) {
        for c in 0..self.ncomp() {
            self.component_mut(c)[0] = Complex64::new(0.0, 0.0);
        }
    }

    /// Largest `|f̂(-ξ) - conj f̂(ξ)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.len();
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for comp in self.coeffs.chunks(n) {
            for p in 0..n {
                let q = self.grid.conjugate_point(p);
                worst = worst.max((comp[q] - comp[p].conj()).norm());
            }
        }
        worst / scale
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Values on the grid nodes (real part of the inverse transform).
    pub fn to_physical(&self) -> RealField {
        let n = self.grid.len();
        let mut values = Vec::with_capacity(self.coeffs.len());
        let mut buf = self.grid.zero_buffer();
        for comp in self.coeffs.chunks(n) {
            buf.copy_from_slice(comp);
            fft::transform(&self.grid, &mut buf, Direction::Inverse);
            values.extend(buf.iter().map(|z| z.re));
        }
        RealField {
            grid: self.grid.clone(),
            kind: self.kind,
            values,
        }
    }
}

/// Real nodal values of a field, component-major.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Grid,
    kind: FieldKind,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &Grid, kind: FieldKind) -> Self {
        RealField {
            grid: grid.clone(),
            kind,
            values: vec![0.0; kind.components(grid.dim()) * grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        let expected = kind.components(grid.dim()) * grid.len();
        if values.len() != expected {
            return Err(NspError::SizeMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(RealField {
            grid: grid.clone(),
            kind,
            values,
        })
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let mut x = vec![0.0; dim];
        let values = (0..grid.len())
            .map(|p| {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = grid.coordinate(p, a);
                }
                f(&x)
            })
            .collect();
        RealField {
            grid: grid.clone(),
            kind: FieldKind::Scalar,
            values,
        }
    }

    /// Builds a vector field from one nodal function per component.
    pub fn vector_from_fn(grid: &Grid, f: impl Fn(usize, &[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let mut x = vec![0.0; dim];
        let mut values = Vec::with_capacity(dim * grid.len());
        for c in 0..dim {
            for p in 0..grid.len() {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = grid.coordinate(p, a);
                }
                values.push(f(c, &x));
            }
        }
        RealField {
            grid: grid.clone(),
            kind: FieldKind::Vector,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self, c: usize) -> f64 {
        let comp = self.component(c);
        comp.iter().sum::<f64>() / comp.len() as f64
    }

    /// `‖f‖_{L²}` by the midpoint rule on the nodes (exact for grid functions).
    pub fn norm_l2(&self) -> f64 {
        let cell = self.grid.spacing().powi(self.grid.dim() as i32);
        (cell * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Forward transform; Nyquist coefficients are zeroed.
    pub fn to_spectral(&self) -> SpectralField {
        let n = self.grid.len();
        let mut coeffs = Vec::with_capacity(self.values.len());
        let mut buf = self.grid.zero_buffer();
        for comp in self.values.chunks(n) {
            for (b, &v) in buf.iter_mut().zip(comp) {
                *b = Complex64::new(v, 0.0);
            }
            fft::transform(&self.grid, &mut buf, Direction::Forward);
            coeffs.extend_from_slice(&buf);
        }
        let mut out = SpectralField {
            grid: self.grid.clone(),
            kind: self.kind,
            coeffs,
        };
        out.zero_nyquist();
        out
    }
}

/// Inverse transform of every component to nodal values.
pub fn transform_to_physical(f: &SpectralField) -> RealField {
    f.to_physical()
}

/// Forward transform of nodal values; errors when the value count does not
/// match the grid and kind.
pub fn transform_to_spectral(grid: &Grid, kind: FieldKind, values: &[f64]) -> Result<SpectralField> {
    Ok(RealField::from_values(grid, kind, values.to_vec())?.to_spectral())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_indices_are_dense() {
        assert_eq!(pair_index(2, 0, 1), 0);
        assert_eq!(pair_index(3, 0, 1), 0);
        assert_eq!(pair_index(3, 0, 2), 1);
        assert_eq!(pair_index(3, 1, 2), 2);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = Grid::periodic(2, 8).unwrap();
        let err = transform_to_spectral(&g, FieldKind::Scalar, &[0.0; 10]).unwrap_err();
        assert!(matches!(
            err,
            NspError::SizeMismatch {
                expected: 64,
                found: 10
            }
        ));
    }

    #[test]
    fn cosine_has_two_half_amplitude_modes() {
        let g = Grid::periodic(2, 16).unwrap();
        let f = RealField::from_fn(&g, |x| (2.0 * x[0]).cos()).to_spectral();
        let p = g.point_of(&[2, 0]).unwrap();
        let q = g.point_of(&[-2, 0]).unwrap();
        assert!((f.coeffs()[p] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.coeffs()[q] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(f.hermitian_defect() < 1e-14);
    }
}
