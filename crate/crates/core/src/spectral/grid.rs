use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NspError, Result};

/// Uniform periodic grid on the torus `[0, L)^N` with `M` points per axis.
///
/// Cheap to clone: the wavenumber tables and FFT plans are shared.
#[derive(Clone)]
pub struct Grid(Arc<GridData>);

struct GridData {
    dim: usize,
    points: usize,
    length: f64,
    len: usize,
    /// Integer wave indices per axis, component-major (`dim * len`).
    index: Vec<i64>,
    /// Physical wavevector components `2π/L * index`, component-major.
    wavevector: Vec<f64>,
    /// `|ξ|` per lattice point.
    magnitude: Vec<f64>,
    /// True on every lattice point with a Nyquist index on some axis.
    nyquist: Vec<bool>,
    /// Two-thirds rule: true where every `|index| <= M/3`.
    dealias: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    /// Grid on the default box `L = 2π`, where lattice wavenumbers are integers.
    pub fn periodic(dim: usize, points: usize) -> Result<Self> {
        Self::new(dim, points, 2.0 * PI)
    }

    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(NspError::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(NspError::InvalidGrid(format!(
                "points per axis {points} must be a power of two >= 8"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(NspError::InvalidGrid(format!("box length {length} must be positive")));
        }

        let len = points.pow(dim as u32);
        let half = (points / 2) as i64;
        let base = 2.0 * PI / length;
        let third = points as f64 / 3.0;

        let mut index = vec![0i64; dim * len];
        let mut wavevector = vec![0.0; dim * len];
        let mut magnitude = vec![0.0; len];
        let mut nyquist = vec![false; len];
        let mut dealias = vec![true; len];

        for p in 0..len {
            let mut rem = p;
            let mut sq = 0.0;
            for axis in (0..dim).rev() {
                let j = (rem % points) as i64;
                rem /= points;
                let k = if j > half { j - points as i64 } else { j };
                if k == half {
                    nyquist[p] = true;
                }
                if (k.abs() as f64) > third {
                    dealias[p] = false;
                }
                index[axis * len + p] = k;
                let xi = base * k as f64;
                wavevector[axis * len + p] = xi;
                sq += xi * xi;
            }
            magnitude[p] = sq.sqrt();
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);

        Ok(Grid(Arc::new(GridData {
            dim,
            points,
            length,
            len,
            index,
            wavevector,
            magnitude,
            nyquist,
            dealias,
            forward,
            inverse,
        })))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.0.points
    }

    pub fn length(&self) -> f64 {
        self.0.length
    }

    /// Total number of lattice points, `M^N`.
    pub fn len(&self) -> usize {
        self.0.len
    }

    pub fn is_empty(&self) -> bool {
        self.0.len == 0
    }

    /// Volume of the box, `L^N`.
    pub fn volume(&self) -> f64 {
        self.0.length.powi(self.0.dim as i32)
    }

    /// Grid spacing `L / M`.
    pub fn spacing(&self) -> f64 {
        self.0.length / self.0.points as f64
    }

    /// Lowest nonzero wavenumber magnitude, `2π / L`.
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.0.length
    }

    /// Wavevector component `ξ_axis` at every lattice point.
    pub fn wavevector(&self, axis: usize) -> &[f64] {
        &self.0.wavevector[axis * self.0.len..(axis + 1) * self.0.len]
    }

    /// Signed integer wave index along `axis` at every lattice point.
    pub fn wave_index(&self, axis: usize) -> &[i64] {
        &self.0.index[axis * self.0.len..(axis + 1) * self.0.len]
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.0.magnitude
    }

    pub fn nyquist_mask(&self) -> &[bool] {
        &self.0.nyquist
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.0.dealias
    }

    /// Largest `|ξ|` among non-Nyquist lattice points.
    pub fn max_magnitude(&self) -> f64 {
        self.0
            .magnitude
            .iter()
            .zip(&self.0.nyquist)
            .filter(|(_, &nyq)| !nyq)
            .map(|(&r, _)| r)
            .fold(0.0, f64::max)
    }

    /// Flat index of the lattice point with the given signed wave indices,
    /// or `None` when an index falls outside the band.
    pub fn point_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.0.dim {
            return None;
        }
        let m = self.0.points as i64;
        let half = m / 2;
        let mut p = 0usize;
        for &ki in k {
            if ki <= -half || ki > half {
                return None;
            }
            let j = ki.rem_euclid(m) as usize;
            p = p * self.0.points + j;
        }
        Some(p)
    }

    /// Flat index of the lattice point `-ξ` for point `p`.
    pub fn conjugate_point(&self, p: usize) -> usize {
        let m = self.0.points;
        let mut rem = p;
        let mut q = 0usize;
        let mut scale = 1usize;
        for _ in 0..self.0.dim {
            let j = rem % m;
            rem /= m;
            q += ((m - j) % m) * scale;
            scale *= m;
        }
        q
    }

    /// Physical coordinate of grid node `p` along `axis`.
    pub fn coordinate(&self, p: usize, axis: usize) -> f64 {
        let stride = self.0.points.pow((self.0.dim - 1 - axis) as u32);
        let j = (p / stride) % self.0.points;
        j as f64 * self.spacing()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.dim == other.0.dim
                && self.0.points == other.0.points
                && self.0.length.to_bits() == other.0.length.to_bits())
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(NspError::GridMismatch)
        }
    }

    pub(crate) fn plans(&self) -> (&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>) {
        (&self.0.forward, &self.0.inverse)
    }

    pub(crate) fn zero_buffer(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.0.len]
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.0.dim)
            .field("points", &self.0.points)
            .field("length", &self.0.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::periodic(1, 16).is_err());
        assert!(Grid::periodic(4, 16).is_err());
        assert!(Grid::periodic(2, 4).is_err());
        assert!(Grid::periodic(2, 12).is_err());
        assert!(Grid::new(2, 16, -1.0).is_err());
    }

    #[test]
    fn lattice_is_symmetric_off_nyquist() {
        let g = Grid::periodic(3, 8).unwrap();
        for p in 0..g.len() {
            let q = g.conjugate_point(p);
            assert_eq!(g.conjugate_point(q), p);
            if !g.nyquist_mask()[p] {
                for a in 0..3 {
                    assert_eq!(g.wave_index(a)[p], -g.wave_index(a)[q]);
                }
            }
        }
    }

    #[test]
    fn point_lookup_round_trips() {
        let g = Grid::periodic(2, 16).unwrap();
        let p = g.point_of(&[3, -5]).unwrap();
        assert_eq!(g.wave_index(0)[p], 3);
        assert_eq!(g.wave_index(1)[p], -5);
        assert!(g.point_of(&[9, 0]).is_none());
        assert_eq!(g.magnitude()[p], (34.0f64).sqrt());
    }

    #[test]
    fn dealias_keeps_two_thirds() {
        let g = Grid::periodic(2, 32).unwrap();
        let kept = g.dealias_mask().iter().filter(|&&d| d).count();
        // |k| <= 10 on each axis
        assert_eq!(kept, 21 * 21);
    }
}
