//! Per-mode linear propagators for the stiff part.
//!
//! On `(ĥ, ĉ)` the linear part is `A(r) = [[0, -ρ̄], [r²+1, -ν_c r²]]`, on `Î`
//! it is the scalar rate `-ν_i r²`, `r = |ξ|`. The exponential integrators
//! need `e^{dtA}`, `dt φ₁(dtA)` and `dt φ₂(dtA)`, all read off one
//! exponential of the augmented block matrix
//!
//! ```text
//! [[dtA, dt·I, 0], [0, 0, I], [0, 0, 0]]
//! ```
//!
//! whose top block row is `[e^{dtA}, dt φ₁(dtA), dt φ₂(dtA)]`.

use std::collections::HashMap;

use crate::error::{NspError, Result};
use crate::model::FluidParams;
use crate::spectral::Grid;

pub type Mat2 = [[f64; 2]; 2];

/// `A(r)` for the `(ĥ, ĉ)` pair.
pub fn coupling_matrix(r: f64, params: &FluidParams) -> Mat2 {
    let r2 = r * r;
    [[0.0, -params.rho_bar], [r2 + 1.0, -params.nu_c() * r2]]
}

/// Largest real part of the eigenvalues of a real 2x2 matrix.
pub fn spectral_abscissa(a: &Mat2) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        0.5 * tr + disc.sqrt()
    } else {
        0.5 * tr
    }
}

/// Dense matrix exponential by Taylor series with scaling and squaring.
pub fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scale = 2f64.powi(-squarings);
    let x: Vec<Vec<f64>> = a.iter().map(|row| row.iter().map(|v| v * scale).collect()).collect();
    let mut result = identity(n);
    let mut term = identity(n);
    // ‖x‖ ≤ 1/4: 18 terms leave a remainder below 4^-19 / 19!
    for k in 1..=18 {
        term = matmul(&term, &x);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            row.iter_mut().for_each(|v| *v *= inv);
        }
        for (r, t) in result.iter_mut().zip(&term) {
            for (a, b) in r.iter_mut().zip(t) {
                *a += b;
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// `(e^{dtA}, dt φ₁(dtA), dt φ₂(dtA))` for a 2x2 `A`.
pub fn phi_functions(a: &Mat2, dt: f64) -> (Mat2, Mat2, Mat2) {
    let mut aug = vec![vec![0.0; 6]; 6];
    for i in 0..2 {
        for j in 0..2 {
            aug[i][j] = dt * a[i][j];
        }
        aug[i][i + 2] = dt;
        aug[i + 2][i + 4] = 1.0;
    }
    let e = expm(&aug);
    let block = |off: usize| -> Mat2 { [[e[0][off], e[0][off + 1]], [e[1][off], e[1][off + 1]]] };
    (block(0), block(2), block(4))
}

/// `(e^z, φ₁(z), φ₂(z))` for real scalar `z`.
pub fn scalar_phi(z: f64) -> (f64, f64, f64) {
    let e = z.exp();
    if z.abs() < 0.05 {
        // Taylor: φ₁ = Σ zᵏ/(k+1)!, φ₂ = Σ zᵏ/(k+2)!
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        let mut zk = 1.0;
        let mut f1 = 1.0; // (k+1)!
        let mut f2 = 2.0; // (k+2)!
        for k in 0..10 {
            p1 += zk / f1;
            p2 += zk / f2;
            zk *= z;
            f1 *= (k + 2) as f64;
            f2 *= (k + 3) as f64;
        }
        (e, p1, p2)
    } else {
        let em1 = z.exp_m1();
        (e, em1 / z, (em1 - z) / (z * z))
    }
}

pub fn mat_vec(m: &Mat2, x: [num_complex::Complex64; 2]) -> [num_complex::Complex64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

/// Coefficients of one distinct `|ξ|²`.
#[derive(Clone, Copy, Debug)]
pub struct ModeCoefficients {
    /// `e^{dtA}`, `dt φ₁(dtA)`, `dt φ₂(dtA)` on `(ĥ, ĉ)`.
    pub e: Mat2,
    pub p1: Mat2,
    pub p2: Mat2,
    /// `(3I - 2dtA)⁻¹` for the BDF2 solve.
    pub bdf_inv: Mat2,
    /// Scalar counterparts on `Î`.
    pub ei: f64,
    pub p1i: f64,
    pub p2i: f64,
    pub bdf_inv_i: f64,
}

/// Precomputed linear propagators for every lattice point of a grid.
#[derive(Clone, Debug)]
pub struct LinearBlock {
    dt: f64,
    /// Index into `modes` for each lattice point.
    slot: Vec<u32>,
    modes: Vec<ModeCoefficients>,
}

impl LinearBlock {
    /// Builds the table; errors if any `A(ξ)` has an eigenvalue with
    /// positive real part.
    pub fn new(grid: &Grid, params: &FluidParams, dt: f64) -> Result<Self> {
        let mag = grid.magnitude();
        let mut index: HashMap<u64, u32> = HashMap::new();
        let mut modes = Vec::new();
        let mut slot = Vec::with_capacity(grid.len());
        for &r in mag {
            let key = (r * r).to_bits();
            let s = match index.get(&key) {
                Some(&s) => s,
                None => {
                    let a = coupling_matrix(r, params);
                    let abscissa = spectral_abscissa(&a);
                    if r > 0.0 && abscissa > 0.0 {
                        return Err(NspError::InvalidStepper(format!(
                            "linear block unstable at |xi| = {r}: spectral abscissa {abscissa:e}"
                        )));
                    }
                    let (e, p1, p2) = phi_functions(&a, dt);
                    let (ei, p1i, p2i) = scalar_phi(-params.nu_i() * r * r * dt);
                    let p1i = dt * p1i;
                    let p2i = dt * p2i;
                    let bdf = [
                        [3.0 - 2.0 * dt * a[0][0], -2.0 * dt * a[0][1]],
                        [-2.0 * dt * a[1][0], 3.0 - 2.0 * dt * a[1][1]],
                    ];
                    let det = bdf[0][0] * bdf[1][1] - bdf[0][1] * bdf[1][0];
                    let bdf_inv = [[bdf[1][1] / det, -bdf[0][1] / det], [-bdf[1][0] / det, bdf[0][0] / det]];
                    let bdf_inv_i = 1.0 / (3.0 + 2.0 * dt * params.nu_i() * r * r);
                    modes.push(ModeCoefficients {
                        e,
                        p1,
                        p2,
                        bdf_inv,
                        ei,
                        p1i,
                        p2i,
                        bdf_inv_i,
                    });
                    let s = (modes.len() - 1) as u32;
                    index.insert(key, s);
                    s
                }
            };
            slot.push(s);
        }
        Ok(LinearBlock { dt, slot, modes })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn at(&self, p: usize) -> &ModeCoefficients {
        &self.modes[self.slot[p] as usize]
    }

    /// Number of distinct `|ξ|²` values.
    pub fn distinct_modes(&self) -> usize {
        self.modes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation() {
        let t = 2.5;
        let e = expm(&[vec![0.0, -t], vec![t, 0.0]]);
        assert!((e[0][0] - t.cos()).abs() < 1e-14);
        assert!((e[1][0] - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn scalar_phi_branches_agree() {
        for &z in &[-0.0499999, -0.05, 0.0499999, 0.05] {
            let (_, a1, a2) = scalar_phi(z);
            let b1 = z.exp_m1() / z;
            let b2 = (z.exp_m1() - z) / (z * z);
            assert!((a1 - b1).abs() < 1e-14);
            assert!((a2 - b2).abs() < 1e-12);
        }
        assert_eq!(scalar_phi(0.0), (1.0, 1.0, 0.5));
    }

    #[test]
    fn augmented_phi_matches_scalar_on_diagonal() {
        let a = [[-3.0, 0.0], [0.0, -40.0]];
        let dt = 0.1;
        let (e, p1, p2) = phi_functions(&a, dt);
        for (i, &lam) in [-3.0f64, -40.0].iter().enumerate() {
            let (se, s1, s2) = scalar_phi(lam * dt);
            assert!((e[i][i] - se).abs() < 1e-13);
            assert!((p1[i][i] - dt * s1).abs() < 1e-13);
            assert!((p2[i][i] - dt * s2).abs() < 1e-13);
        }
    }
}
