//! Per-shell energy functionals `αₖ²`.
//!
//! For `k ≤ 0`:
//! `αₖ² = ρ̄⁻¹‖hₖ‖² + ρ̄⁻¹‖Λhₖ‖² + ‖cₖ‖² - 2K₁(Λ²hₖ, cₖ)`.
//!
//! For `k > 0`:
//! `αₖ² = ρ̄⁻¹‖Λ^{1/2}hₖ‖² + ρ̄⁻¹‖Λ^{3/2}hₖ‖² + ρ̄⁻²(2μ+λ)K₂‖Λ^{5/2}hₖ‖²
//!        + ‖Λ^{1/2}cₖ‖² - 2K₂(Λ^{5/2}hₖ, Λ^{1/2}cₖ)`.
//!
//! Each is a sum over lattice points of a 2x2 form in `(ĥ, ĉ)` weighted by
//! `φ(2^{-k}|ξ|)²`, evaluated exactly from the coefficients.

use super::constants::{form_matrix, reference_diagonal, relative_eigenvalues, EstimateConstants};
use crate::littlewood_paley::DyadicTable;
use crate::model::NspState;
use crate::spectral::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct ShellEnergy {
    pub k: i32,
    pub alpha_sq: f64,
    /// `‖hₖ‖`, `‖Λhₖ‖`, `‖cₖ‖`.
    pub h_norm: f64,
    pub lambda_h_norm: f64,
    pub c_norm: f64,
    /// `‖Λ^{1/2}hₖ‖`, `‖Λ^{3/2}hₖ‖`, `‖Λ^{5/2}hₖ‖`, `‖Λ^{1/2}cₖ‖` (all shells).
    pub fractional: [f64; 4],
    /// The cross pairing in `αₖ²`: `(Λ²hₖ, cₖ)` for `k ≤ 0`,
    /// `(Λ^{5/2}hₖ, Λ^{1/2}cₖ)` for `k > 0`.
    pub cross: f64,
    /// Sum of squared block norms the form is equivalent to.
    pub reference_sum: f64,
}

fn accumulate(state: &NspState, k: i32, consts: &EstimateConstants) -> ShellEnergy {
    let grid = state.grid();
    let table = DyadicTable::for_grid(grid);
    let mag = grid.magnitude();
    let vol = grid.volume();
    let low = k <= 0;
    let (h, c) = (state.h.component(0), state.c.component(0));
    let mut acc = [0.0f64; 10];
    for e in table.shell(k) {
        let p = e.point;
        let r = mag[p];
        let w2 = e.weight * e.weight;
        let hh = h[p].norm_sqr() * w2;
        let cc = c[p].norm_sqr() * w2;
        let hc = (h[p] * c[p].conj()).re * w2;
        let q = form_matrix(r, low, consts);
        let d = reference_diagonal(r, low);
        acc[0] += q[0][0] * hh + q[1][1] * cc + 2.0 * q[0][1] * hc;
        acc[1] += hh;
        acc[2] += r * r * hh;
        acc[3] += cc;
        acc[4] += r * hh;
        acc[5] += r.powi(3) * hh;
        acc[6] += r.powi(5) * hh;
        acc[7] += r * cc;
        acc[8] += if low { r * r * hc } else { r.powi(3) * hc };
        acc[9] += d[0] * hh + d[1] * cc;
    }
    let a: Vec<f64> = acc.iter().map(|v| v * vol).collect();
    ShellEnergy {
        k,
        alpha_sq: a[0],
        h_norm: a[1].sqrt(),
        lambda_h_norm: a[2].sqrt(),
        c_norm: a[3].sqrt(),
        fractional: [a[4].sqrt(), a[5].sqrt(), a[6].sqrt(), a[7].sqrt()],
        cross: a[8],
        reference_sum: a[9],
    }
}

/// `αₖ²` and its ingredients for shell `k`.
pub fn shell_energy(state: &NspState, k: i32, consts: &EstimateConstants) -> ShellEnergy {
    accumulate(state, k, consts)
}

/// Shell energies for every shell of the grid, ascending in `k`.
pub fn shell_energies(state: &NspState, consts: &EstimateConstants) -> Vec<ShellEnergy> {
    let table = DyadicTable::for_grid(state.grid());
    table.shells().map(|k| accumulate(state, k, consts)).collect()
}

/// `(c₁, c₂)` with `c₁αₖ² ≤ Σ‖·‖² ≤ c₂αₖ²` for every state on the grid:
/// the reciprocal extreme eigenvalues of the form relative to the
/// reference diagonal over the lattice radii in shell `k`. `None` for an
/// empty shell.
pub fn equivalence_constants(grid: &Grid, k: i32, consts: &EstimateConstants) -> Option<(f64, f64)> {
    let low = k <= 0;
    extreme_relative(grid, k, |r| {
        relative_eigenvalues(&form_matrix(r, low, consts), reference_diagonal(r, low))
    })
}

/// Same as [`equivalence_constants`] against the display form
/// `max(1, 2^{5k/2})‖hₖ‖² + max(1, 2^{k/2})‖cₖ‖²`.
pub fn display_equivalence_constants(grid: &Grid, k: i32, consts: &EstimateConstants) -> Option<(f64, f64)> {
    let low = k <= 0;
    let d = display_diagonal(k);
    extreme_relative(grid, k, |r| relative_eigenvalues(&form_matrix(r, low, consts), d))
}

pub fn display_diagonal(k: i32) -> [f64; 2] {
    let kf = k as f64;
    [2f64.powf(2.5 * kf).max(1.0), 2f64.powf(0.5 * kf).max(1.0)]
}

fn extreme_relative(grid: &Grid, k: i32, eig: impl Fn(f64) -> [f64; 2]) -> Option<(f64, f64)> {
    let table = DyadicTable::for_grid(grid);
    let mag = grid.magnitude();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut seen = std::collections::HashSet::new();
    for e in table.shell(k) {
        let r = mag[e.point];
        if !seen.insert(r.to_bits()) {
            continue;
        }
        let [a, b] = eig(r);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if seen.is_empty() {
        None
    } else {
        Some((1.0 / hi, 1.0 / lo))
    }
}
