//! Constants of the frequency-localized energy estimates.

use crate::error::{NspError, Result};
use crate::model::FluidParams;

/// Signed slack of each side condition; a condition holds iff its slack is
/// strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feasibility {
    /// `73/64 - (32/9) ρ̄⁻¹(2μ+λ) M₂`.
    pub pressure_split: f64,
    /// `M₁ - K₁`.
    pub k1_below_m1: f64,
    /// `√3/(8√ρ̄) - M₁`.
    pub m1_below_cap: f64,
    /// `2μ+λ - ρ̄²K₁ - (2μ+λ)K₁/(2M₂)`.
    pub viscous_split: f64,
    /// `K₂`.
    pub k2_positive: f64,
    /// `M₃ - K₂`.
    pub k2_below_m3: f64,
    /// `ρ̄⁻²(2μ+λ) - M₃`.
    pub m3_below_cap: f64,
}

impl Feasibility {
    /// The three low-frequency conditions, read literally (the middle one
    /// as the double inequality `K₁ < M₁ < √3/(8√ρ̄)`).
    pub fn low_conditions(&self) -> [bool; 3] {
        [
            self.pressure_split > 0.0,
            self.k1_below_m1 > 0.0 && self.m1_below_cap > 0.0,
            self.viscous_split > 0.0,
        ]
    }

    pub fn high_condition(&self) -> bool {
        self.k2_positive > 0.0 && self.k2_below_m3 > 0.0 && self.m3_below_cap > 0.0
    }

    pub fn all_hold(&self) -> bool {
        self.low_conditions().iter().all(|&b| b) && self.high_condition()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateConstants {
    pub k1: f64,
    pub m1: f64,
    pub m2: f64,
    pub k2: f64,
    pub m3: f64,
    /// Weight gain in `e^{-KV(t)}`; 0 unless configured.
    pub k: f64,
    /// Bootstrap bound factor, `E ≤ A·C̃·E(0)`.
    pub a: f64,
    pub c_tilde: f64,
    pub rho_bar: f64,
    /// `2μ + λ`.
    pub longitudinal: f64,
    pub feasibility: Feasibility,
}

pub const DEFAULT_A: f64 = 2.5;
pub const DEFAULT_C_TILDE: f64 = 1.0;

/// The explicit constant selections and their side conditions.
///
/// Errors when a condition that the positivity and dissipation arguments
/// rely on fails: the pressure and viscous splits, `K₁ < M₁`, and
/// `0 < K₂ < M₃ < ρ̄⁻²(2μ+λ)`. The cap `M₁ < √3/(8√ρ̄)` is reported in
/// [`Feasibility`] but not enforced: the selection `M₁ = 1/(4√ρ̄)` never
/// satisfies it.
pub fn compute_constants(params: &FluidParams) -> Result<EstimateConstants> {
    params.validate()?;
    let rb = params.rho_bar;
    let nu = params.longitudinal();
    let sq = rb.sqrt();
    let m1 = 1.0 / (4.0 * sq);
    let m2 = 5.0 * rb / (16.0 * nu);
    let k1 = (rb * nu / (rb.powi(3) + 2.0 * nu * nu)).min(1.0 / (8.0 * sq));
    let m3 = nu / (2.0 * rb * rb);
    let k2 = nu / (4.0 * rb * rb);
    let feasibility = Feasibility {
        pressure_split: 73.0 / 64.0 - 32.0 / 9.0 * nu / rb * m2,
        k1_below_m1: m1 - k1,
        m1_below_cap: 3f64.sqrt() / (8.0 * sq) - m1,
        viscous_split: nu - rb * rb * k1 - nu * k1 / (2.0 * m2),
        k2_positive: k2,
        k2_below_m3: m3 - k2,
        m3_below_cap: nu / (rb * rb) - m3,
    };
    let f = &feasibility;
    let failed: Vec<&str> = [
        (f.pressure_split > 0.0, "73/64 - (32/9)(2mu+lambda)M2/rho_bar > 0"),
        (f.k1_below_m1 > 0.0, "K1 < M1"),
        (
            f.viscous_split > 0.0,
            "2mu+lambda - rho_bar^2 K1 - (2mu+lambda)K1/(2M2) > 0",
        ),
        (f.high_condition(), "0 < K2 < M3 < (2mu+lambda)/rho_bar^2"),
    ]
    .iter()
    .filter(|(ok, _)| !ok)
    .map(|(_, name)| *name)
    .collect();
    if !failed.is_empty() {
        return Err(NspError::Infeasible(failed.join("; ")));
    }
    Ok(EstimateConstants {
        k1,
        m1,
        m2,
        k2,
        m3,
        k: 0.0,
        a: DEFAULT_A,
        c_tilde: DEFAULT_C_TILDE,
        rho_bar: rb,
        longitudinal: nu,
        feasibility,
    })
}

pub type Mat2 = [[f64; 2]; 2];

/// Per-mode matrix of `αₖ²` on `(ĥ, ĉ)` at radius `r`; `low` selects the
/// `k ≤ 0` form.
pub fn form_matrix(r: f64, low: bool, c: &EstimateConstants) -> Mat2 {
    let rb = c.rho_bar;
    if low {
        [[(1.0 + r * r) / rb, -c.k1 * r * r], [-c.k1 * r * r, 1.0]]
    } else {
        let hh = r / rb + r.powi(3) / rb + c.longitudinal * c.k2 * r.powi(5) / (rb * rb);
        [[hh, -c.k2 * r.powi(3)], [-c.k2 * r.powi(3), r]]
    }
}

/// Diagonal of the plain sum of squared block norms the form is compared to.
pub fn reference_diagonal(r: f64, low: bool) -> [f64; 2] {
    if low {
        [1.0 + r * r, 1.0]
    } else {
        [r + r.powi(3) + r.powi(5), r]
    }
}

/// Eigenvalues (ascending) of a symmetric 2x2 matrix.
pub fn sym_eigenvalues(m: &Mat2) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half = 0.5 * (m[0][0] - m[1][1]);
    let rad = half.hypot(m[0][1]);
    [mean - rad, mean + rad]
}

/// Eigenvalues of `D^{-1/2} Q D^{-1/2}` for diagonal `D > 0`.
pub fn relative_eigenvalues(q: &Mat2, d: [f64; 2]) -> [f64; 2] {
    let s = [d[0].sqrt(), d[1].sqrt()];
    let scaled = [
        [q[0][0] / d[0], q[0][1] / (s[0] * s[1])],
        [q[1][0] / (s[0] * s[1]), q[1][1] / d[1]],
    ];
    sym_eigenvalues(&scaled)
}
