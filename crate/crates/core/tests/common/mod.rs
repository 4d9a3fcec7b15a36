//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use nsp_core::model::NspState;
use nsp_core::spectral::{helmholtz_decompose, FieldKind, Grid, RealField, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mean-free real field with i.i.d. nodal values, mean removed in Fourier space.
pub fn random_field(grid: &Grid, kind: FieldKind, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kind.components(grid.dim()) * grid.len();
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut f = RealField::from_values(grid, kind, values).unwrap().to_spectral();
    f.remove_mean();
    f
}

/// `random_field` restricted to the 2/3-rule lattice.
pub fn random_dealiased(grid: &Grid, kind: FieldKind, seed: u64) -> SpectralField {
    let mut f = random_field(grid, kind, seed);
    f.retain(grid.dealias_mask());
    f
}

/// Scalar field `a·exp(i k·x)` plus its conjugate partner, i.e. `2a cos(k·x)`
/// for real `a`.
pub fn cosine_mode(grid: &Grid, k: &[i64], a: f64) -> SpectralField {
    let mut f = SpectralField::zeros(grid, FieldKind::Scalar);
    let p = grid.point_of(k).unwrap();
    let neg: Vec<i64> = k.iter().map(|v| -v).collect();
    let q = grid.point_of(&neg).unwrap();
    f.component_mut(0)[p].re += a;
    f.component_mut(0)[q].re += a;
    f
}

pub fn rel_err(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.sub(b).unwrap().norm_l2();
    let s = b.norm_l2().max(a.norm_l2());
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `φ(r) = ψ(r/2) - ψ(r)` with `ψ` rebuilt by composite Simpson quadrature of
/// the bump `exp(-1/(x(1-x)))` over the transition band `[3/4, 4/3]`.
pub fn phi_oracle(r: f64) -> f64 {
    psi_oracle(r / 2.0) - psi_oracle(r)
}

pub fn psi_oracle(r: f64) -> f64 {
    let (a, b) = (0.75, 4.0 / 3.0);
    if r <= a {
        return 1.0;
    }
    if r >= b {
        return 0.0;
    }
    let x = (r - a) / (b - a);
    1.0 - simpson_bump(x) / simpson_bump(1.0)
}

fn simpson_bump(x: f64) -> f64 {
    let bump = |y: f64| {
        if y <= 0.0 || y >= 1.0 {
            0.0
        } else {
            (-1.0 / (y * (1.0 - y))).exp()
        }
    };
    let n = 200_000;
    let h = x / n as f64;
    let mut s = bump(0.0) + bump(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * bump(i as f64 * h);
    }
    s * h / 3.0
}

/// Random dealiased state of size `amp`; `(c, I)` come from a velocity field
/// so that `I` is a genuine curl.
pub fn small_state(g: &Grid, seed: u64, amp: f64) -> NspState {
    let u = random_dealiased(g, FieldKind::Vector, seed ^ 0x5a5a).scaled(amp);
    let pair = helmholtz_decompose(&u).unwrap();
    NspState {
        h: random_dealiased(g, FieldKind::Scalar, seed).scaled(amp),
        c: pair.c,
        i: pair.i,
        t: 0.0,
    }
}
