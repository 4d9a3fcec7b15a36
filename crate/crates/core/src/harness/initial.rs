//! Initial data: generated primitive fields, converted to `(h, c, I)`,
//! truncated like the stepper's invariant set and rescaled to `E(0) = amplitude`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{InitKind, RunConfig};
use crate::energy::initial_energy;
use crate::error::{NspError, Result};
use crate::model::{from_primitive, NspState, PrimitiveState};
use crate::spectral::{FieldKind, Grid, RealField, SpectralField};
use crate::stepper::{read_checkpoint, FriedrichsProjector};

/// Peak `|ρ - ρ̄|/ρ̄` of generated data before the final rescale.
const GENERATED_CONTRAST: f64 = 0.25;

pub fn grid_of(cfg: &RunConfig) -> Result<Grid> {
    Grid::new(cfg.dim, cfg.points, cfg.length)
}

/// Builds the initial state for `cfg`.
///
/// `single-mode` is `ρ = ρ̄ + a cos(2πx₁/L)`, `u = 0`; `random-band` draws
/// seeded coefficients for `ρ` and every velocity component on the lattice
/// points with `lo ≤ |ξ| ≤ hi`, weighted by `exp(-decay|ξ|)`. Both are
/// rescaled so that `E(0)` equals the amplitude. Checkpoint data (`file`)
/// is truncated but not rescaled.
pub fn make_initial_data(cfg: &RunConfig) -> Result<NspState> {
    let grid = grid_of(cfg)?;
    if let InitKind::File(path) = &cfg.init.kind {
        let chk = read_checkpoint(path)?;
        let g = chk.state.grid();
        if g.dim() != grid.dim() || g.points() != grid.points() || g.length() != grid.length() {
            return Err(NspError::ConfigValue {
                key: "init.file".into(),
                msg: format!(
                    "checkpoint grid {}^{} does not match the configured grid",
                    g.points(),
                    g.dim()
                ),
            });
        }
        return Ok(truncate(cfg, &chk.state)?);
    }
    if cfg.init.amplitude == 0.0 {
        return Ok(NspState::zeros(&grid));
    }
    let raw = match cfg.init.kind {
        InitKind::SingleMode => single_mode(cfg, &grid)?,
        _ => random_band(cfg, &grid, cfg.init.seed)?,
    };
    let mut state = truncate(cfg, &raw)?;
    let e0 = initial_energy(&state);
    if e0 == 0.0 {
        return Err(NspError::EmptyBand);
    }
    state.scale(cfg.init.amplitude / e0);
    let min = state.theta().to_physical().min() + cfg.params.rho_bar;
    if min <= 0.0 {
        return Err(NspError::NonpositiveDensity(min));
    }
    Ok(state)
}

/// A random-band state with `E(0) = 1`, without the positivity check; used
/// as a perturbation direction.
pub fn unit_direction(cfg: &RunConfig, seed: u64) -> Result<NspState> {
    let grid = grid_of(cfg)?;
    let mut state = truncate(cfg, &random_band(cfg, &grid, seed)?)?;
    let e0 = initial_energy(&state);
    if e0 == 0.0 {
        return Err(NspError::EmptyBand);
    }
    state.scale(1.0 / e0);
    Ok(state)
}

/// The stepper's invariant set: `𝒥ₙ` and, when enabled, the dealias mask.
pub fn truncate(cfg: &RunConfig, s: &NspState) -> Result<NspState> {
    let grid = s.grid();
    let mut out = FriedrichsProjector::new(grid, cfg.stepper.n)?.project_state(s);
    if cfg.stepper.dealias {
        out.retain(grid.dealias_mask());
    }
    Ok(out)
}

fn single_mode(cfg: &RunConfig, grid: &Grid) -> Result<NspState> {
    let rb = cfg.params.rho_bar;
    let k0 = grid.base_wavenumber();
    let rho = RealField::from_fn(grid, |x| rb + GENERATED_CONTRAST * rb * (k0 * x[0]).cos());
    let u = RealField::zeros(grid, FieldKind::Vector);
    primitive_to_state(cfg, grid, rho, u)
}

fn band_points(grid: &Grid, band: (f64, f64)) -> Result<Vec<usize>> {
    let mag = grid.magnitude();
    let nyq = grid.nyquist_mask();
    let pts: Vec<usize> = (0..grid.len())
        .filter(|&p| !nyq[p] && mag[p] > 0.0 && mag[p] >= band.0 && mag[p] <= band.1)
        .collect();
    if pts.is_empty() {
        Err(NspError::EmptyBand)
    } else {
        Ok(pts)
    }
}

fn draw(grid: &Grid, kind: FieldKind, points: &[usize], decay: f64, rng: &mut ChaCha8Rng) -> RealField {
    let mag = grid.magnitude();
    let mut f = SpectralField::zeros(grid, kind);
    let n = grid.len();
    for comp in 0..f.ncomp() {
        let coeffs = &mut f.coeffs_mut()[comp * n..(comp + 1) * n];
        for &p in points {
            let w = (-decay * mag[p]).exp();
            coeffs[p] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w;
        }
    }
    // the real part of the inverse transform is the Hermitian projection
    f.to_physical()
}

/// A seeded real field supported on `band.0 ≤ |ξ| ≤ band.1`, with
/// coefficients uniform in the unit square times `exp(-decay|ξ|)`.
pub fn random_field(grid: &Grid, kind: FieldKind, band: (f64, f64), decay: f64, seed: u64) -> Result<SpectralField> {
    let points = band_points(grid, band)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw(grid, kind, &points, decay, &mut rng).to_spectral())
}

fn random_band(cfg: &RunConfig, grid: &Grid, seed: u64) -> Result<NspState> {
    let points = band_points(grid, cfg.init.band)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = draw(grid, FieldKind::Scalar, &points, cfg.init.decay, &mut rng);
    let u = draw(grid, FieldKind::Vector, &points, cfg.init.decay, &mut rng);
    let rb = cfg.params.rho_bar;
    let peak = theta.max_abs();
    let a = if peak > 0.0 {
        GENERATED_CONTRAST * rb / peak
    } else {
        0.0
    };
    let rho_vals: Vec<f64> = theta.values().iter().map(|v| rb + a * v).collect();
    let rho = RealField::from_values(grid, FieldKind::Scalar, rho_vals)?;
    primitive_to_state(cfg, grid, rho, u)
}

fn primitive_to_state(cfg: &RunConfig, grid: &Grid, rho: RealField, mut u: RealField) -> Result<NspState> {
    // generated velocities carry no zero mode up to rounding
    let n = grid.len();
    for c in 0..cfg.dim {
        let m = u.mean(c);
        u.values_mut()[c * n..(c + 1) * n].iter_mut().for_each(|v| *v -= m);
    }
    let p = PrimitiveState {
        rho,
        u,
        phi: RealField::zeros(grid, FieldKind::Scalar),
    };
    from_primitive(&p, &cfg.params)
}
