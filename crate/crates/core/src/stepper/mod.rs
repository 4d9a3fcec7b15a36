//! Time integration of the frequency-truncated system.
//!
//! The truncation `𝒥ₙ` keeps the annulus `1/n ≤ |ξ| ≤ n`. The stiff linear
//! part is propagated exactly per mode (see [`linear`]); the explicit
//! remainder is
//!
//! ```text
//! N_h = 𝒥ₙ(F - Λ⁻¹(u·∇Λh)),   N_c = -𝒥ₙΛ⁻¹div J,   N_I = 𝒥ₙH
//! ```
//!
//! where `u·∇c`, present on both sides of the `c` equation, has been
//! cancelled. The quotient in `J` always uses the `ζ` clamp.

mod checkpoint;
pub mod linear;

use num_complex::Complex64;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use linear::LinearBlock;

use crate::error::{NspError, Result};
use crate::model::{evaluate, DensityBounds, EvalOptions, FluidParams, NspState};
use crate::spectral::{FieldKind, Grid, SpectralField};

/// Largest admissible `dt·‖u‖_∞/Δx`.
pub const STABILITY_MARGIN: f64 = 0.9;
/// Steps between re-evaluations of the stability product.
pub const STABILITY_INTERVAL: usize = 16;

/// `𝒥ₙ`: indicator of `1/n ≤ |ξ| ≤ n`. The zero mode and Nyquist modes are
/// always excluded.
#[derive(Clone, Debug)]
pub struct FriedrichsProjector {
    n: f64,
    mask: Vec<bool>,
}

impl FriedrichsProjector {
    /// `n = ∞` covers the whole lattice.
    pub fn new(grid: &Grid, n: f64) -> Result<Self> {
        if n.is_nan() || n <= 1.0 {
            return Err(NspError::InvalidStepper(format!(
                "truncation parameter n = {n} must exceed 1"
            )));
        }
        let nyq = grid.nyquist_mask();
        let mask = grid
            .magnitude()
            .iter()
            .zip(nyq)
            .map(|(&r, &ny)| !ny && r > 0.0 && r * n >= 1.0 && r <= n)
            .collect();
        Ok(FriedrichsProjector { n, mask })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// True when every nonzero, non-Nyquist lattice point is kept.
    pub fn covers_lattice(&self, grid: &Grid) -> bool {
        grid.magnitude()
            .iter()
            .zip(grid.nyquist_mask())
            .zip(&self.mask)
            .all(|((&r, &ny), &k)| k || ny || r == 0.0)
    }

    pub fn project_state(&self, s: &NspState) -> NspState {
        let mut out = s.clone();
        out.retain(&self.mask);
        out
    }
}

pub fn project(f: &SpectralField, p: &FriedrichsProjector) -> SpectralField {
    let mut out = f.clone();
    out.retain(&p.mask);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Exponential Runge-Kutta, second order (Cox-Matthews).
    Etdrk2,
    /// Second-order backward differentiation for the linear part,
    /// extrapolated explicit terms; started with one ETDRK2 step.
    ImexBdf2,
}

/// Whether the explicit terms are included.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dynamics {
    Full,
    /// `F = G = H = 0` and no convection.
    Linear,
}

#[derive(Clone, Debug)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Truncation parameter; `f64::INFINITY` keeps every mode.
    pub n: f64,
    /// Rounded to the nearest multiple of `dt`.
    pub t_end: f64,
    /// Monitor is called every `monitor_stride` steps, at step 0 and at the end.
    pub monitor_stride: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            scheme: Scheme::Etdrk2,
            dealias: true,
            n: f64::INFINITY,
            t_end: 1.0,
            monitor_stride: 10,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(NspError::InvalidStepper(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(NspError::InvalidStepper(format!(
                "t_end = {} must be finite and >= 0",
                self.t_end
            )));
        }
        if self.monitor_stride == 0 {
            return Err(NspError::InvalidStepper("monitor stride must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Per-step diagnostics handed to monitors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    pub t: f64,
    /// Node-wise density range at the start of the last step (`None` for
    /// linear dynamics and before the first step).
    pub density: Option<DensityBounds>,
    /// Some step so far saw `min ρ ≤ 0`.
    pub positivity_lost: bool,
    /// Some step so far had nodes where `ζ` is not the identity.
    pub guard_active: bool,
    /// Last evaluated `dt·‖u‖_∞/Δx`.
    pub stability_product: f64,
}

/// Observer invoked synchronously during [`run`].
pub trait Monitor {
    fn observe(&mut self, state: &NspState, info: &StepInfo) -> Result<()>;
}

impl<F: FnMut(&NspState, &StepInfo) -> Result<()>> Monitor for F {
    fn observe(&mut self, state: &NspState, info: &StepInfo) -> Result<()> {
        self(state, info)
    }
}

/// A monitor that does nothing.
pub struct NoMonitor;

impl Monitor for NoMonitor {
    fn observe(&mut self, _: &NspState, _: &StepInfo) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Explicit {
    h: SpectralField,
    c: SpectralField,
    i: SpectralField,
}

impl Explicit {
    fn zeros(grid: &Grid) -> Self {
        Explicit {
            h: SpectralField::zeros(grid, FieldKind::Scalar),
            c: SpectralField::zeros(grid, FieldKind::Scalar),
            i: SpectralField::zeros(grid, FieldKind::Antisymmetric),
        }
    }
}

/// Sequential integrator for one trajectory.
pub struct Stepper {
    grid: Grid,
    params: FluidParams,
    cfg: StepperConfig,
    dynamics: Dynamics,
    projector: FriedrichsProjector,
    block: LinearBlock,
    /// `(uⁿ⁻¹, Nⁿ⁻¹)` for the BDF2 recursion.
    history: Option<(NspState, Explicit)>,
    steps: usize,
    info: StepInfo,
}

impl Stepper {
    pub fn new(grid: &Grid, params: &FluidParams, cfg: &StepperConfig, dynamics: Dynamics) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        if params.dim != grid.dim() {
            return Err(NspError::InvalidParams(format!(
                "parameter dimension {} differs from grid dimension {}",
                params.dim,
                grid.dim()
            )));
        }
        Ok(Stepper {
            grid: grid.clone(),
            params: *params,
            cfg: cfg.clone(),
            dynamics,
            projector: FriedrichsProjector::new(grid, cfg.n)?,
            block: LinearBlock::new(grid, params, cfg.dt)?,
            history: None,
            steps: 0,
            info: StepInfo {
                step: 0,
                t: 0.0,
                density: None,
                positivity_lost: false,
                guard_active: false,
                stability_product: 0.0,
            },
        })
    }

    pub fn projector(&self) -> &FriedrichsProjector {
        &self.projector
    }

    pub fn info(&self) -> StepInfo {
        self.info
    }

    /// Brings a state into the stepper's invariant set: projected, and
    /// dealiased when dealiasing is on.
    pub fn prepare(&self, s: &NspState) -> NspState {
        let mut out = self.projector.project_state(s);
        if self.cfg.dealias {
            out.retain(self.grid.dealias_mask());
        }
        out
    }

    fn explicit(&mut self, s: &NspState) -> Result<Explicit> {
        if self.dynamics == Dynamics::Linear {
            return Ok(Explicit::zeros(&self.grid));
        }
        let opts = EvalOptions {
            guarded: true,
            dealias: self.cfg.dealias,
            projector: Some(self.projector.mask()),
        };
        let terms = evaluate(s, &self.params, opts, false)?;
        let d = terms.density;
        self.info.density = Some(d);
        self.info.positivity_lost |= d.positivity_lost();
        self.info.guard_active |= d.guard_active(self.params.rho_bar);
        let mut h = terms.f;
        h.axpy(-1.0, &terms.conv_h)?;
        Ok(Explicit {
            h,
            c: terms.lambda_div_j.scaled(-1.0),
            i: terms.h_term,
        })
    }

    /// `dt·‖u‖_∞/Δx`.
    pub fn stability_product(&self, s: &NspState) -> f64 {
        if self.dynamics == Dynamics::Linear {
            return 0.0;
        }
        let umax = s.velocity().to_physical().max_abs();
        self.cfg.dt * umax / self.grid.spacing()
    }

    fn check_stability(&mut self, s: &NspState) -> Result<()> {
        let product = self.stability_product(s);
        self.info.stability_product = product;
        if product > STABILITY_MARGIN {
            return Err(NspError::Stability {
                t: s.t,
                product,
                margin: STABILITY_MARGIN,
            });
        }
        Ok(())
    }

    /// Advances `s` by one `dt`.
    pub fn step(&mut self, s: &NspState) -> Result<NspState> {
        if self.steps % STABILITY_INTERVAL == 0 {
            self.check_stability(s)?;
        }
        let n0 = self.explicit(s)?;
        let next = match (self.cfg.scheme, self.history.take()) {
            (Scheme::ImexBdf2, Some((prev, n_prev))) => self.bdf2(s, &n0, &prev, &n_prev),
            _ => self.etdrk2(s, &n0)?,
        };
        if self.cfg.scheme == Scheme::ImexBdf2 {
            self.history = Some((s.clone(), n0));
        }
        if !next.is_finite() {
            return Err(NspError::NumericalAbort {
                t: next.t,
                reason: "non-finite coefficient".into(),
            });
        }
        self.steps += 1;
        self.info.step = self.steps;
        self.info.t = next.t;
        Ok(next)
    }

    fn etdrk2(&mut self, s: &NspState, n0: &Explicit) -> Result<NspState> {
        let stage = self.combine(s, |m| (m.e, m.p1, m.ei, m.p1i), n0);
        if self.dynamics == Dynamics::Linear {
            return Ok(stage);
        }
        let n1 = self.explicit(&stage)?;
        let diff = Explicit {
            h: n1.h.sub(&n0.h)?,
            c: n1.c.sub(&n0.c)?,
            i: n1.i.sub(&n0.i)?,
        };
        Ok(self.combine(&stage, |m| (IDENTITY, m.p2, 1.0, m.p2i), &diff))
    }

    /// `out = E·x + P·n` per mode, with `(E, P)` chosen by `pick`.
    fn combine(
        &self,
        x: &NspState,
        pick: impl Fn(&linear::ModeCoefficients) -> (linear::Mat2, linear::Mat2, f64, f64),
        n: &Explicit,
    ) -> NspState {
        let grid = &self.grid;
        let mut out = NspState::zeros(grid);
        out.t = x.t + self.cfg.dt;
        let (xh, xc) = (x.h.component(0), x.c.component(0));
        let (nh, nc) = (n.h.component(0), n.c.component(0));
        let mut oh = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut oc = oh.clone();
        for p in 0..grid.len() {
            let (e, pm, _, _) = pick(self.block.at(p));
            let a = linear::mat_vec(&e, [xh[p], xc[p]]);
            let b = linear::mat_vec(&pm, [nh[p], nc[p]]);
            oh[p] = a[0] + b[0];
            oc[p] = a[1] + b[1];
        }
        out.h.component_mut(0).copy_from_slice(&oh);
        out.c.component_mut(0).copy_from_slice(&oc);
        for comp in 0..x.i.ncomp() {
            let (xi, ni) = (x.i.component(comp), n.i.component(comp));
            let dst = out.i.component_mut(comp);
            for p in 0..grid.len() {
                let (_, _, ei, pi) = pick(self.block.at(p));
                dst[p] = xi[p] * ei + ni[p] * pi;
            }
        }
        out
    }

    fn bdf2(&self, s: &NspState, n0: &Explicit, prev: &NspState, n_prev: &Explicit) -> NspState {
        let grid = &self.grid;
        let dt = self.cfg.dt;
        let mut out = NspState::zeros(grid);
        out.t = s.t + dt;
        let rhs = |x: Complex64, xp: Complex64, n: Complex64, np: Complex64| 4.0 * x - xp + 2.0 * dt * (2.0 * n - np);
        {
            let (h, hp, nh, nhp) = (
                s.h.component(0),
                prev.h.component(0),
                n0.h.component(0),
                n_prev.h.component(0),
            );
            let (c, cp, nc, ncp) = (
                s.c.component(0),
                prev.c.component(0),
                n0.c.component(0),
                n_prev.c.component(0),
            );
            let mut oh = vec![Complex64::new(0.0, 0.0); grid.len()];
            let mut oc = oh.clone();
            for p in 0..grid.len() {
                let m = self.block.at(p);
                let r = [rhs(h[p], hp[p], nh[p], nhp[p]), rhs(c[p], cp[p], nc[p], ncp[p])];
                let v = linear::mat_vec(&m.bdf_inv, r);
                oh[p] = v[0];
                oc[p] = v[1];
            }
            out.h.component_mut(0).copy_from_slice(&oh);
            out.c.component_mut(0).copy_from_slice(&oc);
        }
        for comp in 0..s.i.ncomp() {
            let (x, xp, n, np) = (
                s.i.component(comp),
                prev.i.component(comp),
                n0.i.component(comp),
                n_prev.i.component(comp),
            );
            let dst = out.i.component_mut(comp);
            for p in 0..grid.len() {
                dst[p] = rhs(x[p], xp[p], n[p], np[p]) * self.block.at(p).bdf_inv_i;
            }
        }
        out
    }
}

const IDENTITY: linear::Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Outcome of [`run`]: the final state, the monitored instants and the
/// last step diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub final_state: NspState,
    pub times: Vec<f64>,
    pub info: StepInfo,
    pub steps: usize,
}

/// Integrates `s0` to `cfg.t_end` with the full explicit terms.
pub fn run(s0: &NspState, cfg: &StepperConfig, params: &FluidParams, monitor: &mut dyn Monitor) -> Result<Trajectory> {
    drive(s0, cfg, params, Dynamics::Full, monitor)
}

/// Integrates the linear system (`F = G = H = 0`, no convection).
pub fn linear_reference_run(
    s0: &NspState,
    cfg: &StepperConfig,
    params: &FluidParams,
    monitor: &mut dyn Monitor,
) -> Result<Trajectory> {
    drive(s0, cfg, params, Dynamics::Linear, monitor)
}

pub fn drive(
    s0: &NspState,
    cfg: &StepperConfig,
    params: &FluidParams,
    dynamics: Dynamics,
    monitor: &mut dyn Monitor,
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(s0.grid(), params, cfg, dynamics)?;
    let mut state = stepper.prepare(s0);
    state.t = s0.t;
    let steps = cfg.steps();
    let mut times = vec![state.t];
    monitor.observe(&state, &stepper.info())?;
    for k in 1..=steps {
        state = stepper.step(&state)?;
        // keep time exact multiples of dt
        state.t = s0.t + k as f64 * cfg.dt;
        if k % cfg.monitor_stride == 0 || k == steps {
            let mut info = stepper.info();
            info.t = state.t;
            monitor.observe(&state, &info)?;
            times.push(state.t);
        }
    }
    Ok(Trajectory {
        final_state: state,
        times,
        info: stepper.info(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_rejects_small_n() {
        let g = Grid::periodic(2, 8).unwrap();
        assert!(FriedrichsProjector::new(&g, 1.0).is_err());
        assert!(FriedrichsProjector::new(&g, f64::NAN).is_err());
        assert!(FriedrichsProjector::new(&g, f64::INFINITY).unwrap().covers_lattice(&g));
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = Grid::periodic(2, 8).unwrap();
        let p = FluidParams::new(1.0, 0.0, 1.0, 2).unwrap();
        let cfg = StepperConfig {
            dt: 1e-2,
            t_end: 0.1,
            ..StepperConfig::default()
        };
        let traj = run(&NspState::zeros(&g), &cfg, &p, &mut NoMonitor).unwrap();
        assert_eq!(traj.final_state.max_abs_coeff(), 0.0);
        assert_eq!(traj.steps, 10);
    }
}
