//! The Navier-Stokes-Poisson system in `(h, c, I)` variables.
//!
//! With `θ = ρ - ρ̄`, `h = Λ⁻¹θ`, `c = Λ⁻¹div u`, `I = Λ⁻¹curl u`:
//!
//! ```text
//! h_t + Λ⁻¹(u·∇Λh) + ρ̄c                 = F = -Λ⁻¹(Λh div u)
//! c_t + u·∇c - ν_c Δc - Λ²h - h         = G = u·∇c - Λ⁻¹div J
//! I_t - ν_i ΔI                          = H = -Λ⁻¹curl J
//! J = u·∇u + θ/(ρ̄ ζ(θ+ρ̄)) (μΔu + (μ+λ)∇div u)
//! ```
//!
//! with `ν_c = (2μ+λ)/ρ̄`, `ν_i = μ/ρ̄` and pressure `P(ρ) = ρ²/2`. Pointwise
//! products are formed on the grid nodes and, when dealiasing is on,
//! truncated by the 2/3 rule after the forward transform.

use num_complex::Complex64;

use crate::error::{NspError, Result};
use crate::spectral::{
    self, forward_real_many, helmholtz_decompose, helmholtz_recompose, inverse_real_many, FieldKind, Grid,
    HelmholtzPair, RealField, SpectralField,
};

/// Relative tolerance on `mean(ρ) = ρ̄` for primitive data.
pub const MEAN_DENSITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub mu: f64,
    pub lambda: f64,
    pub rho_bar: f64,
    pub dim: usize,
}

impl FluidParams {
    pub fn new(mu: f64, lambda: f64, rho_bar: f64, dim: usize) -> Result<Self> {
        let p = FluidParams {
            mu,
            lambda,
            rho_bar,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.lambda, self.rho_bar].iter().all(|v| v.is_finite());
        if !finite {
            return Err(NspError::InvalidParams("parameters must be finite".into()));
        }
        if !(self.dim == 2 || self.dim == 3) {
            return Err(NspError::InvalidParams(format!(
                "dimension {} not in {{2, 3}}",
                self.dim
            )));
        }
        if self.mu <= 0.0 {
            return Err(NspError::InvalidParams(format!("need mu > 0, got {}", self.mu)));
        }
        if 2.0 * self.mu + self.dim as f64 * self.lambda < 0.0 {
            return Err(NspError::InvalidParams(format!(
                "need 2 mu + N lambda >= 0, got {}",
                2.0 * self.mu + self.dim as f64 * self.lambda
            )));
        }
        if self.rho_bar <= 0.0 {
            return Err(NspError::InvalidParams(format!(
                "need rho_bar > 0, got {}",
                self.rho_bar
            )));
        }
        Ok(())
    }

    /// `2μ + λ`; positive whenever the parameters are valid.
    pub fn longitudinal(&self) -> f64 {
        2.0 * self.mu + self.lambda
    }

    pub fn nu_c(&self) -> f64 {
        self.longitudinal() / self.rho_bar
    }

    pub fn nu_i(&self) -> f64 {
        self.mu / self.rho_bar
    }
}

/// Smooth density clamp: `ρ̄/4` below `ρ̄/4`, identity on `[ρ̄/2, 3ρ̄/2]`,
/// `7ρ̄/4` above `7ρ̄/4`, cubic Hermite (C¹, monotone) on the two bands.
///
/// Arguments below `ρ̄/4` (including negative ones) map to `ρ̄/4`, so
/// `ζ ≥ ρ̄/4` everywhere.
pub fn zeta(s: f64, rho_bar: f64) -> f64 {
    let r = rho_bar;
    if s <= 0.25 * r {
        0.25 * r
    } else if s < 0.5 * r {
        hermite(s, 0.25 * r, 0.5 * r, 0.25 * r, 0.5 * r, 0.0, 1.0)
    } else if s <= 1.5 * r {
        s
    } else if s < 1.75 * r {
        hermite(s, 1.5 * r, 1.75 * r, 1.5 * r, 1.75 * r, 1.0, 0.0)
    } else {
        1.75 * r
    }
}

fn hermite(s: f64, a: f64, b: f64, ya: f64, yb: f64, ma: f64, mb: f64) -> f64 {
    let h = b - a;
    let t = (s - a) / h;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * ya + (t3 - 2.0 * t2 + t) * h * ma + (-2.0 * t3 + 3.0 * t2) * yb + (t3 - t2) * h * mb
}

/// Evolving state `(h, c, I)` at time `t`.
#[derive(Clone, Debug)]
pub struct NspState {
    pub h: SpectralField,
    pub c: SpectralField,
    pub i: SpectralField,
    pub t: f64,
}

impl NspState {
    pub fn zeros(grid: &Grid) -> Self {
        NspState {
            h: SpectralField::zeros(grid, FieldKind::Scalar),
            c: SpectralField::zeros(grid, FieldKind::Scalar),
            i: SpectralField::zeros(grid, FieldKind::Antisymmetric),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.h.grid()
    }

    /// `θ = Λh`.
    pub fn theta(&self) -> SpectralField {
        lambda_pow(&self.h, 1.0)
    }

    /// `u = -Λ⁻¹∇c - Λ⁻¹div I`.
    pub fn velocity(&self) -> SpectralField {
        helmholtz_recompose(&HelmholtzPair {
            c: self.c.clone(),
            i: self.i.clone(),
        })
        .expect("state components are consistent by construction")
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.c.is_finite() && self.i.is_finite()
    }

    /// Applies `keep` to all three components.
    pub fn retain(&mut self, keep: &[bool]) {
        self.h.retain(keep);
        self.c.retain(keep);
        self.i.retain(keep);
    }

    pub fn scale(&mut self, a: f64) {
        self.h.scale(a);
        self.c.scale(a);
        self.i.scale(a);
    }

    /// `self - other`, keeping `self.t`.
    pub fn difference(&self, other: &NspState) -> Result<NspState> {
        Ok(NspState {
            h: self.h.sub(&other.h)?,
            c: self.c.sub(&other.c)?,
            i: self.i.sub(&other.i)?,
            t: self.t,
        })
    }

    /// Largest coefficient magnitude over the three components.
    pub fn max_abs_coeff(&self) -> f64 {
        self.h
            .max_abs_coeff()
            .max(self.c.max_abs_coeff())
            .max(self.i.max_abs_coeff())
    }
}

/// Density, velocity and electrostatic potential on the grid nodes.
#[derive(Clone, Debug)]
pub struct PrimitiveState {
    pub rho: RealField,
    pub u: RealField,
    pub phi: RealField,
}

pub fn from_primitive(p: &PrimitiveState, params: &FluidParams) -> Result<NspState> {
    if p.rho.kind() != FieldKind::Scalar {
        return Err(NspError::KindMismatch {
            expected: FieldKind::Scalar,
            found: p.rho.kind(),
        });
    }
    let min = p.rho.min();
    if min <= 0.0 {
        return Err(NspError::NonpositiveDensity(min));
    }
    let mean = p.rho.mean(0);
    if (mean - params.rho_bar).abs() > MEAN_DENSITY_TOLERANCE * params.rho_bar.max(1.0) {
        return Err(NspError::ChargeImbalance {
            mean: mean - params.rho_bar,
            norm: params.rho_bar,
        });
    }
    let mut theta = p.rho.to_spectral();
    theta.remove_mean();
    let h = lambda_pow(&theta, -1.0);
    let pair = helmholtz_decompose(&p.u.to_spectral())?;
    Ok(NspState {
        h,
        c: pair.c,
        i: pair.i,
        t: 0.0,
    })
}

pub fn to_primitive(s: &NspState, params: &FluidParams) -> Result<PrimitiveState> {
    let theta = s.theta();
    let mut rho = theta.to_physical();
    rho.values_mut().iter_mut().for_each(|v| *v += params.rho_bar);
    let u = s.velocity().to_physical();
    let phi = spectral::poisson_solve(&theta)?.to_physical();
    Ok(PrimitiveState { rho, u, phi })
}

fn lambda_pow(f: &SpectralField, s: f64) -> SpectralField {
    let mut out = f.clone();
    let grid = f.grid().clone();
    let mag = grid.magnitude();
    out.apply_multiplier(|p| spectral::lambda_symbol(mag[p], s));
    out
}

/// How the nonlinear terms are evaluated.
#[derive(Clone, Copy, Debug)]
pub struct EvalOptions<'a> {
    /// Use `ζ(θ+ρ̄)` in the quotient instead of `θ+ρ̄`.
    pub guarded: bool,
    /// 2/3-rule truncation of every pointwise product.
    pub dealias: bool,
    /// Frequency mask applied to every output term.
    pub projector: Option<&'a [bool]>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        EvalOptions {
            guarded: true,
            dealias: true,
            projector: None,
        }
    }
}

/// Node-wise density diagnostics gathered while forming the quotient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityBounds {
    pub min: f64,
    pub max: f64,
}

impl DensityBounds {
    /// `min ρ ≤ 0`.
    pub fn positivity_lost(&self) -> bool {
        self.min <= 0.0
    }

    /// Some node outside `[ρ̄/2, 3ρ̄/2]`, where `ζ` departs from the identity.
    pub fn guard_active(&self, rho_bar: f64) -> bool {
        self.min < 0.5 * rho_bar || self.max > 1.5 * rho_bar
    }
}

/// All nonlinear terms at one state.
#[derive(Clone, Debug)]
pub struct NonlinearTerms {
    /// `F = -Λ⁻¹(Λh div u)`.
    pub f: SpectralField,
    /// `Λ⁻¹(u·∇Λh)`.
    pub conv_h: SpectralField,
    /// `u·∇c`, present when requested.
    pub conv_c: Option<SpectralField>,
    /// `J` (vector).
    pub j: SpectralField,
    /// `Λ⁻¹div J`.
    pub lambda_div_j: SpectralField,
    /// `H = -Λ⁻¹curl J` (antisymmetric).
    pub h_term: SpectralField,
    pub density: DensityBounds,
}

impl NonlinearTerms {
    /// `G = u·∇c - Λ⁻¹div J`; needs `conv_c`.
    pub fn g(&self) -> Option<SpectralField> {
        let mut g = self.conv_c.clone()?;
        g.axpy(-1.0, &self.lambda_div_j).ok()?;
        Some(g)
    }
}

/// Evaluates every nonlinear term of the system in one pass of transforms.
pub fn evaluate(
    s: &NspState,
    params: &FluidParams,
    opts: EvalOptions<'_>,
    with_conv_c: bool,
) -> Result<NonlinearTerms> {
    let grid = s.grid().clone();
    let dim = grid.dim();
    let n = grid.len();
    let mag = grid.magnitude();
    let rho_bar = params.rho_bar;

    let theta = s.theta();
    let u = s.velocity();
    let grad_theta = spectral::gradient(&theta)?;
    let jac = spectral::jacobian(&u)?;
    // μΔu + (μ+λ)∇div u
    let div_u = spectral::divergence(&u)?;
    let mut visc = spectral::laplacian(&u).scaled(params.mu);
    visc.axpy(params.mu + params.lambda, &spectral::gradient(&div_u)?)?;

    let mut spectra: Vec<&[Complex64]> = Vec::with_capacity(3 + 3 * dim + dim * dim);
    spectra.push(theta.component(0));
    for a in 0..dim {
        spectra.push(u.component(a));
    }
    for a in 0..dim {
        spectra.push(grad_theta.component(a));
    }
    for d in &jac {
        spectra.push(d);
    }
    for a in 0..dim {
        spectra.push(visc.component(a));
    }
    let grad_c = if with_conv_c {
        Some(spectral::gradient(&s.c)?)
    } else {
        None
    };
    if let Some(gc) = &grad_c {
        for a in 0..dim {
            spectra.push(gc.component(a));
        }
    }
    let phys = inverse_real_many(&grid, &spectra);
    let th = &phys[0];
    let uu = &phys[1..1 + dim];
    let gth = &phys[1 + dim..1 + 2 * dim];
    let jp = &phys[1 + 2 * dim..1 + 2 * dim + dim * dim];
    let vp = &phys[1 + 2 * dim + dim * dim..1 + 3 * dim + dim * dim];

    let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &t in th.iter() {
        dmin = dmin.min(t + rho_bar);
        dmax = dmax.max(t + rho_bar);
    }
    let density = DensityBounds { min: dmin, max: dmax };
    if !opts.guarded && dmin < 0.5 * rho_bar {
        return Err(NspError::OutsideRegime {
            min: dmin,
            bound: 0.5 * rho_bar,
        });
    }

    let mut f_prod = vec![0.0; n];
    let mut conv_h = vec![0.0; n];
    let mut j_prod = vec![vec![0.0; n]; dim];
    let mut conv_c = vec![0.0; if with_conv_c { n } else { 0 }];
    for p in 0..n {
        let div = (0..dim).map(|a| jp[a * dim + a][p]).sum::<f64>();
        f_prod[p] = th[p] * div;
        conv_h[p] = (0..dim).map(|a| uu[a][p] * gth[a][p]).sum();
        let rho = th[p] + rho_bar;
        let denom = if opts.guarded { zeta(rho, rho_bar) } else { rho };
        let q = th[p] / (rho_bar * denom);
        for (i, ji) in j_prod.iter_mut().enumerate() {
            let adv: f64 = (0..dim).map(|a| uu[a][p] * jp[i * dim + a][p]).sum();
            ji[p] = adv + q * vp[i][p];
        }
    }
    if grad_c.is_some() {
        let gcp = &phys[1 + 3 * dim + dim * dim..];
        for p in 0..n {
            conv_c[p] = (0..dim).map(|a| uu[a][p] * gcp[a][p]).sum();
        }
    }

    let mut reals: Vec<&[f64]> = vec![&f_prod, &conv_h];
    reals.extend(j_prod.iter().map(|v| v.as_slice()));
    if with_conv_c {
        reals.push(&conv_c);
    }
    let mut specs = forward_real_many(&grid, &reals).into_iter();

    let finish = |kind: FieldKind, coeffs: Vec<Complex64>| -> Result<SpectralField> {
        let mut f = SpectralField::from_coeffs(&grid, kind, coeffs)?;
        if opts.dealias {
            f.retain(grid.dealias_mask());
        }
        Ok(f)
    };
    let mut f = finish(FieldKind::Scalar, specs.next().unwrap())?;
    f.apply_multiplier(|p| -spectral::lambda_symbol(mag[p], -1.0));
    let mut conv_h_f = finish(FieldKind::Scalar, specs.next().unwrap())?;
    conv_h_f.apply_multiplier(|p| spectral::lambda_symbol(mag[p], -1.0));
    let mut j_coeffs = Vec::with_capacity(dim * n);
    for _ in 0..dim {
        j_coeffs.extend(specs.next().unwrap());
    }
    let j = finish(FieldKind::Vector, j_coeffs)?;
    let conv_c_f = if with_conv_c {
        Some(finish(FieldKind::Scalar, specs.next().unwrap())?)
    } else {
        None
    };

    let mut lambda_div_j = spectral::divergence(&j)?;
    lambda_div_j.apply_multiplier(|p| spectral::lambda_symbol(mag[p], -1.0));
    let mut h_term = spectral::curl(&j)?;
    h_term.apply_multiplier(|p| -spectral::lambda_symbol(mag[p], -1.0));

    let mut terms = NonlinearTerms {
        f,
        conv_h: conv_h_f,
        conv_c: conv_c_f,
        j,
        lambda_div_j,
        h_term,
        density,
    };
    if let Some(mask) = opts.projector {
        terms.f.retain(mask);
        terms.conv_h.retain(mask);
        terms.lambda_div_j.retain(mask);
        terms.h_term.retain(mask);
        if let Some(cc) = terms.conv_c.as_mut() {
            cc.retain(mask);
        }
    }
    Ok(terms)
}

/// `F = -Λ⁻¹(Λh div u)`, dealiased.
#[allow(non_snake_case)]
pub fn nonlinear_F(s: &NspState, params: &FluidParams) -> Result<SpectralField> {
    Ok(evaluate(s, params, EvalOptions::default(), false)?.f)
}

/// `J = u·∇u + θ/(ρ̄ d)(μΔu + (μ+λ)∇div u)` with `d = ζ(θ+ρ̄)` when
/// `guarded`, else `d = θ+ρ̄` (requires `θ+ρ̄ ≥ ρ̄/2` on every node).
#[allow(non_snake_case)]
pub fn nonlinear_J(s: &NspState, params: &FluidParams, guarded: bool) -> Result<SpectralField> {
    let opts = EvalOptions {
        guarded,
        ..EvalOptions::default()
    };
    Ok(evaluate(s, params, opts, false)?.j)
}

/// `G = u·∇c - Λ⁻¹div J`.
#[allow(non_snake_case)]
pub fn nonlinear_G(s: &NspState, params: &FluidParams, guarded: bool) -> Result<SpectralField> {
    let opts = EvalOptions {
        guarded,
        ..EvalOptions::default()
    };
    let terms = evaluate(s, params, opts, true)?;
    Ok(terms.g().expect("convection of c was requested"))
}

/// `H = -Λ⁻¹curl J`.
#[allow(non_snake_case)]
pub fn nonlinear_H(s: &NspState, params: &FluidParams, guarded: bool) -> Result<SpectralField> {
    let opts = EvalOptions {
        guarded,
        ..EvalOptions::default()
    };
    Ok(evaluate(s, params, opts, false)?.h_term)
}

/// `Λ⁻¹div J` and `Λ⁻¹curl J` recombine to `J` minus its mean:
/// `J = -Λ⁻¹∇(Λ⁻¹div J) - Λ⁻¹div(Λ⁻¹curl J)`.
pub fn recombine_j(lambda_div_j: &SpectralField, h_term: &SpectralField) -> Result<SpectralField> {
    helmholtz_recompose(&HelmholtzPair {
        c: lambda_div_j.clone(),
        i: h_term.scaled(-1.0),
    })
}
