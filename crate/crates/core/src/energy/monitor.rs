//! Online evaluation of energies along a trajectory and the diagnostics
//! computed from the recorded series.
//!
//! With `s = N/2`:
//! - `V(t) = ∫₀ᵗ ‖u‖_{B^{s+1}}`;
//! - `E(h,u,t) = sup ‖h‖_{B̃^{s-3/2,s+1}} + sup ‖u‖_{B̃^{s-3/2,s-1}}
//!   + ∫ ‖h‖_{B̃^{s+1/2,s+1}} + ∫ ‖u‖_{B̃^{s+1/2,s+1}}`;
//! - the smoothing integral is `∫ Σ_{k>0} 2^{k(s+3/2)}‖cₖ‖`.
//!
//! Time integrals use the log-mean rule on the monitored instants (see
//! [`interval_integral`]): the integrands are nonnegative and dominated by
//! exponential decay, which the trapezoid rule overestimates badly when the
//! sampling interval exceeds the fastest decay time.

use super::constants::EstimateConstants;
use super::shell::{shell_energies, ShellEnergy};
use crate::error::{NspError, Result};
use crate::littlewood_paley::{dyadic_spectrum, hybrid_norm, HybridIndex};
use crate::model::{FluidParams, NspState};
use crate::spectral;
use crate::stepper::{Monitor, StepInfo};

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub shells: Vec<ShellEnergy>,
    /// `‖h‖_{B̃^{s-3/2,s+1}}`.
    pub h_norm: f64,
    /// `‖c‖`, `‖I‖`, `‖u‖` in `B̃^{s-3/2,s-1}`.
    pub c_norm: f64,
    pub i_norm: f64,
    pub u_norm: f64,
    /// `‖φ‖_{B̃^{s-1/2,s+2}}`, `φ` from the Poisson equation.
    pub phi_norm: f64,
    /// `‖u‖_{B^{s+1}}`, the integrand of `V`.
    pub u_lipschitz: f64,
    pub v: f64,
    pub e: f64,
    /// `Σ_{k>0} 2^{k(s+3/2)}‖cₖ‖` and its running time integral.
    pub c_high: f64,
    pub smoothing: f64,
    /// `|mean(ρ) - ρ̄| / ρ̄` measured on the nodes.
    pub mass_defect: f64,
    pub min_density: f64,
    pub positivity_lost: bool,
    pub guard_active: bool,
}

impl EnergyReport {
    pub fn alpha_sq(&self, k: i32) -> f64 {
        self.shells.iter().find(|s| s.k == k).map(|s| s.alpha_sq).unwrap_or(0.0)
    }
}

fn s_index(dim: usize) -> f64 {
    dim as f64 / 2.0
}

/// `E(0) = ‖h₀‖_{B̃^{s-3/2,s+1}} + ‖u₀‖_{B̃^{s-3/2,s-1}}`.
pub fn initial_energy(state: &NspState) -> f64 {
    let s = s_index(state.grid().dim());
    hybrid_norm(&state.h, HybridIndex::new(s - 1.5, s + 1.0))
        + hybrid_norm(&state.velocity(), HybridIndex::new(s - 1.5, s - 1.0))
}

/// Records an [`EnergyReport`] at every observed instant.
pub struct EnergyMonitor {
    params: FluidParams,
    consts: EstimateConstants,
    reports: Vec<EnergyReport>,
    prev: Option<Running>,
}

/// Running sup/integral state; integrals are accumulated shell by shell so
/// each summand is close to a single decaying exponential.
#[derive(Clone)]
struct Running {
    t: f64,
    u_lipschitz: Vec<f64>,
    h_l1: Vec<f64>,
    u_l1: Vec<f64>,
    c_high: Vec<f64>,
    v: f64,
    h_sup: f64,
    u_sup: f64,
    h_int: f64,
    u_int: f64,
    smoothing: f64,
}

fn integrate(dt: f64, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| interval_integral(dt, x, y)).sum()
}

impl EnergyMonitor {
    pub fn new(params: &FluidParams, consts: &EstimateConstants) -> Self {
        EnergyMonitor {
            params: *params,
            consts: *consts,
            reports: Vec::new(),
            prev: None,
        }
    }

    pub fn reports(&self) -> &[EnergyReport] {
        &self.reports
    }

    pub fn into_reports(self) -> Vec<EnergyReport> {
        self.reports
    }

    /// Evaluates one instant without recording it.
    pub fn evaluate(&mut self, state: &NspState, info: &StepInfo) -> Result<EnergyReport> {
        let dim = state.grid().dim();
        let s = s_index(dim);
        let u = state.velocity();
        let theta = state.theta();
        let phi = spectral::poisson_solve(&theta)?;
        let hs = dyadic_spectrum(&state.h);
        let us = dyadic_spectrum(&u);
        let cs = dyadic_spectrum(&state.c);
        let low = HybridIndex::new(s - 1.5, s - 1.0);
        let h_norm = hs.weighted_sum(HybridIndex::new(s - 1.5, s + 1.0));
        let u_norm = us.weighted_sum(low);
        let l1 = HybridIndex::new(s + 0.5, s + 1.0);
        let h_l1 = hs.weighted_terms(l1);
        let u_l1 = us.weighted_terms(l1);
        let u_lip = us.weighted_terms(HybridIndex::new(s + 1.0, s + 1.0));
        let c_high: Vec<f64> = cs
            .iter()
            .map(|(k, n)| {
                if k > 0 {
                    2f64.powf(k as f64 * (s + 1.5)) * n
                } else {
                    0.0
                }
            })
            .collect();

        let rho = theta.to_physical();
        let nodes = rho.values().len() as f64;
        let mean_theta = rho.values().iter().sum::<f64>() / nodes;
        let min_density = rho.min() + self.params.rho_bar;
        let mass_defect = mean_theta.abs() / self.params.rho_bar;

        let run = match self.prev.take() {
            None => Running {
                t: state.t,
                u_lipschitz: u_lip,
                h_l1,
                u_l1,
                c_high,
                v: 0.0,
                h_sup: h_norm,
                u_sup: u_norm,
                h_int: 0.0,
                u_int: 0.0,
                smoothing: 0.0,
            },
            Some(p) => {
                let dt = state.t - p.t;
                Running {
                    t: state.t,
                    v: p.v + integrate(dt, &p.u_lipschitz, &u_lip),
                    h_sup: p.h_sup.max(h_norm),
                    u_sup: p.u_sup.max(u_norm),
                    h_int: p.h_int + integrate(dt, &p.h_l1, &h_l1),
                    u_int: p.u_int + integrate(dt, &p.u_l1, &u_l1),
                    smoothing: p.smoothing + integrate(dt, &p.c_high, &c_high),
                    u_lipschitz: u_lip,
                    h_l1,
                    u_l1,
                    c_high,
                }
            }
        };
        let report = EnergyReport {
            t: state.t,
            shells: shell_energies(state, &self.consts),
            h_norm,
            c_norm: cs.weighted_sum(low),
            i_norm: hybrid_norm(&state.i, low),
            u_norm,
            phi_norm: hybrid_norm(&phi, HybridIndex::new(s - 0.5, s + 2.0)),
            u_lipschitz: run.u_lipschitz.iter().sum(),
            v: run.v,
            e: run.h_sup + run.u_sup + run.h_int + run.u_int,
            c_high: run.c_high.iter().sum(),
            smoothing: run.smoothing,
            mass_defect,
            min_density,
            positivity_lost: info.positivity_lost || min_density <= 0.0,
            guard_active: info.guard_active,
        };
        self.prev = Some(run);
        Ok(report)
    }
}

impl Monitor for EnergyMonitor {
    fn observe(&mut self, state: &NspState, info: &StepInfo) -> Result<()> {
        let report = self.evaluate(state, info)?;
        self.reports.push(report);
        Ok(())
    }
}

/// `∫` over one interval of length `dt` of a nonnegative integrand with
/// end values `a`, `b`: `dt (a - b)/ln(a/b)`, exact for `a e^{-γt}` and
/// equal to the trapezoid value when `a = b`. A zero end value (or a
/// negative one) falls back to the trapezoid rule.
pub fn interval_integral(dt: f64, a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * dt * (a + b);
    }
    let x = b / a - 1.0;
    if x.abs() < 1e-4 {
        // (a - b)/ln(a/b) = a x/ln(1+x) = a (1 + x/2 - x²/12 + x³/24)
        return dt * a * (1.0 + x * (0.5 + x * (-1.0 / 12.0 + x / 24.0)));
    }
    dt * (a - b) / (a / b).ln()
}

/// Cumulative integral of `integrand` sampled at `times`, by
/// [`interval_integral`] on each interval.
pub fn accumulate_v(times: &[f64], integrand: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += interval_integral(times[i] - times[i - 1], integrand[i - 1], integrand[i]);
        }
        out.push(acc);
    }
    out
}

/// `e^{-K V(t)} f(t)`.
pub fn reweight(values: &[f64], v: &[f64], k: f64) -> Vec<f64> {
    values.iter().zip(v).map(|(f, v)| (-k * v).exp() * f).collect()
}

const ACTIVE_SHELL: f64 = 1e-10;

fn shell_pairs(window: &[EnergyReport]) -> Result<Vec<(i32, f64, f64, f64)>> {
    if window.len() < 3 {
        return Err(NspError::WindowTooShort {
            need: 3,
            got: window.len(),
        });
    }
    let mut out = Vec::new();
    for pair in window.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        let scale = a.shells.iter().map(|s| s.alpha_sq).fold(0.0, f64::max).sqrt();
        for sa in &a.shells {
            let alpha = sa.alpha_sq.max(0.0).sqrt();
            if alpha <= ACTIVE_SHELL * scale {
                continue;
            }
            let next = b.alpha_sq(sa.k).max(0.0).sqrt();
            out.push((sa.k, alpha, (next - alpha) / dt, dt));
        }
    }
    Ok(out)
}

fn low_weight(k: i32) -> f64 {
    2f64.powi(2 * k).min(1.0)
}

/// Largest `c` with `[αₖ(t+Δ) - αₖ(t)]/Δ + c·min(2^{2k},1)·αₖ(t) ≤ 0` on
/// every monitored pair and active shell. Shells below `1e-10` of the
/// largest `αₖ` at that instant are skipped.
pub fn fit_damping_constant(window: &[EnergyReport]) -> Result<f64> {
    let pairs = shell_pairs(window)?;
    Ok(pairs
        .iter()
        .map(|&(k, alpha, slope, _)| -slope / (low_weight(k) * alpha))
        .fold(f64::INFINITY, f64::min))
}

/// Per shell, the largest over the window of
/// `[αₖ(t+Δ) - αₖ(t)]/Δ + c_fit·min(2^{2k},1)·αₖ(t) - forcingₖ`, where
/// `forcing` maps a shell to its measured right-hand side (zero for the
/// homogeneous linear system). Inactive shells report 0.
pub fn damping_margin(window: &[EnergyReport], c_fit: f64, forcing: &dyn Fn(i32) -> f64) -> Result<Vec<(i32, f64)>> {
    let pairs = shell_pairs(window)?;
    let mut out: Vec<(i32, f64)> = window[0].shells.iter().map(|s| (s.k, f64::NEG_INFINITY)).collect();
    for (k, alpha, slope, _) in pairs {
        let m = slope + c_fit * low_weight(k) * alpha - forcing(k);
        if let Some(slot) = out.iter_mut().find(|(kk, _)| *kk == k) {
            slot.1 = slot.1.max(m);
        }
    }
    for slot in out.iter_mut() {
        if slot.1 == f64::NEG_INFINITY {
            slot.1 = 0.0;
        }
    }
    Ok(out)
}

/// Time integral of `Σ_{k>0} 2^{k(s+3/2)}‖cₖ‖` over the window, taken from
/// the monitor's shell-by-shell running integral.
pub fn smoothing_integral(window: &[EnergyReport]) -> f64 {
    match (window.first(), window.last()) {
        (Some(a), Some(b)) => b.smoothing - a.smoothing,
        _ => 0.0,
    }
}

/// Data term of the smoothing majorant,
/// `‖h₀‖_{B̃^{s-1,s+3/2}} + ‖c₀‖_{B̃^{s-1,s-1/2}}`.
pub fn smoothing_majorant_data(state: &NspState) -> f64 {
    let s = s_index(state.grid().dim());
    hybrid_norm(&state.h, HybridIndex::new(s - 1.0, s + 1.5))
        + hybrid_norm(&state.c, HybridIndex::new(s - 1.0, s - 0.5))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    /// `max_t E(h,u,t) / E(0)`; 0 for zero data.
    pub max_ratio: f64,
}

/// Passes iff `E(h,u,t) ≤ A·C̃·E(0)` at every monitored instant.
pub fn global_bound_check(window: &[EnergyReport], e0: f64, consts: &EstimateConstants) -> Verdict {
    if e0 == 0.0 {
        let zero = window.iter().all(|r| r.e == 0.0);
        return Verdict {
            pass: zero,
            max_ratio: if zero { 0.0 } else { f64::INFINITY },
        };
    }
    let max_ratio = window.iter().map(|r| r.e / e0).fold(0.0, f64::max);
    Verdict {
        pass: max_ratio <= consts.a * consts.c_tilde && max_ratio.is_finite(),
        max_ratio,
    }
}

/// Per shell, whether the local maxima of `αₖ(t)` from the first sampling
/// interval on form a non-increasing sequence (relative slack `rtol`).
/// Shells that never exceed `1e-10` of the largest `αₖ` report true.
pub fn envelope_non_increasing(window: &[EnergyReport], rtol: f64) -> Vec<(i32, bool)> {
    let Some(first) = window.first() else {
        return Vec::new();
    };
    let scale = window
        .iter()
        .flat_map(|r| r.shells.iter().map(|s| s.alpha_sq))
        .fold(0.0, f64::max)
        .sqrt();
    first
        .shells
        .iter()
        .map(|s| {
            let a: Vec<f64> = window.iter().map(|r| r.alpha_sq(s.k).max(0.0).sqrt()).collect();
            if a.iter().all(|&v| v <= ACTIVE_SHELL * scale) {
                return (s.k, true);
            }
            let tail = if a.len() > 1 { &a[1..] } else { &a[..] };
            let maxima: Vec<f64> = (0..tail.len())
                .filter(|&i| {
                    let left = i == 0 || tail[i] >= tail[i - 1];
                    let right = i + 1 == tail.len() || tail[i] >= tail[i + 1];
                    left && right
                })
                .map(|i| tail[i])
                .collect();
            let ok = maxima.windows(2).all(|w| w[1] <= w[0] * (1.0 + rtol));
            (s.k, ok)
        })
        .collect()
}
