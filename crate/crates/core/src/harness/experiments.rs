//! Experiment drivers. Each returns its records, derived series, and the
//! outcome of its enabled assertions; the CLI decides what a failure means.

use rayon::prelude::*;

use super::config::RunConfig;
use super::initial::{grid_of, make_initial_data, random_field, unit_direction};
use super::records::{NormRecord, SeriesPoint};
use crate::energy::{
    compute_constants, damping_margin, envelope_non_increasing, equivalence_constants, fit_damping_constant,
    global_bound_check, initial_energy, reweight, EnergyMonitor, EnergyReport, EstimateConstants,
};
use crate::error::Result;
use crate::littlewood_paley::{
    bernstein_ratio, composition_check, dyadic_spectrum, partition_of_unity_defect, product_estimate_ratio,
    reconstruct, DyadicTable, HybridIndex,
};
use crate::model::{FluidParams, NspState};
use crate::spectral::FieldKind;
use crate::stepper::{drive, Dynamics, Monitor, StepInfo, Stepper, StepperConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Run,
    Linear,
    Refine,
    Perturb,
    CheckLemmas,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::Linear => "linear",
            Experiment::Refine => "refine",
            Experiment::Perturb => "perturb",
            Experiment::CheckLemmas => "check-lemmas",
        }
    }

    /// The assertions the experiment evaluates, in report order.
    pub fn assertions(self) -> &'static [&'static str] {
        match self {
            Experiment::Run => &[
                "mass of theta conserved to 1e-12",
                "density stays positive",
                "max E(t)/E(0) <= check.bound (when set)",
            ],
            Experiment::Linear => &[
                "fitted damping constant c_fit > 0",
                "damping margin <= 1e-8 on every shell",
                "alpha_k envelope non-increasing on every shell",
            ],
            Experiment::Refine => &["distance series finite", "distance halves per doubling of n"],
            Experiment::Perturb => &[
                "difference series finite",
                "zero perturbation gives a bitwise-zero difference",
            ],
            Experiment::CheckLemmas => &[
                "partition of unity defect <= 1e-12",
                "dyadic reconstruction error <= 1e-10",
                "Bernstein ratio in [(3/4)2^k, (8/3)2^k]",
                "shell quadratic forms positive definite",
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub experiment: Experiment,
    pub records: Vec<NormRecord>,
    /// Derived series (trajectory distances, normalized differences).
    pub series: Vec<SeriesPoint>,
    pub series_label: &'static str,
    pub assertions: Vec<Assertion>,
    /// Human-readable findings, one per line.
    pub summary: Vec<String>,
}

impl ExperimentOutput {
    fn new(experiment: Experiment) -> Self {
        ExperimentOutput {
            experiment,
            records: Vec::new(),
            series: Vec::new(),
            series_label: "",
            assertions: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn check(&mut self, idx: usize, passed: bool, detail: String) {
        self.assertions.push(Assertion {
            name: self.experiment.assertions()[idx],
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Estimate constants with the configured bound factors and weight gain.
pub fn constants_for(cfg: &RunConfig) -> Result<EstimateConstants> {
    let mut c = compute_constants(&cfg.params)?;
    c.a = cfg.check_a;
    c.c_tilde = cfg.check_c_tilde;
    c.k = cfg.check_k;
    Ok(c)
}

pub fn run_experiment(e: Experiment, cfg: &RunConfig) -> Result<ExperimentOutput> {
    match e {
        Experiment::Run => experiment_nonlinear(cfg),
        Experiment::Linear => experiment_linear(cfg),
        Experiment::Refine => experiment_refine(cfg),
        Experiment::Perturb => experiment_perturb(cfg),
        Experiment::CheckLemmas => experiment_check_lemmas(cfg),
    }
}

fn records_of(reports: &[EnergyReport]) -> Vec<NormRecord> {
    reports.iter().map(NormRecord::from).collect()
}

/// Full nonlinear run with energy reports. Reports the empirical bound
/// ratio `max E(t)/E(0)` rather than asserting a universal constant.
pub fn experiment_nonlinear(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let consts = constants_for(cfg)?;
    let s0 = make_initial_data(cfg)?;
    let e0 = initial_energy(&s0);
    let mut mon = EnergyMonitor::new(&cfg.params, &consts);
    drive(&s0, &cfg.stepper, &cfg.params, Dynamics::Full, &mut mon)?;
    let reports = mon.into_reports();
    let mut out = ExperimentOutput::new(Experiment::Run);
    let mass = reports.iter().map(|r| r.mass_defect).fold(0.0, f64::max);
    let lost = reports.iter().any(|r| r.positivity_lost);
    let verdict = global_bound_check(&reports, e0, &consts);
    out.check(0, mass <= 1e-12, format!("max relative mass defect {mass:.3e}"));
    out.check(1, !lost, format!("positivity lost: {lost}"));
    if let Some(bound) = cfg.check_bound {
        let m = verdict.max_ratio;
        out.check(2, m <= bound, format!("max E/E(0) = {m:.6e}, bound {bound}"));
    }
    out.summary.push(format!("E(0) = {e0:.6e}"));
    out.summary
        .push(format!("M_emp = max E(t)/E(0) = {:.6e}", verdict.max_ratio));
    out.summary.push(format!(
        "E(t) <= A*C*E(0) with A = {}, C = {}: {}",
        consts.a, consts.c_tilde, verdict.pass
    ));
    if e0 > 0.0 {
        let phi = reports.iter().map(|r| r.phi_norm).fold(0.0, f64::max);
        out.summary.push(format!("max phi norm / E(0) = {:.6e}", phi / e0));
    }
    if consts.k > 0.0 && e0 > 0.0 {
        let e: Vec<f64> = reports.iter().map(|r| r.e).collect();
        let v: Vec<f64> = reports.iter().map(|r| r.v).collect();
        let w = reweight(&e, &v, consts.k).into_iter().fold(0.0, f64::max);
        out.summary
            .push(format!("max exp(-K V) E / E(0) = {:.6e} (K = {})", w / e0, consts.k));
    }
    if let Some(last) = reports.last() {
        out.summary.push(format!("V(t_end) = {:.6e}", last.v));
        out.summary
            .push(format!("min density at t_end = {:.12}", last.min_density));
        out.summary
            .push(format!("density guard engaged: {}", last.guard_active));
    }
    out.records = records_of(&reports);
    Ok(out)
}

/// Homogeneous linear reference run with the fitted damping constant and
/// per-shell margins.
pub fn experiment_linear(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let consts = constants_for(cfg)?;
    let s0 = make_initial_data(cfg)?;
    let mut mon = EnergyMonitor::new(&cfg.params, &consts);
    drive(&s0, &cfg.stepper, &cfg.params, Dynamics::Linear, &mut mon)?;
    let reports = mon.into_reports();
    let mut out = ExperimentOutput::new(Experiment::Linear);
    let c_fit = fit_damping_constant(&reports)?;
    let margins = damping_margin(&reports, c_fit, &|_| 0.0)?;
    let worst = margins.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    let envelopes = envelope_non_increasing(&reports, 1e-12);
    let rising: Vec<i32> = envelopes.iter().filter(|e| !e.1).map(|e| e.0).collect();
    out.check(0, c_fit > 0.0 && c_fit.is_finite(), format!("c_fit = {c_fit:.6e}"));
    out.check(1, worst <= 1e-8, format!("largest margin {worst:.3e}"));
    out.check(2, rising.is_empty(), format!("shells with rising envelope: {rising:?}"));
    for (k, m) in &margins {
        out.summary.push(format!("shell {k:>3}: margin {m:.3e}"));
    }
    out.records = records_of(&reports);
    Ok(out)
}

/// Integrates several trajectories in lockstep, one stepper each, calling
/// `observe` at step 0, every stride and the final step.
pub fn lockstep(
    states: &[NspState],
    cfgs: &[StepperConfig],
    params: &FluidParams,
    dynamics: Dynamics,
    mut observe: impl FnMut(&[NspState], &[StepInfo]) -> Result<()>,
) -> Result<()> {
    let mut steppers = cfgs
        .iter()
        .zip(states)
        .map(|(c, s)| Stepper::new(s.grid(), params, c, dynamics))
        .collect::<Result<Vec<_>>>()?;
    let t0 = states.first().map(|s| s.t).unwrap_or(0.0);
    let mut current: Vec<NspState> = steppers
        .iter()
        .zip(states)
        .map(|(st, s)| {
            let mut p = st.prepare(s);
            p.t = t0;
            p
        })
        .collect();
    let Some(cfg) = cfgs.first() else {
        return Ok(());
    };
    let steps = cfg.steps();
    let infos = |st: &[Stepper]| st.iter().map(|s| s.info()).collect::<Vec<_>>();
    observe(&current, &infos(&steppers))?;
    for k in 1..=steps {
        current = steppers
            .par_iter_mut()
            .zip(current.par_iter())
            .map(|(st, s)| st.step(s))
            .collect::<Result<Vec<_>>>()?;
        let t = t0 + k as f64 * cfg.dt;
        current.iter_mut().for_each(|s| s.t = t);
        if k % cfg.monitor_stride == 0 || k == steps {
            let mut inf = infos(&steppers);
            inf.iter_mut().for_each(|i| i.t = t);
            observe(&current, &inf)?;
        }
    }
    Ok(())
}

/// `‖δh‖_{B̃^{s-3/2,s+1}} + ‖δu‖_{B̃^{s-3/2,s-1}}` between two states.
pub fn state_distance(a: &NspState, b: &NspState) -> Result<f64> {
    Ok(initial_energy(&a.difference(b)?))
}

/// Runs at `n, 2n, ..., 2^L n` and reports the distance between
/// consecutive levels at every monitored instant.
pub fn experiment_refine(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let consts = constants_for(cfg)?;
    let levels = cfg.refine_levels.max(1);
    let s0 = make_initial_data(&RunConfig {
        stepper: StepperConfig {
            n: f64::INFINITY,
            ..cfg.stepper.clone()
        },
        ..cfg.clone()
    })?;
    let cfgs: Vec<StepperConfig> = (0..=levels)
        .map(|j| StepperConfig {
            n: cfg.stepper.n * 2f64.powi(j as i32),
            ..cfg.stepper.clone()
        })
        .collect();
    let states = vec![s0; cfgs.len()];
    let mut mon = EnergyMonitor::new(&cfg.params, &consts);
    let mut series = Vec::new();
    lockstep(&states, &cfgs, &cfg.params, Dynamics::Full, |cur, info| {
        mon.observe(&cur[0], &info[0])?;
        let values = cur
            .windows(2)
            .map(|w| state_distance(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        series.push(SeriesPoint { t: cur[0].t, values });
        Ok(())
    })?;
    let mut out = ExperimentOutput::new(Experiment::Refine);
    let peaks: Vec<f64> = (0..levels)
        .map(|j| series.iter().map(|p| p.values[j]).fold(0.0, f64::max))
        .collect();
    let finite = series.iter().all(|p| p.values.iter().all(|v| v.is_finite()));
    out.check(0, finite, format!("peak distances {}", sci(&peaks)));
    let halving = peaks.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    out.check(1, halving, format!("peak ratios {:?}", peak_ratios(&peaks)));
    for (j, p) in peaks.iter().enumerate() {
        let n = cfgs[j].n;
        out.summary
            .push(format!("n = {n} vs {}: peak distance {p:.6e}", 2.0 * n));
    }
    out.records = records_of(mon.reports());
    out.series = series;
    out.series_label = "distance";
    Ok(out)
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn peak_ratios(peaks: &[f64]) -> Vec<String> {
    peaks.windows(2).map(|w| format!("{:.3}", w[1] / w[0])).collect()
}

/// Runs from the data and from data plus `δ` times a unit random direction
/// and reports `‖(δh, δu)‖_E(t)/δ` (the raw difference when `δ = 0`).
pub fn experiment_perturb(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let consts = constants_for(cfg)?;
    let s0 = make_initial_data(cfg)?;
    let delta = cfg.perturb_delta;
    let s1 = if delta == 0.0 {
        s0.clone()
    } else {
        let dir = unit_direction(cfg, cfg.perturb_seed)?;
        let mut s = s0.clone();
        s.h.axpy(delta, &dir.h)?;
        s.c.axpy(delta, &dir.c)?;
        s.i.axpy(delta, &dir.i)?;
        s
    };
    let cfgs = vec![cfg.stepper.clone(); 2];
    let mut base = EnergyMonitor::new(&cfg.params, &consts);
    let mut diff = EnergyMonitor::new(&cfg.params, &consts);
    let mut series = Vec::new();
    let mut bitwise_zero = true;
    lockstep(&[s0, s1], &cfgs, &cfg.params, Dynamics::Full, |cur, info| {
        base.observe(&cur[0], &info[0])?;
        let d = cur[1].difference(&cur[0])?;
        bitwise_zero &= d.max_abs_coeff() == 0.0;
        let e = diff.evaluate(&d, &info[0])?.e;
        let normalized = if delta > 0.0 { e / delta } else { e };
        series.push(SeriesPoint {
            t: cur[0].t,
            values: vec![normalized, e],
        });
        Ok(())
    })?;
    let mut out = ExperimentOutput::new(Experiment::Perturb);
    let finite = series.iter().all(|p| p.values.iter().all(|v| v.is_finite()));
    let peak = series.iter().map(|p| p.values[0]).fold(0.0, f64::max);
    out.check(0, finite, format!("peak normalized difference {peak:.6e}"));
    if delta == 0.0 {
        out.check(1, bitwise_zero, format!("bitwise zero: {bitwise_zero}"));
    }
    out.summary.push(format!("delta = {delta:e}"));
    out.summary.push(format!("peak ||(dh, du)||_E / delta = {peak:.6e}"));
    out.records = records_of(base.reports());
    out.series = series;
    out.series_label = "difference";
    Ok(out)
}

/// Littlewood-Paley and constant checks on a seeded ensemble of fields.
pub fn experiment_check_lemmas(cfg: &RunConfig) -> Result<ExperimentOutput> {
    const ENSEMBLE: u64 = 20;
    let grid = grid_of(cfg)?;
    let consts = constants_for(cfg)?;
    let band = (grid.base_wavenumber(), grid.max_magnitude());
    let mut out = ExperimentOutput::new(Experiment::CheckLemmas);

    let pou = partition_of_unity_defect(&grid);
    out.check(0, pou <= 1e-12, format!("defect {pou:.3e}"));

    let mut recon = 0.0f64;
    let mut bern_ok = true;
    let mut bern_range = (f64::INFINITY, 0.0f64);
    let mut product = 0.0f64;
    let mut composition = 0.0f64;
    let s = cfg.dim as f64 / 2.0;
    for j in 0..ENSEMBLE {
        let seed = cfg.init.seed.wrapping_add(j);
        let f = random_field(&grid, FieldKind::Scalar, band, cfg.init.decay, seed)?;
        let g = random_field(&grid, FieldKind::Scalar, band, cfg.init.decay, seed ^ 0x9e37_79b9)?;
        let mut centred = f.clone();
        centred.remove_mean();
        let err = reconstruct(&f).sub(&centred)?.norm_l2() / centred.norm_l2();
        recon = recon.max(err);
        for (k, norm) in dyadic_spectrum(&f).iter() {
            if norm == 0.0 {
                continue;
            }
            let r = bernstein_ratio(&f, k)? / 2f64.powi(k);
            bern_range = (bern_range.0.min(r), bern_range.1.max(r));
            bern_ok &= r >= 0.75 * (1.0 - 1e-12) && r <= 8.0 / 3.0 * (1.0 + 1e-12);
        }
        product = product.max(product_estimate_ratio(&f, &g, HybridIndex::new(s - 1.0, s))?);
        let sup = f.to_physical().max_abs();
        let small = f.scaled(0.5 * cfg.params.rho_bar / sup);
        composition = composition.max(composition_check(&small, s, cfg.params.rho_bar)?);
    }
    out.check(1, recon <= 1e-10, format!("max relative L2 error {recon:.3e}"));
    out.check(
        2,
        bern_ok,
        format!("ratio / 2^k in [{:.4}, {:.4}]", bern_range.0, bern_range.1),
    );

    let table = DyadicTable::for_grid(&grid);
    let mut min_c1 = f64::INFINITY;
    let mut definite = true;
    for k in table.shells() {
        if let Some((c1, c2)) = equivalence_constants(&grid, k, &consts) {
            definite &= c1 > 0.0 && c2.is_finite() && c2 > 0.0;
            min_c1 = min_c1.min(c1);
        }
    }
    out.check(3, definite, format!("smallest c1 {min_c1:.3e}"));

    let f = consts.feasibility;
    out.summary.push(format!(
        "constants: M1 = {}, M2 = {}, K1 = {}, M3 = {}, K2 = {}",
        consts.m1, consts.m2, consts.k1, consts.m3, consts.k2
    ));
    out.summary.push(format!(
        "low-frequency conditions {:?}; M1 cap slack {:.6e}",
        f.low_conditions(),
        f.m1_below_cap
    ));
    out.summary
        .push(format!("largest product-estimate ratio {product:.6e}"));
    out.summary.push(format!("largest composition ratio {composition:.6e}"));
    Ok(out)
}
