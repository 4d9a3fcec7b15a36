mod common;

use std::cell::RefCell;

use common::{cosine_mode, random_dealiased, small_state};
use nsp_core::model::{FluidParams, NspState};
use nsp_core::spectral::{FieldKind, Grid};
use nsp_core::stepper::linear::{coupling_matrix, spectral_abscissa};
use nsp_core::stepper::{
    linear_reference_run, project, read_checkpoint, run, write_checkpoint, FriedrichsProjector, LinearBlock, NoMonitor,
    Scheme, StepInfo, StepperConfig,
};
use nsp_core::{NspError, Result};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid2() -> Grid {
    Grid::periodic(2, 16).unwrap()
}

fn params() -> FluidParams {
    FluidParams::new(1.0, 0.5, 1.2, 2).unwrap()
}

fn cfg(dt: f64, t_end: f64) -> StepperConfig {
    StepperConfig {
        dt,
        t_end,
        ..StepperConfig::default()
    }
}

/// `exp(tA)` for a real 2x2 `A` from `e^{τt}[cosh(δt) I + sinh(δt)/δ (A - τI)]`,
/// `τ = tr A/2`, `δ² = τ² - det A`, in complex arithmetic.
fn expm2(a: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let tau = 0.5 * (a[0][0] + a[1][1]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let delta = Complex64::new(tau * tau - det, 0.0).sqrt();
    let z = delta * t;
    let ch = z.cosh();
    let sh = if z.norm() < 1e-8 {
        Complex64::new(t, 0.0)
    } else {
        z.sinh() / delta
    };
    let e = (tau * t).exp();
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            let shifted = a[i][j] - tau * id;
            out[i][j] = e * (ch * id + sh * shifted).re;
        }
    }
    out
}

fn coeff_gap(a: &NspState, b: &NspState) -> f64 {
    let d = a.difference(b).unwrap();
    d.max_abs_coeff()
}

#[test]
fn covering_projector_is_the_identity_on_mean_free_fields() {
    let g = grid2();
    let p = FriedrichsProjector::new(&g, 100.0).unwrap();
    assert!(p.covers_lattice(&g));
    let f = random_dealiased(&g, FieldKind::Vector, 4);
    assert_eq!(project(&f, &p).coeffs(), f.coeffs());
}

#[test]
fn projector_is_idempotent_and_cuts_high_modes() {
    let g = grid2();
    let p = FriedrichsProjector::new(&g, 3.0).unwrap();
    let f = common::random_field(&g, FieldKind::Scalar, 8);
    let once = project(&f, &p);
    assert_eq!(project(&once, &p).coeffs(), once.coeffs());
    let high = cosine_mode(&g, &[3, 1], 1.0);
    assert_eq!(project(&high, &p).max_abs_coeff(), 0.0);
    let kept = cosine_mode(&g, &[2, 2], 1.0);
    assert_eq!(project(&kept, &p).coeffs(), kept.coeffs());
    assert_eq!(once.mean(0).norm(), 0.0);
}

#[test]
fn propagator_table_matches_closed_form_exponential() {
    let g = grid2();
    let p = params();
    let dt = 0.05;
    let block = LinearBlock::new(&g, &p, dt).unwrap();
    for k in [[1i64, 0], [2, 1], [3, 3], [5, 0]] {
        let pt = g.point_of(&k).unwrap();
        let r = g.magnitude()[pt];
        let expect = expm2(coupling_matrix(r, &p), dt);
        let got = block.at(pt).e;
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[i][j] - expect[i][j]).abs() < 1e-12, "{k:?} {i}{j}");
            }
        }
        let heat = (-p.nu_i() * r * r * dt).exp();
        assert!((block.at(pt).ei - heat).abs() < 1e-14);
    }
}

#[test]
fn linear_run_follows_per_mode_exponentials() {
    let g = grid2();
    let p = params();
    let mut s0 = NspState::zeros(&g);
    s0.h = cosine_mode(&g, &[2, 1], 0.3);
    s0.c = cosine_mode(&g, &[2, 1], -0.1);
    s0.c.axpy(1.0, &cosine_mode(&g, &[0, 4], 0.2)).unwrap();
    let c = cfg(0.01, 10.0);
    let traj = linear_reference_run(&s0, &c, &p, &mut NoMonitor).unwrap();
    assert_eq!(traj.steps, 1000);
    let end = &traj.final_state;
    for k in [[2i64, 1], [-2, -1], [0, 4], [0, -4]] {
        let pt = g.point_of(&k).unwrap();
        let e = expm2(coupling_matrix(g.magnitude()[pt], &p), 10.0);
        let (h0, c0) = (s0.h.coeffs()[pt], s0.c.coeffs()[pt]);
        let h = e[0][0] * h0 + e[0][1] * c0;
        let cc = e[1][0] * h0 + e[1][1] * c0;
        assert!((end.h.coeffs()[pt] - h).norm() < 1e-9, "{k:?}");
        assert!((end.c.coeffs()[pt] - cc).norm() < 1e-9, "{k:?}");
    }
}

#[test]
fn incompressible_part_decays_like_heat() {
    let g = grid2();
    let p = params();
    let mut s0 = NspState::zeros(&g);
    s0.i = random_dealiased(&g, FieldKind::Antisymmetric, 21);
    let norms = RefCell::new(Vec::new());
    let mut observe = |s: &NspState, _: &StepInfo| -> Result<()> {
        norms.borrow_mut().push(s.i.norm_l2());
        Ok(())
    };
    let c = StepperConfig {
        monitor_stride: 1,
        ..cfg(0.01, 1.0)
    };
    let traj = linear_reference_run(&s0, &c, &p, &mut observe).unwrap();
    let mag = g.magnitude();
    for (pt, z) in traj.final_state.i.coeffs().iter().enumerate() {
        let expect = s0.i.coeffs()[pt] * (-p.nu_i() * mag[pt] * mag[pt] * 1.0).exp();
        assert!((z - expect).norm() < 1e-10);
    }
    assert!(traj.final_state.h.max_abs_coeff() == 0.0 && traj.final_state.c.max_abs_coeff() == 0.0);
    assert!(norms.borrow().windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn equilibrium_and_zero_horizon() {
    let g = grid2();
    let p = params();
    let zero = run(&NspState::zeros(&g), &cfg(0.01, 0.2), &p, &mut NoMonitor).unwrap();
    assert_eq!(zero.final_state.max_abs_coeff(), 0.0);
    let lin = linear_reference_run(&NspState::zeros(&g), &cfg(0.01, 0.2), &p, &mut NoMonitor).unwrap();
    assert_eq!(lin.final_state.max_abs_coeff(), 0.0);

    let s0 = small_state(&g, 3, 0.01);
    let traj = run(&s0, &cfg(0.01, 0.0), &p, &mut NoMonitor).unwrap();
    assert_eq!(traj.times, vec![0.0]);
    assert_eq!(traj.steps, 0);
    assert_eq!(coeff_gap(&traj.final_state, &s0), 0.0);
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let g = grid2();
    let s0 = small_state(&g, 5, 0.05);
    let a = run(&s0, &cfg(0.01, 0.3), &params(), &mut NoMonitor).unwrap();
    let b = run(&s0, &cfg(0.01, 0.3), &params(), &mut NoMonitor).unwrap();
    assert_eq!(a.final_state.h.coeffs(), b.final_state.h.coeffs());
    assert_eq!(a.final_state.c.coeffs(), b.final_state.c.coeffs());
    assert_eq!(a.final_state.i.coeffs(), b.final_state.i.coeffs());
}

#[test]
fn trajectories_stay_projected_and_mass_free() {
    let g = grid2();
    let p = params();
    let n = 3.5;
    let proj = FriedrichsProjector::new(&g, n).unwrap();
    let s0 = proj.project_state(&small_state(&g, 7, 0.05));
    let c = StepperConfig {
        n,
        monitor_stride: 1,
        ..cfg(0.01, 0.5)
    };
    let mut observe = |s: &NspState, _: &StepInfo| -> Result<()> {
        assert_eq!(s.h.mean(0).norm(), 0.0);
        assert!(s.theta().to_physical().mean(0).abs() < 1e-12);
        let again = proj.project_state(s);
        assert_eq!(again.h.coeffs(), s.h.coeffs());
        assert_eq!(again.c.coeffs(), s.c.coeffs());
        assert_eq!(again.i.coeffs(), s.i.coeffs());
        Ok(())
    };
    run(&s0, &c, &p, &mut observe).unwrap();
}

fn self_convergence_order(scheme: Scheme, dt: f64) -> f64 {
    let g = grid2();
    let p = params();
    let s0 = small_state(&g, 13, 0.1);
    let end = |dt: f64| {
        let c = StepperConfig { scheme, ..cfg(dt, 0.4) };
        run(&s0, &c, &p, &mut NoMonitor).unwrap().final_state
    };
    let (a, b, c) = (end(dt), end(dt / 2.0), end(dt / 4.0));
    let e1 = a.difference(&b).unwrap().h.norm_l2() + a.difference(&b).unwrap().velocity().norm_l2();
    let e2 = b.difference(&c).unwrap().h.norm_l2() + b.difference(&c).unwrap().velocity().norm_l2();
    (e1 / e2).log2()
}

#[test]
fn exponential_scheme_is_second_order() {
    let order = self_convergence_order(Scheme::Etdrk2, 0.02);
    assert!(order >= 1.9, "order {order}");
}

#[test]
fn bdf_scheme_is_second_order() {
    // extrapolated explicit terms see the stiff transients of the initial
    // data; the order climbs from 1.3 at dt = 0.02 and settles here
    let order = self_convergence_order(Scheme::ImexBdf2, 0.00125);
    assert!(order >= 1.9, "order {order}");
}

#[test]
fn fast_flow_fails_the_stability_check() {
    let g = grid2();
    let s0 = small_state(&g, 1, 1.0);
    let mut s = NspState::zeros(&g);
    s.c = s0.c.scaled(50.0);
    let r = run(&s, &cfg(0.5, 1.0), &params(), &mut NoMonitor);
    assert!(matches!(r, Err(NspError::Stability { .. })), "{r:?}");
}

#[test]
fn non_finite_coefficients_abort() {
    let g = grid2();
    let mut s = NspState::zeros(&g);
    let pt = g.point_of(&[1, 1]).unwrap();
    s.h.component_mut(0)[pt] = Complex64::new(f64::NAN, 0.0);
    let r = linear_reference_run(&s, &cfg(0.01, 0.1), &params(), &mut NoMonitor);
    assert!(matches!(r, Err(NspError::NumericalAbort { .. })), "{r:?}");
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.chk");
    let g = Grid::periodic(3, 8).unwrap();
    let p = FluidParams::new(0.7, 0.1, 1.4, 3).unwrap();
    let mut s = small_state(&g, 2, 0.3);
    s.t = 1.25;
    write_checkpoint(&path, &s, &p, 6.0).unwrap();
    let back = read_checkpoint(&path).unwrap();
    assert_eq!(back.params, p);
    assert_eq!(back.n, 6.0);
    assert_eq!(back.state.t, 1.25);
    assert_eq!(back.state.h.coeffs(), s.h.coeffs());
    assert_eq!(back.state.c.coeffs(), s.c.coeffs());
    assert_eq!(back.state.i.coeffs(), s.i.coeffs());

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..7], b"NSPCHK1");
    let mut bad = bytes.clone();
    bad[0] = b'X';
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(read_checkpoint(&path), Err(NspError::Checkpoint(_))));
    std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
    assert!(read_checkpoint(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coupling_is_never_unstable(
        r in 1e-3f64..100.0, mu in 0.01f64..10.0, lam_frac in 0.0f64..1.0, rho_bar in 0.01f64..10.0,
    ) {
        // λ from -2μ/3 upwards keeps 2μ + 3λ ≥ 0
        let lambda = -2.0 * mu / 3.0 + lam_frac * 5.0 * mu;
        let p = FluidParams::new(mu, lambda, rho_bar, 3).unwrap();
        prop_assert!(spectral_abscissa(&coupling_matrix(r, &p)) <= 0.0);
    }

    #[test]
    fn projection_commutes_with_stepping(seed in any::<u64>()) {
        let g = grid2();
        let n = 3.0;
        let proj = FriedrichsProjector::new(&g, n).unwrap();
        let s0 = proj.project_state(&small_state(&g, seed, 0.05));
        let c = StepperConfig { n, ..cfg(0.01, 0.05) };
        let a = run(&s0, &c, &params(), &mut NoMonitor).unwrap().final_state;
        let b = proj.project_state(&a);
        prop_assert!(coeff_gap(&a, &b) <= 1e-12 * a.max_abs_coeff());
    }
}
