//! Energy estimates along trajectories: the explicit constants, the
//! shell functionals `αₖ²`, the weight `V(t)`, the global functional
//! `E(h, u, t)` and the damping/smoothing diagnostics.

mod constants;
mod monitor;
mod shell;

pub use constants::{
    compute_constants, form_matrix, reference_diagonal, relative_eigenvalues, sym_eigenvalues, EstimateConstants,
    Feasibility, DEFAULT_A, DEFAULT_C_TILDE,
};
pub use monitor::{
    accumulate_v, damping_margin, envelope_non_increasing, fit_damping_constant, global_bound_check, initial_energy,
    interval_integral, reweight, smoothing_integral, smoothing_majorant_data, EnergyMonitor, EnergyReport, Verdict,
};
pub use shell::{
    display_diagonal, display_equivalence_constants, equivalence_constants, shell_energies, shell_energy, ShellEnergy,
};
