//! Configuration, initial data, experiment drivers and record sinks behind
//! the `nsp` binary.

mod config;
mod experiments;
mod initial;
mod records;

pub use config::{parse_config, InitKind, InitSpec, RunConfig, CONFIG_HELP};
pub use experiments::{
    constants_for, experiment_check_lemmas, experiment_linear, experiment_nonlinear, experiment_perturb,
    experiment_refine, lockstep, run_experiment, state_distance, Assertion, Experiment, ExperimentOutput,
};
pub use initial::{grid_of, make_initial_data, random_field, truncate, unit_direction};
pub use records::{
    csv_path, read_records, record_line, write_records, write_series, NormRecord, SeriesPoint, ALPHA_RECORD_FLOOR,
    CSV_HEADER, RECORD_KEYS,
};

use std::path::{Path, PathBuf};

use crate::error::{NspError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit code for an error that ended an experiment: configuration and
/// input problems give 2, everything raised while integrating gives 3.
pub fn exit_code(e: &NspError) -> i32 {
    match e {
        NspError::ConfigParse { .. }
        | NspError::ConfigValue { .. }
        | NspError::InvalidParams(_)
        | NspError::InvalidGrid(_)
        | NspError::InvalidStepper(_)
        | NspError::Infeasible(_)
        | NspError::EmptyBand
        | NspError::Checkpoint(_)
        | NspError::Io { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Writes the records to `<dir>/<name>.ndjson` (plus CSV) and any series
/// to `<dir>/<name>_<label>.ndjson`; returns the paths written.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let name = out.experiment.name();
    let records = dir.join(format!("{name}.ndjson"));
    write_records(&out.records, &records)?;
    let mut paths = vec![records.clone(), csv_path(&records)];
    if !out.series_label.is_empty() {
        let p = dir.join(format!("{name}_{}.ndjson", out.series_label));
        write_series(&out.series, out.series_label, &p)?;
        paths.push(p);
    }
    Ok(paths)
}
