//! Line-oriented run configuration: `section.key = value`, `#` comments.

use std::path::PathBuf;

use crate::error::{NspError, Result};
use crate::model::FluidParams;
use crate::stepper::{Scheme, StepperConfig};

/// Defaults and accepted keys, as shown by `--help`.
pub const CONFIG_HELP: &str = "\
Configuration keys (`section.key = value`, `#` starts a comment):
  grid.dim          = 3          dimension N (2 or 3)
  grid.points       = 32         points per axis M (power of two, >= 8)
  grid.length       = 2pi        box length L (accepts `pi`, `2pi`, `2*pi`)
  params.mu         = 1          shear viscosity, > 0
  params.lambda     = 0          second viscosity, 2 mu + N lambda >= 0
  params.rho_bar    = 1          background density, > 0
  stepper.dt        = 1e-3       time step
  stepper.scheme    = etdrk2     etdrk2 | imex-bdf2
  stepper.n         = inf        truncation parameter n > 1 (`inf` keeps all modes)
  stepper.t_end     = 1          final time (rounded to a multiple of dt)
  stepper.dealias   = true       2/3-rule truncation of products
  monitor.stride    = 10         steps between monitored instants
  init.kind         = random-band  single-mode | random-band | file
  init.amplitude    = 1e-3       E(0) of the generated data
  init.seed         = 0
  init.band         = 1, M/3     radial wavenumber band [lo, hi] for random-band
  init.decay        = 0          spectral weight exp(-decay |xi|) for random-band
  init.file         =            checkpoint path for `file` (loaded verbatim)
  output.dir        = out        records directory (overridden by --out)
  perturb.delta     = 1e-6       perturbation size for `perturb`
  perturb.seed      = 1          seed of the perturbation direction
  refine.levels     = 1          number of n-doublings for `refine`
  check.a           = 2.5        bound factor A in E <= A C E(0)
  check.c_tilde     = 1          bound factor C in E <= A C E(0)
  check.k           = 0          weight gain K of exp(-K V(t)) in reports
  check.bound       =            if set, `run` asserts max E(t)/E(0) <= bound
";

#[derive(Clone, Debug, PartialEq)]
pub enum InitKind {
    SingleMode,
    RandomBand,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub amplitude: f64,
    pub seed: u64,
    /// Radial band `[lo, hi]` in physical wavenumbers.
    pub band: (f64, f64),
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
    pub params: FluidParams,
    pub stepper: StepperConfig,
    pub init: InitSpec,
    pub output_dir: PathBuf,
    pub perturb_delta: f64,
    pub perturb_seed: u64,
    pub refine_levels: usize,
    pub check_a: f64,
    pub check_c_tilde: f64,
    pub check_k: f64,
    /// Bound asserted on `max E(t)/E(0)` by `run`; unset means report only.
    pub check_bound: Option<f64>,
}

impl PartialEq for StepperConfig {
    fn eq(&self, o: &Self) -> bool {
        self.dt == o.dt
            && self.scheme == o.scheme
            && self.dealias == o.dealias
            && self.n == o.n
            && self.t_end == o.t_end
            && self.monitor_stride == o.monitor_stride
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let points = 32;
        RunConfig {
            dim: 3,
            points,
            length: 2.0 * std::f64::consts::PI,
            params: FluidParams {
                mu: 1.0,
                lambda: 0.0,
                rho_bar: 1.0,
                dim: 3,
            },
            stepper: StepperConfig::default(),
            init: InitSpec {
                kind: InitKind::RandomBand,
                amplitude: 1e-3,
                seed: 0,
                band: (1.0, (points / 3) as f64),
                decay: 0.0,
            },
            output_dir: PathBuf::from("out"),
            perturb_delta: 1e-6,
            perturb_seed: 1,
            refine_levels: 1,
            check_a: crate::energy::DEFAULT_A,
            check_c_tilde: crate::energy::DEFAULT_C_TILDE,
            check_k: 0.0,
            check_bound: None,
        }
    }
}

fn parse_real(key: &str, v: &str) -> Result<f64> {
    let t = v.trim().to_ascii_lowercase();
    let bad = || NspError::ConfigValue {
        key: key.to_string(),
        msg: format!("`{v}` is not a number"),
    };
    match t.as_str() {
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        "pi" => return Ok(std::f64::consts::PI),
        _ => {}
    }
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor: f64 = if head.is_empty() {
            1.0
        } else {
            head.parse().map_err(|_| bad())?
        };
        return Ok(factor * std::f64::consts::PI);
    }
    t.parse().map_err(|_| bad())
}

fn parse_uint(key: &str, v: &str) -> Result<u64> {
    v.trim().parse().map_err(|_| NspError::ConfigValue {
        key: key.to_string(),
        msg: format!("`{v}` is not a nonnegative integer"),
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(NspError::ConfigValue {
            key: key.to_string(),
            msg: format!("`{v}` is not a boolean"),
        }),
    }
}

fn invalid(key: &str, msg: impl Into<String>) -> NspError {
    NspError::ConfigValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

/// Parses and validates a configuration document. Unknown keys, repeated
/// keys and malformed lines are rejected with their line number.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut band: Option<(f64, f64)> = None;
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(NspError::ConfigParse {
                line: line_no,
                msg: format!("expected `section.key = value`, found `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(NspError::ConfigParse {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
        match key {
            "grid.dim" => cfg.dim = parse_uint(key, value)? as usize,
            "grid.points" => cfg.points = parse_uint(key, value)? as usize,
            "grid.length" => cfg.length = parse_real(key, value)?,
            "params.mu" => cfg.params.mu = parse_real(key, value)?,
            "params.lambda" => cfg.params.lambda = parse_real(key, value)?,
            "params.rho_bar" => cfg.params.rho_bar = parse_real(key, value)?,
            "stepper.dt" => cfg.stepper.dt = parse_real(key, value)?,
            "stepper.scheme" => {
                cfg.stepper.scheme = match value {
                    "etdrk2" => Scheme::Etdrk2,
                    "imex-bdf2" => Scheme::ImexBdf2,
                    _ => return Err(invalid(key, format!("unknown scheme `{value}`"))),
                }
            }
            "stepper.n" => cfg.stepper.n = parse_real(key, value)?,
            "stepper.t_end" => cfg.stepper.t_end = parse_real(key, value)?,
            "stepper.dealias" => cfg.stepper.dealias = parse_bool(key, value)?,
            "monitor.stride" => cfg.stepper.monitor_stride = parse_uint(key, value)? as usize,
            "init.kind" => {
                cfg.init.kind = match value {
                    "single-mode" => InitKind::SingleMode,
                    "random-band" => InitKind::RandomBand,
                    "file" => InitKind::File(PathBuf::new()),
                    _ => return Err(invalid(key, format!("unknown kind `{value}`"))),
                }
            }
            "init.file" => {
                if let InitKind::File(p) = &mut cfg.init.kind {
                    *p = PathBuf::from(value);
                } else {
                    cfg.init.kind = InitKind::File(PathBuf::from(value));
                }
            }
            "init.amplitude" => cfg.init.amplitude = parse_real(key, value)?,
            "init.seed" => cfg.init.seed = parse_uint(key, value)?,
            "init.band" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 2 {
                    return Err(invalid(key, "expected `lo, hi`"));
                }
                band = Some((parse_real(key, parts[0])?, parse_real(key, parts[1])?));
            }
            "init.decay" => cfg.init.decay = parse_real(key, value)?,
            "output.dir" => cfg.output_dir = PathBuf::from(value),
            "perturb.delta" => cfg.perturb_delta = parse_real(key, value)?,
            "perturb.seed" => cfg.perturb_seed = parse_uint(key, value)?,
            "refine.levels" => cfg.refine_levels = parse_uint(key, value)? as usize,
            "check.a" => cfg.check_a = parse_real(key, value)?,
            "check.c_tilde" => cfg.check_c_tilde = parse_real(key, value)?,
            "check.k" => cfg.check_k = parse_real(key, value)?,
            "check.bound" => cfg.check_bound = Some(parse_real(key, value)?),
            _ => {
                return Err(NspError::ConfigParse {
                    line: line_no,
                    msg: format!("unknown key `{key}`"),
                })
            }
        }
    }
    // the "file" kind keeps the path given in either order
    if let InitKind::File(p) = &cfg.init.kind {
        if p.as_os_str().is_empty() {
            return Err(invalid("init.file", "kind `file` needs a path"));
        }
    }
    cfg.init.band = band.unwrap_or((1.0, (cfg.points / 3) as f64));
    cfg.params.dim = cfg.dim;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if !(cfg.dim == 2 || cfg.dim == 3) {
        return Err(invalid("grid.dim", "must be 2 or 3"));
    }
    if cfg.points < 8 || !cfg.points.is_power_of_two() {
        return Err(invalid("grid.points", "must be a power of two >= 8"));
    }
    if !(cfg.length > 0.0 && cfg.length.is_finite()) {
        return Err(invalid("grid.length", "must be positive and finite"));
    }
    let p = &cfg.params;
    if !(p.mu > 0.0 && p.mu.is_finite()) {
        return Err(invalid("params.mu", "need mu > 0 (and 2 mu + N lambda >= 0)"));
    }
    if !(2.0 * p.mu + cfg.dim as f64 * p.lambda >= 0.0 && p.lambda.is_finite()) {
        return Err(invalid("params.lambda", "need 2 mu + N lambda >= 0"));
    }
    if !(p.rho_bar > 0.0 && p.rho_bar.is_finite()) {
        return Err(invalid("params.rho_bar", "need rho_bar > 0"));
    }
    let s = &cfg.stepper;
    if !(s.dt > 0.0 && s.dt.is_finite()) {
        return Err(invalid("stepper.dt", "must be positive"));
    }
    if !(s.n > 1.0) {
        return Err(invalid("stepper.n", "must exceed 1"));
    }
    if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
        return Err(invalid("stepper.t_end", "must be finite and >= 0"));
    }
    if s.monitor_stride == 0 {
        return Err(invalid("monitor.stride", "must be positive"));
    }
    let i = &cfg.init;
    if !(i.amplitude >= 0.0 && i.amplitude.is_finite()) {
        return Err(invalid("init.amplitude", "must be finite and >= 0"));
    }
    if !(i.band.0 >= 0.0 && i.band.0 <= i.band.1) {
        return Err(invalid("init.band", "need 0 <= lo <= hi"));
    }
    if !(i.decay >= 0.0 && i.decay.is_finite()) {
        return Err(invalid("init.decay", "must be finite and >= 0"));
    }
    if !(cfg.perturb_delta >= 0.0 && cfg.perturb_delta.is_finite()) {
        return Err(invalid("perturb.delta", "must be finite and >= 0"));
    }
    if cfg.check_c_tilde <= 0.0 || cfg.check_a <= 0.0 {
        return Err(invalid("check.a", "bound factors must be positive"));
    }
    if cfg.check_bound.is_some_and(|b| !(b > 0.0)) {
        return Err(invalid("check.bound", "must be positive"));
    }
    if cfg.check_k < 0.0 {
        return Err(invalid("check.k", "must be >= 0"));
    }
    Ok(())
}
