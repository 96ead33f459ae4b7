//! Scenario execution behind the command-line tool.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::calibration::{calibrate, CalibrationError};
use crate::config::{emit_params, ConfigError, RunConfig, Scenario};
use crate::dynamics::{
    scan_asymmetry, simulate_pulse, simulate_scan, switching_contrast, DynamicsError,
};
use crate::output::{format_sig, write_sweep, write_trace};
use crate::steady::{general_steady_state, SolveError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("config is missing its `params.` section")]
    NoParams,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("{failed} of {total} sweep points failed (first at {first_power} W: {first})")]
    SweepPoints {
        failed: usize,
        total: usize,
        first_power: f64,
        first: SolveError,
    },
}

impl RunError {
    /// 1 for input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io { .. } | Self::NoParams => 1,
            Self::Solve(_)
            | Self::Dynamics(_)
            | Self::Calibration(_)
            | Self::SweepPoints { .. } => 2,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs a parsed configuration, writing its CSV (or, for calibration, a
/// runnable steady-state config) to `output` when given. Returns the one-line
/// summary.
pub fn execute(cfg: &RunConfig, output: Option<&Path>) -> Result<String, RunError> {
    let params = cfg.params.as_ref();
    match &cfg.scenario {
        Scenario::Steady { pump_power } => {
            let p = params.ok_or(RunError::NoParams)?;
            let off = general_steady_state(p, 0.0)?;
            let on = general_steady_state(p, *pump_power)?;
            let contrast = off.transmission() / on.transmission();
            if let Some(path) = output {
                let rel = Ok(on.transmission() / off.transmission());
                write_sweep(create(path)?, &[(*pump_power, rel)]).map_err(io_at(path))?;
            }
            Ok(format!(
                "pump {} W: |t|^2 = {}, |r|^2 = {}, contrast = {}",
                format_sig(*pump_power),
                format_sig(on.transmission()),
                format_sig(on.reflection()),
                format_sig(contrast),
            ))
        }
        Scenario::Pulse { pump, duration } => {
            let p = params.ok_or(RunError::NoParams)?;
            let trace = simulate_pulse(p, pump, *duration)?;
            if let Some(path) = output {
                write_trace(create(path)?, &trace).map_err(io_at(path))?;
            }
            let contrast = switching_contrast(&trace, pump)
                .map(|c| format_sig(c.value()))
                .unwrap_or_else(|e| format!("n/a ({e})"));
            Ok(format!(
                "pulse: {} rows, switching contrast = {contrast}",
                trace.rows.len()
            ))
        }
        Scenario::Scan(spec) => {
            let p = params.ok_or(RunError::NoParams)?;
            let trace = simulate_scan(p, spec)?;
            if let Some(path) = output {
                write_trace(create(path)?, &trace).map_err(io_at(path))?;
            }
            let asym = scan_asymmetry(&trace)
                .map(format_sig)
                .unwrap_or_else(|e| format!("n/a ({e})"));
            Ok(format!(
                "scan: {} rows, asymmetry = {asym}",
                trace.rows.len()
            ))
        }
        Scenario::SweepPower { powers } => {
            let p = params.ok_or(RunError::NoParams)?;
            let points = crate::steady::power_sweep(p, powers);
            if let Some(path) = output {
                write_sweep(create(path)?, &points).map_err(io_at(path))?;
            }
            let mut failures = points
                .iter()
                .filter_map(|(w, r)| r.as_ref().err().map(|e| (w, e)));
            if let Some((w, e)) = failures.next() {
                return Err(RunError::SweepPoints {
                    failed: 1 + failures.count(),
                    total: points.len(),
                    first_power: *w,
                    first: e.clone(),
                });
            }
            let (w_last, rel_last) = points
                .last()
                .map(|(w, r)| (*w, *r.as_ref().unwrap()))
                .expect("sweep has at least one point");
            Ok(format!(
                "sweep: {} points, rel. transmission at {} W = {}",
                points.len(),
                format_sig(w_last),
                format_sig(rel_last)
            ))
        }
        Scenario::Calibrate(obs) => {
            let p = calibrate(obs)?;
            if let Some(path) = output {
                let mut text = String::from("# calibrated cavity, pump off\nscenario = steady\n");
                emit_params(&mut text, &p);
                text.push_str("pump.power = 0\n");
                let mut w = create(path)?;
                w.write_all(text.as_bytes())
                    .and_then(|_| w.flush())
                    .map_err(io_at(path))?;
            }
            Ok(format!(
                "calibrated: r_s = {}, t_s = {}, eta_s = {}, rho_d = {}, g = {}",
                format_sig(p.r_s),
                format_sig(p.t_s),
                format_sig(p.eta_s),
                format_sig(p.rho_d),
                format_sig(p.g)
            ))
        }
    }
}
