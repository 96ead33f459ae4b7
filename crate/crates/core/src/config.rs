//! Flat `key = value` run configuration.
//!
//! ```text
//! # doubly resonant switch, 17 W steady state
//! scenario = steady
//! params.r_s = 0.968
//! params.t_s = 0.250
//! params.eta_s = 0.977
//! params.rho_d = 0.989
//! params.g = 0.022
//! pump.power = 17
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Keys are grouped by
//! section prefix (`params.`, `pump.`, `scan.`, `sweep.`, `calib.`,
//! `output.`); which sections are allowed depends on the scenario.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::calibration::LabObservables;
use crate::dynamics::{PumpWaveform, ScanSpec};
use crate::model::{CavityParams, DEFAULT_ROUND_TRIP_TIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Steady,
    Pulse,
    Scan,
    SweepPower,
    Calibrate,
}

impl ScenarioKind {
    pub const ALL: [Self; 5] = [
        Self::Steady,
        Self::Pulse,
        Self::Scan,
        Self::SweepPower,
        Self::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Steady => "steady",
            Self::Pulse => "pulse",
            Self::Scan => "scan",
            Self::SweepPower => "sweep-power",
            Self::Calibrate => "calibrate",
        }
    }

    fn sections(self) -> &'static [&'static str] {
        match self {
            Self::Steady => &["params", "pump", "output"],
            Self::Pulse => &["params", "pump", "output"],
            Self::Scan => &["params", "scan", "output"],
            Self::SweepPower => &["params", "sweep", "output"],
            Self::Calibrate => &["calib", "output"],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown scenario `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Steady { pump_power: f64 },
    Pulse { pump: PumpWaveform, duration: f64 },
    Scan(ScanSpec),
    SweepPower { powers: Vec<f64> },
    Calibrate(LabObservables),
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Self::Steady { .. } => ScenarioKind::Steady,
            Self::Pulse { .. } => ScenarioKind::Pulse,
            Self::Scan(_) => ScenarioKind::Scan,
            Self::SweepPower { .. } => ScenarioKind::SweepPower,
            Self::Calibrate(_) => ScenarioKind::Calibrate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Absent only for the calibrate scenario.
    pub params: Option<CavityParams>,
    pub scenario: Scenario,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax(String),
    UnknownKey,
    DuplicateKey { first_line: usize },
    MissingKey,
    ExtraneousSection { scenario: ScenarioKind },
    NotForScenario { scenario: ScenarioKind },
    Invalid(String),
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    /// 1-based line, absent for keys that were never written.
    pub line: Option<usize>,
    pub key: String,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        match &self.kind {
            ConfigErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ConfigErrorKind::UnknownKey => write!(f, "unknown key `{}`", self.key),
            ConfigErrorKind::DuplicateKey { first_line } => {
                write!(f, "`{}` already set on line {first_line}", self.key)
            }
            ConfigErrorKind::MissingKey => write!(f, "missing required key `{}`", self.key),
            ConfigErrorKind::ExtraneousSection { scenario } => write!(
                f,
                "extraneous section: `{}` is not used by scenario {scenario}",
                self.key
            ),
            ConfigErrorKind::NotForScenario { scenario } => {
                write!(f, "`{}` is not used by scenario {scenario}", self.key)
            }
            ConfigErrorKind::Invalid(m) => write!(f, "`{}`: {m}", self.key),
            ConfigErrorKind::Io(m) => write!(f, "`{}`: {m}", self.key),
        }
    }
}

const PARAM_KEYS: [&str; 10] = [
    "r_s", "t_s", "eta_s", "rho_d", "phi_s", "phi_d", "g", "lambda_s", "lambda_d", "dt",
];
const PUMP_KEYS: [&str; 8] = [
    "power",
    "kind",
    "peak_power",
    "width",
    "rise_time",
    "start_time",
    "samples",
    "samples_file",
];
const PULSE_DURATION_KEY: &str = "duration";
const SCAN_KEYS: [&str; 15] = [
    "rate",
    "traverse_time",
    "duration",
    "pump_period",
    "phi_s0",
    "phi_d0",
    "crossing_time",
    "phi_d_at_crossing",
    "pulse_kind",
    "pulse_peak_power",
    "pulse_width",
    "pulse_rise_time",
    "pulse_start_time",
    "pulse_samples",
    "pulse_samples_file",
];
const SWEEP_KEYS: [&str; 4] = ["powers", "start", "stop", "points"];
const CALIB_KEYS: [&str; 10] = [
    "finesse_s",
    "finesse_d",
    "mirror_reflectivity",
    "depletion_fraction",
    "depletion_pump_power",
    "mirror_spacing",
    "crystal_length",
    "crystal_index",
    "lambda_s",
    "lambda_d",
];

fn known_key(section: &str, name: &str) -> bool {
    match section {
        "params" => PARAM_KEYS.contains(&name),
        "pump" => PUMP_KEYS.contains(&name) || name == PULSE_DURATION_KEY,
        "scan" => SCAN_KEYS.contains(&name),
        "sweep" => SWEEP_KEYS.contains(&name),
        "calib" => CALIB_KEYS.contains(&name),
        "output" => name == "path",
        _ => false,
    }
}

#[derive(Debug)]
struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Parsed key table with bookkeeping for error reporting.
struct Document<'a> {
    entries: BTreeMap<String, Entry>,
    base: &'a Path,
}

impl<'a> Document<'a> {
    fn parse(text: &str, base: &'a Path) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    key: content.to_string(),
                    kind: ConfigErrorKind::Syntax("expected `key = value`".into()),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError {
                    line: Some(line),
                    key,
                    kind: ConfigErrorKind::Syntax("empty key".into()),
                });
            }
            if key != "scenario" {
                let known = key
                    .split_once('.')
                    .is_some_and(|(section, name)| known_key(section, name));
                if !known {
                    return Err(ConfigError {
                        line: Some(line),
                        key,
                        kind: ConfigErrorKind::UnknownKey,
                    });
                }
            }
            if let Some(prev) = entries.get(&key) {
                return Err(ConfigError {
                    line: Some(line),
                    kind: ConfigErrorKind::DuplicateKey {
                        first_line: prev.line,
                    },
                    key,
                });
            }
            entries.insert(
                key,
                Entry {
                    line,
                    value,
                    used: false,
                },
            );
        }
        Ok(Self { entries, base })
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn error(&self, key: &str, kind: ConfigErrorKind) -> ConfigError {
        ConfigError {
            line: self.line_of(key),
            key: key.to_string(),
            kind,
        }
    }

    fn invalid(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        self.error(key, ConfigErrorKind::Invalid(msg.into()))
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            e.value.clone()
        })
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| self.invalid(key, format!("expected a finite number, got `{v}`"))),
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.opt_f64(key)?
            .ok_or_else(|| self.error(key, ConfigErrorKind::MissingKey))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.invalid(key, format!("`{item}` is not a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// `t:p, t:p, ...`
    fn samples(&mut self, key: &str) -> Result<Option<Vec<(f64, f64)>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let parse = |item: &str| -> Option<(f64, f64)> {
            let (t, p) = item.split_once(':')?;
            let t = t.trim().parse::<f64>().ok()?;
            let p = p.trim().parse::<f64>().ok()?;
            (t.is_finite() && p.is_finite()).then_some((t, p))
        };
        v.split(',')
            .map(|item| {
                parse(item.trim()).ok_or_else(|| {
                    self.invalid(key, format!("`{}` is not a `time:power` pair", item.trim()))
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Two-column CSV (`time_s,pump_W` header) resolved against the config's
    /// directory.
    fn samples_file(&mut self, key: &str) -> Result<Option<Vec<(f64, f64)>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let path = self.base.join(&v);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            self.error(key, ConfigErrorKind::Io(format!("{}: {e}", path.display())))
        })?;
        let mut out = Vec::new();
        for (i, row) in text.lines().enumerate() {
            let row = row.trim();
            if row.is_empty() || (i == 0 && row.starts_with(|c: char| c.is_alphabetic())) {
                continue;
            }
            let pair = row.split_once(',').and_then(|(t, p)| {
                Some((t.trim().parse::<f64>().ok()?, p.trim().parse::<f64>().ok()?))
            });
            match pair {
                Some(pair) => out.push(pair),
                None => {
                    return Err(self.invalid(
                        key,
                        format!("{} line {}: expected `time,power`", path.display(), i + 1),
                    ))
                }
            }
        }
        Ok(Some(out))
    }

    fn unused(&self) -> Option<(&String, &Entry)> {
        self.entries.iter().find(|(_, e)| !e.used)
    }
}

/// Parses a configuration; relative sample files resolve against the
/// current directory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_in(text, Path::new("."))
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        key: path.display().to_string(),
        kind: ConfigErrorKind::Io(e.to_string()),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut doc = Document::parse(text, base)?;
    let kind: ScenarioKind = match doc.raw("scenario") {
        Some(v) => v.parse().map_err(|m| doc.invalid("scenario", m))?,
        None => return Err(doc.error("scenario", ConfigErrorKind::MissingKey)),
    };

    // every section present must belong to the scenario
    let allowed = kind.sections();
    for (key, entry) in &doc.entries {
        if let Some((section, _)) = key.split_once('.') {
            if !allowed.contains(&section) {
                return Err(ConfigError {
                    line: Some(entry.line),
                    key: format!("{section}."),
                    kind: ConfigErrorKind::ExtraneousSection { scenario: kind },
                });
            }
        }
    }

    let params = if kind == ScenarioKind::Calibrate {
        None
    } else {
        Some(parse_params(&mut doc)?)
    };
    let scenario = match kind {
        ScenarioKind::Steady => {
            let pump_power = doc.f64("pump.power")?;
            if pump_power < 0.0 {
                return Err(doc.invalid("pump.power", "pump power must be >= 0"));
            }
            Scenario::Steady { pump_power }
        }
        ScenarioKind::Pulse => {
            let pump = parse_waveform(&mut doc, "pump.", "kind")?;
            let duration = doc.f64("pump.duration")?;
            if duration <= 0.0 {
                return Err(doc.invalid("pump.duration", "duration must be > 0"));
            }
            let (_, end) = pump.support();
            if end > duration {
                return Err(doc.invalid(
                    "pump.duration",
                    format!("duration {duration} s ends before the pulse ({end} s)"),
                ));
            }
            Scenario::Pulse { pump, duration }
        }
        ScenarioKind::Scan => Scenario::Scan(parse_scan(&mut doc, params.as_ref().unwrap())?),
        ScenarioKind::SweepPower => Scenario::SweepPower {
            powers: parse_sweep(&mut doc)?,
        },
        ScenarioKind::Calibrate => Scenario::Calibrate(parse_calib(&mut doc)?),
    };
    let output = doc.raw("output.path").map(PathBuf::from);

    if let Some((key, entry)) = doc.unused() {
        return Err(ConfigError {
            line: Some(entry.line),
            key: key.clone(),
            kind: ConfigErrorKind::NotForScenario { scenario: kind },
        });
    }
    Ok(RunConfig {
        params,
        scenario,
        output,
    })
}

fn parse_params(doc: &mut Document) -> Result<CavityParams, ConfigError> {
    let defaults = CavityParams::doubly_resonant();
    let params = CavityParams {
        r_s: doc.f64("params.r_s")?,
        t_s: doc.f64("params.t_s")?,
        eta_s: doc.f64("params.eta_s")?,
        rho_d: doc.f64("params.rho_d")?,
        g: doc.f64("params.g")?,
        phi_s: doc.f64_or("params.phi_s", 0.0)?,
        phi_d: doc.f64_or("params.phi_d", 0.0)?,
        lambda_s: doc.f64_or("params.lambda_s", defaults.lambda_s)?,
        lambda_d: doc.f64_or("params.lambda_d", defaults.lambda_d)?,
        dt: doc.f64_or("params.dt", DEFAULT_ROUND_TRIP_TIME)?,
    };
    params.validate().map_err(|e| {
        let key = format!("params.{}", e.field);
        // cross-field violations point at whichever of the pair was written
        let key = match (e.field, doc.has(&key)) {
            ("t_s", false) => "params.r_s".to_string(),
            ("lambda_d", false) => "params.lambda_s".to_string(),
            _ => key,
        };
        doc.invalid(&key, e.reason)
    })?;
    Ok(params)
}

/// Reads a waveform from `{prefix}{kind_key}`, `{prefix}peak_power`, ...
/// Scan templates use the `pulse_` infix.
fn parse_waveform(
    doc: &mut Document,
    prefix: &str,
    kind_key: &str,
) -> Result<PumpWaveform, ConfigError> {
    let infix = kind_key.strip_suffix("kind").unwrap_or("");
    let key = |name: &str| format!("{prefix}{infix}{name}");
    let kind_name = key("kind");
    let kind = doc
        .raw(&kind_name)
        .unwrap_or_else(|| "trapezoidal".to_string());
    let waveform = match kind.as_str() {
        "rectangular" | "trapezoidal" => {
            let start = doc.f64_or(&key("start_time"), 0.0)?;
            let width = doc.f64(&key("width"))?;
            let peak = doc.f64(&key("peak_power"))?;
            if kind == "rectangular" {
                if doc.has(&key("rise_time")) {
                    return Err(
                        doc.invalid(&key("rise_time"), "rectangular pulses have no rise time")
                    );
                }
                PumpWaveform::rectangular(start, width, peak)
            } else {
                let rise = doc.f64_or(&key("rise_time"), DEFAULT_RISE_TIME)?;
                PumpWaveform::trapezoidal(start, width, rise, peak)
            }
        }
        "table" => {
            let inline = doc.samples(&key("samples"))?;
            let file = doc.samples_file(&key("samples_file"))?;
            match (inline, file) {
                (Some(s), None) | (None, Some(s)) => PumpWaveform::Table(s),
                (None, None) => return Err(doc.error(&key("samples"), ConfigErrorKind::MissingKey)),
                (Some(_), Some(_)) => {
                    return Err(doc.invalid(
                        &key("samples_file"),
                        "give either inline samples or a samples file, not both",
                    ))
                }
            }
        }
        other => {
            return Err(doc.invalid(
                &kind_name,
                format!("unknown pump kind `{other}` (rectangular, trapezoidal, table)"),
            ))
        }
    };
    waveform
        .validate()
        .map_err(|e| doc.invalid(&kind_name, e.to_string()))?;
    Ok(waveform)
}

/// Default pump edge for figure replication (s).
pub const DEFAULT_RISE_TIME: f64 = 3e-9;
/// Time to sweep the signal resonance FWHM during a scan (s).
pub const DEFAULT_TRAVERSE_TIME: f64 = 20e-6;

fn parse_scan(doc: &mut Document, params: &CavityParams) -> Result<ScanSpec, ConfigError> {
    let pulse = parse_waveform(doc, "scan.", "pulse_kind")?;
    let duration = doc.f64("scan.duration")?;
    let pump_period = doc.f64("scan.pump_period")?;
    if duration <= 0.0 {
        return Err(doc.invalid("scan.duration", "duration must be > 0"));
    }
    let explicit = ["scan.rate", "scan.phi_s0", "scan.phi_d0"]
        .iter()
        .any(|k| doc.has(k));
    let centered = ["scan.crossing_time", "scan.phi_d_at_crossing"]
        .iter()
        .any(|k| doc.has(k));
    let spec = if centered {
        if explicit {
            let key = ["scan.rate", "scan.phi_s0", "scan.phi_d0"]
                .into_iter()
                .find(|k| doc.has(k))
                .unwrap();
            return Err(doc.invalid(
                key,
                "give either scan.rate/phi_s0/phi_d0 or scan.crossing_time/phi_d_at_crossing",
            ));
        }
        let traverse = doc.f64_or("scan.traverse_time", DEFAULT_TRAVERSE_TIME)?;
        if traverse <= 0.0 {
            return Err(doc.invalid("scan.traverse_time", "must be > 0"));
        }
        let crossing = doc.f64("scan.crossing_time")?;
        let phi_d = doc.f64_or("scan.phi_d_at_crossing", 0.0)?;
        ScanSpec::across_resonance(
            params,
            traverse,
            crossing,
            phi_d,
            pump_period,
            pulse,
            duration,
        )
    } else {
        let scan_rate = match doc.opt_f64("scan.rate")? {
            Some(rate) => {
                if doc.has("scan.traverse_time") {
                    return Err(doc.invalid(
                        "scan.traverse_time",
                        "scan.rate already fixes the scan speed",
                    ));
                }
                rate
            }
            None => {
                let traverse = doc.f64_or("scan.traverse_time", DEFAULT_TRAVERSE_TIME)?;
                if traverse <= 0.0 {
                    return Err(doc.invalid("scan.traverse_time", "must be > 0"));
                }
                ScanSpec::bandwidth_rate(params, traverse)
            }
        };
        ScanSpec {
            scan_rate,
            duration,
            pump_period,
            pulse,
            phi_s0: doc.f64_or("scan.phi_s0", 0.0)?,
            phi_d0: doc.f64_or("scan.phi_d0", 0.0)?,
        }
    };
    spec.validate()
        .map_err(|e| doc.invalid("scan.pump_period", e.to_string()))?;
    Ok(spec)
}

fn parse_sweep(doc: &mut Document) -> Result<Vec<f64>, ConfigError> {
    let listed = doc.list("sweep.powers")?;
    let ranged = ["sweep.start", "sweep.stop", "sweep.points"]
        .iter()
        .any(|k| doc.has(k));
    let powers = match (listed, ranged) {
        (Some(_), true) => {
            return Err(doc.invalid(
                "sweep.powers",
                "give either sweep.powers or sweep.start/stop/points, not both",
            ))
        }
        (Some(p), false) => p,
        (None, _) => {
            let start = doc.f64_or("sweep.start", 0.0)?;
            let stop = doc.f64("sweep.stop")?;
            let points = doc.f64("sweep.points")?;
            if points < 1.0 || points.fract() != 0.0 {
                return Err(doc.invalid("sweep.points", "must be a positive integer"));
            }
            let n = points as usize;
            if n == 1 {
                vec![start]
            } else {
                (0..n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        }
    };
    if powers.is_empty() {
        return Err(doc.invalid("sweep.powers", "no powers given"));
    }
    if let Some(bad) = powers.iter().find(|w| **w < 0.0) {
        let key = if doc.has("sweep.powers") {
            "sweep.powers"
        } else {
            "sweep.start"
        };
        return Err(doc.invalid(key, format!("pump power {bad} W is negative")));
    }
    Ok(powers)
}

fn parse_calib(doc: &mut Document) -> Result<LabObservables, ConfigError> {
    let d = LabObservables::measured();
    let obs = LabObservables {
        finesse_s: doc.f64("calib.finesse_s")?,
        finesse_d: doc.f64("calib.finesse_d")?,
        mirror_power_reflectivity: doc.f64("calib.mirror_reflectivity")?,
        depletion_fraction: doc.f64("calib.depletion_fraction")?,
        depletion_pump_power: doc.f64("calib.depletion_pump_power")?,
        mirror_spacing: doc.f64_or("calib.mirror_spacing", d.mirror_spacing)?,
        crystal_length: doc.f64_or("calib.crystal_length", d.crystal_length)?,
        crystal_index: doc.f64_or("calib.crystal_index", d.crystal_index)?,
        lambda_s: doc.f64_or("calib.lambda_s", d.lambda_s)?,
        lambda_d: doc.f64_or("calib.lambda_d", d.lambda_d)?,
    };
    let checks: [(&str, bool, &str); 7] = [
        (
            "calib.finesse_s",
            obs.finesse_s > 1.0,
            "finesse must exceed 1",
        ),
        (
            "calib.finesse_d",
            obs.finesse_d > 1.0,
            "finesse must exceed 1",
        ),
        (
            "calib.mirror_reflectivity",
            obs.mirror_power_reflectivity > 0.0 && obs.mirror_power_reflectivity < 1.0,
            "must lie in (0, 1)",
        ),
        (
            "calib.depletion_fraction",
            obs.depletion_fraction > 0.0 && obs.depletion_fraction < 1.0,
            "must lie in (0, 1)",
        ),
        (
            "calib.depletion_pump_power",
            obs.depletion_pump_power > 0.0,
            "must be > 0",
        ),
        (
            "calib.mirror_spacing",
            obs.mirror_spacing > 0.0 && obs.crystal_length <= obs.mirror_spacing,
            "must be > 0 and hold the crystal",
        ),
        (
            "calib.lambda_d",
            obs.lambda_s > 0.0 && obs.lambda_d > obs.lambda_s,
            "wavelengths must satisfy lambda_d > lambda_s > 0",
        ),
    ];
    for (key, ok, msg) in checks {
        if !ok {
            return Err(doc.invalid(key, msg));
        }
    }
    if !(obs.crystal_length > 0.0) {
        return Err(doc.invalid("calib.crystal_length", "must be > 0"));
    }
    if !(obs.crystal_index > 0.0) {
        return Err(doc.invalid("calib.crystal_index", "must be > 0"));
    }
    Ok(obs)
}

/// Shortest text that parses back to the same `f64`; tiny values stay in
/// exponent form.
fn num(out: &mut String, key: &str, value: impl std::borrow::Borrow<f64>) {
    let _ = writeln!(out, "{key} = {:?}", value.borrow());
}

fn push(out: &mut String, key: &str, value: impl fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

fn push_waveform(out: &mut String, prefix: &str, infix: &str, w: &PumpWaveform) {
    let key = |name: &str| format!("{prefix}{infix}{name}");
    match w {
        PumpWaveform::Rectangular { start, width, peak } => {
            push(out, &key("kind"), "rectangular");
            num(out, &key("start_time"), start);
            num(out, &key("width"), width);
            num(out, &key("peak_power"), peak);
        }
        PumpWaveform::Trapezoidal {
            start,
            width,
            rise,
            peak,
        } => {
            push(out, &key("kind"), "trapezoidal");
            num(out, &key("start_time"), start);
            num(out, &key("width"), width);
            num(out, &key("rise_time"), rise);
            num(out, &key("peak_power"), peak);
        }
        PumpWaveform::Table(samples) => {
            push(out, &key("kind"), "table");
            let items: Vec<String> = samples
                .iter()
                .map(|(t, p)| format!("{t:?}:{p:?}"))
                .collect();
            push(out, &key("samples"), items.join(", "));
        }
    }
}

/// Writes `params.*` lines.
pub fn emit_params(out: &mut String, p: &CavityParams) {
    num(out, "params.r_s", p.r_s);
    num(out, "params.t_s", p.t_s);
    num(out, "params.eta_s", p.eta_s);
    num(out, "params.rho_d", p.rho_d);
    num(out, "params.g", p.g);
    num(out, "params.phi_s", p.phi_s);
    num(out, "params.phi_d", p.phi_d);
    num(out, "params.lambda_s", p.lambda_s);
    num(out, "params.lambda_d", p.lambda_d);
    num(out, "params.dt", p.dt);
}

impl RunConfig {
    /// Serializes to the text format accepted by [`parse_config`]; floats are
    /// written in shortest round-trip form.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        push(&mut out, "scenario", self.scenario.kind());
        if let Some(p) = &self.params {
            emit_params(&mut out, p);
        }
        match &self.scenario {
            Scenario::Steady { pump_power } => num(&mut out, "pump.power", pump_power),
            Scenario::Pulse { pump, duration } => {
                push_waveform(&mut out, "pump.", "", pump);
                num(&mut out, "pump.duration", duration);
            }
            Scenario::Scan(spec) => {
                num(&mut out, "scan.rate", spec.scan_rate);
                num(&mut out, "scan.duration", spec.duration);
                num(&mut out, "scan.pump_period", spec.pump_period);
                num(&mut out, "scan.phi_s0", spec.phi_s0);
                num(&mut out, "scan.phi_d0", spec.phi_d0);
                push_waveform(&mut out, "scan.", "pulse_", &spec.pulse);
            }
            Scenario::SweepPower { powers } => {
                let items: Vec<String> = powers.iter().map(|w| format!("{w:?}")).collect();
                push(&mut out, "sweep.powers", items.join(", "));
            }
            Scenario::Calibrate(obs) => {
                num(&mut out, "calib.finesse_s", obs.finesse_s);
                num(&mut out, "calib.finesse_d", obs.finesse_d);
                num(
                    &mut out,
                    "calib.mirror_reflectivity",
                    obs.mirror_power_reflectivity,
                );
                num(&mut out, "calib.depletion_fraction", obs.depletion_fraction);
                num(
                    &mut out,
                    "calib.depletion_pump_power",
                    obs.depletion_pump_power,
                );
                num(&mut out, "calib.mirror_spacing", obs.mirror_spacing);
                num(&mut out, "calib.crystal_length", obs.crystal_length);
                num(&mut out, "calib.crystal_index", obs.crystal_index);
                num(&mut out, "calib.lambda_s", obs.lambda_s);
                num(&mut out, "calib.lambda_d", obs.lambda_d);
            }
        }
        if let Some(path) = &self.output {
            push(&mut out, "output.path", path.display());
        }
        out
    }
}
