//! Time-domain scenarios: pump pulses, mirror scans, and the figures of
//! merit extracted from their traces.
//!
//! Every trace starts from the pump-off steady state of the cavity and
//! advances one round trip per row. The pump power (and, during scans, the
//! detunings) are sampled at the midpoint of each round trip.

use num_complex::Complex64;
use thiserror::Error;

use crate::calibration::{phases_from_displacement, wrap_phase, CalibrationError};
use crate::model::{frequency_ratio, step_unchecked, CavityParams, IntracavityState, ParamError};
use crate::steady::{general_steady_state, SolveError};

/// Length of the pump-off window used as the switching baseline (s).
pub const BASELINE_WINDOW: f64 = 5e-9;

/// Pump-off rows closer than this to the end of a pulse are not used to
/// locate the resonance peak (s).
pub const SETTLE_TIME: f64 = 100e-9;

/// Hard cap on the number of round trips in one trace.
pub const MAX_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid pump waveform: {0}")]
    Waveform(String),
    #[error("invalid scan: {0}")]
    Scan(String),
    #[error("duration {duration} s does not cover the pump support ending at {end} s")]
    DurationTooShort { duration: f64, end: f64 },
    #[error("duration must be positive and finite, got {0}")]
    Duration(f64),
    #[error("{steps} round trips exceeds the limit of {MAX_STEPS}")]
    TooManySteps { steps: usize },
    #[error("non-finite field at t = {time} s")]
    NonFinite { time: f64 },
    #[error("trace has no pump pulses with a pump-off baseline")]
    NoPulses,
    #[error("pump-off transmission envelope has no interior peak")]
    NoInteriorPeak,
    #[error("{0} window lies outside the trace")]
    WindowOutsideTrace(&'static str),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Time-dependent pump power.
#[derive(Debug, Clone, PartialEq)]
pub enum PumpWaveform {
    Rectangular {
        start: f64,
        width: f64,
        peak: f64,
    },
    /// Linear edges of length `rise` inside the full width.
    Trapezoidal {
        start: f64,
        width: f64,
        rise: f64,
        peak: f64,
    },
    /// `(time, power)` samples, linearly interpolated, zero outside.
    Table(Vec<(f64, f64)>),
}

impl PumpWaveform {
    pub fn rectangular(start: f64, width: f64, peak: f64) -> Self {
        Self::Rectangular { start, width, peak }
    }

    pub fn trapezoidal(start: f64, width: f64, rise: f64, peak: f64) -> Self {
        Self::Trapezoidal {
            start,
            width,
            rise,
            peak,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::Waveform(m));
        match *self {
            Self::Rectangular { start, width, peak } => {
                check_analytic(start, width, peak)?;
            }
            Self::Trapezoidal {
                start,
                width,
                rise,
                peak,
            } => {
                check_analytic(start, width, peak)?;
                if !(rise.is_finite() && rise >= 0.0) {
                    return bad(format!("rise time must be finite and >= 0, got {rise}"));
                }
                if 2.0 * rise > width {
                    return bad(format!(
                        "two edges of {rise} s do not fit in width {width} s"
                    ));
                }
            }
            Self::Table(ref samples) => {
                if samples.is_empty() {
                    return bad("table has no samples".into());
                }
                for &(t, p) in samples {
                    if !(t.is_finite() && p.is_finite()) {
                        return bad(format!("non-finite sample ({t}, {p})"));
                    }
                    if p < 0.0 {
                        return bad(format!("negative power {p} W at t = {t} s"));
                    }
                }
                if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("sample times must be strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    pub fn power(&self, t: f64) -> f64 {
        match *self {
            Self::Rectangular { start, width, peak } => {
                if t >= start && t < start + width {
                    peak
                } else {
                    0.0
                }
            }
            Self::Trapezoidal {
                start,
                width,
                rise,
                peak,
            } => {
                let end = start + width;
                if t < start || t >= end {
                    0.0
                } else if rise > 0.0 && t < start + rise {
                    peak * (t - start) / rise
                } else if rise > 0.0 && t > end - rise {
                    peak * (end - t) / rise
                } else {
                    peak
                }
            }
            Self::Table(ref samples) => interpolate(samples, t),
        }
    }

    /// Interval over which the pump may be non-zero.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Rectangular { start, width, .. } | Self::Trapezoidal { start, width, .. } => {
                (start, start + width)
            }
            Self::Table(ref samples) => (
                samples.first().map_or(0.0, |s| s.0),
                samples.last().map_or(0.0, |s| s.0),
            ),
        }
    }
}

fn check_analytic(start: f64, width: f64, peak: f64) -> Result<(), DynamicsError> {
    if !start.is_finite() {
        return Err(DynamicsError::Waveform(format!(
            "start must be finite, got {start}"
        )));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(DynamicsError::Waveform(format!(
            "width must be positive, got {width}"
        )));
    }
    if !(peak.is_finite() && peak >= 0.0) {
        return Err(DynamicsError::Waveform(format!(
            "peak power must be finite and >= 0, got {peak}"
        )));
    }
    Ok(())
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return 0.0,
    };
    if t < first.0 || t > last.0 {
        return 0.0;
    }
    let i = samples.partition_point(|s| s.0 <= t);
    if i == 0 {
        return first.1;
    }
    if i == samples.len() {
        return last.1;
    }
    let (t0, p0) = samples[i - 1];
    let (t1, p1) = samples[i];
    p0 + (p1 - p0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// Start of the round trip (s).
    pub time: f64,
    pub pump: f64,
    pub p_t: f64,
    pub p_r: f64,
    pub p_conv: f64,
    pub phi_s: f64,
    pub phi_d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub dt: f64,
    pub rows: Vec<TraceRow>,
    pub initial_state: IntracavityState,
    pub final_state: IntracavityState,
}

impl SimulationTrace {
    fn midpoint(&self, row: &TraceRow) -> f64 {
        row.time + 0.5 * self.dt
    }

    /// Mean transmitted power over rows whose sampling instant lies in `[a, b)`.
    pub fn mean_transmission(&self, a: f64, b: f64) -> Option<f64> {
        let (sum, n) = self
            .rows
            .iter()
            .filter(|r| {
                let t = self.midpoint(r);
                t >= a && t < b
            })
            .fold((0.0, 0usize), |(s, n), r| (s + r.p_t, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Drives the cavity for `steps` round trips. `drive` maps the midpoint time
/// of each round trip to `(pump, phi_s, phi_d)`.
fn run<F>(
    params: &CavityParams,
    initial: IntracavityState,
    steps: usize,
    mut drive: F,
) -> Result<SimulationTrace, DynamicsError>
where
    F: FnMut(f64) -> Result<(f64, f64, f64), DynamicsError>,
{
    let a_i = Complex64::new(1.0, 0.0);
    let mut state = initial;
    let mut rows = Vec::with_capacity(steps);
    let mut p = *params;
    for n in 0..steps {
        let time = n as f64 * params.dt;
        let (pump, phi_s, phi_d) = drive(time + 0.5 * params.dt)?;
        if !(pump.is_finite() && pump >= 0.0) {
            return Err(DynamicsError::Waveform(format!(
                "pump power {pump} W at t = {time} s"
            )));
        }
        p.phi_s = phi_s;
        p.phi_d = phi_d;
        let (next, ports) = step_unchecked(&state, a_i, pump, &p);
        if !next.is_finite() {
            return Err(DynamicsError::NonFinite { time });
        }
        state = next;
        rows.push(TraceRow {
            time,
            pump,
            p_t: ports.p_t,
            p_r: ports.p_r,
            p_conv: ports.p_conv,
            phi_s,
            phi_d,
        });
    }
    Ok(SimulationTrace {
        dt: params.dt,
        rows,
        initial_state: initial,
        final_state: state,
    })
}

fn step_count(params: &CavityParams, duration: f64) -> Result<usize, DynamicsError> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(DynamicsError::Duration(duration));
    }
    let steps = (duration / params.dt).ceil();
    if steps > MAX_STEPS as f64 {
        return Err(DynamicsError::TooManySteps {
            steps: steps as usize,
        });
    }
    Ok(steps as usize)
}

/// Pump-off steady state at the given detunings.
pub fn warm_start(params: &CavityParams) -> Result<IntracavityState, DynamicsError> {
    Ok(general_steady_state(params, 0.0)?.state())
}

/// Pulsed switching trace starting from the pump-off steady state.
pub fn simulate_pulse(
    params: &CavityParams,
    pump: &PumpWaveform,
    duration: f64,
) -> Result<SimulationTrace, DynamicsError> {
    params.validate()?;
    simulate_pulse_from(params, pump, duration, warm_start(params)?)
}

/// As [`simulate_pulse`] from an arbitrary initial state.
pub fn simulate_pulse_from(
    params: &CavityParams,
    pump: &PumpWaveform,
    duration: f64,
    initial: IntracavityState,
) -> Result<SimulationTrace, DynamicsError> {
    params.validate()?;
    pump.validate()?;
    let steps = step_count(params, duration)?;
    let (_, end) = pump.support();
    if end > duration {
        return Err(DynamicsError::DurationTooShort { duration, end });
    }
    run(params, initial, steps, |t| {
        Ok((pump.power(t), params.phi_s, params.phi_d))
    })
}

/// Mirror scan with a periodic pump pulse train.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    /// Mirror displacement rate (m/s).
    pub scan_rate: f64,
    pub duration: f64,
    pub pump_period: f64,
    /// Pulse template on `[0, pump_period)`, repeated every period.
    pub pulse: PumpWaveform,
    /// Detunings at `t = 0`.
    pub phi_s0: f64,
    pub phi_d0: f64,
}

impl ScanSpec {
    /// Scan rate that sweeps the signal resonance FWHM in `traverse_time`.
    pub fn bandwidth_rate(params: &CavityParams, traverse_time: f64) -> f64 {
        params.lambda_s / (2.0 * params.signal_finesse() * traverse_time)
    }

    /// Scan that crosses the signal resonance at `crossing_time`, at which
    /// instant the DF detuning equals `phi_d_at_crossing`.
    pub fn across_resonance(
        params: &CavityParams,
        traverse_time: f64,
        crossing_time: f64,
        phi_d_at_crossing: f64,
        pump_period: f64,
        pulse: PumpWaveform,
        duration: f64,
    ) -> Self {
        let scan_rate = Self::bandwidth_rate(params, traverse_time);
        let travel = scan_rate * crossing_time;
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            scan_rate,
            duration,
            pump_period,
            pulse,
            phi_s0: wrap_phase(-two_pi * travel / params.lambda_s),
            phi_d0: wrap_phase(phi_d_at_crossing - two_pi * travel / params.lambda_d),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::Scan(m));
        if !self.scan_rate.is_finite() {
            return bad(format!("scan rate must be finite, got {}", self.scan_rate));
        }
        if !(self.pump_period.is_finite() && self.pump_period > 0.0) {
            return bad(format!(
                "pump period must be positive, got {}",
                self.pump_period
            ));
        }
        if !(self.phi_s0.is_finite() && self.phi_d0.is_finite()) {
            return bad("start phases must be finite".into());
        }
        self.pulse.validate()?;
        let (start, end) = self.pulse.support();
        if start < 0.0 || end > self.pump_period {
            return bad(format!(
                "pulse support [{start}, {end}] s must fit inside one period of {} s",
                self.pump_period
            ));
        }
        Ok(())
    }

    /// Pump power of the periodic train.
    pub fn pump_at(&self, t: f64) -> f64 {
        self.pulse.power(t.rem_euclid(self.pump_period))
    }
}

/// Scan trace: detunings follow the mirror position, the pump repeats.
pub fn simulate_scan(
    params: &CavityParams,
    spec: &ScanSpec,
) -> Result<SimulationTrace, DynamicsError> {
    params.validate()?;
    spec.validate()?;
    let steps = step_count(params, spec.duration)?;
    let start = params.with_phases(spec.phi_s0, spec.phi_d0);
    let initial = warm_start(&start)?;
    run(params, initial, steps, |t| {
        let (phi_s, phi_d) =
            phases_from_displacement(spec.scan_rate * t, spec.phi_s0, spec.phi_d0, params)?;
        Ok((spec.pump_at(t), phi_s, phi_d))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PulseResponse {
    center: f64,
    baseline: f64,
    plateau: f64,
}

/// Splits a trace into pump-on runs with their pre-pulse baselines.
fn pulse_responses(trace: &SimulationTrace) -> Vec<PulseResponse> {
    let rows = &trace.rows;
    let baseline_rows = ((BASELINE_WINDOW / trace.dt).round() as usize).max(1);
    let mut out = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        if rows[i].pump <= 0.0 {
            i += 1;
            continue;
        }
        let begin = i;
        while i < rows.len() && rows[i].pump > 0.0 {
            i += 1;
        }
        let end = i;
        if begin == 0 || end == rows.len() {
            continue;
        }
        let len = end - begin;
        let (lo, hi) = (
            begin + len / 4,
            (begin + (3 * len).div_ceil(4)).max(begin + len / 4 + 1),
        );
        let plateau = mean(rows[lo..hi].iter().map(|r| r.p_t));
        let pre = begin.saturating_sub(baseline_rows);
        let baseline = mean(rows[pre..begin].iter().map(|r| r.p_t));
        let center = 0.5 * (rows[begin].time + rows[end - 1].time) + 0.5 * trace.dt;
        out.push(PulseResponse {
            center,
            baseline,
            plateau,
        });
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

/// Vertex of the parabola through three points.
fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    // Newton form: y = y0 + d01·(x − x0) + c·(x − x0)(x − x1)
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c = (d12 - d01) / (x2 - x0);
    if c == 0.0 {
        return x1;
    }
    (0.5 * (x0 + x1) - d01 / (2.0 * c)).clamp(x0, x2)
}

/// Sampling instant of the pump-off transmission maximum, refined by a
/// parabola through its neighbours. Rows within [`SETTLE_TIME`] of a pulse
/// are ignored.
fn pump_off_peak(trace: &SimulationTrace) -> Result<f64, DynamicsError> {
    let rows = &trace.rows;
    let settle_rows = (SETTLE_TIME / trace.dt).ceil() as usize;
    let mut since_pulse = usize::MAX;
    let settled: Vec<bool> = rows
        .iter()
        .map(|r| {
            if r.pump > 0.0 {
                since_pulse = 0;
                false
            } else {
                since_pulse = since_pulse.saturating_add(1);
                since_pulse > settle_rows
            }
        })
        .collect();
    let peak = (0..rows.len())
        .filter(|&i| settled[i])
        .max_by(|&a, &b| rows[a].p_t.total_cmp(&rows[b].p_t))
        .ok_or(DynamicsError::NoInteriorPeak)?;
    if peak == 0 || peak + 1 == rows.len() {
        return Err(DynamicsError::NoInteriorPeak);
    }
    let at = |i: usize| (trace.midpoint(&rows[i]), rows[i].p_t);
    if settled[peak - 1] && settled[peak + 1] {
        Ok(parabola_vertex(at(peak - 1), at(peak), at(peak + 1)))
    } else {
        Ok(at(peak).0)
    }
}

fn interpolate_points(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v <= x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
}

/// Asymmetry of the switching response about the pump-off resonance peak.
///
/// Each pulse contributes its mean transmission over the central half of the
/// pulse. That series is reflected about the peak of the settled pump-off
/// transmission, and the L2 distance to its mirror image is divided by the
/// L2 norm of the switching dips (pre-pulse baseline minus plateau). The
/// result is 0 for a symmetric scan and of order one when the dips are
/// mirror-asymmetric.
pub fn scan_asymmetry(trace: &SimulationTrace) -> Result<f64, DynamicsError> {
    let pulses = pulse_responses(trace);
    if pulses.is_empty() {
        return Err(DynamicsError::NoPulses);
    }
    let center = pump_off_peak(trace)?;

    let xs: Vec<f64> = pulses.iter().map(|p| p.center).collect();
    let plateaus: Vec<f64> = pulses.iter().map(|p| p.plateau).collect();
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    let tol = 1e-9 * (last - first).abs().max(trace.dt);
    let (mut diff, mut depth) = (0.0, 0.0);
    for p in &pulses {
        let mirrored = 2.0 * center - p.center;
        if mirrored < first - tol || mirrored > last + tol {
            continue;
        }
        let reflected = interpolate_points(&xs, &plateaus, mirrored.clamp(first, last));
        diff += (p.plateau - reflected).powi(2);
        depth += (p.baseline - p.plateau).powi(2);
    }
    match (diff, depth) {
        (0.0, _) => Ok(0.0),
        (_, 0.0) => Ok(f64::INFINITY),
        (d, n) => Ok((d / n).sqrt()),
    }
}

/// Off/on transmission ratio of a switching trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contrast {
    Finite(f64),
    /// Transmission vanished exactly during the pump-on plateau.
    Infinite,
}

impl Contrast {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
        }
    }
}

/// Mean transmission over the [`BASELINE_WINDOW`] before the pulse divided by
/// the mean over the central half of the pump-on window.
pub fn switching_contrast(
    trace: &SimulationTrace,
    pump: &PumpWaveform,
) -> Result<Contrast, DynamicsError> {
    let (start, end) = pump.support();
    let baseline = trace
        .mean_transmission(start - BASELINE_WINDOW, start)
        .ok_or(DynamicsError::WindowOutsideTrace("baseline"))?;
    let width = end - start;
    let plateau = trace
        .mean_transmission(start + 0.25 * width, start + 0.75 * width)
        .ok_or(DynamicsError::WindowOutsideTrace("plateau"))?;
    if plateau == 0.0 {
        return Ok(Contrast::Infinite);
    }
    Ok(Contrast::Finite(baseline / plateau))
}

/// Spectral radius of the homogeneous round-trip map at constant pump; the
/// slowest intracavity mode decays by this factor per round trip.
pub fn slowest_mode_factor(params: &CavityParams, i_p: f64) -> f64 {
    let k = frequency_ratio(params);
    let (sin, cos) = params.mixing(i_p).angle().sin_cos();
    let p = Complex64::from_polar(params.r_s * params.eta_s * params.eta_s, 2.0 * params.phi_s);
    let q = Complex64::from_polar(params.rho_d, 2.0 * params.phi_d);
    let m11 = p * (cos * params.r_s);
    let m12 = p * (k * sin);
    let m21 = -q * (sin * params.r_s / k);
    let m22 = q * cos;
    let half_trace = 0.5 * (m11 + m22);
    let det = m11 * m22 - m12 * m21;
    let disc = (half_trace * half_trace - det).sqrt();
    (half_trace + disc).norm().max((half_trace - disc).norm())
}

/// 1/e amplitude lifetime of the slowest mode at constant pump (s).
pub fn mode_lifetime(params: &CavityParams, i_p: f64) -> f64 {
    params.dt / (1.0 - slowest_mode_factor(params, i_p))
}

/// Photon-flux weighted stored content `|a_s|² + k²|b_d|²`.
pub fn stored_flux(params: &CavityParams, state: &IntracavityState) -> f64 {
    state.stored_flux(frequency_ratio(params))
}
