//! CSV emission. Nine significant digits, `.` separator, `\n` endings.

use std::io::{self, Write};

use crate::dynamics::SimulationTrace;
use crate::steady::SolveError;

pub const TRACE_HEADER: &str =
    "time_s,pump_W,p_transmitted,p_reflected,p_converted,phi_s_rad,phi_d_rad";
pub const SWEEP_HEADER: &str = "pump_W,rel_transmission";

/// Formats like C's `%.9g`.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_trace<W: Write>(mut out: W, trace: &SimulationTrace) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_sig(r.time),
            format_sig(r.pump),
            format_sig(r.p_t),
            format_sig(r.p_r),
            format_sig(r.p_conv),
            format_sig(r.phi_s),
            format_sig(r.phi_d),
        )?;
    }
    out.flush()
}

/// Failed points are written as `nan`.
pub fn write_sweep<W: Write>(
    mut out: W,
    points: &[(f64, Result<f64, SolveError>)],
) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for (w, rel) in points {
        let rel = rel.as_ref().copied().unwrap_or(f64::NAN);
        writeln!(out, "{},{}", format_sig(*w), format_sig(rel))?;
    }
    out.flush()
}
