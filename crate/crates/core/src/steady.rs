//! Constant-pump steady states.
//!
//! Three independent routes: the doubly resonant closed forms, a direct
//! 2×2 complex solve of the round-trip fixed point for arbitrary detunings,
//! and brute-force iteration of [`round_trip_step`](crate::model::round_trip_step)
//! used as an oracle.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{
    frequency_ratio, propagate, reflected_field, round_trip_step, CavityParams, IntracavityState,
    ModelError, ParamError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("closed form needs phi_s = phi_d = 0, got phi_s = {phi_s}, phi_d = {phi_d}")]
    Detuned { phi_s: f64, phi_d: f64 },
    #[error("closed-form denominator vanishes")]
    VanishingDenominator,
    #[error("round-trip fixed point is singular (cavity sits on a pole)")]
    Singular,
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("pump power must be finite and non-negative, got {0}")]
    InvalidPump(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Cavity response to a unit-amplitude drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateSolution {
    pub t_cavity: Complex64,
    pub r_cavity: Complex64,
    pub a_s: Complex64,
    pub b_d: Complex64,
}

impl SteadyStateSolution {
    pub fn transmission(&self) -> f64 {
        self.t_cavity.norm_sqr()
    }

    pub fn reflection(&self) -> f64 {
        self.r_cavity.norm_sqr()
    }

    pub fn state(&self) -> IntracavityState {
        IntracavityState {
            a_s: self.a_s,
            b_d: self.b_d,
        }
    }

    /// Largest absolute difference over the four complex fields.
    pub fn max_difference(&self, other: &Self) -> f64 {
        [
            self.t_cavity - other.t_cavity,
            self.r_cavity - other.r_cavity,
            self.a_s - other.a_s,
            self.b_d - other.b_d,
        ]
        .iter()
        .map(|d| d.norm())
        .fold(0.0, f64::max)
    }
}

fn check_inputs(params: &CavityParams, i_p: f64) -> Result<(), SolveError> {
    params.validate()?;
    if !(i_p.is_finite() && i_p >= 0.0) {
        return Err(SolveError::InvalidPump(i_p));
    }
    Ok(())
}

const UNIT_DRIVE: Complex64 = Complex64::new(1.0, 0.0);

/// Output fields for a given intracavity state under unit drive.
fn solution_from_state(
    state: IntracavityState,
    i_p: f64,
    params: &CavityParams,
) -> SteadyStateSolution {
    let f = propagate(&state, UNIT_DRIVE, params.mixing(i_p), params);
    SteadyStateSolution {
        t_cavity: f.transmitted,
        r_cavity: reflected_field(&state, UNIT_DRIVE, params),
        a_s: state.a_s,
        b_d: state.b_d,
    }
}

/// Doubly resonant closed forms.
pub fn closed_form_resonant(
    params: &CavityParams,
    i_p: f64,
) -> Result<SteadyStateSolution, SolveError> {
    check_inputs(params, i_p)?;
    if params.phi_s != 0.0 || params.phi_d != 0.0 {
        return Err(SolveError::Detuned {
            phi_s: params.phi_s,
            phi_d: params.phi_d,
        });
    }
    let CavityParams {
        r_s,
        t_s,
        eta_s,
        rho_d,
        ..
    } = *params;
    let cos = params.mixing(i_p).angle().cos();
    let r2 = r_s * r_s;
    let eta2 = eta_s * eta_s;
    let den = 1.0 - r2 * eta2 * cos - rho_d * cos + r2 * rho_d * eta2;
    if den.abs() <= f64::EPSILON {
        return Err(SolveError::VanishingDenominator);
    }
    let t = t_s * t_s * eta_s * (cos - rho_d) / den;
    let r = -r_s * (1.0 - eta2 * cos - rho_d * cos + rho_d * eta2) / den;

    let fields = solve_fixed_point(params, i_p)?;
    Ok(SteadyStateSolution {
        t_cavity: Complex64::new(t, 0.0),
        r_cavity: Complex64::new(r, 0.0),
        a_s: fields.a_s,
        b_d: fields.b_d,
    })
}

/// Solves the round-trip fixed point with unit drive for any detuning.
///
/// With `s = r_s a + t_s` the field after in-coupling, the state satisfies
///
/// ```text
/// a = P (cos g′ s + k sin g′ b),      P = r_s η_s² e^{2iφ_s}
/// b = Q (cos g′ b − sin g′ s / k),    Q = ρ_d e^{2iφ_d}
/// ```
///
/// which is linear in `(a, b)` and is inverted by Cramer's rule.
pub fn general_steady_state(
    params: &CavityParams,
    i_p: f64,
) -> Result<SteadyStateSolution, SolveError> {
    check_inputs(params, i_p)?;
    let state = solve_fixed_point(params, i_p)?;
    Ok(solution_from_state(state, i_p, params))
}

fn solve_fixed_point(params: &CavityParams, i_p: f64) -> Result<IntracavityState, SolveError> {
    let k = frequency_ratio(params);
    let (sin, cos) = params.mixing(i_p).angle().sin_cos();
    let (r, t) = (params.r_s, params.t_s);
    let p = Complex64::from_polar(r * params.eta_s * params.eta_s, 2.0 * params.phi_s);
    let q = Complex64::from_polar(params.rho_d, 2.0 * params.phi_d);

    // [m11 m12; m21 m22] [a; b] = [v1; v2]
    let m11 = Complex64::new(1.0, 0.0) - p * (cos * r);
    let m12 = -p * (k * sin);
    let m21 = q * (sin * r / k);
    let m22 = Complex64::new(1.0, 0.0) - q * cos;
    let v1 = p * (cos * t);
    let v2 = -q * (sin * t / k);

    let det = m11 * m22 - m12 * m21;
    let scale = (m11.norm() * m22.norm())
        .max(m12.norm() * m21.norm())
        .max(1.0);
    if det.norm() <= f64::EPSILON * scale {
        return Err(SolveError::Singular);
    }
    let a_s = (v1 * m22 - m12 * v2) / det;
    let b_d = (m11 * v2 - v1 * m21) / det;
    Ok(IntracavityState { a_s, b_d })
}

/// Iterates the round-trip map from an empty cavity until successive states
/// differ by less than `tol`.
pub fn fixed_point_oracle(
    params: &CavityParams,
    i_p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyStateSolution, SolveError> {
    check_inputs(params, i_p)?;
    if !(tol > 0.0) {
        return Err(SolveError::InvalidTolerance(tol));
    }
    let (state, _) = iterate_to_fixed_point(params, i_p, tol, max_iter)?;
    Ok(solution_from_state(state, i_p, params))
}

/// As [`fixed_point_oracle`], also returning the number of iterations used.
pub fn iterate_to_fixed_point(
    params: &CavityParams,
    i_p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(IntracavityState, usize), SolveError> {
    let mut state = IntracavityState::ZERO;
    let mut residual = f64::INFINITY;
    for n in 1..=max_iter {
        let (next, _) = round_trip_step(&state, UNIT_DRIVE, i_p, params)?;
        residual = (next.a_s - state.a_s)
            .norm()
            .max((next.b_d - state.b_d).norm());
        state = next;
        if residual < tol {
            return Ok((state, n));
        }
    }
    Err(SolveError::NotConverged {
        iterations: max_iter,
        residual,
    })
}

/// Power contrast `|t(0)|² / |t(i_p)|²` at fixed detuning.
pub fn steady_contrast(params: &CavityParams, i_p: f64) -> Result<f64, SolveError> {
    let off = general_steady_state(params, 0.0)?.transmission();
    let on = general_steady_state(params, i_p)?.transmission();
    Ok(off / on)
}

/// Transmission normalized to the pump-off value of the same cavity, one
/// entry per input power in input order. Failures stay local to their point.
pub fn power_sweep(params: &CavityParams, powers: &[f64]) -> Vec<(f64, Result<f64, SolveError>)> {
    let reference = general_steady_state(params, 0.0).map(|s| s.transmission());
    powers
        .iter()
        .map(|&w| {
            let rel = reference
                .clone()
                .and_then(|t0| general_steady_state(params, w).map(|s| s.transmission() / t0));
            (w, rel)
        })
        .collect()
}
