//! Lab observables to model constants, with no fitted parameters.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{CavityParams, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("finesse must exceed 1, got {0}")]
    Finesse(f64),
    #[error("power reflectivity must lie in (0, 1), got {0}")]
    Reflectivity(f64),
    #[error("finesse implies gain: round-trip survival {rho} exceeds r_s^2 = {r2}")]
    FinesseImpliesGain { rho: f64, r2: f64 },
    #[error("depletion fraction must lie in (0, 1], got {0}")]
    Depletion(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("crystal ({crystal} m) is longer than the mirror spacing ({spacing} m)")]
    CrystalTooLong { crystal: f64, spacing: f64 },
    #[error("mirror displacement must be finite, got {0}")]
    Displacement(f64),
}

/// Measured cavity properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabObservables {
    pub finesse_s: f64,
    pub finesse_d: f64,
    pub mirror_power_reflectivity: f64,
    pub depletion_fraction: f64,
    pub depletion_pump_power: f64,
    pub mirror_spacing: f64,
    pub crystal_length: f64,
    /// Assumed index at the signal wavelength (lithium niobate near 633 nm).
    pub crystal_index: f64,
    pub lambda_s: f64,
    pub lambda_d: f64,
}

impl LabObservables {
    /// The measured values of the doubly resonant switch.
    pub fn measured() -> Self {
        Self {
            finesse_s: 28.3,
            finesse_d: 276.0,
            mirror_power_reflectivity: 0.938,
            depletion_fraction: 0.0065,
            depletion_pump_power: 13.0,
            mirror_spacing: 0.025,
            crystal_length: 0.005,
            crystal_index: 2.2,
            lambda_s: 633e-9,
            lambda_d: 1070e-9,
        }
    }
}

/// `F = π√ρ / (1 − ρ)` for round-trip amplitude survival `ρ`.
pub fn finesse_from_roundtrip_amplitude(rho: f64) -> f64 {
    PI * rho.sqrt() / (1.0 - rho)
}

/// Inverts the finesse relation by bisection on `(0, 1)`.
pub fn roundtrip_amplitude_from_finesse(finesse: f64) -> Result<f64, CalibrationError> {
    if !(finesse > 1.0) {
        return Err(CalibrationError::Finesse(finesse));
    }
    if finesse.is_infinite() {
        return Ok(1.0);
    }
    // F(ρ) increases monotonically from 0 to ∞ on (0, 1)
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if finesse_from_roundtrip_amplitude(mid) < finesse {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lossless mirror amplitudes from its power reflectivity.
pub fn mirror_coeffs(power_reflectivity: f64) -> Result<(f64, f64), CalibrationError> {
    if !(power_reflectivity > 0.0 && power_reflectivity < 1.0) {
        return Err(CalibrationError::Reflectivity(power_reflectivity));
    }
    Ok((power_reflectivity.sqrt(), (1.0 - power_reflectivity).sqrt()))
}

/// Single-pass signal transmission `η_s = √(ρ(F_s) / r_s²)`.
pub fn eta_from_finesse(finesse_s: f64, r_s: f64) -> Result<f64, CalibrationError> {
    let rho = roundtrip_amplitude_from_finesse(finesse_s)?;
    let r2 = r_s * r_s;
    if rho > r2 {
        return Err(CalibrationError::FinesseImpliesGain { rho, r2 });
    }
    Ok((rho / r2).sqrt())
}

/// Mixing gain from single-pass depletion, `depletion = sin²(g √P)`.
pub fn gain_from_depletion(depletion: f64, pump: f64) -> Result<f64, CalibrationError> {
    if !(depletion > 0.0 && depletion <= 1.0) {
        return Err(CalibrationError::Depletion(depletion));
    }
    if !(pump > 0.0 && pump.is_finite()) {
        return Err(CalibrationError::NonPositive {
            name: "depletion pump power",
            value: pump,
        });
    }
    Ok(depletion.sqrt().asin() / pump.sqrt())
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = phi - two_pi * (phi / two_pi).round();
    if w <= -PI {
        w + two_pi
    } else if w > PI {
        w - two_pi
    } else {
        w
    }
}

/// Phases after moving a mirror by `dl` meters from where they were
/// `(phi_s0, phi_d0)`. Both wrapped to `(−π, π]`.
pub fn phases_from_displacement(
    dl: f64,
    phi_s0: f64,
    phi_d0: f64,
    params: &CavityParams,
) -> Result<(f64, f64), CalibrationError> {
    if !dl.is_finite() {
        return Err(CalibrationError::Displacement(dl));
    }
    Ok((
        wrap_phase(phi_s0 + 2.0 * PI * dl / params.lambda_s),
        wrap_phase(phi_d0 + 2.0 * PI * dl / params.lambda_d),
    ))
}

/// Round-trip time of the mirror pair with the crystal between them.
pub fn roundtrip_time(geometry: &LabObservables) -> Result<f64, CalibrationError> {
    for (name, value) in [
        ("mirror spacing", geometry.mirror_spacing),
        ("crystal index", geometry.crystal_index),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(CalibrationError::NonPositive { name, value });
        }
    }
    if !(geometry.crystal_length >= 0.0 && geometry.crystal_length.is_finite()) {
        return Err(CalibrationError::NonPositive {
            name: "crystal length",
            value: geometry.crystal_length,
        });
    }
    if geometry.crystal_length > geometry.mirror_spacing {
        return Err(CalibrationError::CrystalTooLong {
            crystal: geometry.crystal_length,
            spacing: geometry.mirror_spacing,
        });
    }
    let optical = (geometry.mirror_spacing - geometry.crystal_length)
        + geometry.crystal_index * geometry.crystal_length;
    Ok(2.0 * optical / SPEED_OF_LIGHT)
}

/// Full pipeline. Detunings start at zero.
pub fn calibrate(obs: &LabObservables) -> Result<CavityParams, CalibrationError> {
    let (r_s, t_s) = mirror_coeffs(obs.mirror_power_reflectivity)?;
    let eta_s = eta_from_finesse(obs.finesse_s, r_s)?;
    let rho_d = roundtrip_amplitude_from_finesse(obs.finesse_d)?;
    let g = gain_from_depletion(obs.depletion_fraction, obs.depletion_pump_power)?;
    let dt = roundtrip_time(obs)?;
    for (name, value) in [("lambda_s", obs.lambda_s), ("lambda_d", obs.lambda_d)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(CalibrationError::NonPositive { name, value });
        }
    }
    Ok(CavityParams {
        r_s,
        t_s,
        eta_s,
        rho_d,
        phi_s: 0.0,
        phi_d: 0.0,
        g,
        lambda_s: obs.lambda_s,
        lambda_d: obs.lambda_d,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finesse_inversion_examples() {
        assert_abs_diff_eq!(
            roundtrip_amplitude_from_finesse(28.3).unwrap(),
            0.8949,
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            roundtrip_amplitude_from_finesse(276.0).unwrap(),
            0.9887,
            epsilon = 1e-4
        );
        assert!(roundtrip_amplitude_from_finesse(1e9).unwrap() > 1.0 - 1e-8);
        assert_eq!(roundtrip_amplitude_from_finesse(f64::INFINITY), Ok(1.0));
        assert!(roundtrip_amplitude_from_finesse(1.0).is_err());
        assert!(roundtrip_amplitude_from_finesse(0.5).is_err());
        assert!(roundtrip_amplitude_from_finesse(f64::NAN).is_err());
    }

    #[test]
    fn finesse_round_trip_is_tight() {
        for f in [1.5, 3.0, 28.3, 100.0, 276.0, 1e4] {
            let rho = roundtrip_amplitude_from_finesse(f).unwrap();
            let back = finesse_from_roundtrip_amplitude(rho);
            assert!(((back - f) / f).abs() < 1e-9, "{f} -> {back}");
        }
    }

    #[test]
    fn mirror_examples() {
        let (r, t) = mirror_coeffs(0.938).unwrap();
        assert_abs_diff_eq!(r, 0.9685, epsilon = 5e-5);
        assert_abs_diff_eq!(t, 0.2490, epsilon = 5e-5);
        assert_abs_diff_eq!(r * r + t * t, 1.0, epsilon = 1e-15);
        let (r, t) = mirror_coeffs(0.5).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(t, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        let (r, t) = mirror_coeffs(1.0 - 1e-12).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        assert!(t < 2e-6);
        assert!(mirror_coeffs(1.0).is_err());
        assert!(mirror_coeffs(0.0).is_err());
    }

    #[test]
    fn eta_examples() {
        let (r, _) = mirror_coeffs(0.938).unwrap();
        assert_abs_diff_eq!(eta_from_finesse(28.3, r).unwrap(), 0.977, epsilon = 5e-4);
        assert!(matches!(
            eta_from_finesse(276.0, r),
            Err(CalibrationError::FinesseImpliesGain { .. })
        ));
        let rho = roundtrip_amplitude_from_finesse(50.0).unwrap();
        assert_abs_diff_eq!(
            eta_from_finesse(50.0, rho.sqrt()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gain_examples() {
        assert_abs_diff_eq!(
            gain_from_depletion(0.0065, 13.0).unwrap(),
            0.02239,
            epsilon = 1e-5
        );
        assert!(gain_from_depletion(1e-14, 13.0).unwrap() < 1e-7);
        assert_abs_diff_eq!(
            gain_from_depletion(1.0, 9.0).unwrap(),
            PI / 2.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(gain_from_depletion(0.0, 13.0).is_err());
        assert!(gain_from_depletion(0.1, 0.0).is_err());
    }

    #[test]
    fn displacement_examples() {
        let p = CavityParams::doubly_resonant();
        assert_eq!(
            phases_from_displacement(0.0, 0.1, -0.2, &p),
            Ok((0.1, -0.2))
        );

        let (s, d) = phases_from_displacement(p.lambda_s, 0.0, 0.0, &p).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d, 2.0 * PI * 633.0 / 1070.0 - 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(d, -2.566, epsilon = 5e-4);

        let (s, d) = phases_from_displacement(p.lambda_d, 0.0, 0.0, &p).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s, wrap_phase(2.0 * PI * 1070.0 / 633.0), epsilon = 1e-12);
        assert!(phases_from_displacement(f64::NAN, 0.0, 0.0, &p).is_err());
    }

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_phase(PI), PI);
        assert_abs_diff_eq!(wrap_phase(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_phase(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_eq!(wrap_phase(0.25), 0.25);
    }

    #[test]
    fn roundtrip_time_examples() {
        let obs = LabObservables::measured();
        assert_abs_diff_eq!(roundtrip_time(&obs).unwrap(), 0.207e-9, epsilon = 5e-13);
        let empty = LabObservables {
            crystal_index: 1.0,
            ..obs
        };
        assert_abs_diff_eq!(
            roundtrip_time(&empty).unwrap(),
            2.0 * 0.025 / SPEED_OF_LIGHT,
            epsilon = 1e-24
        );
        let no_crystal = LabObservables {
            crystal_length: 0.0,
            ..obs
        };
        assert_abs_diff_eq!(
            roundtrip_time(&no_crystal).unwrap(),
            0.1668e-9,
            epsilon = 5e-14
        );
        let bad = LabObservables {
            crystal_length: 0.03,
            ..obs
        };
        assert!(roundtrip_time(&bad).is_err());
    }

    #[test]
    fn pipeline_default_round_trip_time_matches_model() {
        let p = calibrate(&LabObservables::measured()).unwrap();
        assert_abs_diff_eq!(p.dt, CavityParams::doubly_resonant().dt, epsilon = 1e-24);
        p.validate().unwrap();
    }
}
