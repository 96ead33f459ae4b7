//! Single round-trip field map of the doubly resonant χ⁽²⁾ cavity.
//!
//! Fields are normalized so that an incident signal amplitude of magnitude
//! one carries unit power. The signal amplitude `a_s` lives at the first
//! mirror, on the cavity side, just before coupling. The difference-frequency
//! (DF) amplitude `b_d` is stored just after its reflection at the first
//! mirror, so the DF dynamics depend only on the measured round-trip survival
//! `rho_d` and never on the individual mirror/loss split.
//!
//! One call to [`round_trip_step`] performs:
//!
//! 1. coupling at the first mirror ([`in_couple`], [`reflected_field`]),
//! 2. three-wave mixing in the crystal ([`crystal_mix`]), forward pass only,
//! 3. loss and phase, leakage through the second mirror, and the return pass.

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance applied to `r_s² + t_s² ≤ 1`.
pub const MIRROR_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: String,
}

impl ParamError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("pump power must be finite and non-negative, got {0}")]
    InvalidPump(f64),
    #[error("non-finite field amplitude in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// Static model constants of the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Mirror amplitude reflection at the signal frequency.
    pub r_s: f64,
    /// Mirror amplitude transmission at the signal frequency.
    pub t_s: f64,
    /// Single-pass intracavity amplitude transmission at the signal frequency.
    pub eta_s: f64,
    /// DF amplitude survival per round trip (mirror reflection and loss combined).
    pub rho_d: f64,
    /// Single-pass signal detuning (rad).
    pub phi_s: f64,
    /// Single-pass DF detuning (rad).
    pub phi_d: f64,
    /// Mixing gain (rad / √W).
    pub g: f64,
    /// Signal vacuum wavelength (m).
    pub lambda_s: f64,
    /// DF vacuum wavelength (m).
    pub lambda_d: f64,
    /// Round-trip time (s).
    pub dt: f64,
}

impl CavityParams {
    /// Reference constants of the doubly resonant switch: 633 nm signal,
    /// 1070 nm DF, 25 mm cavity around a 5 mm crystal.
    pub fn doubly_resonant() -> Self {
        Self {
            r_s: 0.968,
            t_s: 0.250,
            eta_s: 0.977,
            rho_d: 0.989,
            phi_s: 0.0,
            phi_d: 0.0,
            g: 0.022,
            lambda_s: 633e-9,
            lambda_d: 1070e-9,
            dt: DEFAULT_ROUND_TRIP_TIME,
        }
    }

    /// Same cavity with the DF-blocking filter inserted.
    pub fn lossy_df() -> Self {
        Self {
            eta_s: 0.951,
            rho_d: 1e-4,
            ..Self::doubly_resonant()
        }
    }

    pub fn with_phases(self, phi_s: f64, phi_d: f64) -> Self {
        Self {
            phi_s,
            phi_d,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let finite = [
            ("r_s", self.r_s),
            ("t_s", self.t_s),
            ("eta_s", self.eta_s),
            ("rho_d", self.rho_d),
            ("phi_s", self.phi_s),
            ("phi_d", self.phi_d),
            ("g", self.g),
            ("lambda_s", self.lambda_s),
            ("lambda_d", self.lambda_d),
            ("dt", self.dt),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(ParamError::new(field, format!("must be finite, got {v}")));
            }
        }
        for (field, v) in [
            ("r_s", self.r_s),
            ("t_s", self.t_s),
            ("eta_s", self.eta_s),
            ("rho_d", self.rho_d),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ParamError::new(
                    field,
                    format!("must lie in [0, 1], got {v}"),
                ));
            }
        }
        let sum = self.r_s * self.r_s + self.t_s * self.t_s;
        if sum > 1.0 + MIRROR_SUM_TOL {
            return Err(ParamError::new(
                "t_s",
                format!("r_s^2 + t_s^2 = {sum} exceeds 1 (mirror would add power)"),
            ));
        }
        if self.g < 0.0 {
            return Err(ParamError::new(
                "g",
                format!("must be >= 0, got {}", self.g),
            ));
        }
        if self.lambda_s <= 0.0 {
            return Err(ParamError::new(
                "lambda_s",
                format!("must be > 0, got {}", self.lambda_s),
            ));
        }
        if self.lambda_d <= self.lambda_s {
            return Err(ParamError::new(
                "lambda_d",
                format!(
                    "must exceed lambda_s = {}, got {}",
                    self.lambda_s, self.lambda_d
                ),
            ));
        }
        if self.dt <= 0.0 {
            return Err(ParamError::new(
                "dt",
                format!("must be > 0, got {}", self.dt),
            ));
        }
        Ok(())
    }

    /// Signal power survival per round trip, `r_s² η_s²`.
    pub fn signal_round_trip(&self) -> f64 {
        self.r_s * self.r_s * self.eta_s * self.eta_s
    }

    /// Signal finesse implied by the round-trip survival.
    pub fn signal_finesse(&self) -> f64 {
        let rho = self.signal_round_trip();
        std::f64::consts::PI * rho.sqrt() / (1.0 - rho)
    }

    /// Half width at half maximum of the signal resonance, expressed in the
    /// single-pass phase `phi_s`.
    pub fn signal_half_width(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.signal_finesse())
    }

    /// Signal photon lifetime, `dt / (1 − r_s² η_s²)`.
    pub fn signal_lifetime(&self) -> f64 {
        self.dt / (1.0 - self.signal_round_trip())
    }

    /// Mixing angle produced by a pump power.
    pub fn mixing(&self, i_p: f64) -> MixingStrength {
        MixingStrength(self.g * i_p.max(0.0).sqrt())
    }
}

/// 25 mm mirror spacing, 5 mm crystal with index 2.2.
pub const DEFAULT_ROUND_TRIP_TIME: f64 = 2.0 * (0.020 + 2.2 * 0.005) / SPEED_OF_LIGHT;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Mixing angle `g √I_P` (rad).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MixingStrength(f64);

impl MixingStrength {
    pub const ZERO: Self = Self(0.0);

    pub fn new(g_prime: f64) -> Option<Self> {
        (g_prime.is_finite() && g_prime >= 0.0).then_some(Self(g_prime))
    }

    pub fn angle(self) -> f64 {
        self.0
    }
}

/// Circulating fields at the first mirror.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntracavityState {
    pub a_s: Complex64,
    pub b_d: Complex64,
}

impl IntracavityState {
    pub const ZERO: Self = Self {
        a_s: Complex64::new(0.0, 0.0),
        b_d: Complex64::new(0.0, 0.0),
    };

    pub fn is_finite(&self) -> bool {
        self.a_s.is_finite() && self.b_d.is_finite()
    }

    /// Photon-flux weighted stored content `|a_s|² + k²|b_d|²`.
    pub fn stored_flux(&self, k: f64) -> f64 {
        self.a_s.norm_sqr() + k * k * self.b_d.norm_sqr()
    }
}

/// External observables of one round trip, in units of the input power.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PortSnapshot {
    pub p_in: f64,
    pub p_t: f64,
    pub p_r: f64,
    /// Signal power removed by conversion; negative during back-conversion.
    pub p_conv: f64,
}

/// `k = √(ω_S/ω_D) = √(λ_D/λ_S)`.
pub fn frequency_ratio(params: &CavityParams) -> f64 {
    (params.lambda_d / params.lambda_s).sqrt()
}

/// Lossless three-wave mixing with an undepleted pump.
///
/// Preserves `|a_s|² + k²|a_d|²`.
pub fn crystal_mix(
    a_s_in: Complex64,
    a_d_in: Complex64,
    g_prime: MixingStrength,
    k: f64,
) -> (Complex64, Complex64) {
    let (sin, cos) = g_prime.0.sin_cos();
    let a_s_out = a_s_in * cos + a_d_in * (k * sin);
    let a_d_out = a_d_in * cos - a_s_in * (sin / k);
    (a_s_out, a_d_out)
}

/// Signal field just inside the first mirror.
pub fn in_couple(state: &IntracavityState, a_i: Complex64, params: &CavityParams) -> Complex64 {
    state.a_s * params.r_s + a_i * params.t_s
}

/// Field reflected off the first mirror (leakage plus direct reflection).
pub fn reflected_field(
    state: &IntracavityState,
    a_i: Complex64,
    params: &CavityParams,
) -> Complex64 {
    state.a_s * params.t_s - a_i * params.r_s
}

/// Intermediate fields of one round trip.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RoundTripFields {
    pub coupled: Complex64,
    pub signal_after_crystal: Complex64,
    pub transmitted: Complex64,
    pub reflected: Complex64,
    pub next: IntracavityState,
}

pub(crate) fn propagate(
    state: &IntracavityState,
    a_i: Complex64,
    mixing: MixingStrength,
    params: &CavityParams,
) -> RoundTripFields {
    let k = frequency_ratio(params);
    let coupled = in_couple(state, a_i, params);
    let reflected = reflected_field(state, a_i, params);
    let (s2, d2) = crystal_mix(coupled, state.b_d, mixing, k);
    let single_pass = Complex64::from_polar(params.eta_s, params.phi_s);
    let transmitted = s2 * single_pass * params.t_s;
    let next = IntracavityState {
        a_s: s2
            * Complex64::from_polar(params.r_s * params.eta_s * params.eta_s, 2.0 * params.phi_s),
        b_d: d2 * Complex64::from_polar(params.rho_d, 2.0 * params.phi_d),
    };
    RoundTripFields {
        coupled,
        signal_after_crystal: s2,
        transmitted,
        reflected,
        next,
    }
}

/// Advances the cavity by one round trip at constant pump power `i_p` (W).
pub fn round_trip_step(
    state: &IntracavityState,
    a_i: Complex64,
    i_p: f64,
    params: &CavityParams,
) -> Result<(IntracavityState, PortSnapshot), ModelError> {
    if !(i_p.is_finite() && i_p >= 0.0) {
        return Err(ModelError::InvalidPump(i_p));
    }
    if !state.is_finite() {
        return Err(ModelError::NonFinite("state"));
    }
    if !a_i.is_finite() {
        return Err(ModelError::NonFinite("incident field"));
    }
    Ok(step_unchecked(state, a_i, i_p, params))
}

pub(crate) fn step_unchecked(
    state: &IntracavityState,
    a_i: Complex64,
    i_p: f64,
    params: &CavityParams,
) -> (IntracavityState, PortSnapshot) {
    let f = propagate(state, a_i, params.mixing(i_p), params);
    let ports = PortSnapshot {
        p_in: a_i.norm_sqr(),
        p_t: f.transmitted.norm_sqr(),
        p_r: f.reflected.norm_sqr(),
        p_conv: f.coupled.norm_sqr() - f.signal_after_crystal.norm_sqr(),
    };
    (f.next, ports)
}
