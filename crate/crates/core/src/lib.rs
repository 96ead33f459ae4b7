//! Simulator and calibration toolkit for an all-optical Zeno switch: a
//! Fabry-Pérot cavity, resonant at both the signal and the difference
//! frequency, around a χ⁽²⁾ crystal driven by a pulsed pump.
//!
//! * [`model`]: one round trip of the cavity field map.
//! * [`steady`]: constant-pump steady states and power sweeps.
//! * [`calibration`]: lab observables to [`CavityParams`].
//! * [`dynamics`]: pulse and mirror-scan traces, contrast and asymmetry.
//! * [`config`], [`output`] and [`run`]: the command-line front end.

pub mod calibration;
pub mod config;
pub mod dynamics;
pub mod model;
pub mod output;
pub mod run;
pub mod steady;

pub use model::{CavityParams, IntracavityState, MixingStrength, PortSnapshot};
pub use steady::SteadyStateSolution;
