//! One step of each controller and the switching state machine that chains them.
//!
//! The phase attached to a state names the controller applied to it. Phases are
//! recomputed from the new state after every step:
//!
//! * `MncFinal` once the state has entered `I_delta`, forever after;
//! * otherwise, in the combined regime, `Mnc` inside `I_beta`, `Dwc(j)` in
//!   `I_u \ I_beta` and `Free` (the uncontrolled map) outside `I_u`;
//! * in the walk-then-noise regime, `Dwc(j)` in `I_u` and `Free` outside;
//! * with noise only, `Mnc` everywhere.

mod trajectory;

use std::fmt;

use thiserror::Error;

use crate::maps::{MapError, MapSpec};
use crate::noise::NoiseSpec;
use crate::params::{DwcParams, Ladder, Magnitude};

pub use trajectory::{run_trajectory, run_with_draws, SeedRecord, Trajectory, TRAJECTORY_SCHEMA};

/// Below this distance of `f(z)` from `K` the walk has no direction and only the
/// additive noise is applied.
pub const DIRECTION_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("step {step}: {source}")]
    Map { step: u64, source: MapError },
    #[error("step {step}: state became {value}")]
    NonFinite { step: u64, value: f64 },
    #[error("invalid control setup: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Uncontrolled map, outside the walk's basin.
    Free,
    /// Directed walk on ladder rung `j`.
    Dwc(u32),
    Mnc,
    /// Pure noise control after the first entry into `I_delta`; absorbing.
    MncFinal,
}

impl Phase {
    pub fn interval(self) -> Option<u32> {
        match self {
            Phase::Dwc(j) => Some(j),
            _ => None,
        }
    }

    pub fn uses_xi(self) -> bool {
        matches!(self, Phase::Mnc | Phase::MncFinal)
    }

    pub fn uses_walk_noise(self) -> bool {
        matches!(self, Phase::Dwc(_))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Free => write!(f, "FREE"),
            Phase::Dwc(j) => write!(f, "DWC:{j}"),
            Phase::Mnc => write!(f, "MNC"),
            Phase::MncFinal => write!(f, "MNC_FINAL"),
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "FREE" => Ok(Phase::Free),
            "MNC" => Ok(Phase::Mnc),
            "MNC_FINAL" => Ok(Phase::MncFinal),
            _ => s
                .strip_prefix("DWC:")
                .and_then(|j| j.parse().ok())
                .map(Phase::Dwc)
                .ok_or_else(|| format!("unknown phase '{s}'")),
        }
    }
}

/// Which controllers run and when.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    MncOnly,
    /// Walk down a ladder ending at `delta`, then noise only.
    DwcThenMnc {
        dwc: DwcParams,
    },
    /// Walk into `I_beta`, noise inside, walk again after leaving `I_beta`.
    Combined {
        dwc: DwcParams,
        beta: f64,
    },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::MncOnly => "mnc_only",
            Regime::DwcThenMnc { .. } => "dwc_then_mnc",
            Regime::Combined { .. } => "combined",
        }
    }

    pub fn dwc(&self) -> Option<&DwcParams> {
        match self {
            Regime::MncOnly => None,
            Regime::DwcThenMnc { dwc } | Regime::Combined { dwc, .. } => Some(dwc),
        }
    }
}

/// Everything a trajectory depends on besides the seed.
#[derive(Debug, Clone)]
pub struct ControlConfig {
    pub map: MapSpec,
    /// Law of `xi`.
    pub noise: NoiseSpec,
    /// Law of `zeta` and `chi`.
    pub walk_noise: NoiseSpec,
    pub sigma: f64,
    /// Radius of the final interval `I_delta`.
    pub delta: Magnitude,
    pub z0: f64,
    pub regime: Regime,
}

impl ControlConfig {
    pub fn check(&self) -> Result<(), ControlError> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ControlError::Config(format!("sigma = {} must be nonnegative", self.sigma)));
        }
        if !self.z0.is_finite() {
            return Err(ControlError::Config(format!("z0 = {} must be finite", self.z0)));
        }
        match &self.regime {
            Regime::MncOnly => {}
            Regime::DwcThenMnc { dwc } => {
                if self.delta > Magnitude::new(dwc.ladder.target) {
                    return Err(ControlError::Config(format!(
                        "delta = {} exceeds the walk target {}",
                        self.delta, dwc.ladder.target
                    )));
                }
            }
            Regime::Combined { dwc, beta } => {
                if !(*beta > 0.0 && *beta < dwc.ladder.u) {
                    return Err(ControlError::Config(format!(
                        "beta = {beta} must lie in (0, u) = (0, {})",
                        dwc.ladder.u
                    )));
                }
                if !(self.delta < Magnitude::new(*beta)) {
                    return Err(ControlError::Config(format!("delta = {} must be below beta = {beta}", self.delta)));
                }
            }
        }
        Ok(())
    }
}

/// Draws available to one step; a controller reads only the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDraws {
    pub xi: f64,
    pub zeta: f64,
    pub chi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub z: f64,
    pub phase: Phase,
}

/// Outcome of [`controller_next`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: State,
    /// The state left `I_u` straight from the noise-controlled phase.
    pub escaped: bool,
}

/// `f(z) + sigma xi (z - K)`, clamped at 0 when the map truncates.
pub fn mnc_step(map: &MapSpec, z: f64, xi: f64, sigma: f64) -> Result<f64, MapError> {
    let fz = map.eval(z)?;
    let value = fz + sigma * xi * (z - map.k());
    if !value.is_finite() {
        return Err(MapError::Eval { z, value });
    }
    Ok(map.clamp(value))
}

/// `f(z) - alpha_j (1 + ell_c chi) sign(f(z) - K) + ell zeta`, clamped at 0 when
/// the map truncates.
pub fn dwc_step(map: &MapSpec, z: f64, j: u32, zeta: f64, chi: f64, dwc: &DwcParams) -> Result<f64, MapError> {
    let fz = map.eval(z)?;
    let d = fz - map.k();
    let pull = if d.abs() < DIRECTION_EPS { 0.0 } else { dwc.alpha(j) * (1.0 + dwc.ell_c * chi) * d.signum() };
    let value = fz - pull + dwc.ell * zeta;
    if !value.is_finite() {
        return Err(MapError::Eval { z, value });
    }
    Ok(map.clamp(value))
}

/// Ladder rung of `z`; `None` outside `I_{u,K}`.
pub fn interval_index(z: f64, k: f64, ladder: &Ladder) -> Option<u32> {
    ladder.index(z - k)
}

/// Phase for state `z` given the phase of the previous state (`None` at the start).
/// The flag reports a departure from `I_u` out of the noise-controlled phase.
pub fn classify(config: &ControlConfig, z: f64, prev: Option<Phase>) -> (Phase, bool) {
    if prev == Some(Phase::MncFinal) {
        return (Phase::MncFinal, false);
    }
    let x = z - config.map.k();
    if config.delta.exceeds_abs(x) {
        return (Phase::MncFinal, false);
    }
    match &config.regime {
        Regime::MncOnly => (Phase::Mnc, false),
        Regime::DwcThenMnc { dwc } => match dwc.ladder.index(x) {
            Some(j) => (Phase::Dwc(j), false),
            None => (Phase::Free, false),
        },
        Regime::Combined { dwc, beta } => {
            if x.abs() < *beta {
                return (Phase::Mnc, false);
            }
            match dwc.ladder.index(x) {
                Some(j) => (Phase::Dwc(j), false),
                None => (Phase::Free, prev == Some(Phase::Mnc)),
            }
        }
    }
}

/// Applies the controller named by `state.phase` and classifies the result.
pub fn controller_next(state: State, config: &ControlConfig, draws: StepDraws) -> Result<Transition, MapError> {
    let map = &config.map;
    let z = match state.phase {
        Phase::Free => map.eval(state.z)?,
        Phase::Mnc | Phase::MncFinal => mnc_step(map, state.z, draws.xi, config.sigma)?,
        Phase::Dwc(j) => {
            let dwc = config.regime.dwc().expect("walk phase requires walk parameters");
            dwc_step(map, state.z, j, draws.zeta, draws.chi, dwc)?
        }
    };
    let (phase, escaped) = classify(config, z, Some(state.phase));
    Ok(Transition { next: State { z, phase }, escaped })
}
