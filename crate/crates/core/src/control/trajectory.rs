//! Recorded runs of the state machine.

use std::fmt::Write as _;

use super::{classify, controller_next, ControlConfig, ControlError, Phase, State, StepDraws};
use crate::noise::{RngStream, Role};

pub const TRAJECTORY_SCHEMA: &str = "# stochstab trajectory v1";

/// Identifies the random streams a trajectory was driven by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub trial_id: u64,
}

/// Draws a step actually consumed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UsedDraws {
    pub xi: Option<f64>,
    pub zeta: Option<f64>,
    pub chi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `z_0 ..= z_N`.
    pub states: Vec<f64>,
    /// Phase of each state, i.e. the controller applied to it.
    pub phases: Vec<Phase>,
    /// Draws consumed by steps `0 .. N`.
    pub draws: Vec<UsedDraws>,
    /// First index in `I_delta`.
    pub tau: Option<u64>,
    /// Departures from `I_u` straight out of the noise-controlled phase.
    pub escapes: u64,
    pub seed: Option<SeedRecord>,
    pub k: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> u64 {
        self.draws.len() as u64
    }

    pub fn last(&self) -> f64 {
        *self.states.last().expect("trajectory holds z_0")
    }

    pub fn abs_err(&self, n: usize) -> f64 {
        (self.states[n] - self.k).abs()
    }

    /// Reruns the trajectory from its seed record.
    pub fn replay(&self, config: &ControlConfig) -> Result<Trajectory, ControlError> {
        let seed = self.seed.ok_or_else(|| ControlError::Config("trajectory was not seeded".into()))?;
        run_trajectory(config, seed.master_seed, seed.trial_id, self.horizon())
    }

    /// CSV with columns `step,z,phase,interval_j,xi,zeta,chi,abs_err`; draws a
    /// step did not consume are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(TRAJECTORY_SCHEMA);
        out.push('\n');
        if let Some(s) = self.seed {
            let _ = writeln!(out, "# master_seed = {}, trial = {}", s.master_seed, s.trial_id);
        }
        out.push_str("step,z,phase,interval_j,xi,zeta,chi,abs_err\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for (n, (&z, &phase)) in self.states.iter().zip(&self.phases).enumerate() {
            let d = self.draws.get(n).copied().unwrap_or_default();
            let j = phase.interval().map(|j| j.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{n},{z:.16e},{phase},{j},{},{},{},{:.16e}",
                opt(d.xi),
                opt(d.zeta),
                opt(d.chi),
                (z - self.k).abs()
            );
        }
        out
    }
}

/// Seeded draws of one trial: step `n` reads index `n` of the `xi`, `zeta` and
/// `chi` streams.
struct SeededDraws {
    xi: RngStream,
    zeta: RngStream,
    chi: RngStream,
}

impl SeededDraws {
    fn new(seed: SeedRecord) -> Self {
        let s = |role| RngStream::for_trial(seed.master_seed, seed.trial_id, role);
        Self { xi: s(Role::Xi), zeta: s(Role::Zeta), chi: s(Role::Chi) }
    }

    fn at(&mut self, n: u64, config: &ControlConfig) -> StepDraws {
        let take = |stream: &mut RngStream| {
            if stream.index() != n {
                stream.seek(n);
            }
            stream.next_u64()
        };
        StepDraws {
            xi: config.noise.from_bits(take(&mut self.xi)),
            zeta: config.walk_noise.from_bits(take(&mut self.zeta)),
            chi: config.walk_noise.from_bits(take(&mut self.chi)),
        }
    }
}

/// Runs `horizon` steps from `config.z0` with the streams of `(master_seed, trial_id)`.
pub fn run_trajectory(
    config: &ControlConfig,
    master_seed: u64,
    trial_id: u64,
    horizon: u64,
) -> Result<Trajectory, ControlError> {
    let seed = SeedRecord { master_seed, trial_id };
    let mut draws = SeededDraws::new(seed);
    run_with_draws(config, horizon, Some(seed), |n| draws.at(n, config))
}

/// Runs `horizon` steps taking the draws of step `n` from `draws(n)`.
pub fn run_with_draws(
    config: &ControlConfig,
    horizon: u64,
    seed: Option<SeedRecord>,
    mut draws: impl FnMut(u64) -> StepDraws,
) -> Result<Trajectory, ControlError> {
    if horizon == 0 {
        return Err(ControlError::Config("horizon must be at least 1".into()));
    }
    config.check()?;
    let n = horizon as usize;
    let mut states = Vec::with_capacity(n + 1);
    let mut phases = Vec::with_capacity(n + 1);
    let mut used = Vec::with_capacity(n);
    let mut escapes = 0;

    let (phase, _) = classify(config, config.z0, None);
    let mut state = State { z: config.z0, phase };
    let mut tau = (phase == Phase::MncFinal).then_some(0);
    states.push(state.z);
    phases.push(state.phase);

    for step in 0..horizon {
        let d = draws(step);
        let t = controller_next(state, config, d).map_err(|source| ControlError::Map { step, source })?;
        if !t.next.z.is_finite() {
            return Err(ControlError::NonFinite { step, value: t.next.z });
        }
        let p = state.phase;
        used.push(UsedDraws {
            xi: p.uses_xi().then_some(d.xi),
            zeta: p.uses_walk_noise().then_some(d.zeta),
            chi: p.uses_walk_noise().then_some(d.chi),
        });
        escapes += u64::from(t.escaped);
        state = t.next;
        if tau.is_none() && state.phase == Phase::MncFinal {
            tau = Some(step + 1);
        }
        states.push(state.z);
        phases.push(state.phase);
    }

    Ok(Trajectory { states, phases, draws: used, tau, escapes, seed, k: config.map.k() })
}
