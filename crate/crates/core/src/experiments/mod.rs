//! Monte Carlo campaigns over seeded trajectories and the statistical checks
//! built on them.

mod stats;
pub mod svg;

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::control::{run_trajectory, ControlConfig, ControlError, Phase, Regime, Trajectory};
use crate::noise::{RngStream, Role};
use crate::params::{Magnitude, MncParams};

pub use stats::{
    lln_experiment, run_length_experiment, run_length_oracle, stability_sweep, sweep_csv, LlnReport, RunLengthReport,
    SweepCell, RUN_LENGTH_CAP, SWEEP_SCHEMA,
};

pub const MONTECARLO_SCHEMA: &str = "# stochstab montecarlo v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// Initial condition of each trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Fixed(f64),
    /// Uniform on `[lo, hi)`, drawn from the trial's auxiliary stream.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl InitialState {
    pub fn for_trial(self, master_seed: u64, trial_id: u64) -> f64 {
        match self {
            InitialState::Fixed(z) => z,
            InitialState::Uniform { lo, hi } => {
                let t = RngStream::for_trial(master_seed, trial_id, Role::Aux).next_unit();
                lo + (hi - lo) * t
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub control: ControlConfig,
    pub z0: InitialState,
    /// Target confidence; the envelope should hold on a fraction `1 - gamma`.
    pub gamma: f64,
    pub trials: u64,
    pub horizon: u64,
    pub master_seed: u64,
    /// Success means `|z_horizon - K| < tolerance`.
    pub tolerance: f64,
    /// Envelope constants; the audit is skipped without them.
    pub mnc: Option<MncParams>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Derived constants echoed into the report.
    pub constants: Vec<(String, String)>,
}

impl ExperimentConfig {
    pub fn new(control: ControlConfig, trials: u64, horizon: u64, master_seed: u64) -> Self {
        Self {
            z0: InitialState::Fixed(control.z0),
            control,
            gamma: 0.1,
            trials,
            horizon,
            master_seed,
            tolerance: 1e-2,
            mnc: None,
            workers: None,
            constants: Vec::new(),
        }
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(ExperimentError::Config("horizon must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(ExperimentError::Config(format!("tolerance = {} must be positive", self.tolerance)));
        }
        if let InitialState::Uniform { lo, hi } = self.z0 {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(ExperimentError::Config(format!("initial range [{lo}, {hi}) is empty")));
            }
        }
        self.control.check()?;
        Ok(())
    }

    /// Hitting-time bound of the directed walk, when it was derived.
    pub fn tau_bound(&self) -> Option<u64> {
        match &self.control.regime {
            Regime::DwcThenMnc { dwc } => dwc.derivation.as_ref().map(|d| d.step_bound.floor() as u64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeVerdict {
    Pass,
    /// First index `m >= tau` with `|z_m - K| > eta exp(-varsigma (m - tau))`.
    Fail {
        index: u64,
    },
    /// The trajectory never entered `I_delta`.
    NotApplicable,
}

impl std::fmt::Display for EnvelopeVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnvelopeVerdict::Pass => write!(f, "pass"),
            EnvelopeVerdict::Fail { .. } => write!(f, "fail"),
            EnvelopeVerdict::NotApplicable => write!(f, "n/a"),
        }
    }
}

/// Checks `|z_m - K| <= eta exp(-varsigma (m - tau))` for every recorded `m >= tau`,
/// comparing logarithms so that tiny envelopes stay exact.
pub fn envelope_audit_with(traj: &Trajectory, eta: Magnitude, varsigma: f64) -> EnvelopeVerdict {
    let Some(tau) = traj.tau else {
        return EnvelopeVerdict::NotApplicable;
    };
    for m in tau as usize..traj.states.len() {
        let x = traj.abs_err(m);
        let bound = eta.ln() - varsigma * (m as u64 - tau) as f64;
        if x != 0.0 && x.ln() > bound {
            return EnvelopeVerdict::Fail { index: m as u64 };
        }
    }
    EnvelopeVerdict::Pass
}

pub fn envelope_audit(traj: &Trajectory, mnc: &MncParams) -> EnvelopeVerdict {
    envelope_audit_with(traj, mnc.eta, mnc.varsigma)
}

/// Longest stay outside `I_delta` after `tau`; a stay still open at the horizon
/// counts with its length so far.
pub fn longest_excursion(traj: &Trajectory, delta: Magnitude) -> Option<u64> {
    let tau = traj.tau? as usize;
    let mut longest = 0;
    let mut run = 0;
    for m in tau..traj.states.len() {
        if delta.exceeds_abs(traj.states[m] - traj.k) {
            run = 0;
        } else {
            run += 1;
            longest = longest.max(run);
        }
    }
    Some(longest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialVerdict {
    pub trial: u64,
    pub z0: f64,
    pub success: bool,
    pub final_abs_err: f64,
    pub tau: Option<u64>,
    pub envelope: EnvelopeVerdict,
    /// Longest excursion out of `I_delta` after `tau`.
    pub longest_excursion: Option<u64>,
    pub escapes: u64,
    /// Sum and count of `ln|Theta|` over the noise-controlled steps.
    pub log_theta_sum: f64,
    pub log_theta_count: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauStats {
    pub reached: u64,
    pub min: u64,
    pub median: f64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub trials: u64,
    pub successes: u64,
    pub failures: u64,
    pub errors: u64,
    pub success_fraction: f64,
    /// Three binomial standard errors.
    pub ci_half_width: f64,
    pub tau: Option<TauStats>,
    pub tau_bound: Option<u64>,
    pub tau_violations: u64,
    pub envelope_audited: u64,
    pub envelope_passed: u64,
    pub envelope_fraction: Option<f64>,
    /// Envelope-passing trials whose excursions out of `I_delta` outlast `n_return`.
    pub return_violations: u64,
    pub escapes: u64,
    pub lambda_empirical: Option<f64>,
    pub gamma: f64,
    pub constants: Vec<(String, String)>,
    pub verdicts: Vec<TrialVerdict>,
}

fn run_trial(cfg: &ExperimentConfig, trial: u64) -> TrialVerdict {
    let z0 = cfg.z0.for_trial(cfg.master_seed, trial);
    let control = ControlConfig { z0, ..cfg.control.clone() };
    match run_trajectory(&control, cfg.master_seed, trial, cfg.horizon) {
        Ok(t) => verdict(cfg, &control, trial, &t),
        Err(e) => TrialVerdict {
            trial,
            z0,
            success: false,
            final_abs_err: f64::NAN,
            tau: None,
            envelope: EnvelopeVerdict::NotApplicable,
            longest_excursion: None,
            escapes: 0,
            log_theta_sum: 0.0,
            log_theta_count: 0,
            error: Some(e.to_string()),
        },
    }
}

fn verdict(cfg: &ExperimentConfig, control: &ControlConfig, trial: u64, t: &Trajectory) -> TrialVerdict {
    let final_abs_err = (t.last() - t.k).abs();
    let envelope = match &cfg.mnc {
        Some(p) => envelope_audit(t, p),
        None => EnvelopeVerdict::NotApplicable,
    };
    let one_q = 1.0 + control.map.q();
    let s = control.map.orientation().sign() * control.sigma;
    let (mut log_theta_sum, mut log_theta_count) = (0.0, 0);
    for (d, p) in t.draws.iter().zip(&t.phases) {
        if let (Some(xi), true) = (d.xi, p.uses_xi()) {
            let theta = one_q + s * xi;
            if theta != 0.0 {
                log_theta_sum += theta.abs().ln();
                log_theta_count += 1;
            }
        }
    }
    TrialVerdict {
        trial,
        z0: control.z0,
        success: final_abs_err < cfg.tolerance,
        final_abs_err,
        tau: t.tau,
        envelope,
        longest_excursion: longest_excursion(t, control.delta),
        escapes: t.escapes,
        log_theta_sum,
        log_theta_count,
        error: None,
    }
}

fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Runs every trial and reduces the verdicts in trial order, so the report does
/// not depend on the number of workers.
pub fn convergence_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.check()?;
    let run = || (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, i)).collect::<Vec<_>>();
    let verdicts = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| ExperimentError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    };
    Ok(summarize(cfg, verdicts))
}

fn summarize(cfg: &ExperimentConfig, verdicts: Vec<TrialVerdict>) -> ExperimentReport {
    let trials = verdicts.len() as u64;
    let errors = verdicts.iter().filter(|v| v.error.is_some()).count() as u64;
    let successes = verdicts.iter().filter(|v| v.success).count() as u64;
    let p = successes as f64 / trials as f64;

    let mut taus: Vec<u64> = verdicts.iter().filter_map(|v| v.tau).collect();
    taus.sort_unstable();
    let tau = (!taus.is_empty()).then(|| TauStats {
        reached: taus.len() as u64,
        min: taus[0],
        median: median(&taus),
        max: *taus.last().unwrap(),
    });
    let tau_bound = cfg.tau_bound();
    let tau_violations = match tau_bound {
        Some(b) => verdicts.iter().filter(|v| v.tau.is_none_or(|t| t > b)).count() as u64,
        None => 0,
    };

    let audited = verdicts.iter().filter(|v| v.envelope != EnvelopeVerdict::NotApplicable).count() as u64;
    let passed = verdicts.iter().filter(|v| v.envelope == EnvelopeVerdict::Pass).count() as u64;
    let return_violations = match &cfg.mnc {
        Some(m) => verdicts
            .iter()
            .filter(|v| v.envelope == EnvelopeVerdict::Pass)
            .filter(|v| v.longest_excursion.is_some_and(|l| l > m.nbar_return))
            .count() as u64,
        None => 0,
    };

    let (sum, count) = verdicts.iter().fold((0.0, 0u64), |(s, c), v| (s + v.log_theta_sum, c + v.log_theta_count));

    ExperimentReport {
        trials,
        successes,
        failures: trials - successes - errors,
        errors,
        success_fraction: p,
        ci_half_width: 3.0 * (p * (1.0 - p) / trials as f64).sqrt(),
        tau,
        tau_bound,
        tau_violations,
        envelope_audited: audited,
        envelope_passed: passed,
        envelope_fraction: (audited > 0).then(|| passed as f64 / audited as f64),
        return_violations,
        escapes: verdicts.iter().map(|v| v.escapes).sum(),
        lambda_empirical: (count > 0).then(|| -sum / count as f64),
        gamma: cfg.gamma,
        constants: cfg.constants.clone(),
        verdicts,
    }
}

impl ExperimentReport {
    /// Fraction of envelope passes among trials that reached `I_delta`, compared
    /// with `1 - gamma` at a three-sigma binomial margin.
    pub fn envelope_meets_confidence(&self) -> Option<bool> {
        let f = self.envelope_fraction?;
        let target = 1.0 - self.gamma;
        let margin = 3.0 * (target * self.gamma / self.envelope_audited as f64).sqrt();
        Some(f >= target - margin)
    }

    /// Summary and derived constants as `#` comment lines, then one row per trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let opt_u = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(MONTECARLO_SCHEMA);
        out.push('\n');
        for (k, v) in &self.constants {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "# trials = {}", self.trials);
        let _ = writeln!(out, "# successes = {}", self.successes);
        let _ = writeln!(out, "# errors = {}", self.errors);
        let _ = writeln!(out, "# success_fraction = {:.16e}", self.success_fraction);
        let _ = writeln!(out, "# ci_half_width_3sigma = {:.16e}", self.ci_half_width);
        if let Some(t) = &self.tau {
            let _ = writeln!(out, "# tau_reached = {}", t.reached);
            let _ = writeln!(out, "# tau_min = {}", t.min);
            let _ = writeln!(out, "# tau_median = {:.16e}", t.median);
            let _ = writeln!(out, "# tau_max = {}", t.max);
        }
        if let Some(b) = self.tau_bound {
            let _ = writeln!(out, "# tau_bound = {b}");
            let _ = writeln!(out, "# tau_violations = {}", self.tau_violations);
        }
        let _ = writeln!(out, "# envelope_audited = {}", self.envelope_audited);
        let _ = writeln!(out, "# envelope_passed = {}", self.envelope_passed);
        let _ = writeln!(out, "# envelope_fraction = {}", opt(self.envelope_fraction));
        let _ = writeln!(out, "# return_violations = {}", self.return_violations);
        let _ = writeln!(out, "# escapes = {}", self.escapes);
        let _ = writeln!(out, "# lambda_empirical = {}", opt(self.lambda_empirical));
        out.push_str("trial,z0,success,final_abs_err,tau,envelope,first_violation,longest_excursion,escapes,error\n");
        for v in &self.verdicts {
            let first = match v.envelope {
                EnvelopeVerdict::Fail { index } => index.to_string(),
                _ => String::new(),
            };
            let _ = writeln!(
                out,
                "{},{:.16e},{},{:.16e},{},{},{},{},{},{}",
                v.trial,
                v.z0,
                v.success,
                v.final_abs_err,
                opt_u(v.tau),
                v.envelope,
                first,
                opt_u(v.longest_excursion),
                v.escapes,
                v.error.as_deref().unwrap_or("").replace(',', ";"),
            );
        }
        out
    }
}

/// Phases visited by a trajectory, in order of first appearance.
pub fn phase_sequence(traj: &Trajectory) -> Vec<Phase> {
    let mut seen: Vec<Phase> = Vec::new();
    for &p in &traj.phases {
        if seen.last() != Some(&p) {
            seen.push(p);
        }
    }
    seen
}
