//! Invariant checks run by `stochstab verify` on a resolved configuration.

use crate::control::{dwc_step, mnc_step, run_trajectory, run_with_draws, ControlConfig, Phase, Regime, StepDraws};
use crate::params::DwcParams;

use super::config::Resolved;

/// Grid points per ladder annulus in the contraction check.
const CONTRACTION_POINTS: usize = 200;
/// Starts spread over `I_beta` in the basin and forced-run checks.
const BASIN_POINTS: usize = 201;
/// Forced runs longer than this are not attempted.
const FORCED_RUN_LIMIT: u64 = 1_000_000;
const DETERMINISM_HORIZON: u64 = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> VerifyCheck {
    VerifyCheck { name: name.into(), passed, detail: detail.into() }
}

pub fn run(resolved: &Resolved, seed: u64) -> Vec<VerifyCheck> {
    let c = &resolved.control;
    let mut out: Vec<VerifyCheck> =
        c.map.validate(2000).checks.into_iter().map(|k| check(format!("map:{}", k.name), k.passed, k.detail)).collect();
    for r in resolved.relations() {
        out.push(check(format!("relation:{}", r.name), r.holds, r.statement));
    }
    if let Some(dwc) = c.regime.dwc() {
        if dwc.derivation.is_some() {
            out.push(contraction(c, dwc));
        }
    }
    if let Regime::Combined { beta, .. } = &c.regime {
        out.push(basin(c, *beta));
        if let Some(p) = &resolved.combined {
            if p.beta != *beta {
                eprintln!("forced run skipped: beta = {beta} was set by hand");
            } else if p.bar_s > FORCED_RUN_LIMIT {
                eprintln!("forced run skipped: bound of {} steps is above {FORCED_RUN_LIMIT}", p.bar_s);
            } else {
                out.push(forced_run(c, *beta, p.bar_s));
            }
        }
    }
    out.push(determinism(c, seed));
    out
}

/// Every annulus point, under adversarial walk draws, moves at least a factor
/// `1 - mu` closer to `K`.
fn contraction(c: &ControlConfig, dwc: &DwcParams) -> VerifyCheck {
    let mu = dwc.derivation.as_ref().expect("derived walk").mu;
    let l = &dwc.ladder;
    let (mut tried, mut bad, mut first) = (0u64, 0u64, None);
    for j in 0..=l.k_target {
        let outer = l.radius(j);
        let inner = if j == l.k_target { l.target } else { l.radius(j + 1) };
        for i in 0..CONTRACTION_POINTS {
            let r = inner + (outer - inner) * i as f64 / CONTRACTION_POINTS as f64;
            for x in [r, -r] {
                if l.index(x) != Some(j) {
                    continue;
                }
                for zeta in [-1.0, 0.0, 1.0] {
                    for chi in [-1.0, 0.0, 1.0] {
                        tried += 1;
                        let ok = dwc_step(&c.map, c.map.k() + x, j, zeta, chi, dwc)
                            .map(|z1| (z1 - c.map.k()).abs() <= (1.0 - mu) * x.abs() * (1.0 + 1e-12))
                            .unwrap_or(false);
                        if !ok {
                            bad += 1;
                            first.get_or_insert(x);
                        }
                    }
                }
            }
        }
    }
    let detail = match first {
        Some(x) => format!("{bad} of {tried} steps fail to contract by 1 - mu = {}; first at x = {x:e}", 1.0 - mu),
        None => format!("{tried} steps contract by 1 - mu = {}", 1.0 - mu),
    };
    check("dwc:contraction", bad == 0, detail)
}

/// One noise-controlled step from `I_beta` stays inside `I_u` for either extreme draw.
fn basin(c: &ControlConfig, beta: f64) -> VerifyCheck {
    let mut worst: f64 = 0.0;
    for i in 0..BASIN_POINTS {
        let x = beta * (2.0 * (i as f64 + 0.5) / BASIN_POINTS as f64 - 1.0);
        for xi in [-1.0, 1.0] {
            let r = mnc_step(&c.map, c.map.k() + x, xi, c.sigma)
                .map(|z1| (z1 - c.map.k()).abs() / c.map.u())
                .unwrap_or(f64::INFINITY);
            worst = worst.max(r);
        }
    }
    check("combined:basin", worst < 1.0, format!("largest |z1 - K| / u from I_beta is {worst:.6}"))
}

/// With every draw pinned at the contracting extreme, runs from `I_beta` reach
/// `I_delta` without leaving the noise-controlled phase. `bar_s` is a floor, so
/// the check allows one step more.
fn forced_run(c: &ControlConfig, beta: f64, bar_s: u64) -> VerifyCheck {
    let xi = -c.map.orientation().sign();
    let mut worst = 0;
    let mut problems = Vec::new();
    for i in 0..BASIN_POINTS {
        let x = beta * (2.0 * (i as f64 + 0.5) / BASIN_POINTS as f64 - 1.0);
        let cfg = ControlConfig { z0: c.map.k() + x, ..c.clone() };
        match run_with_draws(&cfg, bar_s + 1, None, |_| StepDraws { xi, ..Default::default() }) {
            Ok(t) => {
                let end = t.tau.unwrap_or(t.phases.len() as u64) as usize;
                if t.phases[..end].iter().any(|&p| p != Phase::Mnc) {
                    problems.push(format!("x = {x:e} left the noise phase"));
                }
                match t.tau {
                    Some(tau) => worst = worst.max(tau),
                    None => problems.push(format!("x = {x:e} missed I_delta")),
                }
            }
            Err(e) => problems.push(format!("x = {x:e}: {e}")),
        }
    }
    let detail = match problems.first() {
        Some(p) => format!("{} of {BASIN_POINTS} starts fail; {p}", problems.len()),
        None => format!("worst hitting time {worst}, bar_s = {bar_s}"),
    };
    check("combined:forced_run", problems.is_empty(), detail)
}

/// The same seed gives the same trajectory, and recorded draws replay it.
fn determinism(c: &ControlConfig, seed: u64) -> VerifyCheck {
    let run = || run_trajectory(c, seed, 0, DETERMINISM_HORIZON);
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let same = a.to_csv() == b.to_csv();
            let replayed = a.replay(c).map(|r| r.states == a.states).unwrap_or(false);
            check("determinism", same && replayed, format!("repeat identical: {same}; replay identical: {replayed}"))
        }
        (Err(e), _) | (_, Err(e)) => check("determinism", false, e.to_string()),
    }
}
