//! Checks shared by the acceptance run and the property suites.

#![allow(dead_code)]

use std::io::Write;

use stochstab::control::{dwc_step, mnc_step, run_with_draws, ControlConfig, Phase, Regime, StepDraws};
use stochstab::experiments::{convergence_experiment, lln_experiment, ExperimentConfig};
use stochstab::maps::{LocalBounds, MapSpec, Orientation};
use stochstab::noise::NoiseSpec;
use stochstab::params::{
    derive_combined, derive_dwc, derive_mnc, DwcChoices, DwcParams, Magnitude, MncChoices, ParamError,
};

/// Writes straight to stdout so the line shows up even when output is captured.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "acceptance criterion {criterion}: {verdict}: {detail}");
    let _ = out.flush();
}

/// Points of `I_{u,K}` where `|f(K + x) - K + s (1 + q) x| > C |x|^(1 + kappa)`.
pub fn expansion_violations(map: &MapSpec, points: usize) -> Vec<f64> {
    let u = map.u();
    let sign = map.orientation().sign();
    (0..points)
        .map(|i| -u + 2.0 * u * (i as f64 + 0.5) / points as f64)
        .filter(|&x| {
            let phi = map.eval(map.k() + x).unwrap() - map.k() - sign * (1.0 + map.q()) * x;
            let bound = map.c() * x.abs().powf(1.0 + map.kappa());
            phi.abs() > bound * (1.0 + 1e-9) + 1e-15
        })
        .collect()
}

/// Linear maps `K + m (z - K)` with `|m|` spanning the slope band of `bounds`,
/// plus a broken line whose slope switches inside the band.
pub fn band_maps(bounds: LocalBounds, u: f64) -> Vec<MapSpec> {
    let LocalBounds { underline_l: l, bar_q } = bounds;
    let mut maps = Vec::new();
    for m in [l, (l + 1.0 + bar_q) / 2.0, 1.0 + bar_q] {
        for s in [-1.0, 1.0] {
            let src = format!("1 + ({})*(z - 1)", s * m);
            let o = if s > 0.0 { Orientation::Preserve } else { Orientation::Flip };
            maps.push(
                MapSpec::custom(&src, 1.0, (m - 1.0).max(0.0), 1.0, 1.0, u)
                    .unwrap()
                    .with_orientation(o)
                    .with_bounds(bounds),
            );
        }
    }
    let mid = (l + 1.0 + bar_q) / 2.0;
    let half = (1.0 + bar_q - l) / 2.0;
    let src = format!("1 + {mid}*(z - 1) - {half}*abs(z - 1)");
    maps.push(MapSpec::custom(&src, 1.0, 0.5, 1.0, 1.0, u).unwrap().with_bounds(bounds));
    maps
}

/// Grid points `z` in each ladder annulus and adversarial draws
/// `zeta, chi in {-1, 0, 1}` where `|dwc_step(z) - K| > (1 - mu) |z - K|`.
pub fn dwc_contraction_violations(map: &MapSpec, dwc: &DwcParams, per_interval: usize) -> usize {
    let mu = dwc.derivation.as_ref().expect("derived walk").mu;
    let l = &dwc.ladder;
    let mut bad = 0;
    for j in 0..=l.k_target {
        let outer = l.radius(j);
        let inner = if j == l.k_target { l.target } else { l.radius(j + 1) };
        for i in 0..per_interval {
            let r = inner + (outer - inner) * i as f64 / per_interval as f64;
            for x in [r, -r] {
                if l.index(x) != Some(j) {
                    continue;
                }
                for zeta in [-1.0, 0.0, 1.0] {
                    for chi in [-1.0, 0.0, 1.0] {
                        let z1 = dwc_step(map, map.k() + x, j, zeta, chi, dwc).unwrap();
                        if (z1 - map.k()).abs() > (1.0 - mu) * x.abs() * (1.0 + 1e-12) {
                            bad += 1;
                        }
                    }
                }
            }
        }
    }
    bad
}

/// Longest hitting time of `I_delta` from a grid of starts in `I_beta` when every
/// draw is forced to `xi`, against the forced-run bound `s`. Runs last `s + 1` steps.
pub struct ForcedRun {
    pub worst_tau: Option<u64>,
    pub bar_s: u64,
    pub starts: usize,
    pub missed: usize,
}

pub fn forced_run(
    map: &MapSpec,
    noise: &NoiseSpec,
    sigma: f64,
    iota: f64,
    delta: f64,
    xi: f64,
    starts: usize,
) -> ForcedRun {
    let p = derive_combined(map, noise, sigma, iota, Magnitude::new(delta)).unwrap();
    let dwc = DwcParams::manual(1.25, 1.0, 0.0, 0.0, map.u(), p.beta).unwrap();
    let base = ControlConfig {
        map: map.clone(),
        noise: noise.clone(),
        walk_noise: NoiseSpec::Uniform,
        sigma,
        delta: Magnitude::new(delta),
        z0: map.k(),
        regime: Regime::Combined { dwc, beta: p.beta },
    };
    // draws act on the map through its effective noise
    let xi = -map.orientation().sign() * xi;
    let mut worst: Option<u64> = None;
    let mut missed = 0;
    for i in 0..starts {
        let x = p.beta * (2.0 * (i as f64 + 0.5) / starts as f64 - 1.0);
        let cfg = ControlConfig { z0: map.k() + x, ..base.clone() };
        // one step past the bound so an off-by-one shows up as a hitting time, not a miss
        let t = run_with_draws(&cfg, p.bar_s + 1, None, |_| StepDraws { xi, ..Default::default() }).unwrap();
        assert!(t.phases[..t.tau.unwrap_or(t.phases.len() as u64) as usize].iter().all(|&ph| ph == Phase::Mnc));
        match t.tau {
            Some(tau) => worst = Some(worst.map_or(tau, |w| w.max(tau))),
            None => missed += 1,
        }
    }
    ForcedRun { worst_tau: worst, bar_s: p.bar_s, starts, missed }
}

/// One fuzz case: derive every stage from the given draws in `[0, 1)` and
/// return a description of each violated relation or unexpected outcome.
pub fn fuzz_case(t: [f64; 8]) -> Vec<String> {
    let mut bad = Vec::new();

    // multiplicative-noise stage on a logistic map inside its Bernoulli window
    let r = 3.05 + 0.95 * t[0];
    let map = MapSpec::logistic(r).unwrap();
    let q = r - 3.0;
    let (lo, hi) = stochstab::noise::bernoulli_sigma_window(q);
    let sigma = lo + (hi - lo) * (0.1 + 0.8 * t[1]);
    let gamma = 0.05 + 0.9 * t[2];
    match derive_mnc(&map, &NoiseSpec::Bernoulli, sigma, gamma, &MncChoices::default()) {
        Ok(p) => {
            for rel in p.relations().iter().filter(|r| !r.holds) {
                bad.push(format!("mnc r={r} sigma={sigma}: {}", rel.statement));
            }
            if !(p.epsilon < p.lambda - p.varsigma && p.epsilon < p.varsigma / 2.0) {
                bad.push(format!("mnc r={r} sigma={sigma}: default epsilon outside its window"));
            }
        }
        Err(e) => bad.push(format!("mnc r={r} sigma={sigma} gamma={gamma}: {e}")),
    }

    // directed walk from random admissible slope bounds
    let bar_q = 0.05 + 1.5 * t[3];
    let l = bar_q + (1.0 - 1e-6) * t[4].max(1e-3);
    let bounds = LocalBounds::new(l, bar_q).unwrap();
    let a = 1.0 + (l / bar_q - 1.0) * (0.05 + 0.9 * t[5]);
    let choices = DwcChoices { a: Some(a), ..Default::default() };
    match derive_dwc(bounds, 0.1, 1e-4, &choices) {
        Ok(p) => {
            for rel in p.relations().iter().filter(|r| !r.holds) {
                bad.push(format!("dwc L={l} q={bar_q} a={a}: {}", rel.statement));
            }
            let rho = p.derivation.as_ref().unwrap().rho;
            if !(rho > 0.0 && rho < 1.0) {
                bad.push(format!("dwc L={l} q={bar_q} a={a}: rho = {rho}"));
            }
        }
        Err(ParamError::Config(e)) if e.contains("rungs") => {}
        Err(e) => bad.push(format!("dwc L={l} q={bar_q} a={a}: {e}")),
    }
    let too_wide = DwcChoices { a: Some(l / bar_q * (1.0 + 1e-3)), ..Default::default() };
    if derive_dwc(bounds, 0.1, 1e-4, &too_wide).is_ok() {
        bad.push(format!("dwc L={l} q={bar_q}: a above underline_L/bar_q accepted"));
    }

    // combined stage
    let iota = (1.0 - q / sigma) * (0.05 + 0.9 * t[6]);
    let map = map.with_u(0.05).unwrap();
    let delta = Magnitude::from_ln(-8.0 - 30.0 * t[7]);
    match derive_combined(&map, &NoiseSpec::Bernoulli, sigma, iota, delta) {
        Ok(p) => {
            for rel in p.relations().iter().filter(|r| !r.holds) {
                bad.push(format!("combined r={r} sigma={sigma} iota={iota}: {}", rel.statement));
            }
        }
        Err(e) => bad.push(format!("combined r={r} sigma={sigma} iota={iota}: {e}")),
    }
    bad
}

/// Median absolute deviation of the log-multiplier mean at `n` over that at `4n`.
pub fn lln_ratio(seed: u64, n: u64, repeats: u64) -> f64 {
    let a = lln_experiment(&NoiseSpec::Bernoulli, 1.0, 2.1, n, repeats, seed).unwrap();
    let b = lln_experiment(&NoiseSpec::Bernoulli, 1.0, 2.1, 4 * n, repeats, seed.wrapping_add(1)).unwrap();
    a.median_abs_deviation() / b.median_abs_deviation()
}

/// Monte Carlo report as CSV with `workers` threads.
pub fn report_with_workers(workers: usize, seed: u64) -> String {
    let control = ControlConfig {
        map: MapSpec::logistic(4.0).unwrap().with_u(0.125).unwrap(),
        noise: NoiseSpec::Bernoulli,
        walk_noise: NoiseSpec::Uniform,
        sigma: 2.1,
        delta: Magnitude::new(1e-6),
        z0: 0.4,
        regime: Regime::Combined { dwc: DwcParams::manual(1.25, 2.2, 0.1, 1.5e-4, 0.125, 0.015).unwrap(), beta: 0.015 },
    };
    let mut cfg = ExperimentConfig::new(control, 48, 300, seed);
    cfg.workers = Some(workers);
    convergence_experiment(&cfg).unwrap().to_csv()
}

/// `mnc_step` from a grid of `I_beta` with both extreme draws; returns the
/// largest `|z' - K| / u`.
pub fn worst_basin_ratio(map: &MapSpec, sigma: f64, beta: f64, points: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let x = beta * (2.0 * (i as f64 + 0.5) / points as f64 - 1.0);
        for xi in [-1.0, 1.0] {
            let z1 = mnc_step(map, map.k() + x, xi, sigma).unwrap();
            worst = worst.max((z1 - map.k()).abs() / map.u());
        }
    }
    worst
}
