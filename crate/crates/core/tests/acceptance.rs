//! Acceptance criteria, one printed verdict line each.

mod common;

use std::time::Instant;

use common::report;
use stochstab::control::{ControlConfig, Regime};
use stochstab::experiments::{
    convergence_experiment, stability_sweep, EnvelopeVerdict, ExperimentConfig, InitialState,
};
use stochstab::maps::MapSpec;
use stochstab::noise::{bernoulli_sigma_window, NoiseSpec};
use stochstab::params::{
    derive_combined, derive_dwc, derive_mnc, nbar_chebyshev, nbar_normal, DwcChoices, DwcParams, Magnitude, MncChoices,
};

#[test]
fn criterion_1_uniform_lambda_table() {
    let start = Instant::now();
    let table = [
        (0.1, 0.4, -0.0723),
        (0.1, 0.6, -0.0405),
        (0.1, 0.8, 0.012),
        (0.1, 0.9, 0.051),
        (0.3, 0.8, -0.19),
        (0.3, 1.2, -0.05),
        (0.3, 1.3, 0.044),
        (0.3, 1.4, 0.1245),
        (0.3, 1.22, -0.037),
        (0.3, 1.24, -0.023),
    ];
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (q, sigma, expected) in table {
        let lambda = NoiseSpec::Uniform.lambda(q, sigma).unwrap();
        let err = (lambda - expected).abs();
        worst = worst.max(err);
        if err > 0.002 {
            misses.push(format!("(q={q}, sigma={sigma}) gave {lambda:.5}, expected {expected}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = misses.is_empty() && elapsed < 1.0;
    report(
        1,
        pass,
        &format!("10 uniform lambdas, worst error {worst:.5} (tolerance 0.002), {elapsed:.3} s {misses:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_bernoulli_lambda_and_window() {
    let lambda = NoiseSpec::Bernoulli.lambda(1.0, 2.1).unwrap();
    let lambda_ok = (lambda - 0.4457).abs() <= 1e-4;
    let sigmas: Vec<f64> = (0..100).map(|i| 0.03 * (i as f64 + 0.5)).collect();
    let mut mismatches = 0;
    for q in [0.0, 0.3, 1.0] {
        let (lo, hi) = bernoulli_sigma_window(q);
        let cells = stability_sweep(&NoiseSpec::Bernoulli, &[q], &sigmas).unwrap();
        for c in cells {
            let analytic =
                c.sigma * c.sigma > (1.0 + q) * (1.0 + q) - 1.0 && c.sigma * c.sigma < (1.0 + q) * (1.0 + q) + 1.0;
            assert_eq!(analytic, c.sigma > lo && c.sigma < hi);
            if c.stabilizable != Some(analytic) {
                mismatches += 1;
            }
        }
    }
    let pass = lambda_ok && mismatches == 0;
    report(2, pass, &format!("lambda(q=1, sigma=2.1) = {lambda:.6}; window mismatches {mismatches} of 300 cells"));
    assert!(pass);
}

#[test]
fn criterion_3_nbar_rules() {
    let (_, theta2) = NoiseSpec::Bernoulli.log_theta_moments(1.0, 2.1).unwrap();
    let cheb = nbar_chebyshev(theta2, 0.1678, 0.9);
    let norm = nbar_normal(theta2, 0.1678, 0.9);
    let pass = cheb.abs_diff(272) <= 2 && (66..=78).contains(&norm);
    report(3, pass, &format!("Chebyshev N = {cheb} (272 +/- 2), normal N = {norm} (in [66, 78])"));
    assert!(pass);
}

#[test]
fn criterion_4_beta_reproduction() {
    let map = MapSpec::logistic(4.0).unwrap().with_u(0.05).unwrap();
    let p = derive_combined(&map, &NoiseSpec::Bernoulli, 2.1, 0.5, Magnitude::new(1e-6)).unwrap();
    let binding = p.beta1.min(p.beta2);
    let pass = (binding - 0.00617).abs() <= 1e-5;
    report(
        4,
        pass,
        &format!("binding beta bound {binding:.6} (0.00617 +/- 0.00001), beta1 {:.6}, beta2 {:.6}", p.beta1, p.beta2),
    );
    assert!(pass);
}

#[test]
fn criterion_5_dwc_hard_bound() {
    let start = Instant::now();
    let map = common::band_maps(stochstab::maps::LocalBounds::new(1.2, 0.6).unwrap(), 0.1).pop().unwrap();
    let choices = DwcChoices { a: Some(1.25), mu: Some(0.05), ..Default::default() };
    let dwc = derive_dwc(map.local_bounds().unwrap(), 0.1, 0.001, &choices).unwrap();
    let bound = dwc.derivation.as_ref().unwrap().step_bound.floor() as u64;
    let control = ControlConfig {
        map,
        noise: NoiseSpec::Bernoulli,
        walk_noise: NoiseSpec::Uniform,
        sigma: 0.0,
        delta: Magnitude::new(0.001),
        z0: 1.0,
        regime: Regime::DwcThenMnc { dwc },
    };
    let mut cfg = ExperimentConfig::new(control, 1000, 200, 20_240_501);
    cfg.z0 = InitialState::Uniform { lo: 0.9 + 1e-12, hi: 1.1 - 1e-12 };
    let r = convergence_experiment(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let tau = r.tau.clone().unwrap();
    let pass = bound == 89 && tau.reached == 1000 && r.tau_violations == 0 && elapsed < 5.0;
    report(
        5,
        pass,
        &format!(
            "{} of 1000 runs reached I_delta, tau max {} (bound {bound}), violations {}, {elapsed:.2} s",
            tau.reached, tau.max, r.tau_violations
        ),
    );
    assert!(pass);
}

fn mnc_campaign(r: f64, noise: NoiseSpec, sigma: f64) -> f64 {
    let control = ControlConfig {
        map: MapSpec::logistic(r).unwrap(),
        noise,
        walk_noise: NoiseSpec::Uniform,
        sigma,
        delta: Magnitude::new(1e-300),
        z0: 0.4,
        regime: Regime::MncOnly,
    };
    convergence_experiment(&ExperimentConfig::new(control, 100, 500, 6)).unwrap().success_fraction
}

fn combined_campaign(map: MapSpec, coeff: f64) -> f64 {
    let dwc = DwcParams::manual(1.25, coeff, 0.1, 1.5e-4, 0.125, 0.015).unwrap();
    let control = ControlConfig {
        map: map.with_u(0.125).unwrap(),
        noise: NoiseSpec::Bernoulli,
        walk_noise: NoiseSpec::Uniform,
        sigma: 2.1,
        delta: Magnitude::new(1e-6),
        z0: 0.4,
        regime: Regime::Combined { dwc, beta: 0.015 },
    };
    convergence_experiment(&ExperimentConfig::new(control, 100, 500, 6)).unwrap().success_fraction
}

#[test]
fn criterion_6_monte_carlo_stabilization() {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, f: f64, ok: bool, want: &str, secs: f64| {
        pass &= ok && secs < 30.0;
        parts.push(format!("{name} {:.0}% ({want}, {secs:.1} s)", 100.0 * f));
    };
    let timed = |f: &dyn Fn() -> f64| {
        let s = Instant::now();
        let v = f();
        (v, s.elapsed().as_secs_f64())
    };
    let (f, t) = timed(&|| mnc_campaign(3.1, NoiseSpec::Uniform, 0.9));
    check("logistic 3.1 uniform 0.9", f, f >= 0.8, ">= 80%", t);
    let (f, t) = timed(&|| mnc_campaign(3.1, NoiseSpec::Uniform, 0.4));
    check("logistic 3.1 uniform 0.4", f, f <= 0.2, "<= 20%", t);
    let (f, t) = timed(&|| mnc_campaign(3.3, NoiseSpec::Bernoulli, 0.85));
    check("logistic 3.3 bernoulli 0.85", f, f >= 0.8, ">= 80%", t);
    let (f, t) = timed(&|| mnc_campaign(3.3, NoiseSpec::Bernoulli, 0.6));
    check("logistic 3.3 bernoulli 0.6", f, f <= 0.2, "<= 20%", t);
    let (f, t) = timed(&|| combined_campaign(MapSpec::logistic(4.0).unwrap(), 2.2));
    check("combined logistic 4", f, f >= 0.7, ">= 70%", t);
    let (f, t) = timed(&|| combined_campaign(MapSpec::ricker(3.0).unwrap(), 3.0));
    check("combined ricker 3", f, f >= 0.7, ">= 70%", t);
    report(6, pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_7_property_suites() {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut suite = |name: &str, ok: bool, detail: String, start: Instant| {
        let secs = start.elapsed().as_secs_f64();
        pass &= ok && secs < 60.0;
        parts.push(format!("{name}: {} ({detail}, {secs:.1} s)", if ok { "ok" } else { "failed" }));
    };

    let s = Instant::now();
    let maps = [
        MapSpec::logistic(3.3).unwrap(),
        MapSpec::logistic(4.0).unwrap(),
        MapSpec::ricker(2.3).unwrap(),
        MapSpec::ricker(3.0).unwrap(),
        MapSpec::kappa_half(),
    ];
    let bad: usize = maps.iter().map(|m| common::expansion_violations(m, 10_000).len()).sum();
    suite("map expansion grid", bad == 0, format!("{bad} violations"), s);

    let s = Instant::now();
    let mut rng = stochstab::noise::RngStream::new(7, 0);
    let mut bad = Vec::new();
    for _ in 0..1000 {
        let t: [f64; 8] = std::array::from_fn(|_| rng.next_unit());
        bad.extend(common::fuzz_case(t));
    }
    suite("parameter fuzzing", bad.is_empty(), format!("1000 cases, {} violations {:?}", bad.len(), bad.first()), s);

    let s = Instant::now();
    let bounds = stochstab::maps::LocalBounds::new(1.2, 0.6).unwrap();
    let choices = DwcChoices { a: Some(1.25), mu: Some(0.05), ..Default::default() };
    let dwc = derive_dwc(bounds, 0.1, 0.001, &choices).unwrap();
    let bad: usize =
        common::band_maps(bounds, 0.1).iter().map(|m| common::dwc_contraction_violations(m, &dwc, 1000)).sum();
    suite("adversarial DWC contraction", bad == 0, format!("{bad} violations"), s);

    let s = Instant::now();
    let mut worst = Vec::new();
    let mut ok = true;
    for (map, sigma, iota) in [
        (MapSpec::logistic(4.0).unwrap().with_u(0.05).unwrap(), 2.1, 0.5),
        (MapSpec::logistic(3.5).unwrap(), 1.4, 0.3),
        (MapSpec::ricker(3.0).unwrap(), 2.1, 0.4),
    ] {
        for xi in [1.0, 1.0 - 0.5 * iota, 1.0 - 0.999 * iota] {
            let f = common::forced_run(&map, &NoiseSpec::Bernoulli, sigma, iota, 1e-8, xi, 200);
            ok &= f.missed == 0 && f.worst_tau.is_some_and(|t| t <= f.bar_s);
            worst.push(format!("{}/{}", f.worst_tau.unwrap_or(0), f.bar_s));
        }
    }
    suite("forced run", ok, format!("worst tau/s {}", worst.join(" ")), s);

    let s = Instant::now();
    let ratios: Vec<f64> = (0..3).map(|i| common::lln_ratio(100 + 2 * i, 10_000, 400)).collect();
    let lln_ok = ratios.iter().all(|r| (1.6..=2.5).contains(r));
    let rl = [(NoiseSpec::Bernoulli, 0.5, 3), (NoiseSpec::Bernoulli, 0.5, 1), (NoiseSpec::Uniform, 0.5, 2)]
        .map(|(n, iota, len)| stochstab::experiments::run_length_experiment(&n, iota, len, 4000, 3).unwrap());
    let rl_ok = rl.iter().all(|r| r.censored() == 0 && (r.mean() - r.oracle).abs() <= 4.0 * r.std_error());
    let means: Vec<String> = rl.iter().map(|r| format!("{:.2}/{}", r.mean(), r.oracle)).collect();
    suite(
        "LLN and run length",
        lln_ok && rl_ok,
        format!("MAD ratios {ratios:.2?}, run-length means/oracle {}", means.join(" ")),
        s,
    );

    let s = Instant::now();
    let same = common::report_with_workers(1, 99) == common::report_with_workers(4, 99);
    suite("determinism 1 vs 4 workers", same, "byte comparison".into(), s);

    report(7, pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_8_kappa_half_envelope() {
    let map = MapSpec::kappa_half();
    let gamma = 0.3;
    let p = derive_mnc(&map, &NoiseSpec::Bernoulli, 1.8, gamma, &MncChoices::default()).unwrap();
    let control = ControlConfig {
        map,
        noise: NoiseSpec::Bernoulli,
        walk_noise: NoiseSpec::Uniform,
        sigma: 1.8,
        delta: p.delta,
        z0: 1.0 + 1e-8,
        regime: Regime::MncOnly,
    };
    let mut cfg = ExperimentConfig::new(control, 100, 1000, 8);
    cfg.gamma = gamma;
    cfg.mnc = Some(p.clone());
    let r = convergence_experiment(&cfg).unwrap();
    let passed = r.verdicts.iter().filter(|v| v.envelope == EnvelopeVerdict::Pass).count();
    let not_applicable = r.verdicts.iter().filter(|v| v.envelope == EnvelopeVerdict::NotApplicable).count();
    let pass = passed >= 70;
    report(
        8,
        pass,
        &format!(
            "{passed} of 100 runs satisfy the envelope (>= 70 required), {not_applicable} never entered I_delta; \
             eta = {}, varsigma = {:.4}, delta = {}",
            p.eta, p.varsigma, p.delta
        ),
    );
    assert!(pass);
}
