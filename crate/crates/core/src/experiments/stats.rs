//! Noise-only experiments: the law of large numbers for `ln|Theta|`, waiting
//! times for runs of large draws, and the stabilizability map over `(q, sigma)`.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::ExperimentError;
use crate::noise::{bernoulli_sigma_window, trial_stream, NoiseSpec, RngStream, Role};

pub const SWEEP_SCHEMA: &str = "# stochstab sweep v1";
pub const LLN_SCHEMA: &str = "# stochstab lln v1";
pub const RUN_LENGTH_SCHEMA: &str = "# stochstab runlength v1";

/// Draw budget of one run-length trial.
pub const RUN_LENGTH_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LlnReport {
    pub q: f64,
    pub sigma: f64,
    pub n: u64,
    pub lambda: f64,
    /// Standard deviation of `ln|Theta|`.
    pub theta: f64,
    /// `(1/n) sum ln|Theta_i|` per repeat.
    pub means: Vec<f64>,
    /// `|mean + lambda|` in units of `theta / sqrt(n)`.
    pub deviations: Vec<f64>,
}

impl LlnReport {
    pub fn fraction_within(&self, units: f64) -> f64 {
        let k = self.deviations.iter().filter(|&&d| d <= units).count();
        k as f64 / self.deviations.len() as f64
    }

    pub fn median_abs_deviation(&self) -> f64 {
        let mut d: Vec<f64> = self.means.iter().map(|m| (m + self.lambda).abs()).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2]
        } else {
            (d[n / 2 - 1] + d[n / 2]) / 2.0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{LLN_SCHEMA}\n");
        let _ = writeln!(out, "# q = {:.16e}", self.q);
        let _ = writeln!(out, "# sigma = {:.16e}", self.sigma);
        let _ = writeln!(out, "# n = {}", self.n);
        let _ = writeln!(out, "# lambda = {:.16e}", self.lambda);
        let _ = writeln!(out, "# theta = {:.16e}", self.theta);
        out.push_str("repeat,mean,deviation\n");
        for (i, (m, d)) in self.means.iter().zip(&self.deviations).enumerate() {
            let _ = writeln!(out, "{i},{m:.16e},{d:.16e}");
        }
        out
    }
}

/// Sample means of `ln|1 + q - sigma xi|` over `n` draws, one independent stream
/// per repeat.
pub fn lln_experiment(
    noise: &NoiseSpec,
    q: f64,
    sigma: f64,
    n: u64,
    repeats: u64,
    seed: u64,
) -> Result<LlnReport, ExperimentError> {
    if n < 1000 {
        return Err(ExperimentError::Config(format!("n = {n} must be at least 1000")));
    }
    if repeats == 0 {
        return Err(ExperimentError::Config("repeats must be at least 1".into()));
    }
    let (mean, var) = noise.log_theta_moments(q, sigma).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let lambda = -mean;
    let theta = var.sqrt();
    let c = 1.0 + q;
    let means: Vec<f64> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut s = RngStream::new(seed, trial_stream(r, Role::Xi));
            // running mean, exact when every term is equal
            let mut m = 0.0;
            for i in 0..n {
                let t = loop {
                    let t = c - sigma * noise.sample(&mut s);
                    if t != 0.0 {
                        break t;
                    }
                };
                m += (t.abs().ln() - m) / (i + 1) as f64;
            }
            m
        })
        .collect();
    let unit = theta / (n as f64).sqrt();
    let deviations = means.iter().map(|m| if unit > 0.0 { (m + lambda).abs() / unit } else { 0.0 }).collect();
    Ok(LlnReport { q, sigma, n, lambda, theta, means, deviations })
}

/// Expected number of independent trials with success probability `p` until
/// the first run of `len` consecutive successes: `(p^-len - 1) / (1 - p)`.
pub fn run_length_oracle(p: f64, len: u32) -> f64 {
    if p >= 1.0 {
        len as f64
    } else {
        (p.powi(-(len as i32)) - 1.0) / (1.0 - p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthReport {
    pub iota: f64,
    pub run_length: u32,
    /// `P{xi in (1 - iota, 1]}`.
    pub p: f64,
    /// Draw count at the end of the first qualifying run; `None` when censored.
    pub observations: Vec<Option<u64>>,
    pub oracle: f64,
}

impl RunLengthReport {
    pub fn censored(&self) -> u64 {
        self.observations.iter().filter(|o| o.is_none()).count() as u64
    }

    fn complete(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().flatten().map(|&v| v as f64)
    }

    /// Mean over uncensored trials.
    pub fn mean(&self) -> f64 {
        let n = self.complete().count() as f64;
        self.complete().sum::<f64>() / n
    }

    pub fn std_error(&self) -> f64 {
        let n = self.complete().count() as f64;
        let m = self.mean();
        let var = self.complete().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{RUN_LENGTH_SCHEMA}\n");
        let _ = writeln!(out, "# iota = {:.16e}", self.iota);
        let _ = writeln!(out, "# run_length = {}", self.run_length);
        let _ = writeln!(out, "# p = {:.16e}", self.p);
        let _ = writeln!(out, "# oracle_mean = {:.16e}", self.oracle);
        let _ = writeln!(out, "# mean = {:.16e}", self.mean());
        let _ = writeln!(out, "# std_error = {:.16e}", self.std_error());
        let _ = writeln!(out, "# censored = {}", self.censored());
        out.push_str("trial,draws\n");
        for (i, o) in self.observations.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", o.map(|v| v.to_string()).unwrap_or_else(|| "censored".into()));
        }
        out
    }
}

/// Waiting time, in draws, for `run_length` consecutive draws in `(1 - iota, 1]`.
pub fn run_length_experiment(
    noise: &NoiseSpec,
    iota: f64,
    run_length: u32,
    trials: u64,
    seed: u64,
) -> Result<RunLengthReport, ExperimentError> {
    let p = noise.tail_prob(iota).map_err(|e| ExperimentError::Config(e.to_string()))?;
    if !(p > 0.0) {
        return Err(ExperimentError::Config(format!("no mass in (1 - iota, 1] for iota = {iota}")));
    }
    if run_length == 0 || trials == 0 {
        return Err(ExperimentError::Config("run length and trials must be positive".into()));
    }
    let observations = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut s = RngStream::for_trial(seed, t, Role::Xi);
            let mut run = 0;
            for i in 1..=RUN_LENGTH_CAP {
                if noise.sample(&mut s) > 1.0 - iota {
                    run += 1;
                    if run == run_length {
                        return Some(i);
                    }
                } else {
                    run = 0;
                }
            }
            None
        })
        .collect();
    Ok(RunLengthReport { iota, run_length, p, observations, oracle: run_length_oracle(p, run_length) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub q: f64,
    pub sigma: f64,
    /// `None` where `Theta = 0` has positive probability.
    pub lambda: Option<f64>,
    pub stabilizable: Option<bool>,
    /// Closed-form window membership, for Bernoulli noise.
    pub window: Option<bool>,
}

impl SweepCell {
    pub fn singular(&self) -> bool {
        self.lambda.is_none()
    }
}

pub fn stability_sweep(
    noise: &NoiseSpec,
    q_grid: &[f64],
    sigma_grid: &[f64],
) -> Result<Vec<SweepCell>, ExperimentError> {
    if q_grid.is_empty() || sigma_grid.is_empty() {
        return Err(ExperimentError::Config("sweep grids must be nonempty".into()));
    }
    let mut cells = Vec::with_capacity(q_grid.len() * sigma_grid.len());
    for &q in q_grid {
        let (lo, hi) = bernoulli_sigma_window(q);
        for &sigma in sigma_grid {
            let lambda = noise.lambda(q, sigma).ok().filter(|l| l.is_finite());
            cells.push(SweepCell {
                q,
                sigma,
                lambda,
                stabilizable: lambda.map(|l| l > 0.0),
                window: matches!(noise, NoiseSpec::Bernoulli).then(|| sigma > lo && sigma < hi),
            });
        }
    }
    Ok(cells)
}

pub fn sweep_csv(noise: &NoiseSpec, cells: &[SweepCell]) -> String {
    let mut out = format!("{SWEEP_SCHEMA}\n# noise = {noise}\n");
    out.push_str("q,sigma,lambda,stabilizable,window\n");
    for c in cells {
        let lambda = c.lambda.map(|l| format!("{l:.16e}")).unwrap_or_else(|| "singular".into());
        let flag = c.stabilizable.map(|b| b.to_string()).unwrap_or_else(|| "singular".into());
        let window = c.window.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{:.16e},{:.16e},{lambda},{flag},{window}", c.q, c.sigma);
    }
    out
}
