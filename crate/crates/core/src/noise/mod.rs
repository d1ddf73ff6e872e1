//! Bounded i.i.d. noise on `[-1, 1]` and the statistics of the random multiplier
//! `Theta = 1 + q - sigma xi`.

pub mod rng;

use std::fmt;

use quadrature::double_exponential;
use thiserror::Error;

pub use rng::{trial_stream, RngStream, Role};

const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("invalid noise configuration: {0}")]
    Config(String),
    #[error("lambda undefined: Theta = 1 + q - sigma xi vanishes on an atom (q = {q}, sigma = {sigma})")]
    LambdaUndefined { q: f64, sigma: f64 },
    #[error("at least 100 draws are required, got {0}")]
    TooFewDraws(u64),
}

/// A finite distribution on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Discrete {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self, NoiseError> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(NoiseError::Config("discrete noise needs equally many values and probabilities".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(NoiseError::Config(format!("discrete value {v} lies outside [-1, 1]")));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(NoiseError::Config(format!("probability {p} is negative")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(NoiseError::Config(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { values, probs, cumulative })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied()).filter(|&(_, p)| p > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// `xi = +1` or `-1` with probability 1/2 each.
    Bernoulli,
    /// Continuous uniform on `[-1, 1]`.
    Uniform,
    Discrete(Discrete),
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl NoiseSpec {
    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self, NoiseError> {
        Ok(NoiseSpec::Discrete(Discrete::new(values, probs)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseSpec::Bernoulli => "bernoulli",
            NoiseSpec::Uniform => "uniform",
            NoiseSpec::Discrete(_) => "discrete",
        }
    }

    /// The law of `-xi`.
    pub fn reflected(&self) -> NoiseSpec {
        match self {
            NoiseSpec::Discrete(d) => {
                let values = d.values.iter().map(|v| -v).collect();
                NoiseSpec::discrete(values, d.probs.clone()).expect("reflection keeps validity")
            }
            other => other.clone(),
        }
    }

    /// Maps 64 random bits to a draw.
    pub fn from_bits(&self, x: u64) -> f64 {
        match self {
            NoiseSpec::Bernoulli => {
                if x >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseSpec::Uniform => 2.0 * rng::unit_from_bits(x) - 1.0,
            NoiseSpec::Discrete(d) => {
                let t = rng::unit_from_bits(x);
                let i = d.cumulative.iter().position(|&c| t < c).unwrap_or(d.values.len() - 1);
                d.values[i]
            }
        }
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        self.from_bits(stream.next_u64())
    }

    fn check_sigma(q: f64, sigma: f64) -> Result<(), NoiseError> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(NoiseError::Config(format!("q = {q} must be nonnegative")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(NoiseError::Config(format!("sigma = {sigma} must be nonnegative")));
        }
        Ok(())
    }

    fn has_zero_atom(&self, c: f64, sigma: f64) -> bool {
        match self {
            NoiseSpec::Bernoulli => c - sigma == 0.0 || c + sigma == 0.0,
            NoiseSpec::Uniform => false,
            NoiseSpec::Discrete(d) => d.atoms().any(|(v, _)| c - sigma * v == 0.0),
        }
    }

    /// Mean and variance of `ln|1 + q - sigma xi|`.
    pub fn log_theta_moments(&self, q: f64, sigma: f64) -> Result<(f64, f64), NoiseError> {
        Self::check_sigma(q, sigma)?;
        let c = 1.0 + q;
        if sigma == 0.0 {
            return Ok((c.ln(), 0.0));
        }
        if self.has_zero_atom(c, sigma) {
            return Err(NoiseError::LambdaUndefined { q, sigma });
        }
        match self {
            NoiseSpec::Bernoulli => {
                let hi = (c + sigma).ln();
                let lo = (c - sigma).abs().ln();
                let half = 0.5 * (hi - lo);
                Ok((0.5 * (hi + lo), half * half))
            }
            NoiseSpec::Uniform => {
                let mean = uniform_log_mean(c, sigma);
                Ok((mean, uniform_log_variance(c, sigma, mean)))
            }
            NoiseSpec::Discrete(d) => {
                let mean: f64 = d.atoms().map(|(v, p)| p * (c - sigma * v).abs().ln()).sum();
                let var = d
                    .atoms()
                    .map(|(v, p)| {
                        let e = (c - sigma * v).abs().ln() - mean;
                        p * e * e
                    })
                    .sum();
                Ok((mean, var))
            }
        }
    }

    /// `lambda = -E ln|1 + q - sigma xi|`.
    pub fn lambda(&self, q: f64, sigma: f64) -> Result<f64, NoiseError> {
        Ok(-self.log_theta_moments(q, sigma)?.0)
    }

    /// Sample mean of `ln|1 + q - sigma xi_i|` over `n_draws` draws.
    pub fn lambda_mc(
        &self,
        q: f64,
        sigma: f64,
        n_draws: u64,
        stream: &mut RngStream,
    ) -> Result<McEstimate, NoiseError> {
        Self::check_sigma(q, sigma)?;
        if n_draws < 100 {
            return Err(NoiseError::TooFewDraws(n_draws));
        }
        let c = 1.0 + q;
        if sigma > 0.0 && self.has_zero_atom(c, sigma) {
            return Err(NoiseError::LambdaUndefined { q, sigma });
        }
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..n_draws {
            let theta = loop {
                let t = c - sigma * self.sample(stream);
                if t != 0.0 {
                    break t;
                }
            };
            let v = theta.abs().ln();
            let k = (i + 1) as f64;
            let d = v - mean;
            mean += d / k;
            m2 += d * (v - mean);
        }
        let n = n_draws as f64;
        let var = m2 / (n - 1.0);
        Ok(McEstimate { estimate: mean, std_error: (var / n).sqrt() })
    }

    /// `P{xi in (1 - iota, 1]}`.
    pub fn tail_prob(&self, iota: f64) -> Result<f64, NoiseError> {
        if !(iota > 0.0 && iota < 1.0) {
            return Err(NoiseError::Config(format!("iota = {iota} must lie in (0, 1)")));
        }
        Ok(match self {
            NoiseSpec::Bernoulli => 0.5,
            NoiseSpec::Uniform => iota / 2.0,
            NoiseSpec::Discrete(d) => d.atoms().filter(|&(v, _)| v > 1.0 - iota).map(|(_, p)| p).sum(),
        })
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Discrete(d) => {
                write!(f, "discrete{{")?;
                for (i, (v, p)) in d.values.iter().zip(&d.probs).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}:{p}")?;
                }
                write!(f, "}}")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Open interval of `sigma` for which Bernoulli noise gives `lambda > 0`.
pub fn bernoulli_sigma_window(q: f64) -> (f64, f64) {
    let c2 = (1.0 + q) * (1.0 + q);
    ((c2 - 1.0).max(0.0).sqrt(), (c2 + 1.0).sqrt())
}

/// `E ln|c - sigma xi|` for uniform `xi`, from the antiderivative of `ln|t|`.
fn uniform_log_mean(c: f64, sigma: f64) -> f64 {
    let d = sigma - c;
    let edge = if d == 0.0 { 0.0 } else { d * d.abs().ln() };
    ((c + sigma) * (c + sigma).ln() + edge - 2.0 * sigma) / (2.0 * sigma)
}

/// `Var ln|c - sigma xi|` for uniform `xi` by double-exponential quadrature, split
/// where the integrand has its logarithmic singularity.
fn uniform_log_variance(c: f64, sigma: f64, mean: f64) -> f64 {
    let f = |xi: f64| {
        let e = (c - sigma * xi).abs().ln() - mean;
        let v = e * e;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let s = c / sigma;
    let total = if s > -1.0 && s < 1.0 {
        double_exponential::integrate(f, -1.0, s, QUAD_TOL).integral
            + double_exponential::integrate(f, s, 1.0, QUAD_TOL).integral
    } else {
        double_exponential::integrate(f, -1.0, 1.0, QUAD_TOL).integral
    };
    total / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form `E ln^2|c - sigma xi|` via the antiderivative
    /// `t (ln^2|t| - 2 ln|t| + 2)`.
    fn uniform_second_moment(c: f64, sigma: f64) -> f64 {
        let big_f = |t: f64| {
            if t == 0.0 {
                0.0
            } else {
                let l = t.abs().ln();
                t * (l * l - 2.0 * l + 2.0)
            }
        };
        (big_f(c + sigma) - big_f(c - sigma)) / (2.0 * sigma)
    }

    #[test]
    fn bernoulli_closed_form() {
        let (m, v) = NoiseSpec::Bernoulli.log_theta_moments(1.0, 2.1).unwrap();
        assert!((m - 0.5 * 0.41f64.ln()).abs() < 1e-15);
        assert!((m + 0.44579906).abs() < 1e-8);
        assert!((v - 3.44765437).abs() < 1e-7);
    }

    #[test]
    fn uniform_frozen_values() {
        let table = [
            (0.1, 0.4, -0.0723377, 0.0470307),
            (0.1, 0.6, -0.0405347, 0.115984),
            (0.1, 0.8, 0.0120536, 0.241393),
            (0.1, 0.9, 0.0510100, 0.345445),
            (0.3, 0.8, -0.1904013, 0.155296),
            (0.3, 1.2, -0.0504106, 0.550297),
            (0.3, 1.3, 0.0444886, 1.0),
            (0.3, 1.4, 0.1244567, 1.374093),
            (0.3, 1.22, -0.0373732, 0.596962),
            (0.3, 1.24, -0.0227828, 0.652369),
        ];
        for (q, s, lam, var) in table {
            let (m, v) = NoiseSpec::Uniform.log_theta_moments(q, s).unwrap();
            assert!((-m - lam).abs() < 1e-6, "q={q} s={s}: {}", -m);
            assert!((v - var).abs() < 1e-5, "q={q} s={s}: {v}");
        }
    }

    #[test]
    fn uniform_variance_matches_closed_form() {
        for &(q, s) in &[(0.0, 0.3), (0.1, 0.9), (0.3, 1.3), (0.3, 2.0), (1.0, 0.5), (0.5, 1.49)] {
            let (m, v) = NoiseSpec::Uniform.log_theta_moments(q, s).unwrap();
            let want = uniform_second_moment(1.0 + q, s) - m * m;
            assert!((v - want).abs() < 1e-10, "q={q} s={s}: {v} vs {want}");
        }
    }

    #[test]
    fn zero_sigma_is_deterministic() {
        for n in [NoiseSpec::Bernoulli, NoiseSpec::Uniform] {
            assert_eq!(n.log_theta_moments(0.3, 0.0).unwrap(), (1.3f64.ln(), 0.0));
            let mut s = RngStream::new(1, 0);
            let e = n.lambda_mc(0.3, 0.0, 1000, &mut s).unwrap();
            assert_eq!(e.estimate, 1.3f64.ln());
            assert_eq!(e.std_error, 0.0);
        }
    }

    #[test]
    fn bernoulli_atom_at_zero_is_rejected() {
        assert!(matches!(NoiseSpec::Bernoulli.log_theta_moments(0.3, 1.3), Err(NoiseError::LambdaUndefined { .. })));
        assert!(NoiseSpec::Uniform.log_theta_moments(0.3, 1.3).is_ok());
    }

    #[test]
    fn discrete_reduces_to_bernoulli() {
        let d = NoiseSpec::discrete(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let a = d.log_theta_moments(1.0, 2.1).unwrap();
        let b = NoiseSpec::Bernoulli.log_theta_moments(1.0, 2.1).unwrap();
        assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-14);
    }

    #[test]
    fn discrete_validation() {
        assert!(NoiseSpec::discrete(vec![1.5], vec![1.0]).is_err());
        assert!(NoiseSpec::discrete(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(NoiseSpec::discrete(vec![0.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn windows() {
        let (lo, hi) = bernoulli_sigma_window(1.0);
        assert!((lo - 3f64.sqrt()).abs() < 1e-15 && (hi - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(bernoulli_sigma_window(0.0), (0.0, 2f64.sqrt()));
        let (lo, hi) = bernoulli_sigma_window(0.3);
        assert!(lo < 0.85 && 0.85 < hi && 0.6 < lo);
    }

    #[test]
    fn tail_probabilities() {
        assert_eq!(NoiseSpec::Bernoulli.tail_prob(0.3).unwrap(), 0.5);
        assert!((NoiseSpec::Uniform.tail_prob(0.2).unwrap() - 0.1).abs() < 1e-15);
        let d = NoiseSpec::discrete(vec![-1.0, 0.9], vec![0.5, 0.5]).unwrap();
        assert_eq!(d.tail_prob(0.05).unwrap(), 0.0);
        assert_eq!(d.tail_prob(0.2).unwrap(), 0.5);
        assert!(NoiseSpec::Uniform.tail_prob(1.0).is_err());
    }

    #[test]
    fn sample_moments() {
        let mut s = RngStream::new(42, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| NoiseSpec::Bernoulli.sample(&mut s)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.005);
        let mut s = RngStream::new(42, 1);
        let xs: Vec<f64> = (0..n).map(|_| NoiseSpec::Uniform.sample(&mut s)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn lambda_mc_agrees_with_closed_form() {
        let mut s = RngStream::new(9, 5);
        let e = NoiseSpec::Bernoulli.lambda_mc(1.0, 2.1, 1_000_000, &mut s).unwrap();
        assert!((e.estimate + 0.44579906).abs() <= 3.0 * e.std_error);
        let mut s = RngStream::new(9, 6);
        let e = NoiseSpec::Uniform.lambda_mc(0.3, 1.4, 1_000_000, &mut s).unwrap();
        assert!((e.estimate + 0.1244567).abs() <= 3.0 * e.std_error);
        assert!(NoiseSpec::Uniform.lambda_mc(0.3, 1.4, 99, &mut s).is_err());
    }

    #[test]
    fn reflection() {
        let d = NoiseSpec::discrete(vec![-1.0, 0.5], vec![0.25, 0.75]).unwrap();
        match d.reflected() {
            NoiseSpec::Discrete(r) => assert_eq!(r.values(), &[1.0, -0.5]),
            _ => unreachable!(),
        }
        assert_eq!(NoiseSpec::Bernoulli.reflected(), NoiseSpec::Bernoulli);
    }
}
