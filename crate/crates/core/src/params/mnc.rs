//! Constants of the multiplicative-noise stage.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{Magnitude, ParamError, Relation};
use crate::maps::MapSpec;
use crate::noise::NoiseSpec;

/// Tail scan keeps going at least this far past the last failing index.
const N1_SCAN_MARGIN: u64 = 10_000;
const N1_SCAN_BUDGET: u64 = 50_000_000;

/// How `N` is obtained from `theta^2 = Var(ln|Theta|)`, `epsilon` and `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbarRule {
    /// `ceil(theta^2 / ((gamma/2) epsilon^2))`.
    Chebyshev,
    /// Smallest `n` with `2 (1 - Phi(epsilon sqrt(n) / theta)) <= gamma/2`.
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MncChoices {
    /// Decay rate of the envelope; defaults to `lambda/4`.
    pub varsigma: Option<f64>,
    /// LLN slack; defaults to half its admissible bound.
    pub epsilon: Option<f64>,
    pub nbar_rule: NbarRule,
    /// Lower bound imposed on `N` on top of the rule.
    pub nbar_floor: u64,
    /// Reject `epsilon` outside `(0, min(kappa varsigma/2, lambda - varsigma))`.
    pub strict: bool,
}

impl Default for MncChoices {
    fn default() -> Self {
        Self { varsigma: None, epsilon: None, nbar_rule: NbarRule::Chebyshev, nbar_floor: 1, strict: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MncParams {
    pub q: f64,
    pub c: f64,
    pub kappa: f64,
    pub u: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// `Var(ln|Theta|)`.
    pub theta2: f64,
    pub varsigma: f64,
    pub epsilon: f64,
    pub bar_theta: f64,
    pub bar_v: f64,
    pub nbar_rule: NbarRule,
    pub nbar_chebyshev: u64,
    pub nbar_normal: u64,
    pub nbar: u64,
    pub nbar1: u64,
    pub nbar2: u64,
    pub m: Magnitude,
    pub eta: Magnitude,
    pub delta: Magnitude,
    /// Steps after which the envelope is back below `delta`.
    pub nbar_return: u64,
}

impl MncParams {
    pub fn delta_f64(&self) -> Result<f64, ParamError> {
        self.delta.checked_f64().ok_or(ParamError::DeltaUnderflow(self.delta))
    }

    /// `eta exp(-varsigma n)`.
    pub fn envelope(&self, n: u64) -> Magnitude {
        Magnitude::from_ln(self.eta.ln() - self.varsigma * n as f64)
    }

    pub fn relations(&self) -> Vec<Relation> {
        let eps_bound = (self.kappa * self.varsigma / 2.0).min(self.lambda - self.varsigma);
        let (eta_bound, delta_bound) = eta_delta(self);
        let nbar_return = return_steps(self.eta, self.delta, self.varsigma);
        vec![
            Relation {
                name: "varsigma",
                statement: format!("0 < varsigma = {} < lambda/2 = {}", self.varsigma, self.lambda / 2.0),
                holds: self.varsigma > 0.0 && self.varsigma < self.lambda / 2.0,
            },
            Relation {
                name: "epsilon",
                statement: format!(
                    "0 < epsilon = {} < min(kappa varsigma/2, lambda - varsigma) = {eps_bound}",
                    self.epsilon
                ),
                holds: self.epsilon > 0.0 && self.epsilon < eps_bound,
            },
            Relation {
                name: "M",
                statement: format!("M = bar_Theta^(N - 1) = {}^{}", self.bar_theta, self.nbar - 1),
                holds: (self.m.ln() - (self.nbar - 1) as f64 * self.bar_theta.ln()).abs()
                    <= 1e-12 * self.m.ln().abs().max(1.0),
            },
            Relation {
                name: "N2",
                statement: format!("N2 = max(N1, N) = max({}, {})", self.nbar1, self.nbar),
                holds: self.nbar2 == self.nbar1.max(self.nbar),
            },
            Relation {
                name: "eta",
                statement: format!("eta = {} <= {eta_bound}", self.eta),
                holds: self.eta.ln() <= eta_bound.ln() + 1e-12 * eta_bound.ln().abs().max(1.0),
            },
            Relation {
                name: "delta",
                statement: format!("delta = {} <= {delta_bound}", self.delta),
                holds: self.delta.ln() <= delta_bound.ln() + 1e-12 * delta_bound.ln().abs().max(1.0),
            },
            Relation {
                name: "delta < eta/2",
                statement: format!("delta = {} < eta/2", self.delta),
                holds: self.delta.ln() < self.eta.ln() - std::f64::consts::LN_2 + 1e-12,
            },
            Relation {
                name: "delta < 1",
                statement: format!("delta = {} < 1", self.delta),
                holds: self.delta.ln() < 0.0,
            },
            Relation {
                name: "nbar",
                statement: format!("n = floor(ln(eta/delta)/varsigma) + 1 = {}", self.nbar_return),
                holds: self.nbar_return == nbar_return,
            },
        ]
    }
}

/// `ceil(theta^2 / ((gamma/2) epsilon^2))`, at least 1.
pub fn nbar_chebyshev(theta2: f64, epsilon: f64, gamma: f64) -> u64 {
    let n = (theta2 / (gamma / 2.0 * epsilon * epsilon)).ceil();
    if n.is_finite() && n >= 1.0 {
        n as u64
    } else if n.is_finite() {
        1
    } else {
        u64::MAX
    }
}

/// Smallest `n >= 1` with `2 (1 - Phi(epsilon sqrt(n) / theta)) <= gamma/2`.
pub fn nbar_normal(theta2: f64, epsilon: f64, gamma: f64) -> u64 {
    if theta2 == 0.0 {
        return 1;
    }
    let theta = theta2.sqrt();
    let phi = Normal::standard();
    let ok = |n: u64| 2.0 * phi.sf(epsilon * (n as f64).sqrt() / theta) <= gamma / 2.0;
    let z = phi.inverse_cdf(1.0 - gamma / 4.0);
    let mut n = ((z * theta / epsilon).powi(2).ceil() as u64).max(1);
    while !ok(n) {
        n += 1;
    }
    while n > 1 && ok(n - 1) {
        n -= 1;
    }
    n
}

/// Largest admissible `eta` and `delta` for the given `M`, `N2`, `varsigma`.
fn eta_delta(p: &MncParams) -> (Magnitude, Magnitude) {
    let n2 = p.nbar2 as f64;
    let s = p.varsigma;
    let r = (1.0 + p.kappa) * s;
    // sum_{j=0}^{N2} exp(-r j)
    let ln_sum = (-(-r * (n2 + 1.0)).exp_m1()).ln() - (-(-r).exp_m1()).ln();
    let t1 = -(std::f64::consts::LN_2 + p.c.ln() + p.m.ln() + s * (n2 + 1.0) + ln_sum) / p.kappa;
    let eta = Magnitude::from_ln(t1.min(0.0).min(p.u.ln()));
    let m_plus_c = p.m + Magnitude::new(p.c);
    let d1 = eta.ln() - m_plus_c.ln() - s;
    let d2 = eta.ln() - std::f64::consts::LN_2 - p.m.ln() - s * n2;
    (eta, Magnitude::from_ln(d1.min(d2)))
}

fn return_steps(eta: Magnitude, delta: Magnitude, varsigma: f64) -> u64 {
    let t = ((eta.ln() - delta.ln()) / varsigma).floor();
    if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64 + 1
    }
}

/// Smallest `N1` such that for every `n >= N1`
///
/// ```text
/// sum_{j=1}^{n} exp(A (n - j) - B j) < exp(-(2 epsilon + varsigma)) / (2 C)
/// ```
///
/// with `A = -lambda + varsigma + epsilon < 0` and `B = kappa varsigma - 2 epsilon > 0`.
/// The scan stops once `n exp(max(A, -B) n)`, an upper bound on the sum that is
/// decreasing past `-1/max(A, -B)`, has dropped below the right-hand side and the
/// scan has run a further margin past the last failure.
pub fn nbar1(lambda: f64, varsigma: f64, epsilon: f64, kappa: f64, c: f64) -> Result<u64, ParamError> {
    let a = -lambda + varsigma + epsilon;
    let b = kappa * varsigma - 2.0 * epsilon;
    if !(a < 0.0 && b > 0.0) {
        return Err(ParamError::Config(format!(
            "tail-sum condition needs varsigma + epsilon < lambda and 2 epsilon < kappa varsigma \
             (got A = {a}, B = {b})"
        )));
    }
    let rhs = 0.5 / c * (-(2.0 * epsilon + varsigma)).exp();
    let ln_rhs = rhs.ln();
    let d = a.max(-b);
    let ea = a.exp();
    let mut lhs = (-b).exp();
    let mut last_fail = 0u64;
    let mut n = 1u64;
    loop {
        if lhs >= rhs {
            last_fail = n;
        }
        let nf = n as f64;
        let certified = nf > -1.0 / d && nf.ln() + d * nf < ln_rhs;
        if certified && n >= last_fail + N1_SCAN_MARGIN {
            return Ok(last_fail + 1);
        }
        if n >= N1_SCAN_BUDGET {
            return Err(ParamError::N1Uncertified { budget: N1_SCAN_BUDGET });
        }
        n += 1;
        lhs = ea * lhs + (-b * n as f64).exp();
    }
}

/// All constants of the multiplicative-noise stage for `map` driven by `noise` at
/// intensity `sigma`, with confidence parameter `gamma`.
pub fn derive_mnc(
    map: &MapSpec,
    noise: &NoiseSpec,
    sigma: f64,
    gamma: f64,
    choices: &MncChoices,
) -> Result<MncParams, ParamError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ParamError::Config(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    let (q, c, kappa, u) = (map.q(), map.c(), map.kappa(), map.u());
    let (mean, theta2) = map.effective_noise(noise).log_theta_moments(q, sigma)?;
    let lambda = -mean;
    if !(lambda > 0.0) {
        return Err(ParamError::NotStabilizable { lambda });
    }

    let varsigma = choices.varsigma.unwrap_or(lambda / 4.0);
    if !(varsigma > 0.0 && varsigma < lambda / 2.0) {
        return Err(ParamError::Config(format!(
            "varsigma = {varsigma} must lie in (0, lambda/2) = (0, {})",
            lambda / 2.0
        )));
    }
    let eps_bound = (kappa * varsigma / 2.0).min(lambda - varsigma);
    let epsilon = choices.epsilon.unwrap_or(eps_bound / 2.0);
    if !(epsilon > 0.0) || (choices.strict && epsilon >= eps_bound) {
        return Err(ParamError::Config(format!(
            "epsilon = {epsilon} must lie in (0, min(kappa varsigma/2, lambda - varsigma)) = (0, {eps_bound})"
        )));
    }

    let bar_theta = 1.0 + q + sigma;
    let bar_v = (1.0 + q - sigma).abs().ln().abs().max(bar_theta.ln());
    let nbar_cheb = nbar_chebyshev(theta2, epsilon, gamma);
    let nbar_norm = nbar_normal(theta2, epsilon, gamma);
    let nbar = match choices.nbar_rule {
        NbarRule::Chebyshev => nbar_cheb,
        NbarRule::Normal => nbar_norm,
    }
    .max(choices.nbar_floor)
    .max(1);
    let m = Magnitude::new(bar_theta).powf((nbar - 1) as f64);
    let nbar1 = nbar1(lambda, varsigma, epsilon, kappa, c)?;
    let nbar2 = nbar1.max(nbar);

    let mut p = MncParams {
        q,
        c,
        kappa,
        u,
        sigma,
        gamma,
        lambda,
        theta2,
        varsigma,
        epsilon,
        bar_theta,
        bar_v,
        nbar_rule: choices.nbar_rule,
        nbar_chebyshev: nbar_cheb,
        nbar_normal: nbar_norm,
        nbar,
        nbar1,
        nbar2,
        m,
        eta: Magnitude::ONE,
        delta: Magnitude::ONE,
        nbar_return: 0,
    };
    let (eta, delta) = eta_delta(&p);
    p.eta = eta;
    p.delta = delta;
    p.nbar_return = return_steps(eta, delta, varsigma);
    Ok(p)
}
