//! Switching radius and forced-run constants of the combined method.

use super::{Magnitude, ParamError, Relation};
use crate::maps::{MapKind, MapSpec};
use crate::noise::NoiseSpec;

/// Fraction of the binding bound used for `beta`.
const BETA_SHRINK: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedParams {
    pub sigma: f64,
    pub iota: f64,
    /// `P{xi in (1 - iota, 1]}`.
    pub p_iota: f64,
    /// `1 + q - (1 - iota) sigma`.
    pub theta_iota: f64,
    /// `sup |1 + q - sigma xi|` over `xi in (1 - iota, 1]`.
    pub theta_sup: f64,
    /// `1 + q + sigma`.
    pub bar_theta: f64,
    /// Bound keeping one noisy step from `I_beta` inside `I_u`: `u / (bar_Theta + C)`.
    pub beta1: f64,
    /// Bound making forced steps contract: `((1 - theta_sup) / C)^(1/kappa)`.
    pub beta2: f64,
    pub beta: f64,
    /// Per-step contraction factor of a forced run started in `I_beta`.
    pub h_iota: f64,
    /// Forced steps that carry `I_beta` into `I_delta`.
    pub bar_s: u64,
    pub delta: Magnitude,
    pub c: f64,
    pub kappa: f64,
}

/// The two bounds on `beta` for the truncated logistic map with parameter `r`:
/// `((1 - theta) / r, u / (2r - 2 + sigma))`, where `theta` bounds the forced multiplier.
pub fn logistic_beta_bounds(r: f64, sigma: f64, theta: f64, u: f64) -> (f64, f64) {
    ((1.0 - theta) / r, u / (2.0 * r - 2.0 + sigma))
}

/// `floor(ln(delta / beta) / ln h)`.
pub fn forced_steps(delta: Magnitude, beta: f64, h: f64) -> u64 {
    let s = ((delta.ln() - beta.ln()) / h.ln()).floor();
    if s >= u64::MAX as f64 {
        u64::MAX
    } else {
        s.max(0.0) as u64
    }
}

pub fn derive_combined(
    map: &MapSpec,
    noise: &NoiseSpec,
    sigma: f64,
    iota: f64,
    delta: Magnitude,
) -> Result<CombinedParams, ParamError> {
    let (q, c, kappa, u) = (map.q(), map.c(), map.kappa(), map.u());
    if !(q < sigma && sigma < 2.0 + q) {
        return Err(ParamError::Config(format!("need q < sigma < 2 + q, got q = {q}, sigma = {sigma}")));
    }
    let iota_hi = 1.0 - q / sigma;
    if !(iota > 0.0 && iota < iota_hi) {
        return Err(ParamError::Config(format!("iota = {iota} must lie in (0, 1 - q/sigma) = (0, {iota_hi})")));
    }
    let noise = map.effective_noise(noise);
    let lambda = noise.lambda(q, sigma)?;
    if !(lambda > 0.0) {
        return Err(ParamError::NotStabilizable { lambda });
    }
    let p_iota = noise.tail_prob(iota)?;
    if !(p_iota > 0.0) {
        return Err(ParamError::Config(format!(
            "tail condition violated: P{{xi in (1 - iota, 1]}} = 0 for iota = {iota}"
        )));
    }

    let theta_iota = 1.0 + q - (1.0 - iota) * sigma;
    let theta_sup = theta_iota.abs().max((1.0 + q - sigma).abs());
    let bar_theta = 1.0 + q + sigma;
    let (beta2, beta1) = match map.kind() {
        MapKind::Logistic { r } if map.bounds_override().is_none() => logistic_beta_bounds(*r, sigma, theta_sup, u),
        _ => (((1.0 - theta_sup) / c).powf(1.0 / kappa), u / (bar_theta + c)),
    };
    let beta = BETA_SHRINK * beta1.min(beta2);
    if !(delta.ln() < beta.ln()) {
        return Err(ParamError::Config(format!("delta = {delta} must be below beta = {beta}")));
    }
    let h_iota = theta_sup + c * beta.powf(kappa);
    let bar_s = forced_steps(delta, beta, h_iota);

    Ok(CombinedParams {
        sigma,
        iota,
        p_iota,
        theta_iota,
        theta_sup,
        bar_theta,
        beta1,
        beta2,
        beta,
        h_iota,
        bar_s,
        delta,
        c,
        kappa,
    })
}

impl CombinedParams {
    pub fn relations(&self) -> Vec<Relation> {
        vec![
            Relation {
                name: "|theta_iota| < 1",
                statement: format!("|1 + q - (1 - iota) sigma| = {} < 1", self.theta_iota.abs()),
                holds: self.theta_iota.abs() < 1.0,
            },
            Relation {
                name: "beta",
                statement: format!("beta = {} < min(beta1, beta2) = min({}, {})", self.beta, self.beta1, self.beta2),
                holds: self.beta < self.beta1 && self.beta < self.beta2,
            },
            Relation {
                name: "H",
                statement: format!("H = theta_sup + C beta^kappa = {} < 1", self.h_iota),
                holds: self.h_iota < 1.0,
            },
            Relation {
                name: "s",
                statement: format!("s = floor(ln(delta/beta)/ln H) = {}", self.bar_s),
                holds: self.bar_s == forced_steps(self.delta, self.beta, self.h_iota),
            },
        ]
    }
}
