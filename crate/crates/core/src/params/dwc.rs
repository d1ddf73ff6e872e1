//! Directed-walk constants: the ladder of shrinking intervals and the step sizes
//! that contract a state through it.

use super::{ParamError, Relation};
use crate::maps::LocalBounds;

/// Nested intervals `|x| < a^-j u`, `j = 0..=k_target`, and the target `|x| < target`
/// which gets index `k = k_target + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub u: f64,
    pub a: f64,
    pub target: f64,
    /// Last index whose interval strictly contains the target.
    pub k_target: u32,
    pub k: u32,
}

impl Ladder {
    pub fn new(u: f64, a: f64, target: f64) -> Result<Self, ParamError> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(ParamError::Config(format!("ladder ratio a = {a} must exceed 1")));
        }
        if !(target > 0.0 && target < u) {
            return Err(ParamError::Config(format!("target radius {target} must lie in (0, u) = (0, {u})")));
        }
        let k_target = ((u / target).ln() / a.ln()).floor();
        if k_target > 100_000.0 {
            return Err(ParamError::Config(format!(
                "ladder from {u} down to {target} with ratio {a} needs {k_target} rungs"
            )));
        }
        let mut k_target = k_target as u32;
        // guard the floor against rounding in the logarithms
        while k_target > 0 && u * a.powi(-(k_target as i32)) < target {
            k_target -= 1;
        }
        while u * a.powi(-(k_target as i32 + 1)) >= target {
            k_target += 1;
        }
        Ok(Self { u, a, target, k_target, k: k_target + 1 })
    }

    /// Radius `a^-j u` of rung `j`.
    pub fn radius(&self, j: u32) -> f64 {
        self.u * self.a.powi(-(j as i32))
    }

    /// Rung of a deviation: `k` inside the target, otherwise the largest `j` with
    /// `|x| < a^-j u`. `None` when `|x| >= u`.
    pub fn index(&self, x: f64) -> Option<u32> {
        let x = x.abs();
        if !(x < self.u) {
            return None;
        }
        if x < self.target {
            return Some(self.k);
        }
        let guess = ((self.u / x).ln() / self.a.ln()).floor().max(0.0);
        let mut j = (guess as u32).min(self.k_target);
        while j > 0 && !(x < self.radius(j)) {
            j -= 1;
        }
        while j < self.k_target && x < self.radius(j + 1) {
            j += 1;
        }
        Some(j)
    }
}

/// Optional overrides; each defaults to the midpoint of its admissible interval,
/// except `ell`, which defaults to its upper bound.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DwcChoices {
    pub a: Option<f64>,
    pub ell_c: Option<f64>,
    pub b: Option<f64>,
    pub mu: Option<f64>,
    pub ell: Option<f64>,
}

/// Intermediate constants of a derived walk.
#[derive(Debug, Clone, PartialEq)]
pub struct DwcDerivation {
    pub underline_l: f64,
    pub bar_q: f64,
    pub epsilon0: f64,
    pub b: f64,
    pub rho: f64,
    pub mu: f64,
    /// `ln(target/u) / ln(1 - mu)`.
    pub step_bound: f64,
    /// `floor(-ln a / ln(1 - mu))`.
    pub barm: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwcParams {
    pub ladder: Ladder,
    /// `alpha_0 ..= alpha_k`.
    pub alphas: Vec<f64>,
    pub ell_c: f64,
    pub ell: f64,
    /// Present when the walk was derived from slope bounds rather than set by hand.
    pub derivation: Option<DwcDerivation>,
}

fn in_open(name: &str, v: f64, lo: f64, hi: f64) -> Result<f64, ParamError> {
    if v > lo && v < hi {
        Ok(v)
    } else {
        Err(ParamError::Config(format!("{name} = {v} must lie in ({lo}, {hi})")))
    }
}

/// Builds the walk that contracts `I_{u,K}` into `I_{target,K}` for a map with
/// slope bounds `bounds`.
pub fn derive_dwc(bounds: LocalBounds, u: f64, target: f64, choices: &DwcChoices) -> Result<DwcParams, ParamError> {
    let LocalBounds { underline_l: l, bar_q } = bounds;
    if !(bar_q > 0.0 && bar_q < l) {
        return Err(ParamError::Config(format!(
            "slope bounds need 0 < bar_q < underline_L, got bar_q = {bar_q}, underline_L = {l}"
        )));
    }
    if !(target > 0.0 && target < u) {
        return Err(ParamError::Config(format!("target {target} must lie in (0, u) = (0, {u})")));
    }

    let a_hi = l / bar_q;
    let a = in_open("a (bounded by underline_L/bar_q)", choices.a.unwrap_or((1.0 + a_hi) / 2.0), 1.0, a_hi)?;
    let epsilon0 = l - bar_q * a;

    let lc_hi = epsilon0 / (2.0 * bar_q * a + epsilon0);
    let ell_c =
        in_open("ell_c (bounded by eps0/(2 bar_q a + eps0))", choices.ell_c.unwrap_or(lc_hi / 2.0), 0.0, lc_hi)?;

    let b_lo = bar_q * a * a / (l * (1.0 - ell_c));
    let b_hi = a / (1.0 + ell_c);
    let b = in_open(
        "B (bounded by bar_q a^2/(underline_L (1 - ell_c)) and a/(1 + ell_c))",
        choices.b.unwrap_or((b_lo + b_hi) / 2.0),
        b_lo,
        b_hi,
    )?;

    let rho = 1.0 + bar_q - l * (1.0 - ell_c) * b / (a * a);
    if !(rho > 0.0 && rho < 1.0) {
        return Err(ParamError::Config(format!("contraction rho = {rho} must lie in (0, 1)")));
    }
    let mu = in_open("mu (bounded by 1 - rho)", choices.mu.unwrap_or((1.0 - rho) / 2.0), 0.0, 1.0 - rho)?;
    let ell_max = (1.0 - rho - mu) * target;
    let ell = choices.ell.unwrap_or(ell_max);
    if !(ell >= 0.0 && ell <= ell_max) {
        return Err(ParamError::Config(format!("ell = {ell} must lie in [0, (1 - rho - mu) target] = [0, {ell_max}]")));
    }

    let ladder = Ladder::new(u, a, target)?;
    let alphas = (0..=ladder.k).map(|j| l * a.powi(-(j as i32 + 2)) * u * b).collect();
    let ln_contr = (1.0 - mu).ln();
    let barm = (-a.ln() / ln_contr).floor() as u64;
    let step_bound = (target / u).ln() / ln_contr;

    Ok(DwcParams {
        ladder,
        alphas,
        ell_c,
        ell,
        derivation: Some(DwcDerivation { underline_l: l, bar_q, epsilon0, b, rho, mu, step_bound, barm }),
    })
}

impl DwcParams {
    /// Hand-set walk with `alpha_j = coeff a^-(j+1) u`.
    pub fn manual(a: f64, alpha_coeff: f64, ell_c: f64, ell: f64, u: f64, target: f64) -> Result<Self, ParamError> {
        if !(alpha_coeff > 0.0) {
            return Err(ParamError::Config(format!("alpha coefficient {alpha_coeff} must be positive")));
        }
        if !(0.0..1.0).contains(&ell_c) {
            return Err(ParamError::Config(format!("ell_c = {ell_c} must lie in [0, 1)")));
        }
        if !(ell >= 0.0) {
            return Err(ParamError::Config(format!("ell = {ell} must be nonnegative")));
        }
        let ladder = Ladder::new(u, a, target)?;
        let alphas = (0..=ladder.k).map(|j| alpha_coeff * a.powi(-(j as i32 + 1)) * u).collect();
        Ok(Self { ladder, alphas, ell_c, ell, derivation: None })
    }

    pub fn alpha(&self, j: u32) -> f64 {
        self.alphas[j as usize]
    }

    pub fn relations(&self) -> Vec<Relation> {
        let Some(d) = &self.derivation else {
            return Vec::new();
        };
        let a = self.ladder.a;
        let (l, q) = (d.underline_l, d.bar_q);
        let lc_hi = d.epsilon0 / (2.0 * q * a + d.epsilon0);
        let b_lo = q * a * a / (l * (1.0 - self.ell_c));
        let b_hi = a / (1.0 + self.ell_c);
        let ratio_ok = self.alphas.windows(2).all(|w| (w[1] * a / w[0] - 1.0).abs() < 1e-12);
        vec![
            Relation {
                name: "a",
                statement: format!("1 < a = {a} < underline_L/bar_q = {}", l / q),
                holds: a > 1.0 && a < l / q,
            },
            Relation {
                name: "eps0",
                statement: format!("eps0 = underline_L - bar_q a = {} > 0", d.epsilon0),
                holds: d.epsilon0 > 0.0 && (d.epsilon0 - (l - q * a)).abs() < 1e-15,
            },
            Relation {
                name: "ell_c",
                statement: format!("0 < ell_c = {} < {lc_hi}", self.ell_c),
                holds: self.ell_c > 0.0 && self.ell_c < lc_hi,
            },
            Relation {
                name: "B",
                statement: format!("{b_lo} < B = {} < {b_hi}", d.b),
                holds: b_lo < d.b && d.b < b_hi,
            },
            Relation { name: "rho", statement: format!("0 < rho = {} < 1", d.rho), holds: d.rho > 0.0 && d.rho < 1.0 },
            Relation {
                name: "mu",
                statement: format!("0 < mu = {} < 1 - rho = {}", d.mu, 1.0 - d.rho),
                holds: d.mu > 0.0 && d.mu < 1.0 - d.rho,
            },
            Relation {
                name: "ell",
                statement: format!("ell = {} <= (1 - rho - mu) target", self.ell),
                holds: self.ell <= (1.0 - d.rho - d.mu) * self.ladder.target * (1.0 + 1e-15),
            },
            Relation {
                name: "alpha",
                statement: format!("alpha_j = underline_L a^-(j+2) u B, alpha_0 = {}", self.alphas[0]),
                holds: ratio_ok
                    && (self.alphas[0] - l * a.powi(-2) * self.ladder.u * d.b).abs() <= 1e-15 * self.alphas[0],
            },
            Relation {
                name: "k",
                statement: format!("k = floor(log_a(u/target)) + 1 = {}", self.ladder.k),
                holds: self.ladder.k == self.ladder.k_target + 1
                    && self.ladder.radius(self.ladder.k_target) >= self.ladder.target
                    && self.ladder.radius(self.ladder.k) < self.ladder.target,
            },
        ]
    }
}
