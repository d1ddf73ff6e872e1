//! One-dimensional maps with an unstable positive fixed point.
//!
//! A [`MapSpec`] carries the map itself together with its local expansion
//! data around the fixed point `K`:
//!
//! ```text
//! f(K + x) = K - (1 + q) x + phi(x),   |phi(x)| <= C |x|^(1 + kappa),   |x| < u
//! ```
//!
//! Maps whose slope at `K` is `+(1 + q)` are supported through
//! [`Orientation::Preserve`]; the residual then reads `f(K + x) - K - (1 + q) x`.

pub mod expr;

use std::fmt;
use std::sync::Arc;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use expr::{Expr, ExprError};

use crate::noise::NoiseSpec;

const FIXED_POINT_TOL: f64 = 1e-12;
const VALIDATION_SEED: u64 = 0x0005_EED0_FA11;
const VALIDATION_RANDOM_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("invalid map configuration: {0}")]
    Config(String),
    #[error("map evaluation at z = {z:e} produced a non-finite value ({value})")]
    Eval { z: f64, value: f64 },
    #[error("DWC inapplicable: {0}")]
    DwcInapplicable(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Sign of `f'(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `f'(K) = -(1 + q)`: the map flips sides around `K`.
    Flip,
    /// `f'(K) = +(1 + q)`.
    Preserve,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Flip => -1.0,
            Orientation::Preserve => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum MapKind {
    Logistic { r: f64 },
    Ricker { r: f64 },
    KappaHalf,
    Custom { source: String, expr: Arc<Expr> },
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Logistic { r } => write!(f, "logistic(r={r})"),
            MapKind::Ricker { r } => write!(f, "ricker(r={r})"),
            MapKind::KappaHalf => write!(f, "kappa_half"),
            MapKind::Custom { source, .. } => write!(f, "custom({source})"),
        }
    }
}

/// Selector for the shipped maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinMap {
    Logistic { r: f64 },
    Ricker { r: f64 },
    KappaHalf,
}

/// Two-sided slope bounds on `I_{u,K}`:
/// `underline_l |z - K| <= |f(z) - K| <= (1 + bar_q) |z - K|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBounds {
    pub underline_l: f64,
    pub bar_q: f64,
}

impl LocalBounds {
    pub fn new(underline_l: f64, bar_q: f64) -> Result<Self, MapError> {
        if !(underline_l.is_finite() && bar_q.is_finite()) {
            return Err(MapError::DwcInapplicable("local bounds are not finite".into()));
        }
        if bar_q <= 0.0 {
            return Err(MapError::DwcInapplicable(format!("bar_q = {bar_q} must be positive")));
        }
        if bar_q >= underline_l {
            return Err(MapError::DwcInapplicable(format!(
                "need bar_q < underline_L, got bar_q = {bar_q}, underline_L = {underline_l}"
            )));
        }
        if underline_l > 1.0 + bar_q {
            return Err(MapError::DwcInapplicable(format!(
                "need underline_L <= 1 + bar_q, got underline_L = {underline_l}, bar_q = {bar_q}"
            )));
        }
        Ok(Self { underline_l, bar_q })
    }
}

#[derive(Debug, Clone)]
pub struct MapSpec {
    kind: MapKind,
    k: f64,
    q: f64,
    c: f64,
    kappa: f64,
    u: f64,
    truncate_at_zero: bool,
    orientation: Orientation,
    bounds_override: Option<LocalBounds>,
}

impl MapSpec {
    /// Truncated logistic map `max(r z (1 - z), 0)` for `r in (3, 4]`.
    ///
    /// The default radius is `u = 1/(8r)`: at `u = 1/(4r)` the analytic slope
    /// bounds coincide and the directed walk has no room.
    pub fn logistic(r: f64) -> Result<Self, MapError> {
        if !(r > 3.0 && r <= 4.0) {
            return Err(MapError::Config(format!("logistic r = {r} must lie in (3, 4]")));
        }
        Ok(Self {
            kind: MapKind::Logistic { r },
            k: 1.0 - 1.0 / r,
            q: r - 3.0,
            c: r,
            kappa: 1.0,
            u: 1.0 / (8.0 * r),
            truncate_at_zero: true,
            orientation: Orientation::Flip,
            bounds_override: None,
        })
    }

    /// Ricker map `z exp(r (1 - z))` for `r > 2`, default `u = 0.1`.
    pub fn ricker(r: f64) -> Result<Self, MapError> {
        if !(r > 2.0 && r.is_finite()) {
            return Err(MapError::Config(format!("ricker r = {r} must exceed 2")));
        }
        let u = 0.1;
        Ok(Self {
            kind: MapKind::Ricker { r },
            k: 1.0,
            q: r - 2.0,
            c: ricker_remainder_constant(r, u),
            kappa: 1.0,
            u,
            truncate_at_zero: true,
            orientation: Orientation::Flip,
            bounds_override: None,
        })
    }

    /// `1.5 (z - 1) + 0.5 |z - 1|^(3/2) + 1`, which is not Lipschitz-smooth at `K = 1`.
    pub fn kappa_half() -> Self {
        Self {
            kind: MapKind::KappaHalf,
            k: 1.0,
            q: 0.5,
            c: 0.5,
            kappa: 0.5,
            u: 0.25,
            truncate_at_zero: false,
            orientation: Orientation::Preserve,
            bounds_override: None,
        }
    }

    /// A map given as an expression in `z` (see [`expr`] for the grammar).
    pub fn custom(source: &str, k: f64, q: f64, c: f64, kappa: f64, u: f64) -> Result<Self, MapError> {
        let expr = Expr::parse(source)?;
        let spec = Self {
            kind: MapKind::Custom { source: source.to_string(), expr: Arc::new(expr) },
            k,
            q,
            c,
            kappa,
            u,
            truncate_at_zero: false,
            orientation: Orientation::Flip,
            bounds_override: None,
        };
        spec.check_data()?;
        Ok(spec)
    }

    pub fn builtin(kind: BuiltinMap) -> Result<Self, MapError> {
        match kind {
            BuiltinMap::Logistic { r } => Self::logistic(r),
            BuiltinMap::Ricker { r } => Self::ricker(r),
            BuiltinMap::KappaHalf => Ok(Self::kappa_half()),
        }
    }

    fn check_data(&self) -> Result<(), MapError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(MapError::Config(format!("{name} = {v} must be positive and finite")))
            }
        };
        positive("K", self.k)?;
        positive("C", self.c)?;
        positive("kappa", self.kappa)?;
        positive("u", self.u)?;
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(MapError::Config(format!("q = {} must be nonnegative", self.q)));
        }
        Ok(())
    }

    /// Replaces the validity radius. For Ricker maps `C` is recomputed for the new radius.
    pub fn with_u(mut self, u: f64) -> Result<Self, MapError> {
        self.u = u;
        if let MapKind::Ricker { r } = self.kind {
            self.c = ricker_remainder_constant(r, u);
        }
        self.check_data()?;
        Ok(self)
    }

    /// Replaces the recorded fixed point without touching the map.
    pub fn with_fixed_point(mut self, k: f64) -> Result<Self, MapError> {
        self.k = k;
        self.check_data()?;
        Ok(self)
    }

    pub fn with_truncation(mut self, truncate_at_zero: bool) -> Self {
        self.truncate_at_zero = truncate_at_zero;
        self
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Supplies slope bounds directly, for maps outside the smooth-remainder setting.
    pub fn with_bounds(mut self, bounds: LocalBounds) -> Self {
        self.bounds_override = Some(bounds);
        self
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn truncate_at_zero(&self) -> bool {
        self.truncate_at_zero
    }
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }
    pub fn bounds_override(&self) -> Option<LocalBounds> {
        self.bounds_override
    }

    /// The map without truncation.
    pub fn raw(&self, z: f64) -> f64 {
        match &self.kind {
            MapKind::Logistic { r } => r * z * (1.0 - z),
            MapKind::Ricker { r } => z * (r * (1.0 - z)).exp(),
            MapKind::KappaHalf => {
                let x = z - 1.0;
                1.5 * x + 0.5 * x.abs().powf(1.5) + 1.0
            }
            MapKind::Custom { expr, .. } => expr.eval(z),
        }
    }

    /// Applies the truncation flag to a candidate next state.
    pub fn clamp(&self, z: f64) -> f64 {
        if self.truncate_at_zero && z < 0.0 {
            0.0
        } else {
            z
        }
    }

    /// `f(z)`, clamped at 0 when the map truncates.
    pub fn eval(&self, z: f64) -> Result<f64, MapError> {
        let value = self.raw(z);
        if !value.is_finite() {
            return Err(MapError::Eval { z, value });
        }
        Ok(self.clamp(value))
    }

    /// `f(K + x) - K + s (1 + q) x` with `s` the orientation sign flipped, i.e. the
    /// part of the map beyond its linearisation at `K`.
    pub fn residual(&self, x: f64) -> Result<f64, MapError> {
        let fz = self.eval(self.k + x)?;
        Ok(fz - self.k - self.orientation.sign() * (1.0 + self.q) * x)
    }

    /// Noise as seen by the linear multiplier `1 + q - sigma xi`.
    ///
    /// An orientation-preserving map multiplies deviations by `1 + q + sigma xi`,
    /// which is the flipped form driven by `-xi`.
    pub fn effective_noise(&self, noise: &NoiseSpec) -> NoiseSpec {
        match self.orientation {
            Orientation::Flip => noise.clone(),
            Orientation::Preserve => noise.reflected(),
        }
    }

    /// Slope bounds on `I_{u,K}` used by the directed walk.
    pub fn local_bounds(&self) -> Result<LocalBounds, MapError> {
        if let Some(b) = self.bounds_override {
            return LocalBounds::new(b.underline_l, b.bar_q);
        }
        let u = self.u;
        match self.kind {
            MapKind::Logistic { r } => LocalBounds::new(r - 2.0 * u * r - 2.0, r + 2.0 * u * r - 3.0),
            MapKind::Ricker { r } if r >= 3.0 => {
                let lower = (-r * u).exp() * (r * (1.0 + u) - 1.0);
                let upper = (r * u).exp() * (r * (1.0 - u) - 1.0);
                LocalBounds::new(lower, upper - 1.0)
            }
            _ => self.generic_bounds(),
        }
    }

    fn generic_bounds(&self) -> Result<LocalBounds, MapError> {
        let cu = self.c * self.u.powf(self.kappa);
        if cu >= 0.5 {
            return Err(MapError::DwcInapplicable(format!("need C u^kappa < 1/2, got {cu}")));
        }
        LocalBounds::new(1.0 + self.q - cu, self.q + cu)
    }

    /// Checks the fixed point, the side-switching sign pattern, the remainder bound
    /// and the domain on a deterministic grid of `n_samples` points plus 1000 seeded
    /// random points in `I_{u,K}`.
    pub fn validate(&self, n_samples: usize) -> ValidationReport {
        let mut checks = Vec::new();

        let fk = self.raw(self.k);
        let fp_err = (fk - self.k).abs();
        checks.push(Check {
            name: "fixed point",
            passed: fk.is_finite() && fp_err <= FIXED_POINT_TOL,
            detail: format!("|f(K) - K| = {fp_err:e}"),
        });

        let mut xs = Vec::with_capacity(n_samples.max(1) + VALIDATION_RANDOM_POINTS);
        let n = n_samples.max(1);
        for i in 0..n {
            // interior grid, symmetric, avoiding both endpoints
            let t = (i as f64 + 0.5) / n as f64;
            xs.push(self.u * (2.0 * t - 1.0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
        for _ in 0..VALIDATION_RANDOM_POINTS {
            let t = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            xs.push(self.u * (2.0 * t - 1.0));
        }
        xs.retain(|&x| x != 0.0 && x.abs() < self.u);

        let sign = self.orientation.sign();
        let mut sign_fail: Option<f64> = None;
        let mut rem_worst = 0.0f64;
        let mut rem_fail: Option<f64> = None;
        let mut eval_fail: Option<f64> = None;
        for &x in &xs {
            let fz = match self.eval(self.k + x) {
                Ok(v) => v,
                Err(_) => {
                    eval_fail.get_or_insert(x);
                    continue;
                }
            };
            let dev = fz - self.k;
            if !(sign * x * dev > 0.0) && sign_fail.is_none() {
                sign_fail = Some(x);
            }
            let phi = dev - sign * (1.0 + self.q) * x;
            let bound = self.c * x.abs().powf(1.0 + self.kappa);
            let ratio = phi.abs() / bound;
            rem_worst = rem_worst.max(ratio);
            if phi.abs() > bound * (1.0 + 1e-9) + 1e-15 && rem_fail.is_none() {
                rem_fail = Some(x);
            }
        }

        checks.push(Check {
            name: "finite evaluation",
            passed: eval_fail.is_none(),
            detail: match eval_fail {
                Some(x) => format!("non-finite f at z = K + {x:e}"),
                None => format!("{} points", xs.len()),
            },
        });
        let side = match self.orientation {
            Orientation::Flip => "(z - K)(f(z) - K) < 0",
            Orientation::Preserve => "(z - K)(f(z) - K) > 0",
        };
        checks.push(Check {
            name: "sign pattern",
            passed: sign_fail.is_none(),
            detail: match sign_fail {
                Some(x) => format!("{side} fails at z = K + {x:e}"),
                None => side.to_string(),
            },
        });
        checks.push(Check {
            name: "remainder bound",
            passed: rem_fail.is_none(),
            detail: match rem_fail {
                Some(x) => format!("|phi| > C|x|^(1+kappa) at x = {x:e}; worst ratio {rem_worst:.6}"),
                None => format!("worst |phi| / (C|x|^(1+kappa)) = {rem_worst:.6}"),
            },
        });
        let lower = self.k - self.u;
        checks.push(Check { name: "domain", passed: lower >= 0.0, detail: format!("K - u = {lower}") });

        ValidationReport { checks }
    }
}

/// `sup_{0 < |x| <= u} |phi(x)| / x^2` for the Ricker map, from a fine grid plus the
/// limit at `x -> 0`, padded by a relative margin of 1e-6.
fn ricker_remainder_constant(r: f64, u: f64) -> f64 {
    let phi = |x: f64| (1.0 + x) * (-r * x).exp() - 1.0 + (r - 1.0) * x;
    let mut best = (r * r / 2.0 - r).abs();
    let n = 20_000;
    for i in 0..=n {
        let x = u * (2.0 * i as f64 / n as f64 - 1.0);
        if x.abs() < 1e-4 {
            continue;
        }
        best = best.max(phi(x).abs() / (x * x));
    }
    best * (1.0 + 1e-6)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "ok" } else { "FAIL" };
            writeln!(f, "{tag:>4}  {:<18} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}
