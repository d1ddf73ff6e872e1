//! Derivation of every constant the convergence arguments need.
//!
//! [`mnc`] covers the multiplicative-noise constants (`varsigma`, `epsilon`, `N`,
//! `M`, `eta`, `delta`, ...), [`dwc`] the directed-walk ladder, and [`combined`]
//! the switching radius `beta` and forced-run length `s`.

pub mod combined;
pub mod dwc;
pub mod mnc;

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::maps::MapError;
use crate::noise::NoiseError;

pub use combined::{derive_combined, forced_steps, CombinedParams};
pub use dwc::{derive_dwc, DwcChoices, DwcParams, Ladder};
pub use mnc::{derive_mnc, nbar_chebyshev, nbar_normal, MncChoices, MncParams, NbarRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("not stabilizable at this (q, sigma, noise): lambda = {lambda} <= 0")]
    NotStabilizable { lambda: f64 },
    #[error("invalid parameter: {0}")]
    Config(String),
    #[error("delta underflows double precision: delta = {0}")]
    DeltaUnderflow(Magnitude),
    #[error("could not certify N1 within {budget} terms")]
    N1Uncertified { budget: u64 },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// A named relation between derived constants and whether it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub name: &'static str,
    pub statement: String,
    pub holds: bool,
}

/// A positive number stored by its natural logarithm, so that constants such as
/// `M = Theta^(N - 1)` or `delta` survive far outside the range of `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Magnitude {
    ln: f64,
}

impl Magnitude {
    pub const ONE: Magnitude = Magnitude { ln: 0.0 };

    pub fn from_ln(ln: f64) -> Self {
        Self { ln }
    }

    /// Panics unless `x > 0`.
    pub fn new(x: f64) -> Self {
        assert!(x > 0.0, "Magnitude requires a positive value, got {x}");
        Self { ln: x.ln() }
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    pub fn log10(self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }

    /// Value as `f64`; may be `0` or `inf` when out of range.
    pub fn to_f64(self) -> f64 {
        self.ln.exp()
    }

    /// Value as a normal `f64`, or `None` when it under- or overflows.
    pub fn checked_f64(self) -> Option<f64> {
        let v = self.ln.exp();
        (v.is_normal()).then_some(v)
    }

    pub fn powf(self, p: f64) -> Self {
        Self { ln: self.ln * p }
    }

    pub fn min(self, other: Magnitude) -> Self {
        if other.ln < self.ln {
            other
        } else {
            self
        }
    }

    /// Decimal mantissa in `[1, 10)` and exponent.
    pub fn mantissa_exponent(self) -> (f64, i64) {
        let l = self.log10();
        let e = l.floor();
        let mut m = 10f64.powf(l - e);
        let mut e = e as i64;
        if m >= 10.0 {
            m /= 10.0;
            e += 1;
        }
        (m, e)
    }

    /// Whether `|x| < self`, compared in log space.
    pub fn exceeds_abs(self, x: f64) -> bool {
        x == 0.0 || x.abs().ln() < self.ln
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln.partial_cmp(&other.ln)
    }
}

// values are stored as logarithms, so products add
impl std::ops::Mul for Magnitude {
    type Output = Magnitude;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, other: Magnitude) -> Magnitude {
        Magnitude { ln: self.ln + other.ln }
    }
}

impl std::ops::Div for Magnitude {
    type Output = Magnitude;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, other: Magnitude) -> Magnitude {
        Magnitude { ln: self.ln - other.ln }
    }
}

/// Sum computed without leaving log space.
impl std::ops::Add for Magnitude {
    type Output = Magnitude;
    fn add(self, other: Magnitude) -> Magnitude {
        let (hi, lo) = if self.ln >= other.ln { (self.ln, other.ln) } else { (other.ln, self.ln) };
        Magnitude { ln: hi + (lo - hi).exp().ln_1p() }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.checked_f64() {
            Some(v) if self.log10() > -300.0 && self.log10() < 300.0 => write!(f, "{v:.16e}"),
            _ => {
                let (m, e) = self.mantissa_exponent();
                write!(f, "{m:.16}e{e}")
            }
        }
    }
}

/// Parses the output of [`Magnitude`]'s `Display`, including exponents beyond `f64`.
impl std::str::FromStr for Magnitude {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (m, e) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], &s[i + 1..]),
            None => (s, "0"),
        };
        let m: f64 = m.parse().map_err(|_| format!("bad mantissa in '{s}'"))?;
        let e: i64 = e.parse().map_err(|_| format!("bad exponent in '{s}'"))?;
        if !(m > 0.0) {
            return Err(format!("'{s}' is not positive"));
        }
        Ok(Self { ln: m.ln() + e as f64 * std::f64::consts::LN_10 })
    }
}
