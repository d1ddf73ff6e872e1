//! Run configuration: a line-oriented `section.key = value` file (or JSON) and
//! its resolution into controller settings and derived constants.
//!
//! Values are numbers, `true`/`false`, comma-separated number lists, or text;
//! text that would read as something else can be double-quoted. Lines starting
//! with `#` are comments.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::control::{ControlConfig, Regime};
use crate::maps::{LocalBounds, MapSpec, Orientation};
use crate::noise::NoiseSpec;
use crate::params::{
    derive_combined, derive_dwc, derive_mnc, CombinedParams, DwcChoices, DwcParams, Magnitude, MncChoices, MncParams,
    NbarRule, Relation,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}{field}: {message}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Field { field: String, line: Option<usize>, message: String },
    #[error("{0}")]
    Resolve(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapName {
    #[default]
    Logistic,
    Ricker,
    KappaHalf,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    #[serde(default)]
    pub kind: MapName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<OrientationName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub underline_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bar_q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationName {
    Flip,
    Preserve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseName {
    #[default]
    Bernoulli,
    Uniform,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub kind: NoiseName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    #[default]
    MncOnly,
    DwcThenMnc,
    Combined,
}

/// A number, or `auto` to take the derived value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Setting {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for Setting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Setting::Auto => s.serialize_str("auto"),
            Setting::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "auto" => Ok(Setting::Auto),
            Value::Number(n) => n.as_f64().map(Setting::Value).ok_or_else(|| serde::de::Error::custom("bad number")),
            other => Err(serde::de::Error::custom(format!("expected a number or auto, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default)]
    pub regime: RegimeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iota: Option<f64>,
    #[serde(default)]
    pub delta: Setting,
    #[serde(default)]
    pub beta: Setting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk_noise: Option<NoiseName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbarRuleName {
    Chebyshev,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MncSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar_rule: Option<NbarRuleName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar_floor: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwcSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Hand-set steps `alpha_j = alpha_coeff a^-(j+1) u` instead of derived ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_coeff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatName {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: FormatName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub map: MapSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub mnc: MncSection,
    #[serde(default)]
    pub dwc: DwcSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    if let Some(inner) = raw.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
        return Value::String(inner.to_string());
    }
    match raw {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if let Ok(n @ Value::Number(_)) = serde_json::from_str::<Value>(raw) {
        return n;
    }
    if raw.contains(',') {
        let items: Option<Vec<Value>> = raw
            .split(',')
            .map(|s| match serde_json::from_str::<Value>(s.trim()) {
                Ok(n @ Value::Number(_)) => Some(n),
                _ => None,
            })
            .collect();
        if let Some(items) = items {
            return Value::Array(items);
        }
    }
    Value::String(raw.to_string())
}

impl RunConfig {
    /// Parses either format; text starting with `{` is read as JSON.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            let de = &mut serde_json::Deserializer::from_str(text);
            return serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Field {
                field: e.path().to_string(),
                line: None,
                message: e.inner().to_string(),
            });
        }
        let mut root = Map::new();
        let mut lines: HashMap<String, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n,
                message: format!("expected 'section.key = value', got '{line}'"),
            })?;
            let key = key.trim();
            let parts: Vec<&str> = key.split('.').collect();
            if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
                return Err(ConfigError::Syntax { line: n, message: format!("key '{key}' must be section.key") });
            }
            if let Some(first) = lines.insert(key.to_string(), n) {
                return Err(ConfigError::Syntax { line: n, message: format!("'{key}' already set on line {first}") });
            }
            let section = root.entry(parts[0].to_string()).or_insert_with(|| Value::Object(Map::new()));
            section.as_object_mut().expect("sections are objects").insert(parts[1].to_string(), parse_value(value));
        }
        serde_path_to_error::deserialize(Value::Object(root)).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::Field { line: lines.get(&field).copied(), field, message: e.inner().to_string() }
        })
    }

    /// Applies `section.key=value` overrides on top of this configuration.
    pub fn with_overrides(&self, sets: &[String]) -> Result<Self, ConfigError> {
        let mut root = serde_json::to_value(self).expect("config serializes");
        for set in sets {
            let (key, value) = set
                .split_once('=')
                .ok_or_else(|| ConfigError::Resolve(format!("override '{set}' must look like section.key=value")))?;
            let Some((section, field)) = key.trim().split_once('.') else {
                return Err(ConfigError::Resolve(format!("override key '{key}' must be section.key")));
            };
            let obj = root
                .as_object_mut()
                .expect("object")
                .get_mut(section)
                .and_then(Value::as_object_mut)
                .ok_or_else(|| ConfigError::Resolve(format!("unknown section '{section}'")))?;
            obj.insert(field.to_string(), parse_value(value));
        }
        serde_path_to_error::deserialize(root).map_err(|e| ConfigError::Field {
            field: e.path().to_string(),
            line: None,
            message: e.inner().to_string(),
        })
    }

    /// Writes every set field as `section.key = value`, in a form [`RunConfig::parse`]
    /// reads back to an equal value.
    pub fn to_lines(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (section, fields) in value.as_object().expect("object") {
            for (key, v) in fields.as_object().expect("sections are objects") {
                let text = match v {
                    Value::Null => continue,
                    Value::String(s) => {
                        if matches!(parse_value(s), Value::String(ref p) if p == s) && !s.starts_with('"') {
                            s.clone()
                        } else {
                            format!("\"{s}\"")
                        }
                    }
                    Value::Array(items) => {
                        if items.is_empty() {
                            continue;
                        }
                        items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
                    }
                    other => other.to_string(),
                };
                out.push_str(&format!("{section}.{key} = {text}\n"));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_map(&self) -> Result<MapSpec, ConfigError> {
        let m = &self.map;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| ConfigError::Resolve(format!("map.{name} is required for map.kind = {:?}", m.kind)))
        };
        let r = |res: Result<MapSpec, crate::maps::MapError>| res.map_err(|e| ConfigError::Resolve(e.to_string()));
        let mut map = match m.kind {
            MapName::Logistic => r(MapSpec::logistic(need(m.r, "r")?))?,
            MapName::Ricker => r(MapSpec::ricker(need(m.r, "r")?))?,
            MapName::KappaHalf => MapSpec::kappa_half(),
            MapName::Custom => {
                let expr = m
                    .expr
                    .as_deref()
                    .ok_or_else(|| ConfigError::Resolve("map.expr is required for a custom map".into()))?;
                r(MapSpec::custom(
                    expr,
                    need(m.k, "k")?,
                    need(m.q, "q")?,
                    need(m.c, "c")?,
                    need(m.kappa, "kappa")?,
                    need(m.u, "u")?,
                ))?
            }
        };
        if let Some(u) = m.u {
            map = r(map.with_u(u))?;
        }
        if let Some(t) = m.truncate {
            map = map.with_truncation(t);
        }
        if let Some(o) = m.orientation {
            map = map.with_orientation(match o {
                OrientationName::Flip => Orientation::Flip,
                OrientationName::Preserve => Orientation::Preserve,
            });
        }
        match (m.underline_l, m.bar_q) {
            (Some(l), Some(q)) => {
                map = map.with_bounds(LocalBounds::new(l, q).map_err(|e| ConfigError::Resolve(e.to_string()))?)
            }
            (None, None) => {}
            _ => return Err(ConfigError::Resolve("map.underline_l and map.bar_q must be given together".into())),
        }
        Ok(map)
    }

    pub fn build_noise(&self) -> Result<NoiseSpec, ConfigError> {
        noise_from(self.noise.kind, &self.noise)
    }

    pub fn sigma(&self) -> Result<f64, ConfigError> {
        self.control.sigma.ok_or_else(|| ConfigError::Resolve("control.sigma is required".into()))
    }

    pub fn gamma(&self) -> f64 {
        self.mnc.gamma.unwrap_or(DEFAULT_GAMMA)
    }

    fn mnc_choices(&self) -> MncChoices {
        let d = MncChoices::default();
        MncChoices {
            varsigma: self.mnc.varsigma,
            epsilon: self.mnc.epsilon,
            nbar_rule: match self.mnc.nbar_rule {
                Some(NbarRuleName::Normal) => NbarRule::Normal,
                Some(NbarRuleName::Chebyshev) => NbarRule::Chebyshev,
                None => d.nbar_rule,
            },
            nbar_floor: self.mnc.nbar_floor.unwrap_or(d.nbar_floor),
            strict: self.mnc.strict.unwrap_or(d.strict),
        }
    }

    fn dwc_choices(&self) -> DwcChoices {
        DwcChoices { a: self.dwc.a, ell_c: self.dwc.ell_c, b: self.dwc.b, mu: self.dwc.mu, ell: self.dwc.ell }
    }

    fn walk(&self, map: &MapSpec, target: f64) -> Result<DwcParams, ConfigError> {
        let u = map.u();
        let res = match self.dwc.alpha_coeff {
            Some(coeff) => DwcParams::manual(
                self.dwc.a.unwrap_or(DEFAULT_A),
                coeff,
                self.dwc.ell_c.unwrap_or(DEFAULT_ELL_C),
                self.dwc.ell.unwrap_or(DEFAULT_ELL_FRACTION * target),
                u,
                target,
            ),
            None => {
                let bounds = map.local_bounds().map_err(|e| ConfigError::Resolve(e.to_string()))?;
                derive_dwc(bounds, u, target, &self.dwc_choices())
            }
        };
        res.map_err(|e| ConfigError::Resolve(e.to_string()))
    }

    /// Derives every constant the regime needs and fills in `auto` settings.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let map = self.build_map()?;
        let noise = self.build_noise()?;
        let sigma = self.sigma()?;
        let gamma = self.gamma();
        let mnc = derive_mnc(&map, &noise, sigma, gamma, &self.mnc_choices());
        let mnc_delta = || -> Result<Magnitude, ConfigError> {
            match &mnc {
                Ok(p) => Ok(p.delta),
                Err(e) => {
                    Err(ConfigError::Resolve(format!("control.delta = auto needs the noise-control constants: {e}")))
                }
            }
        };
        let delta = match self.control.delta {
            Setting::Auto => mnc_delta()?,
            Setting::Value(d) if d > 0.0 => Magnitude::new(d),
            Setting::Value(d) => return Err(ConfigError::Resolve(format!("control.delta = {d} must be positive"))),
        };

        let mut combined = None;
        let regime = match self.control.regime {
            RegimeName::MncOnly => Regime::MncOnly,
            RegimeName::DwcThenMnc => {
                let target = delta.checked_f64().ok_or_else(|| {
                    ConfigError::Resolve(format!("delta = {delta} is below double precision; set control.delta"))
                })?;
                Regime::DwcThenMnc { dwc: self.walk(&map, target)? }
            }
            RegimeName::Combined => {
                let iota = self.control.iota.unwrap_or((1.0 - map.q() / sigma) / 2.0);
                let derived = derive_combined(&map, &noise, sigma, iota, delta);
                let beta = match self.control.beta {
                    Setting::Auto => derived.as_ref().map_err(|e| ConfigError::Resolve(e.to_string()))?.beta,
                    Setting::Value(b) => b,
                };
                combined = derived.ok();
                Regime::Combined { dwc: self.walk(&map, beta)?, beta }
            }
        };

        let walk_noise = match self.control.walk_noise {
            Some(kind) => noise_from(kind, &self.noise)?,
            None => NoiseSpec::Uniform,
        };
        let control =
            ControlConfig { z0: self.control.z0.unwrap_or(map.k()), map, noise, walk_noise, sigma, delta, regime };
        control.check().map_err(|e| ConfigError::Resolve(e.to_string()))?;
        let (mnc, mnc_error) = match mnc {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(Resolved { control, gamma, mnc, mnc_error, combined })
    }
}

pub const DEFAULT_GAMMA: f64 = 0.1;
/// Ladder ratio of a hand-set walk.
pub const DEFAULT_A: f64 = 1.25;
pub const DEFAULT_ELL_C: f64 = 0.1;
/// Additive walk noise of a hand-set walk, as a fraction of its target radius.
pub const DEFAULT_ELL_FRACTION: f64 = 0.01;

fn noise_from(kind: NoiseName, s: &NoiseSection) -> Result<NoiseSpec, ConfigError> {
    Ok(match kind {
        NoiseName::Bernoulli => NoiseSpec::Bernoulli,
        NoiseName::Uniform => NoiseSpec::Uniform,
        NoiseName::Discrete => {
            let (Some(v), Some(p)) = (&s.values, &s.probs) else {
                return Err(ConfigError::Resolve("discrete noise needs noise.values and noise.probs".into()));
            };
            NoiseSpec::discrete(v.clone(), p.clone()).map_err(|e| ConfigError::Resolve(e.to_string()))?
        }
    })
}

/// A configuration with every `auto` field filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub control: ControlConfig,
    pub gamma: f64,
    pub mnc: Option<MncParams>,
    /// Why the noise-control constants are unavailable, when they are.
    pub mnc_error: Option<String>,
    pub combined: Option<CombinedParams>,
}

/// A derived constant and its printed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: String,
    pub value: String,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl Resolved {
    pub fn constants(&self) -> Vec<Constant> {
        let mut out = Vec::new();
        let mut put = |name: &str, value: String| out.push(Constant { name: name.to_string(), value });
        let c = &self.control;
        put("map", c.map.kind().to_string());
        put("K", num(c.map.k()));
        put("q", num(c.map.q()));
        put("C", num(c.map.c()));
        put("kappa", num(c.map.kappa()));
        put("u", num(c.map.u()));
        put("noise", c.noise.to_string());
        put("sigma", num(c.sigma));
        put("gamma", num(self.gamma));
        put("regime", c.regime.name().to_string());
        put("delta", c.delta.to_string());
        put("z0", num(c.z0));
        if let Some(p) = &self.mnc {
            put("lambda", num(p.lambda));
            put("theta2", num(p.theta2));
            put("varsigma", num(p.varsigma));
            put("epsilon", num(p.epsilon));
            put("bar_theta", num(p.bar_theta));
            put("bar_v", num(p.bar_v));
            put("nbar_chebyshev", p.nbar_chebyshev.to_string());
            put("nbar_normal", p.nbar_normal.to_string());
            put("nbar", p.nbar.to_string());
            put("M", p.m.to_string());
            put("nbar1", p.nbar1.to_string());
            put("nbar2", p.nbar2.to_string());
            put("eta", p.eta.to_string());
            put("mnc_delta", p.delta.to_string());
            put("nbar_return", p.nbar_return.to_string());
        }
        if let Some(e) = &self.mnc_error {
            put("mnc_unavailable", e.clone());
        }
        if let Some(dwc) = c.regime.dwc() {
            put("a", num(dwc.ladder.a));
            put("ladder_target", num(dwc.ladder.target));
            put("k", dwc.ladder.k.to_string());
            put("ell_c", num(dwc.ell_c));
            put("ell", num(dwc.ell));
            put("alpha_0", num(dwc.alpha(0)));
            put("alpha_k", num(dwc.alpha(dwc.ladder.k)));
            if let Some(d) = &dwc.derivation {
                put("underline_L", num(d.underline_l));
                put("bar_q", num(d.bar_q));
                put("epsilon0", num(d.epsilon0));
                put("B", num(d.b));
                put("rho", num(d.rho));
                put("mu", num(d.mu));
                put("step_bound", num(d.step_bound));
                put("barm", d.barm.to_string());
            }
        }
        if let Regime::Combined { beta, .. } = &c.regime {
            put("beta", num(*beta));
        }
        if let Some(p) = &self.combined {
            put("iota", num(p.iota));
            put("p_iota", num(p.p_iota));
            put("theta_iota", num(p.theta_iota));
            put("theta_sup", num(p.theta_sup));
            put("beta1", num(p.beta1));
            put("beta2", num(p.beta2));
            put("beta_derived", num(p.beta));
            put("H", num(p.h_iota));
            put("bar_s", p.bar_s.to_string());
        }
        out
    }

    pub fn relations(&self) -> Vec<Relation> {
        let mut out = Vec::new();
        if let Some(p) = &self.mnc {
            out.extend(p.relations());
        }
        if let Some(d) = self.control.regime.dwc() {
            out.extend(d.relations());
        }
        if let Some(p) = &self.combined {
            out.extend(p.relations());
        }
        out
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_lines())
    }
}
