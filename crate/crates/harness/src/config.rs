//! Declarative scenario files.

use serde::{Deserialize, Serialize};

use qbhardy::extrap::MonotoneFn;
use qbhardy::funcspace::expr::FuncExpr;
use qbhardy::funcspace::Domain;
use qbhardy::operators::MonotoneTag;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Classify,
    HatClassify,
    Norm,
    GrandNorm,
    HardyCheck,
    TheoremA,
    #[serde(rename = "lemma-2-2")]
    Lemma22,
    ExtrapolateMain,
    ExtrapolateInfinity,
    GrandExtrapolate,
    HardyGrand,
    Necessity,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::Classify => "classify",
            ScenarioKind::HatClassify => "hat-classify",
            ScenarioKind::Norm => "norm",
            ScenarioKind::GrandNorm => "grand-norm",
            ScenarioKind::HardyCheck => "hardy-check",
            ScenarioKind::TheoremA => "theorem-a",
            ScenarioKind::Lemma22 => "lemma-2-2",
            ScenarioKind::ExtrapolateMain => "extrapolate-main",
            ScenarioKind::ExtrapolateInfinity => "extrapolate-infinity",
            ScenarioKind::GrandExtrapolate => "grand-extrapolate",
            ScenarioKind::HardyGrand => "hardy-grand",
            ScenarioKind::Necessity => "necessity",
        }
    }
}

/// Whether the scenario's check is expected to pass or to fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    #[default]
    Pass,
    Fail,
}

/// `psi` for `S_psi` and the `psi`-weighted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSpec {
    pub function: FuncExpr,
    #[serde(default = "unknown_tag")]
    pub tag: MonotoneTag,
}

fn unknown_tag() -> MonotoneTag {
    MonotoneTag::Unknown
}

fn default_beta() -> f64 {
    0.0
}

fn default_tol() -> f64 {
    1e-6
}

fn is_default_tol(t: &f64) -> bool {
    *t == default_tol()
}

fn is_zero(b: &f64) -> bool {
    *b == 0.0
}

fn is_half_line(d: &Domain) -> bool {
    *d == Domain::HalfLine
}

fn is_pass(e: &Expectation) -> bool {
    *e == Expectation::Pass
}

fn default_domain() -> Domain {
    Domain::HalfLine
}

/// One experiment. Which fields are required depends on `kind`; unknown fields are rejected.
///
/// `grid` is the kind's parameter grid: radii for `classify`, `eps` for `hat-classify` and
/// `extrapolate-main`, `t` for `lemma-2-2`, `alpha` for `extrapolate-infinity`, `sigma` for
/// `grand-extrapolate` and `hardy-grand`, and the decreasing `r` sequence for `necessity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FuncExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<FuncExpr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<FuncExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<PsiSpec>,
    #[serde(default = "default_beta", skip_serializing_if = "is_zero")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// When omitted: the certified `phi` of the pair for `lemma-2-2` and `extrapolate-main`,
    /// the identity otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<MonotoneFn>,
    #[serde(default = "default_domain", skip_serializing_if = "is_half_line")]
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// `necessity` only: every per-step growth factor must reach this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_growth: Option<f64>,
    #[serde(default = "default_tol", skip_serializing_if = "is_default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "is_pass")]
    pub expect: Expectation,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            name: None,
            kind,
            function: None,
            family: None,
            weight: None,
            psi: None,
            beta: 0.0,
            p: None,
            p0: None,
            theta: None,
            eps: None,
            phi: None,
            domain: Domain::HalfLine,
            grid: None,
            min_growth: None,
            tol: default_tol(),
            expect: Expectation::Pass,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.label().to_string())
    }

    /// `phi`, or the identity when omitted.
    pub fn phi(&self) -> MonotoneFn {
        self.phi.unwrap_or(MonotoneFn::Identity)
    }

    pub fn from_json(src: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(src).map_err(|e| HarnessError::config("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// A suite file: either a bare array of scenarios or `{"scenarios": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SuiteFile {
    List(Vec<ScenarioConfig>),
    Wrapped {
        scenarios: Vec<ScenarioConfig>,
    },
}

impl SuiteFile {
    pub fn into_scenarios(self) -> Vec<ScenarioConfig> {
        match self {
            SuiteFile::List(v) | SuiteFile::Wrapped { scenarios: v } => v,
        }
    }

    pub fn from_json(src: &str) -> Result<Vec<ScenarioConfig>, HarnessError> {
        // Parse as a generic value first so errors from the scenarios themselves surface.
        let value: serde_json::Value =
            serde_json::from_str(src).map_err(|e| HarnessError::config("suite", e.to_string()))?;
        let items = match value {
            serde_json::Value::Array(items) => items,
            serde_json::Value::Object(mut m) if m.len() == 1 && m.contains_key("scenarios") => {
                match m.remove("scenarios") {
                    Some(serde_json::Value::Array(items)) => items,
                    _ => return Err(HarnessError::config("scenarios", "must be an array")),
                }
            }
            _ => return Err(HarnessError::config("suite", "expected an array or {\"scenarios\": [...]}")),
        };
        items
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value(v).map_err(|e| HarnessError::config(&format!("scenarios[{i}]"), e.to_string()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_normalizes_defaults() {
        let src = r#"{"kind":"classify","weight":{"kind":"power","exponent":0.5},"beta":-0.5,"p":2,
                      "tol":1e-6,"expect":"pass","domain":"half-line"}"#;
        let c = ScenarioConfig::from_json(src).unwrap();
        let out = serde_json::to_string(&c).unwrap();
        assert_eq!(out, r#"{"kind":"classify","weight":{"kind":"power","exponent":0.5},"beta":-0.5,"p":2.0}"#);
        assert_eq!(ScenarioConfig::from_json(&out).unwrap(), c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"kind":"norm","colour":1}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"kind":"sorting"}"#).is_err());
    }

    #[test]
    fn suite_accepts_both_layouts() {
        let a = SuiteFile::from_json(r#"[{"kind":"norm"}]"#).unwrap();
        let b = SuiteFile::from_json(r#"{"scenarios":[{"kind":"norm"}]}"#).unwrap();
        assert_eq!(a, b);
        let err = SuiteFile::from_json(r#"[{"kind":"norm"},{"kind":"norm","x":1}]"#).unwrap_err();
        assert!(err.to_string().contains("scenarios[1]"), "{err}");
    }
}
