//! Serialized function expressions.
//!
//! A function is described by a tree of objects tagged with `kind`:
//!
//! ```json
//! {"kind": "sum", "terms": [
//!     {"kind": "power", "exponent": -0.5, "support": [0, 1]},
//!     {"kind": "scaled", "factor": 2.0, "power": -1.0,
//!      "inner": {"kind": "indicator", "support": [1, "inf"]}}
//! ]}
//! ```
//!
//! Interval bounds accept the sentinels `"inf"` and `"-inf"`. Everything except
//! `opaque-named` lowers to a [`ClosedFormFunc`]; opaque names resolve through a
//! small built-in registry of evaluable functions.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use super::{ClosedFormFunc, EvaluableFunc, Func, Support, Term};
use crate::error::{Error, Result};

/// `[lo, hi]` with infinite sentinels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds(pub f64, pub f64);

impl Bounds {
    pub const HALF_LINE: Bounds = Bounds(0.0, f64::INFINITY);

    pub fn to_support(self) -> Result<Support> {
        Support::new(self.0, self.1)
    }
}

/// A real that may be written as `"inf"`, `"-inf"` or `"nan"`.
pub fn parse_ext_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

pub fn ext_real_label(v: f64) -> Option<&'static str> {
    if v == f64::INFINITY {
        Some("inf")
    } else if v == f64::NEG_INFINITY {
        Some("-inf")
    } else if v.is_nan() {
        Some("nan")
    } else {
        None
    }
}

/// Serde adapter for `f64` fields that may hold non-finite values.
pub mod ext_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        match ext_real_label(*v) {
            Some(label) => s.serialize_str(label),
            None => s.serialize_f64(*v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        d.deserialize_any(ExtRealVisitor)
    }
}

struct ExtRealVisitor;

impl<'de> Visitor<'de> for ExtRealVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\"")
    }
    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
        Ok(v)
    }
    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
        Ok(v as f64)
    }
    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
        Ok(v as f64)
    }
    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
        parse_ext_real(v).ok_or_else(|| E::custom(format!("not a real: {v:?}")))
    }
}

struct ExtReal(f64);

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(ExtRealVisitor).map(ExtReal)
    }
}

impl Serialize for Bounds {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        for v in [self.0, self.1] {
            match ext_real_label(v) {
                Some(label) => t.serialize_element(label)?,
                None => t.serialize_element(&v)?,
            }
        }
        t.end()
    }
}

impl<'de> Deserialize<'de> for Bounds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct BoundsVisitor;
        impl<'de> Visitor<'de> for BoundsVisitor {
            type Value = Bounds;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a two-element array [lo, hi]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Bounds, A::Error> {
                let lo: ExtReal = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let hi: ExtReal = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Bounds(lo.0, hi.0))
            }
        }
        d.deserialize_seq(BoundsVisitor)
    }
}

fn one() -> f64 {
    1.0
}

fn half_line() -> Bounds {
    Bounds::HALF_LINE
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn is_half_line(b: &Bounds) -> bool {
    *b == Bounds::HALF_LINE
}

/// Expression tree for a function on (0, inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FuncExpr {
    /// `coef * x^exponent` on `support`.
    Power {
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coef: f64,
        exponent: f64,
        #[serde(default = "half_line", skip_serializing_if = "is_half_line")]
        support: Bounds,
    },
    /// `coef * x^exponent * (ln x)^log_exponent` on `support`.
    Logpower {
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coef: f64,
        exponent: f64,
        log_exponent: u32,
        #[serde(default = "half_line", skip_serializing_if = "is_half_line")]
        support: Bounds,
    },
    Indicator { support: Bounds },
    Sum { terms: Vec<FuncExpr> },
    /// `factor * x^power * inner(x)`.
    Scaled {
        #[serde(default = "one", skip_serializing_if = "is_one")]
        factor: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        power: f64,
        inner: Box<FuncExpr>,
    },
    Restrict { support: Bounds, inner: Box<FuncExpr> },
    #[serde(rename = "opaque-named")]
    OpaqueNamed {
        name: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
}

impl FuncExpr {
    pub fn power(exponent: f64) -> Self {
        FuncExpr::Power { coef: 1.0, exponent, support: Bounds::HALF_LINE }
    }

    pub fn one() -> Self {
        Self::power(0.0)
    }

    pub fn indicator(lo: f64, hi: f64) -> Self {
        FuncExpr::Indicator { support: Bounds(lo, hi) }
    }

    /// Lower to a closed form when no opaque node is involved.
    pub fn to_closed(&self) -> Result<Option<ClosedFormFunc>> {
        Ok(match self {
            FuncExpr::Power { coef, exponent, support } => {
                Some(ClosedFormFunc::new(vec![Term::new(*coef, *exponent, 0, support.to_support()?)]))
            }
            FuncExpr::Logpower { coef, exponent, log_exponent, support } => {
                Some(ClosedFormFunc::new(vec![Term::new(*coef, *exponent, *log_exponent, support.to_support()?)]))
            }
            FuncExpr::Indicator { support } => {
                Some(ClosedFormFunc::new(vec![Term::new(1.0, 0.0, 0, support.to_support()?)]))
            }
            FuncExpr::Sum { terms } => {
                let mut acc = ClosedFormFunc::zero();
                for t in terms {
                    match t.to_closed()? {
                        Some(c) => acc = acc.add(&c),
                        None => return Ok(None),
                    }
                }
                Some(acc)
            }
            FuncExpr::Scaled { factor, power, inner } => inner.to_closed()?.map(|c| c.mul_power(*factor, *power)),
            FuncExpr::Restrict { support, inner } => {
                let s = support.to_support()?;
                inner.to_closed()?.map(|c| c.restrict(s))
            }
            FuncExpr::OpaqueNamed { .. } => None,
        })
    }

    /// Build the function this tree describes.
    pub fn build(&self) -> Result<Func> {
        if let Some(c) = self.to_closed()? {
            return Ok(Func::Closed(c));
        }
        Ok(match self {
            FuncExpr::OpaqueNamed { name, params } => Func::Eval(opaque(name, params)?),
            FuncExpr::Sum { terms } => {
                let parts = terms.iter().map(|t| t.build()).collect::<Result<Vec<_>>>()?;
                let decay = parts
                    .iter()
                    .map(|p| p.decay())
                    .try_fold(f64::INFINITY, |acc, d| d.map(|d| acc.min(d.eta)));
                let sing = parts
                    .iter()
                    .map(|p| p.exponent_at_zero())
                    .try_fold(f64::INFINITY, |acc, s| s.map(|s| acc.min(s)));
                Func::Eval(
                    EvaluableFunc::new("sum", move |x| parts.iter().map(|p| p.value(x)).sum())
                        .with_decay_opt(decay.map(|eta| super::DecayHint { eta, bound: None }))
                        .with_singularity_opt(sing),
                )
            }
            FuncExpr::Scaled { factor, power, inner } => inner.build()?.mul_power(*factor, *power),
            FuncExpr::Restrict { support, inner } => inner.build()?.restrict(support.to_support()?),
            _ => unreachable!("closed-form variants lowered above"),
        })
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Registry of named opaque functions.
///
/// * `inverse-one-plus` — `c / (1 + x)^s` (params `c = 1`, `s = 1`).
/// * `power-one-minus-log` — `x^a (1 - ln x)` on (0, 1), zero beyond (param `a = 0`).
///   It lies in `Q_beta` for every `beta >= a`.
/// * `exp-decay` — `c e^(-x)` (param `c = 1`).
pub fn opaque(name: &str, params: &BTreeMap<String, f64>) -> Result<EvaluableFunc> {
    let known = |keys: &[&str]| -> Result<()> {
        match params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(Error::ParameterOutOfRange(format!("unknown parameter {k:?} for {name}"))),
            None => Ok(()),
        }
    };
    match name {
        "inverse-one-plus" => {
            known(&["c", "s"])?;
            let c = param(params, "c", 1.0);
            let s = param(params, "s", 1.0);
            Ok(EvaluableFunc::new(format!("{c}/(1+x)^{s}"), move |x| c / (1.0 + x).powf(s))
                .with_decay(s, c.abs())
                .with_singularity(0.0))
        }
        "power-one-minus-log" => {
            known(&["a"])?;
            let a = param(params, "a", 0.0);
            Ok(EvaluableFunc::new(format!("x^{a}(1-ln x) on (0,1)"), move |x| {
                if x < 1.0 {
                    x.powf(a) * (1.0 - x.ln())
                } else {
                    0.0
                }
            })
            .with_singularity(a)
            .with_support(Support::UNIT)
            .with_decay(f64::INFINITY, 0.0))
        }
        "exp-decay" => {
            known(&["c"])?;
            let c = param(params, "c", 1.0);
            // x^2 e^-x <= 4 e^-2
            Ok(EvaluableFunc::new(format!("{c}*exp(-x)"), move |x| c * (-x).exp())
                .with_decay(2.0, c.abs() * 4.0 * (-2.0f64).exp())
                .with_singularity(0.0))
        }
        other => Err(Error::ParameterOutOfRange(format!("unknown opaque function {other:?}"))),
    }
}
