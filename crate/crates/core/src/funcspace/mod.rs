//! Functions on the positive half-line: exact closed forms, opaque evaluable
//! functions, the quasi-monotone cones `Q_beta`, and their serialized expression trees.

mod closed;
mod evaluable;
pub mod expr;
mod quasi;

pub use closed::{ClosedFormFunc, LogValue, MonomialPiece, Term, LOG_BRANCH_EPS};
pub use evaluable::{DecayHint, EvaluableFunc};
pub use quasi::{is_quasi_monotone, is_quasi_monotone_with, QmReport, QmVerdict, DEFAULT_MONOTONE_RTOL};

use crate::error::{Error, Result};

/// Half-open interval `[lo, hi)` with `0 <= lo < hi <= inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const HALF_LINE: Support = Support { lo: 0.0, hi: f64::INFINITY };
    pub const UNIT: Support = Support { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo.is_infinite() || !(lo < hi) {
            return Err(Error::ParameterOutOfRange(format!("support needs 0 <= lo < hi, got [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }

    pub fn intersect(&self, other: &Support) -> Option<Support> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Support { lo, hi })
    }
}

/// Where a weight class condition is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    HalfLine,
    UnitInterval,
}

impl Domain {
    pub fn upper(&self) -> f64 {
        match self {
            Domain::HalfLine => f64::INFINITY,
            Domain::UnitInterval => 1.0,
        }
    }
}

/// Exponent of a quasi-monotone cone: `f` is in `Q_beta` when `x^-beta f(x)` is non-increasing.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QBeta(f64);

impl QBeta {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > -1.0) || !beta.is_finite() {
            return Err(Error::BetaOutOfRange(beta));
        }
        Ok(Self(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Routines built on results proved only for `-1 < beta <= 0` call this first.
    pub fn require_nonpositive(self) -> Result<Self> {
        if self.0 > 0.0 {
            return Err(Error::PositiveBeta(self.0));
        }
        Ok(self)
    }
}

/// Either carrier of a function on (0, inf).
#[derive(Debug, Clone)]
pub enum Func {
    Closed(ClosedFormFunc),
    Eval(EvaluableFunc),
}

impl From<ClosedFormFunc> for Func {
    fn from(f: ClosedFormFunc) -> Self {
        Func::Closed(f)
    }
}

impl From<EvaluableFunc> for Func {
    fn from(f: EvaluableFunc) -> Self {
        Func::Eval(f)
    }
}

impl Func {
    pub fn one() -> Self {
        Func::Closed(ClosedFormFunc::constant(1.0))
    }

    /// Evaluate at `x > 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::ParameterOutOfRange(format!("evaluation point must be > 0, got {x}")));
        }
        let v = self.value(x);
        if v.is_nan() {
            return Err(Error::NonFinite(format!("f({x}) is NaN")));
        }
        Ok(v)
    }

    /// Unchecked evaluation; NaN signals failure.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Func::Closed(f) => f.eval(x),
            Func::Eval(f) => f.eval(x),
        }
    }

    pub fn as_closed(&self) -> Option<&ClosedFormFunc> {
        match self {
            Func::Closed(f) => Some(f),
            Func::Eval(_) => None,
        }
    }

    /// Leading power near 0 when known: `f(x) ~ x^s`.
    pub fn exponent_at_zero(&self) -> Option<f64> {
        match self {
            Func::Closed(f) => f.exponent_at_zero(),
            Func::Eval(f) => f.singularity_hint(),
        }
    }

    /// Decay information for large `x`. A closed form with compact support decays
    /// arbitrarily fast; one with unbounded support decays like its largest power.
    pub fn decay(&self) -> Option<DecayHint> {
        match self {
            Func::Closed(f) => match f.exponent_at_infinity() {
                None => Some(DecayHint { eta: f64::INFINITY, bound: Some(0.0) }),
                Some(a) => Some(DecayHint { eta: -a, bound: None }),
            },
            Func::Eval(f) => f.decay_hint(),
        }
    }

    /// Pointwise `c * x^gamma * f(x)`.
    pub fn mul_power(&self, c: f64, gamma: f64) -> Func {
        match self {
            Func::Closed(f) => Func::Closed(f.mul_power(c, gamma)),
            Func::Eval(f) => {
                let g = f.clone();
                let decay = f.decay_hint().map(|d| DecayHint { eta: d.eta - gamma, bound: None });
                let sing = f.singularity_hint().map(|s| s + gamma);
                Func::Eval(
                    EvaluableFunc::new(format!("{c}*x^{gamma}*{}", f.name()), move |x| c * x.powf(gamma) * g.eval(x))
                        .with_decay_opt(decay)
                        .with_singularity_opt(sing),
                )
            }
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Func) -> Func {
        match (self, other) {
            (Func::Closed(a), Func::Closed(b)) => Func::Closed(a.mul(b)),
            _ => {
                let (a, b) = (self.clone(), other.clone());
                let decay = match (self.decay(), other.decay()) {
                    (Some(x), Some(y)) => Some(DecayHint { eta: x.eta + y.eta, bound: None }),
                    _ => None,
                };
                let sing = match (self.exponent_at_zero(), other.exponent_at_zero()) {
                    (Some(x), Some(y)) => Some(x + y),
                    _ => None,
                };
                Func::Eval(
                    EvaluableFunc::new("product", move |x| a.value(x) * b.value(x))
                        .with_decay_opt(decay)
                        .with_singularity_opt(sing),
                )
            }
        }
    }

    /// Pointwise `|f|^q`; stays closed-form when `f` is piecewise monomial.
    pub fn abs_pow(&self, q: f64) -> Func {
        if let Func::Closed(f) = self {
            if let Some(g) = f.abs_pow(q) {
                return Func::Closed(g);
            }
        }
        let a = self.clone();
        let decay = self.decay().map(|d| DecayHint { eta: d.eta * q, bound: None });
        let sing = self.exponent_at_zero().map(|s| s * q);
        Func::Eval(
            EvaluableFunc::new("abs_pow", move |x| a.value(x).abs().powf(q))
                .with_decay_opt(decay)
                .with_singularity_opt(sing),
        )
    }

    /// `f * chi_support`.
    pub fn restrict(&self, support: Support) -> Func {
        match self {
            Func::Closed(f) => Func::Closed(f.restrict(support)),
            Func::Eval(f) => {
                let g = f.clone();
                let decay = if support.hi.is_finite() {
                    Some(DecayHint { eta: f64::INFINITY, bound: Some(0.0) })
                } else {
                    f.decay_hint()
                };
                let sing = if support.lo > 0.0 { None } else { f.singularity_hint() };
                Func::Eval(
                    EvaluableFunc::new(format!("{}|[{}, {})", f.name(), support.lo, support.hi), move |x| {
                        if support.contains(x) {
                            g.eval(x)
                        } else {
                            0.0
                        }
                    })
                    .with_decay_opt(decay)
                    .with_singularity_opt(sing)
                    .with_support(support),
                )
            }
        }
    }

    /// Upper end of the region where `f` may be non-zero.
    pub fn support_end(&self) -> f64 {
        match self {
            Func::Closed(f) => f.terms().iter().map(|t| t.support.hi).fold(0.0, f64::max),
            Func::Eval(f) => f.support().hi,
        }
    }

    /// Lower end of the region where `f` may be non-zero.
    pub fn support_start(&self) -> f64 {
        match self {
            Func::Closed(f) => f.terms().iter().map(|t| t.support.lo).fold(f64::INFINITY, f64::min),
            Func::Eval(f) => f.support().lo,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qbeta_bounds() {
        assert!(QBeta::new(-1.0).is_err());
        assert!(QBeta::new(-0.999).is_ok());
        let b = QBeta::new(0.3).unwrap();
        assert_eq!(b.require_nonpositive(), Err(Error::PositiveBeta(0.3)));
        assert!(QBeta::new(0.0).unwrap().require_nonpositive().is_ok());
    }

    #[test]
    fn eval_rejects_nonpositive_points_and_nan() {
        let f = Func::one();
        assert!(f.eval(0.0).is_err());
        let g = Func::Eval(EvaluableFunc::new("nan", |_| f64::NAN));
        assert!(matches!(g.eval(1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn eval_products_keep_hints() {
        let f = Func::Eval(EvaluableFunc::new("inv", |x| 1.0 / (1.0 + x)).with_decay(1.0, 1.0).with_singularity(0.0));
        let g = f.mul(&Func::Closed(ClosedFormFunc::power(1.0, -2.0)));
        assert_eq!(g.decay().unwrap().eta, 3.0);
        assert_eq!(g.exponent_at_zero(), Some(-2.0));
        assert!((g.value(1.0) - 0.5).abs() < 1e-15);
    }
}
