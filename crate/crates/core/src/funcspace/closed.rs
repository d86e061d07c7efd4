//! Finite sums of `c * x^a * (ln x)^k` pieces, each living on a half-open interval.
//!
//! Everything here is exact up to floating point: antiderivatives, definite
//! integrals (including improper ones at 0 and infinity), cumulative integrals and
//! products stay inside the family. Integrals are evaluated in log space so that
//! expressions like `r^64 * int_r^inf x^-64 w` neither overflow nor underflow.

use std::cmp::Ordering;
use std::fmt;

use super::Support;
use crate::error::{Error, Result};

/// Exponents closer than this to -1 are treated as exactly -1.
pub const LOG_BRANCH_EPS: f64 = 1e-13;

/// One `coef * x^power * (ln x)^log_exp` piece restricted to `support`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub power: f64,
    pub log_exp: u32,
    pub support: Support,
}

impl Term {
    pub fn new(coef: f64, power: f64, log_exp: u32, support: Support) -> Self {
        Self { coef, power, log_exp, support }
    }

    /// Value of the unrestricted expression at `x > 0`.
    fn raw(&self, x: f64) -> f64 {
        let mut v = self.coef * x.powf(self.power);
        if self.log_exp > 0 {
            v *= x.ln().powi(self.log_exp as i32);
        }
        v
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.support.contains(x) {
            self.raw(x)
        } else {
            0.0
        }
    }

    fn same_shape(&self, other: &Term) -> bool {
        self.power == other.power && self.log_exp == other.log_exp && self.support == other.support
    }
}

/// A signed number stored as `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0.0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self { sign: v.signum(), ln_abs: v.abs().ln() }
        }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    /// Sum of signed log-magnitudes, scaled by the largest one.
    pub fn sum(parts: &[LogValue]) -> LogValue {
        let m = parts
            .iter()
            .filter(|p| p.sign != 0.0)
            .map(|p| p.ln_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let s: f64 = parts.iter().filter(|p| p.sign != 0.0).map(|p| p.sign * (p.ln_abs - m).exp()).sum();
        if s == 0.0 {
            Self::ZERO
        } else {
            Self { sign: s.signum(), ln_abs: m + s.abs().ln() }
        }
    }
}

/// Coefficients `A_j` of the primitive `sum_j A_j x^(a+1) (ln x)^j` of `x^a (ln x)^k`, `a != -1`.
fn primitive_coeffs(power: f64, k: u32) -> Vec<f64> {
    let kappa = power + 1.0;
    let mut out = vec![0.0; k as usize + 1];
    // A_k = 1/kappa, A_{j-1} = -j A_j / kappa.
    out[k as usize] = 1.0 / kappa;
    for j in (1..=k as usize).rev() {
        out[j - 1] = -(j as f64) * out[j] / kappa;
    }
    out
}

/// `exp(lp) * coef * int_lo^hi x^power (ln x)^k dx` in log form.
pub(crate) fn term_integral(coef: f64, power: f64, k: u32, lo: f64, hi: f64, lp: f64) -> Result<LogValue> {
    if coef == 0.0 || !(hi > lo) {
        return Ok(LogValue::ZERO);
    }
    let kappa = power + 1.0;
    let base = lp + coef.abs().ln();
    let csign = coef.signum();
    if kappa.abs() <= LOG_BRANCH_EPS {
        if lo == 0.0 || hi.is_infinite() {
            return Err(Error::DivergentIntegral(format!(
                "x^-1 (ln x)^{k} is not integrable at {}",
                if lo == 0.0 { "0" } else { "infinity" }
            )));
        }
        let kk = (k + 1) as i32;
        let diff = (hi.ln().powi(kk) - lo.ln().powi(kk)) / (k + 1) as f64;
        let lv = LogValue::from_f64(diff);
        return Ok(LogValue { sign: lv.sign * csign, ln_abs: lv.ln_abs + base });
    }
    if lo == 0.0 && kappa < 0.0 {
        return Err(Error::DivergentIntegral(format!("x^{power} is not integrable at 0")));
    }
    if hi.is_infinite() && kappa > 0.0 {
        return Err(Error::DivergentIntegral(format!("x^{power} is not integrable at infinity")));
    }
    if k == 0 {
        // (hi^kappa - lo^kappa) / kappa, arranged to avoid cancellation.
        let ln_mag = if kappa > 0.0 {
            let tail = if lo == 0.0 { 0.0 } else { (-(kappa * (lo.ln() - hi.ln())).exp_m1()).ln() };
            kappa * hi.ln() + tail - kappa.ln()
        } else {
            let tail = if hi.is_infinite() { 0.0 } else { (-(kappa * (hi.ln() - lo.ln())).exp_m1()).ln() };
            kappa * lo.ln() + tail - (-kappa).ln()
        };
        return Ok(LogValue { sign: csign, ln_abs: base + ln_mag });
    }
    let coeffs = primitive_coeffs(power, k);
    let mut parts = Vec::with_capacity(2 * coeffs.len());
    for (endpoint, sgn) in [(hi, 1.0), (lo, -1.0)] {
        // Convergent limits at 0 and infinity contribute nothing.
        if endpoint == 0.0 || endpoint.is_infinite() {
            continue;
        }
        let lx = endpoint.ln();
        for (j, a) in coeffs.iter().enumerate() {
            let lj = lx.powi(j as i32);
            if lj == 0.0 || *a == 0.0 {
                continue;
            }
            parts.push(LogValue {
                sign: sgn * csign * a.signum() * lj.signum(),
                ln_abs: base + a.abs().ln() + kappa * lx + lj.abs().ln(),
            });
        }
    }
    Ok(LogValue::sum(&parts))
}

/// A maximal cell of (0, inf) on which a [`ClosedFormFunc`] is a single monomial `coef * x^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialPiece {
    pub lo: f64,
    pub hi: f64,
    pub coef: f64,
    pub power: f64,
}

/// Finite sum of power-log terms with interval supports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClosedFormFunc {
    terms: Vec<Term>,
}

impl ClosedFormFunc {
    pub fn new(terms: Vec<Term>) -> Self {
        let mut f = Self { terms };
        f.normalize();
        f
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Term::new(c, 0.0, 0, Support::HALF_LINE)])
    }

    /// `c * x^a` on the whole half-line.
    pub fn power(c: f64, a: f64) -> Self {
        Self::new(vec![Term::new(c, a, 0, Support::HALF_LINE)])
    }

    /// Indicator of `[lo, hi)`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self::new(vec![Term::new(1.0, 0.0, 0, Support::new(lo, hi)?)]))
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_logs(&self) -> bool {
        self.terms.iter().any(|t| t.log_exp > 0)
    }

    /// Merge like terms and drop zero coefficients.
    fn normalize(&mut self) {
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if t.coef == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|m| m.same_shape(&t)) {
                Some(m) => m.coef += t.coef,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        merged.sort_by(|a, b| {
            a.support
                .lo
                .partial_cmp(&b.support.lo)
                .unwrap_or(Ordering::Equal)
                .then(a.support.hi.partial_cmp(&b.support.hi).unwrap_or(Ordering::Equal))
                .then(a.power.partial_cmp(&b.power).unwrap_or(Ordering::Equal))
                .then(a.log_exp.cmp(&b.log_exp))
        });
        self.terms = merged;
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn add(&self, other: &ClosedFormFunc) -> ClosedFormFunc {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(terms)
    }

    pub fn scale(&self, c: f64) -> ClosedFormFunc {
        self.mul_power(c, 0.0)
    }

    /// `c * x^gamma * f(x)`.
    pub fn mul_power(&self, c: f64, gamma: f64) -> ClosedFormFunc {
        Self::new(
            self.terms
                .iter()
                .map(|t| Term::new(t.coef * c, t.power + gamma, t.log_exp, t.support))
                .collect(),
        )
    }

    /// `f * chi_[lo, hi)`.
    pub fn restrict(&self, support: Support) -> ClosedFormFunc {
        Self::new(
            self.terms
                .iter()
                .filter_map(|t| t.support.intersect(&support).map(|s| Term { support: s, ..*t }))
                .collect(),
        )
    }

    /// Pointwise product; the family is closed under it.
    pub fn mul(&self, other: &ClosedFormFunc) -> ClosedFormFunc {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                if let Some(s) = a.support.intersect(&b.support) {
                    terms.push(Term::new(a.coef * b.coef, a.power + b.power, a.log_exp + b.log_exp, s));
                }
            }
        }
        Self::new(terms)
    }

    /// Term-by-term primitive on the same supports.
    ///
    /// On each support piece `F' = f`, so `int_a^b f = F(b) - F(a)` for `a, b` inside
    /// one piece. The `a = -1` branch produces `(ln x)^(k+1) / (k+1)`.
    pub fn antiderivative(&self) -> ClosedFormFunc {
        let mut out = Vec::new();
        for t in &self.terms {
            if (t.power + 1.0).abs() <= LOG_BRANCH_EPS {
                out.push(Term::new(t.coef / (t.log_exp + 1) as f64, 0.0, t.log_exp + 1, t.support));
            } else {
                for (j, a) in primitive_coeffs(t.power, t.log_exp).into_iter().enumerate() {
                    out.push(Term::new(t.coef * a, t.power + 1.0, j as u32, t.support));
                }
            }
        }
        Self::new(out)
    }

    /// `int_a^b f` with `0 <= a < b <= inf`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let v = self.integral_log(a, b, 0.0, 0.0)?.value();
        if v.is_nan() {
            return Err(Error::NonFinite("closed-form integral".into()));
        }
        Ok(v)
    }

    /// `exp(lp) * int_a^b x^gamma f(x) dx` in log form.
    pub fn integral_log(&self, a: f64, b: f64, gamma: f64, lp: f64) -> Result<LogValue> {
        if !(b > a) || a < 0.0 {
            return Ok(LogValue::ZERO);
        }
        let mut parts = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let lo = t.support.lo.max(a);
            let hi = t.support.hi.min(b);
            if hi > lo {
                parts.push(term_integral(t.coef, t.power + gamma, t.log_exp, lo, hi, lp)?);
            }
        }
        Ok(LogValue::sum(&parts))
    }

    /// The cumulative integral `x -> int_0^x f`.
    pub fn cumulative(&self) -> Result<ClosedFormFunc> {
        let mut out = Vec::new();
        for t in &self.terms {
            let Support { lo, hi } = t.support;
            let single = ClosedFormFunc { terms: vec![*t] };
            let prim = single.antiderivative();
            let at_lo = if lo == 0.0 {
                // The primitive vanishes at 0 exactly when the term is integrable there.
                if t.power + 1.0 <= LOG_BRANCH_EPS {
                    return Err(Error::DivergentIntegral(format!("x^{} is not integrable at 0", t.power)));
                }
                0.0
            } else {
                prim.terms.iter().map(|p| p.raw(lo)).sum()
            };
            for p in prim.terms {
                out.push(p);
            }
            if at_lo != 0.0 {
                out.push(Term::new(-at_lo, 0.0, 0, t.support));
            }
            if hi.is_finite() {
                let total = term_integral(t.coef, t.power, t.log_exp, lo, hi, 0.0)?.value();
                out.push(Term::new(total, 0.0, 0, Support { lo: hi, hi: f64::INFINITY }));
            }
        }
        Ok(Self::new(out))
    }

    /// Sorted interior breakpoints of the supports.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|t| [t.support.lo, t.support.hi])
            .filter(|x| *x > 0.0 && x.is_finite())
            .collect();
        b.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
        b.dedup();
        b
    }

    /// Partition of (0, inf) into cells carrying one monomial each, or `None` when a
    /// cell mixes different powers or carries a log factor.
    pub fn monomial_pieces(&self) -> Option<Vec<MonomialPiece>> {
        let mut edges = vec![0.0];
        edges.extend(self.breakpoints());
        edges.push(f64::INFINITY);
        let mut out = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut coef = 0.0;
            let mut power: Option<f64> = None;
            for t in &self.terms {
                if t.support.lo <= lo && t.support.hi >= hi {
                    if t.log_exp > 0 {
                        return None;
                    }
                    match power {
                        None => power = Some(t.power),
                        Some(p) if p == t.power => {}
                        Some(_) => return None,
                    }
                    coef += t.coef;
                }
            }
            let power = if coef == 0.0 { 0.0 } else { power.unwrap_or(0.0) };
            out.push(MonomialPiece { lo, hi, coef, power });
        }
        Some(out)
    }

    /// `|f|^q` when `f` is piecewise monomial.
    pub fn abs_pow(&self, q: f64) -> Option<ClosedFormFunc> {
        let pieces = self.monomial_pieces()?;
        Some(Self::new(
            pieces
                .iter()
                .filter(|p| p.coef != 0.0)
                .map(|p| Term::new(p.coef.abs().powf(q), p.power * q, 0, Support { lo: p.lo, hi: p.hi }))
                .collect(),
        ))
    }

    /// Smallest power among terms whose support reaches 0, i.e. the leading
    /// behaviour near the origin. `None` when `f` vanishes near 0.
    pub fn exponent_at_zero(&self) -> Option<f64> {
        self.terms.iter().filter(|t| t.support.lo == 0.0).map(|t| t.power).reduce(f64::min)
    }

    /// Largest power among terms whose support is unbounded. `None` for compact support.
    pub fn exponent_at_infinity(&self) -> Option<f64> {
        self.terms.iter().filter(|t| t.support.hi.is_infinite()).map(|t| t.power).reduce(f64::max)
    }

    /// True when every piece has a non-negative coefficient (sufficient, not necessary,
    /// for `f >= 0`).
    pub fn has_nonnegative_coefficients(&self) -> bool {
        self.terms.iter().all(|t| t.coef >= 0.0 && t.log_exp == 0)
    }
}

impl fmt::Display for ClosedFormFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*x^{}", t.coef, t.power)?;
            if t.log_exp > 0 {
                write!(f, "*ln(x)^{}", t.log_exp)?;
            }
            write!(f, "*1[{}, {})", t.support.lo, t.support.hi)?;
        }
        Ok(())
    }
}
