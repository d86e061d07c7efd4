//! Hardy averaging `Hf(x) = (1/x) int_0^x f`, the primitive `Psi(x) = int_0^x psi`, and
//! `S_psi f(x) = (1/Psi(x)) int_0^x f psi`.
//!
//! Closed forms stay closed: the operators act termwise on antiderivatives and divide by
//! `Psi` cell by cell whenever `Psi` is piecewise monomial. Otherwise the result is an
//! [`EvaluableFunc`] that runs adaptive quadrature per evaluation.

use crate::error::{Error, Result};
use crate::funcspace::{
    is_quasi_monotone, ClosedFormFunc, DecayHint, EvaluableFunc, Func, QBeta, QmVerdict, Support, Term,
};
use crate::quadrature::{integrate_finite_with, QuadOptions};
use crate::search::log_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotoneTag {
    NonIncreasing,
    NonDecreasing,
    Unknown,
}

/// A non-negative locally integrable `psi` together with its primitive.
#[derive(Debug, Clone)]
pub struct PsiKernel {
    psi: Func,
    tag: MonotoneTag,
    primitive: Option<ClosedFormFunc>,
}

fn operator_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_subdivisions: 20_000, allow_signed: true }
}

impl PsiKernel {
    /// Validates local integrability and, when a tag is given, checks it on a probe grid.
    pub fn new(psi: Func, tag: MonotoneTag) -> Result<Self> {
        let primitive = match &psi {
            Func::Closed(c) => Some(c.cumulative()?),
            Func::Eval(_) => {
                if matches!(psi.exponent_at_zero(), Some(s) if s <= -1.0) {
                    return Err(Error::DivergentIntegral("psi is not integrable at 0".into()));
                }
                None
            }
        };
        let k = Self { psi, tag, primitive };
        k.check_tag()?;
        Ok(k)
    }

    /// `psi = 1`, so `Psi(x) = x` and `S_psi = H`.
    pub fn one() -> Self {
        Self { psi: Func::one(), tag: MonotoneTag::NonIncreasing, primitive: Some(ClosedFormFunc::power(1.0, 1.0)) }
    }

    /// `psi(s) = s^a` with `a > -1`.
    pub fn power(a: f64) -> Result<Self> {
        if !(a > -1.0) || !a.is_finite() {
            return Err(Error::ParameterOutOfRange(format!("psi = s^a needs a > -1, got {a}")));
        }
        let tag = if a <= 0.0 { MonotoneTag::NonIncreasing } else { MonotoneTag::NonDecreasing };
        Self::new(Func::Closed(ClosedFormFunc::power(1.0, a)), tag)
    }

    pub fn psi(&self) -> &Func {
        &self.psi
    }

    pub fn tag(&self) -> MonotoneTag {
        self.tag
    }

    /// Closed-form `Psi` when available.
    pub fn primitive(&self) -> Option<&ClosedFormFunc> {
        self.primitive.as_ref()
    }

    pub fn is_one(&self) -> bool {
        matches!(&self.psi, Func::Closed(c) if *c == ClosedFormFunc::constant(1.0))
    }

    fn check_tag(&self) -> Result<()> {
        let grid = log_grid(1e-6, 1e6, 121)?;
        let consistent = match self.tag {
            MonotoneTag::Unknown => true,
            MonotoneTag::NonIncreasing => {
                !matches!(is_quasi_monotone(&self.psi, QBeta::new(0.0)?, &grid)?.verdict, QmVerdict::CounterexampleAt(..))
            }
            MonotoneTag::NonDecreasing => grid.windows(2).all(|w| {
                let (a, b) = (self.psi.value(w[0]), self.psi.value(w[1]));
                b >= a - 1e-9 * a.abs().max(b.abs())
            }),
        };
        if !consistent {
            return Err(Error::ParameterOutOfRange(format!("psi is not {:?} on the probe grid", self.tag)));
        }
        Ok(())
    }
}

/// `Psi(x) = int_0^x psi`.
pub fn big_psi(k: &PsiKernel, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("Psi needs x > 0, got {x}")));
    }
    match &k.primitive {
        Some(p) => Ok(p.eval(x)),
        None => {
            let r = integrate_finite_with(&k.psi, 0.0, x, &operator_opts())?;
            Ok(r.value)
        }
    }
}

/// `Hf(x) = (1/x) int_0^x f`.
pub fn hardy(f: &Func) -> Result<Func> {
    match f {
        Func::Closed(c) => Ok(Func::Closed(c.cumulative()?.mul_power(1.0, -1.0))),
        Func::Eval(_) => {
            let sing = f.exponent_at_zero();
            if matches!(sing, Some(s) if s <= -1.0) {
                return Err(Error::DivergentIntegral("f is not integrable at 0".into()));
            }
            // Hf ~ x^s near 0 and decays no faster than 1/x.
            let decay = f.decay().map(|d| DecayHint { eta: d.eta.min(1.0), bound: None });
            let g = f.clone();
            Ok(Func::Eval(
                EvaluableFunc::new("H", move |x| match integrate_finite_with(&g, 0.0, x, &operator_opts()) {
                    Ok(r) => r.value / x,
                    Err(_) => f64::NAN,
                })
                .with_decay_opt(decay)
                .with_singularity_opt(sing),
            ))
        }
    }
}

/// `S_psi f(x) = (1/Psi(x)) int_0^x f psi`.
pub fn s_psi(f: &Func, k: &PsiKernel) -> Result<Func> {
    if k.is_one() {
        return hardy(f);
    }
    let start = k.psi.support_start();
    if start > 0.0 {
        return Err(Error::ZeroPsi(0.5 * start));
    }
    if let (Func::Closed(fc), Some(prim)) = (f, k.primitive.as_ref()) {
        if let Func::Closed(pc) = &k.psi {
            let num = fc.mul(pc).cumulative()?;
            if let Some(q) = divide_by_piecewise_monomial(&num, prim)? {
                return Ok(Func::Closed(q));
            }
        }
    }
    let sing = match (f.exponent_at_zero(), k.psi.exponent_at_zero()) {
        (Some(s), Some(a)) if s + a <= -1.0 => {
            return Err(Error::DivergentIntegral("f psi is not integrable at 0".into()));
        }
        (Some(s), Some(_)) => Some(s),
        _ => None,
    };
    let fp = f.mul(&k.psi);
    let kk = k.clone();
    Ok(Func::Eval(
        EvaluableFunc::new("S_psi", move |x| {
            let num = integrate_finite_with(&fp, 0.0, x, &operator_opts());
            match (num, big_psi(&kk, x)) {
                (Ok(n), Ok(d)) if d > 0.0 => n.value / d,
                _ => f64::NAN,
            }
        })
        .with_singularity_opt(sing),
    ))
}

/// `num / den` when `den` is a single monomial on every cell of (0, inf).
fn divide_by_piecewise_monomial(num: &ClosedFormFunc, den: &ClosedFormFunc) -> Result<Option<ClosedFormFunc>> {
    let Some(pieces) = den.monomial_pieces() else { return Ok(None) };
    let mut terms: Vec<Term> = Vec::new();
    for p in &pieces {
        if p.coef == 0.0 {
            return Err(Error::ZeroPsi(if p.hi.is_finite() { 0.5 * (p.lo + p.hi) } else { p.lo + 1.0 }));
        }
        let cell = Support::new(p.lo, p.hi)?;
        let part = num.restrict(cell).mul_power(1.0 / p.coef, -p.power);
        terms.extend_from_slice(part.terms());
    }
    Ok(Some(ClosedFormFunc::new(terms)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{riemann_oracle, CellSpacing};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn hardy_of_powers_and_indicator() {
        let h1 = hardy(&Func::one()).unwrap();
        assert!(close(h1.value(3.7), 1.0, 1e-15));
        let hb = hardy(&Func::Closed(ClosedFormFunc::power(1.0, -0.4))).unwrap();
        assert!(close(hb.value(2.0), 2f64.powf(-0.4) / 0.6, 1e-14));
        let chi = Func::Closed(ClosedFormFunc::indicator(0.0, 2.0).unwrap());
        let h = hardy(&chi).unwrap();
        for &x in &[0.3, 1.0, 1.99, 2.0, 5.0] {
            let want = if x <= 2.0 { 1.0 } else { 2.0 / x };
            assert!(close(h.value(x), want, 1e-14), "x = {x}");
            let oracle = riemann_oracle(&chi, 0.0, x, 200_000, CellSpacing::Uniform).unwrap() / x;
            assert!(close(h.value(x), oracle, 1e-4));
        }
    }

    #[test]
    fn hardy_rejects_nonintegrable() {
        assert!(matches!(hardy(&Func::Closed(ClosedFormFunc::power(1.0, -1.0))), Err(Error::DivergentIntegral(_))));
    }

    #[test]
    fn hardy_of_log_term_stays_exact() {
        // f = x^-1 ln x on [1, inf): Hf(x) = (ln x)^2 / (2x).
        let f = ClosedFormFunc::new(vec![Term::new(1.0, -1.0, 1, Support::new(1.0, f64::INFINITY).unwrap())]);
        let h = hardy(&Func::Closed(f)).unwrap();
        assert!(h.as_closed().is_some());
        let x: f64 = 7.0;
        assert!(close(h.value(x), x.ln().powi(2) / (2.0 * x), 1e-14));
    }

    #[test]
    fn numeric_hardy_matches_closed() {
        let f = Func::Eval(EvaluableFunc::new("x^-0.3", |x| x.powf(-0.3)).with_singularity(-0.3));
        let h = hardy(&f).unwrap();
        assert!(close(h.value(2.0), 2f64.powf(-0.3) / 0.7, 1e-9));
    }

    #[test]
    fn big_psi_examples() {
        assert!(close(big_psi(&PsiKernel::one(), 4.5).unwrap(), 4.5, 1e-15));
        let k = PsiKernel::power(2.0 - 1.0 - 0.5).unwrap();
        assert!(close(big_psi(&k, 1.0).unwrap(), 2.0 / 3.0, 1e-15));
        let chi = PsiKernel::new(Func::Closed(ClosedFormFunc::indicator(0.0, 1.0).unwrap()), MonotoneTag::NonIncreasing)
            .unwrap();
        assert!(close(big_psi(&chi, 3.0).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn s_psi_examples() {
        let k = PsiKernel::power(0.7).unwrap();
        let one = s_psi(&Func::one(), &k).unwrap();
        assert!(close(one.value(0.2), 1.0, 1e-14));
        let beta = -0.35;
        let s = s_psi(&Func::Closed(ClosedFormFunc::power(1.0, beta)), &k).unwrap();
        assert!(s.as_closed().is_some());
        let x: f64 = 3.0;
        assert!(close(s.value(x), x.powf(beta) * 1.7 / (1.7 + beta), 1e-14));
    }

    #[test]
    fn s_psi_falls_back_to_quadrature() {
        // Psi = x + x^2/2 is not a single monomial.
        let psi = ClosedFormFunc::constant(1.0).add(&ClosedFormFunc::power(1.0, 1.0));
        let k = PsiKernel::new(Func::Closed(psi), MonotoneTag::NonDecreasing).unwrap();
        let s = s_psi(&Func::Closed(ClosedFormFunc::power(1.0, -0.5)), &k).unwrap();
        let x: f64 = 2.0;
        let want = (2.0 * x.sqrt() + x.powf(1.5) / 1.5) / (x + 0.5 * x * x);
        assert!(close(s.value(x), want, 1e-10));
    }

    #[test]
    fn zero_psi_is_reported() {
        let psi = ClosedFormFunc::indicator(1.0, 2.0).unwrap();
        let k = PsiKernel::new(Func::Closed(psi), MonotoneTag::Unknown).unwrap();
        assert!(matches!(s_psi(&Func::one(), &k), Err(Error::ZeroPsi(_))));
    }

    #[test]
    fn inconsistent_tag_is_rejected() {
        let psi = Func::Closed(ClosedFormFunc::power(1.0, 0.5));
        assert!(PsiKernel::new(psi.clone(), MonotoneTag::NonIncreasing).is_err());
        assert!(PsiKernel::new(psi, MonotoneTag::NonDecreasing).is_ok());
    }
}
