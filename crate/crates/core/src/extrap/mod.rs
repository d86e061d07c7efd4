//! Explicit extrapolation constants and end-to-end checks of the inequalities they bound.
//!
//! Hypotheses quantified over whole weight classes are never sampled. Only pairs whose
//! hypothesis follows constructively from the `S_psi` bound feed the checkers; see
//! [`CertifiedPair`].

mod grand;
mod half_line;

pub use grand::{
    hardy_test_function, thm_grand_constant, thm_hardy_grand_check, thm_hardy_grand_necessity,
    thm_interval_constant_kprime, GrandConstantReport, GrandConstantRow, HardyGrandOptions, HardyGrandReport,
    NecessityReport, NecessityRow,
};
pub use half_line::{
    lemma22_check, theorem_a_check, thm_infinity_constant, thm_main_check, thm_main_check_with_grid, thm_main_constant,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{is_quasi_monotone, Func, QBeta, QmVerdict};
use crate::operators::{s_psi, PsiKernel};
use crate::search::{argmin, golden_min, is_strictly_increasing, log_grid};

/// Non-decreasing `phi` on `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MonotoneFn {
    Identity,
    Power { s: f64 },
    Affine { a: f64, b: f64 },
    Constant { c: f64 },
}

impl MonotoneFn {
    /// `phi(t) = t/(beta+1)^{p0}`: the growth certified by the `S_psi` bound for pairs `(S_psi u, u)`.
    pub fn s_psi_bound(beta: f64, p0: f64) -> Self {
        MonotoneFn::Affine { a: (beta + 1.0).powf(-p0), b: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MonotoneFn::Identity => true,
            MonotoneFn::Power { s } => s > 0.0 && s.is_finite(),
            MonotoneFn::Affine { a, b } => a >= 0.0 && b >= 0.0 && a + b > 0.0 && (a + b).is_finite(),
            MonotoneFn::Constant { c } => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange(format!("{self:?} is not a valid non-decreasing phi")))
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            MonotoneFn::Identity => t,
            MonotoneFn::Power { s } => t.powf(s),
            MonotoneFn::Affine { a, b } => a * t + b,
            MonotoneFn::Constant { c } => c,
        }
    }

    /// `self >= other` at every class constant value, sampled on `[1, 1e8]`.
    pub fn dominates(&self, other: &MonotoneFn) -> bool {
        let grid = log_grid(1.0, 1e8, 161).expect("static grid");
        grid.iter().all(|&t| self.eval(t) >= other.eval(t) * (1.0 - 1e-12))
    }
}

/// `lhs <= rhs_constant * rhs_base`, with relative tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs_constant: f64,
    pub rhs_base: f64,
    /// `rhs_constant * rhs_base - lhs`.
    pub margin: f64,
    pub pass: bool,
}

impl InequalityCheck {
    pub fn new(lhs: f64, rhs_constant: f64, rhs_base: f64, rel_tol: f64) -> Self {
        let rhs = rhs_constant * rhs_base;
        let margin = rhs - lhs;
        let scale = lhs.abs().max(rhs.abs());
        let pass = lhs.is_finite() && rhs.is_finite() && margin >= -rel_tol * scale;
        Self { lhs, rhs_constant, rhs_base, margin, pass }
    }

    /// `margin / max(|lhs|, |rhs|)`.
    pub fn relative_margin(&self) -> f64 {
        let scale = self.lhs.abs().max((self.rhs_constant * self.rhs_base).abs());
        if scale == 0.0 {
            0.0
        } else {
            self.margin / scale
        }
    }
}

/// A pair `(f, g)` whose extrapolation hypothesis holds by construction.
#[derive(Debug, Clone)]
pub enum CertifiedPair {
    /// `(S_psi u, u)` with `u` in `Q_beta`: `int (S_psi u)^{p0} w <= [w]/(beta+1)^{p0} int u^{p0} w`
    /// for every `w` in the class at `p0`.
    SPsiBound { u: Func, kernel: PsiKernel, beta: QBeta },
    /// `f = g`; the hypothesis holds with `phi = 1`.
    Diagonal { f: Func },
}

impl CertifiedPair {
    /// Certify `(S_psi u, u)` after checking `u` in `Q_beta` on a probe grid.
    pub fn s_psi_bound(u: Func, kernel: PsiKernel, beta: f64) -> Result<Self> {
        let beta = QBeta::new(beta)?;
        let grid = log_grid(1e-6, 1e6, 241)?;
        if let QmVerdict::CounterexampleAt(a, b) = is_quasi_monotone(&u, beta, &grid)?.verdict {
            return Err(Error::HypothesisNotCertified(format!(
                "u is not in Q_{}: x^-beta u increases between {a} and {b}",
                beta.value()
            )));
        }
        Ok(CertifiedPair::SPsiBound { u, kernel, beta })
    }

    /// Accept an arbitrary pair only when both sides are the same closed form.
    pub fn raw(f: Func, g: Func) -> Result<Self> {
        match (&f, &g) {
            (Func::Closed(a), Func::Closed(b)) if a == b => Ok(CertifiedPair::Diagonal { f }),
            _ => Err(Error::HypothesisNotCertified(
                "only (S_psi u, u) pairs or identical functions carry a certified hypothesis".into(),
            )),
        }
    }

    /// `(f, g)` as functions (not raised to any power).
    pub fn functions(&self) -> Result<(Func, Func)> {
        match self {
            CertifiedPair::SPsiBound { u, kernel, .. } => Ok((s_psi(u, kernel)?, u.clone())),
            CertifiedPair::Diagonal { f } => Ok((f.clone(), f.clone())),
        }
    }

    /// The `phi` for which the hypothesis at exponent `p0` is certified.
    pub fn certified_phi(&self, p0: f64) -> MonotoneFn {
        match self {
            CertifiedPair::SPsiBound { beta, .. } => MonotoneFn::s_psi_bound(beta.value(), p0),
            CertifiedPair::Diagonal { .. } => MonotoneFn::Constant { c: 1.0 },
        }
    }

    /// Fails unless `phi` dominates the certified growth of this pair.
    pub fn require_dominated_by(&self, phi: &MonotoneFn, p0: f64) -> Result<()> {
        phi.validate()?;
        let need = self.certified_phi(p0);
        if !phi.dominates(&need) {
            return Err(Error::HypothesisNotCertified(format!(
                "phi = {phi:?} is below the certified {need:?} for this pair"
            )));
        }
        Ok(())
    }
}

/// Grid infimum of a constant expression with its profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub value: f64,
    pub argmin: f64,
    pub profile: Vec<(f64, f64)>,
    /// Lowest and highest grid values and the number of grid points.
    pub grid: (f64, f64, usize),
    pub refine_iters: usize,
}

pub const CONSTANT_GRID: usize = 64;
pub const CONSTANT_REFINE_ITERS: usize = 40;

/// Evaluate `f` on `grid` in parallel and refine around the smallest finite value.
pub(crate) fn grid_infimum<F>(grid: &[f64], f: F) -> Result<ConstantReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    if grid.is_empty() || !is_strictly_increasing(grid) || !(grid[0] > 0.0) {
        return Err(Error::InvalidGrid("parameter grid must be non-empty, positive and increasing".into()));
    }
    let values: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect();
    let clean: Vec<f64> = values.iter().map(|v| if v.is_nan() { f64::INFINITY } else { *v }).collect();
    let profile: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();
    let grid_bounds = (grid[0], grid[grid.len() - 1], grid.len());
    let i = argmin(&clean).filter(|&i| clean[i].is_finite()).ok_or_else(|| {
        Error::EmptyGrid(format!("no point of the {}-point grid gives a finite value", grid.len()))
    })?;
    let (mut best_x, mut best) = (grid[i], clean[i]);
    if grid.len() > 1 {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let (t, v) = golden_min(
            |t| {
                let v = f(t.exp());
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            },
            lo.ln(),
            hi.ln(),
            CONSTANT_REFINE_ITERS,
        );
        if v < best {
            best = v;
            best_x = t.exp();
        }
    }
    Ok(ConstantReport { value: best, argmin: best_x, profile, grid: grid_bounds, refine_iters: CONSTANT_REFINE_ITERS })
}

pub(crate) fn check_base_exponents(beta: f64, p0: f64, p: f64) -> Result<QBeta> {
    let b = QBeta::new(beta)?.require_nonpositive()?;
    if !(p0 > 0.0 && p0.is_finite()) || !(p >= p0 && p.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("need 0 < p0 <= p < inf, got p0 = {p0}, p = {p}")));
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::ClosedFormFunc;

    #[test]
    fn monotone_fn_eval_and_dominance() {
        assert_eq!(MonotoneFn::Identity.eval(3.0), 3.0);
        assert_eq!(MonotoneFn::Power { s: 2.0 }.eval(3.0), 9.0);
        assert_eq!(MonotoneFn::Affine { a: 2.0, b: 1.0 }.eval(3.0), 7.0);
        assert!(MonotoneFn::Identity.dominates(&MonotoneFn::s_psi_bound(0.0, 2.0)));
        assert!(!MonotoneFn::Identity.dominates(&MonotoneFn::s_psi_bound(-0.3, 2.0)));
        assert!(MonotoneFn::Identity.dominates(&MonotoneFn::Constant { c: 1.0 }));
        assert!(MonotoneFn::Power { s: 0.0 }.validate().is_err());
    }

    #[test]
    fn inequality_check_tolerance() {
        assert!(InequalityCheck::new(2.0, 2.0, 1.0, 1e-6).pass);
        assert!(InequalityCheck::new(2.0 + 1e-7, 2.0, 1.0, 1e-6).pass);
        assert!(!InequalityCheck::new(2.1, 2.0, 1.0, 1e-6).pass);
        assert!(!InequalityCheck::new(f64::NAN, 2.0, 1.0, 1e-6).pass);
    }

    #[test]
    fn raw_pairs_need_identity() {
        let a = Func::Closed(ClosedFormFunc::power(1.0, -0.2));
        let b = Func::Closed(ClosedFormFunc::power(2.0, -0.2));
        assert!(CertifiedPair::raw(a.clone(), a.clone()).is_ok());
        assert!(matches!(CertifiedPair::raw(a, b), Err(Error::HypothesisNotCertified(_))));
    }

    #[test]
    fn pair_requires_quasi_monotone_u() {
        let u = Func::Closed(ClosedFormFunc::power(1.0, 0.5));
        assert!(matches!(
            CertifiedPair::s_psi_bound(u, PsiKernel::one(), 0.0),
            Err(Error::HypothesisNotCertified(_))
        ));
    }
}
