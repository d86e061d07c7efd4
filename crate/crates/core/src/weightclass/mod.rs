//! Membership tests and constant estimation for the `QB_{beta,psi,p}` weight classes.
//!
//! The class condition at radius `r` compares
//! `N(r) = int_r^U (Psi(r)/Psi(x))^p w` with `D(r) = int_0^r (Psi(x)/Psi(r))^{beta p} w`,
//! where `U` is infinity on the half-line and 1 on the unit interval. The class constant
//! is `1 + sup_r N/D`.
//!
//! When `w` and `Psi` are closed forms with `Psi` a single monomial on every cell, both
//! integrals are evaluated exactly in log space. Otherwise they go through quadrature
//! after the substitution `x = r t`, which keeps both integrals of order `r w(r)`.

mod hat;
mod infinity;
mod power;

pub use hat::{default_eps_grid, hat_membership, HatReport};
pub use infinity::{
    lemma_psi_weight_bound, psi_weight, qb_infinity_constant, InfinityReport, PsiWeightReport, PsiWeightRow,
};
pub use power::{lemma_power_shift_constant, power_weight_membership, verify_power_shift, PowerMembership, PowerShiftCheck};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{ClosedFormFunc, DecayHint, Domain, EvaluableFunc, Func, QBeta, Support};
use crate::operators::{big_psi, PsiKernel};
use crate::quadrature::{integrate, QuadOptions};
use crate::search::{edge_trend, golden_max, is_strictly_increasing, log_grid, EdgeTrend};

/// Parameters of a `QB_{beta,psi,p}` condition.
#[derive(Debug, Clone)]
pub struct ClassParams {
    pub beta: QBeta,
    pub p: f64,
    /// `None` means `psi = 1`, i.e. `Psi(x) = x`.
    pub psi: Option<PsiKernel>,
    pub domain: Domain,
}

impl ClassParams {
    pub fn new(beta: f64, p: f64, domain: Domain) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::ParameterOutOfRange(format!("class exponent p must be > 0, got {p}")));
        }
        Ok(Self { beta: QBeta::new(beta)?, p, psi: None, domain })
    }

    pub fn with_psi(mut self, k: PsiKernel) -> Self {
        self.psi = if k.is_one() { None } else { Some(k) };
        self
    }

    /// Same class at another exponent.
    pub fn at_exponent(&self, p: f64) -> Result<Self> {
        let mut out = Self::new(self.beta.value(), p, self.domain)?;
        out.psi = self.psi.clone();
        Ok(out)
    }

    fn psi_value(&self, x: f64) -> Result<f64> {
        match &self.psi {
            None => Ok(x),
            Some(k) => big_psi(k, x),
        }
    }

    fn psi_primitive(&self) -> Option<ClosedFormFunc> {
        match &self.psi {
            None => Some(ClosedFormFunc::power(1.0, 1.0)),
            Some(k) => k.primitive().cloned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassVerdict {
    Member,
    NotMember,
    Inconclusive,
}

/// Why a weight was rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// `N(r)` diverges.
    DivergentNumerator { r: f64 },
    /// `D(r)` diverges: `w (x/r)^{beta p}` is not integrable at 0.
    DivergentDenominator { r: f64 },
    /// `D(r) = 0 < N(r)`.
    VanishingDenominator { r: f64 },
    /// The sampled ratio grows monotonically into one end of the grid.
    MonotoneGrowth { decades: f64, toward_zero: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub verdict: ClassVerdict,
    /// `sup_r N/D`; infinite for non-members.
    pub sup_ratio: f64,
    /// `1 + sup_ratio`.
    pub class_constant: f64,
    pub argmax_r: f64,
    pub profile: Vec<(f64, f64)>,
    pub certificate: Option<Certificate>,
    pub diagnostics: String,
}

impl ClassReport {
    pub fn is_member(&self) -> bool {
        self.verdict == ClassVerdict::Member
    }
}

/// Outcome of one ratio evaluation before it is folded into a report.
#[derive(Debug, Clone, PartialEq)]
enum Outcome {
    Finite(f64),
    NumDiverges,
    DenDiverges,
    DenZero { num_positive: bool },
    Failed(Error),
}

/// The ratio problem with everything that does not depend on `r` precomputed.
enum Prepared {
    /// `N(r) = Psi(r)^p int_r^U num`, `D(r) = Psi(r)^{-beta p} int_0^r den`.
    Exact { num: ClosedFormFunc, den: ClosedFormFunc, psi: ClosedFormFunc },
    Numeric { w: Func, psi_at_zero: Option<f64>, psi_at_inf: Option<f64> },
}

fn prepare(w: &Func, params: &ClassParams) -> Result<Prepared> {
    let prim = params.psi_primitive();
    let (bp, p) = (params.beta.value() * params.p, params.p);
    if let (Func::Closed(wc), Some(psi)) = (w, prim.as_ref()) {
        if let Some(pieces) = psi.monomial_pieces() {
            let mut num = Vec::new();
            let mut den = Vec::new();
            let mut ok = true;
            for piece in &pieces {
                if piece.coef <= 0.0 {
                    let x = if piece.hi.is_finite() { 0.5 * (piece.lo + piece.hi) } else { piece.lo + 1.0 };
                    return Err(Error::ZeroPsi(x));
                }
                let (cn, cd) = (piece.coef.powf(-p), piece.coef.powf(bp));
                if !(cn.is_finite() && cd.is_finite() && cn > 0.0 && cd > 0.0) {
                    ok = false;
                    break;
                }
                let cell = wc.restrict(Support::new(piece.lo, piece.hi)?);
                num.extend_from_slice(cell.mul_power(cn, -piece.power * p).terms());
                den.extend_from_slice(cell.mul_power(cd, piece.power * bp).terms());
            }
            if ok {
                return Ok(Prepared::Exact {
                    num: ClosedFormFunc::new(num),
                    den: ClosedFormFunc::new(den),
                    psi: psi.clone(),
                });
            }
        }
    }
    let (psi_at_zero, psi_at_inf) = match (&prim, &params.psi) {
        (Some(c), _) => (c.exponent_at_zero(), c.exponent_at_infinity()),
        (None, Some(k)) => (k.psi().exponent_at_zero().map(|s| s + 1.0), None),
        (None, None) => (Some(1.0), Some(1.0)),
    };
    Ok(Prepared::Numeric { w: w.clone(), psi_at_zero, psi_at_inf })
}

fn ratio_options() -> QuadOptions {
    QuadOptions { abs_tol: 1e-300, rel_tol: 1e-10, max_subdivisions: 20_000, allow_signed: false }
}

fn evaluate(prep: &Prepared, params: &ClassParams, r: f64) -> Outcome {
    let upper = params.domain.upper();
    let (bp, p) = (params.beta.value() * params.p, params.p);
    match prep {
        Prepared::Exact { num, den, psi } => {
            let lpsi = psi.eval(r).ln();
            let d = match den.integral_log(0.0, r, 0.0, -bp * lpsi) {
                Ok(v) => v,
                Err(e) if e.is_divergence() => return Outcome::DenDiverges,
                Err(e) => return Outcome::Failed(e),
            };
            let n = if r >= upper {
                Ok(crate::funcspace::LogValue::ZERO)
            } else {
                num.integral_log(r, upper, 0.0, p * lpsi)
            };
            let n = match n {
                Ok(v) => v,
                Err(e) if e.is_divergence() => return Outcome::NumDiverges,
                Err(e) => return Outcome::Failed(e),
            };
            if d.is_zero() || d.sign < 0.0 {
                return Outcome::DenZero { num_positive: !n.is_zero() && n.sign > 0.0 };
            }
            if n.is_zero() {
                return Outcome::Finite(0.0);
            }
            Outcome::Finite(n.sign * (n.ln_abs - d.ln_abs).exp())
        }
        Prepared::Numeric { w, psi_at_zero, psi_at_inf } => numeric_ratio(w, params, *psi_at_zero, *psi_at_inf, r),
    }
}

fn numeric_ratio(w: &Func, params: &ClassParams, psi0: Option<f64>, psi_inf: Option<f64>, r: f64) -> Outcome {
    let upper = params.domain.upper();
    let (bp, p) = (params.beta.value() * params.p, params.p);
    let psi_r = match params.psi_value(r) {
        Ok(v) if v > 0.0 => v,
        Ok(_) => return Outcome::Failed(Error::ZeroPsi(r)),
        Err(e) => return Outcome::Failed(e),
    };
    let pr = params.clone();
    let wd = w.clone();
    let den_sing = match (w.exponent_at_zero(), psi0) {
        (Some(s), Some(a)) => Some(s + bp * a),
        _ => None,
    };
    let den_f = Func::Eval(
        EvaluableFunc::new("qb-denominator", move |t| {
            let x = r * t;
            match pr.psi_value(x) {
                Ok(px) => (px / psi_r).powf(bp) * wd.value(x) * r,
                Err(_) => f64::NAN,
            }
        })
        .with_singularity_opt(den_sing)
        .with_support(Support::UNIT),
    );
    let opts = ratio_options();
    let d = match integrate(&den_f, 0.0, 1.0, &opts) {
        Ok(q) if q.converged => q.value,
        Ok(q) => return Outcome::Failed(Error::NotConverged(format!("denominator at r = {r}: {q:?}"))),
        Err(e) if e.is_divergence() => return Outcome::DenDiverges,
        Err(e) => return Outcome::Failed(e),
    };
    let t_hi = upper / r;
    let n = if t_hi <= 1.0 {
        0.0
    } else {
        let pr = params.clone();
        let wd = w.clone();
        let decay = match (w.decay(), psi_inf) {
            (Some(DecayHint { eta, .. }), Some(g)) => Some(DecayHint { eta: eta + p * g, bound: None }),
            (Some(DecayHint { eta, .. }), None) if eta.is_infinite() => Some(DecayHint { eta, bound: Some(0.0) }),
            _ => None,
        };
        let support = Support { lo: 1.0, hi: f64::INFINITY };
        let num_f = Func::Eval(
            EvaluableFunc::new("qb-numerator", move |t| {
                let x = r * t;
                match pr.psi_value(x) {
                    Ok(px) if px > 0.0 => (psi_r / px).powf(p) * wd.value(x) * r,
                    _ => f64::NAN,
                }
            })
            .with_decay_opt(decay)
            .with_support(match w.support_end() {
                e if e.is_finite() => Support { lo: 1.0, hi: (e / r).max(1.0 + f64::EPSILON) },
                _ => support,
            }),
        );
        match integrate(&num_f, 1.0, t_hi, &opts) {
            Ok(q) if q.converged => q.value,
            Ok(q) => return Outcome::Failed(Error::NotConverged(format!("numerator at r = {r}: {q:?}"))),
            Err(e) if e.is_divergence() => return Outcome::NumDiverges,
            Err(e) => return Outcome::Failed(e),
        }
    };
    if !(d > 0.0) {
        return Outcome::DenZero { num_positive: n > 0.0 };
    }
    Outcome::Finite(n / d)
}

fn check_radius(params: &ClassParams, r: f64) -> Result<()> {
    if !(r > 0.0) || r > params.domain.upper() || !r.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("radius {r} is outside the domain {:?}", params.domain)));
    }
    Ok(())
}

/// `N(r)/D(r)`; `+inf` when the numerator diverges.
pub fn qb_ratio(w: &Func, params: &ClassParams, r: f64) -> Result<f64> {
    check_radius(params, r)?;
    let prep = prepare(w, params)?;
    match evaluate(&prep, params, r) {
        Outcome::Finite(v) => Ok(v),
        Outcome::NumDiverges => Ok(f64::INFINITY),
        Outcome::DenDiverges => Err(Error::DegenerateDenominator { r, reason: "denominator diverges".into() }),
        Outcome::DenZero { .. } => Err(Error::DegenerateDenominator { r, reason: "denominator vanishes".into() }),
        Outcome::Failed(e) => Err(e),
    }
}

/// Default radius grid: 200 log-spaced points on `[1e-6, 1e6]` or `[1e-6, 1]`.
pub fn default_r_grid(domain: Domain) -> Vec<f64> {
    let hi = match domain {
        Domain::HalfLine => 1e6,
        Domain::UnitInterval => 1.0,
    };
    log_grid(1e-6, hi, 200).expect("static grid")
}

pub const REFINE_ITERS: usize = 50;

/// Estimate `[w]` over a radius grid with refinement and edge extrapolation.
pub fn qb_constant(w: &Func, params: &ClassParams, r_grid: Option<&[f64]>) -> Result<ClassReport> {
    let owned;
    let grid = match r_grid {
        Some(g) => g,
        None => {
            owned = default_r_grid(params.domain);
            &owned
        }
    };
    if grid.is_empty() {
        return Err(Error::InvalidGrid("radius grid is empty".into()));
    }
    if !is_strictly_increasing(grid) {
        return Err(Error::InvalidGrid("radius grid must be strictly increasing".into()));
    }
    for &r in [grid[0], grid[grid.len() - 1]].iter() {
        check_radius(params, r).map_err(|e| Error::InvalidGrid(e.to_string()))?;
    }
    let prep = prepare(w, params)?;
    let outcomes: Vec<Outcome> = grid.par_iter().map(|&r| evaluate(&prep, params, r)).collect();
    Ok(assemble(&prep, params, grid, outcomes))
}

fn not_member(profile: Vec<(f64, f64)>, r: f64, cert: Certificate, diag: String) -> ClassReport {
    ClassReport {
        verdict: ClassVerdict::NotMember,
        sup_ratio: f64::INFINITY,
        class_constant: f64::INFINITY,
        argmax_r: r,
        profile,
        certificate: Some(cert),
        diagnostics: diag,
    }
}

fn assemble(prep: &Prepared, params: &ClassParams, grid: &[f64], outcomes: Vec<Outcome>) -> ClassReport {
    let mut profile = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    let mut cert: Option<(f64, Certificate)> = None;
    for (&r, o) in grid.iter().zip(&outcomes) {
        let v = match o {
            Outcome::Finite(v) => *v,
            Outcome::NumDiverges => {
                cert.get_or_insert((r, Certificate::DivergentNumerator { r }));
                f64::INFINITY
            }
            Outcome::DenDiverges => {
                cert.get_or_insert((r, Certificate::DivergentDenominator { r }));
                f64::NAN
            }
            Outcome::DenZero { num_positive: true } => {
                cert.get_or_insert((r, Certificate::VanishingDenominator { r }));
                f64::INFINITY
            }
            Outcome::DenZero { num_positive: false } => 0.0,
            Outcome::Failed(e) => {
                failures.push(format!("r = {r}: {e}"));
                f64::NAN
            }
        };
        profile.push((r, v));
    }
    if let Some((r, c)) = cert {
        let diag = format!("divergence certificate at r = {r}");
        return not_member(profile, r, c, diag);
    }
    let finite: Vec<(usize, f64)> =
        profile.iter().enumerate().filter(|(_, (_, v))| v.is_finite()).map(|(i, (_, v))| (i, *v)).collect();
    let Some(&(imax, vmax)) = finite.iter().fold(None, |best: Option<&(usize, f64)>, c| match best {
        Some(b) if b.1 >= c.1 => Some(b),
        _ => Some(c),
    }) else {
        return ClassReport {
            verdict: ClassVerdict::Inconclusive,
            sup_ratio: f64::NAN,
            class_constant: f64::NAN,
            argmax_r: grid[0],
            profile,
            certificate: None,
            diagnostics: format!("no finite ratio on the grid; {}", failures.join("; ")),
        };
    };
    let mut sup = vmax;
    let mut arg = grid[imax];
    let mut notes = Vec::new();
    let mut unclear = false;

    if failures.is_empty() && grid.len() >= 3 {
        let values: Vec<f64> = profile.iter().map(|(_, v)| *v).collect();
        let span = (grid[grid.len() - 1] / grid[0]).log10();
        let mut edges = vec![(true, values.iter().rev().copied().collect::<Vec<_>>())];
        if params.domain == Domain::HalfLine {
            edges.push((false, values.clone()));
        }
        for (toward_zero, seq) in edges {
            match edge_trend(&seq, span) {
                EdgeTrend::Flat => {}
                EdgeTrend::Converging(limit) => {
                    let r_edge = if toward_zero { grid[0] } else { grid[grid.len() - 1] };
                    notes.push(format!("edge limit {limit} extrapolated toward r = {r_edge}"));
                    if limit > sup {
                        sup = limit;
                        arg = r_edge;
                    }
                }
                EdgeTrend::Growing { decades } => {
                    let r_edge = if toward_zero { grid[0] } else { grid[grid.len() - 1] };
                    let diag = format!("ratio grows monotonically over {decades:.2} decades toward r = {r_edge}");
                    return not_member(profile, r_edge, Certificate::MonotoneGrowth { decades, toward_zero }, diag);
                }
                EdgeTrend::Unclear => {
                    unclear = true;
                    notes.push(format!("ratio still increasing toward the {} edge", if toward_zero { "lower" } else { "upper" }));
                }
            }
        }
    }

    if imax > 0 && imax + 1 < grid.len() && grid[imax - 1] > 0.0 {
        let f = |t: f64| match evaluate(prep, params, t.exp()) {
            Outcome::Finite(v) => v,
            _ => f64::NEG_INFINITY,
        };
        let (t, v) = golden_max(f, grid[imax - 1].ln(), grid[imax + 1].ln(), REFINE_ITERS);
        if v > sup {
            sup = v;
            arg = t.exp();
        }
    }

    let verdict = if !failures.is_empty() || unclear { ClassVerdict::Inconclusive } else { ClassVerdict::Member };
    if !failures.is_empty() {
        notes.push(format!("{} radii failed: {}", failures.len(), failures.join("; ")));
    }
    ClassReport {
        verdict,
        sup_ratio: sup,
        class_constant: 1.0 + sup,
        argmax_r: arg,
        profile,
        certificate: None,
        diagnostics: notes.join("; "),
    }
}
