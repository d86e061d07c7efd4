use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{qb_constant, ClassParams, ClassVerdict};
use crate::error::{Error, Result};
use crate::funcspace::{is_quasi_monotone, ClosedFormFunc, Domain, EvaluableFunc, Func, QBeta, QmVerdict, Support};
use crate::operators::{big_psi, MonotoneTag, PsiKernel};
use crate::search::{argmin, golden_min, is_strictly_increasing, log_grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityReport {
    pub verdict: ClassVerdict,
    /// Smallest class constant found; `inf` when no exponent admits `w`.
    pub value: f64,
    pub argmin_p: f64,
    /// `(p, class_constant)` per grid point, `inf` for non-members and NaN when inconclusive.
    pub profile: Vec<(f64, f64)>,
    pub diagnostics: String,
}

const P_REFINE_ITERS: usize = 30;

/// Grid infimum of `[w]_{QB_{beta,psi,p}}` over `p`. `template` fixes beta, psi and the domain.
pub fn qb_infinity_constant(w: &Func, template: &ClassParams, p_grid: Option<&[f64]>) -> Result<InfinityReport> {
    let owned;
    let grid = match p_grid {
        Some(g) => g,
        None => {
            owned = log_grid(0.1, 64.0, 64)?;
            &owned
        }
    };
    if grid.is_empty() || !is_strictly_increasing(grid) || !(grid[0] > 0.0) {
        return Err(Error::InvalidGrid("p grid must be non-empty, positive and increasing".into()));
    }
    let constant_at = |p: f64| -> (ClassVerdict, f64) {
        match template.at_exponent(p).and_then(|params| qb_constant(w, &params, None)) {
            Ok(rep) => match rep.verdict {
                ClassVerdict::Member => (ClassVerdict::Member, rep.class_constant),
                v => (v, if v == ClassVerdict::NotMember { f64::INFINITY } else { f64::NAN }),
            },
            Err(_) => (ClassVerdict::Inconclusive, f64::NAN),
        }
    };
    let rows: Vec<(ClassVerdict, f64)> = grid.par_iter().map(|&p| constant_at(p)).collect();
    let profile: Vec<(f64, f64)> = grid.iter().zip(&rows).map(|(&p, &(_, c))| (p, c)).collect();
    let member_values: Vec<f64> =
        rows.iter().map(|&(v, c)| if v == ClassVerdict::Member { c } else { f64::INFINITY }).collect();
    let Some(i) = argmin(&member_values).filter(|&i| member_values[i].is_finite()) else {
        let any_unknown = rows.iter().any(|(v, _)| *v == ClassVerdict::Inconclusive);
        return Ok(InfinityReport {
            verdict: if any_unknown { ClassVerdict::Inconclusive } else { ClassVerdict::NotMember },
            value: f64::INFINITY,
            argmin_p: f64::NAN,
            profile,
            diagnostics: "no grid exponent admits the weight".into(),
        });
    };
    let mut best = (grid[i], member_values[i]);
    if grid.len() > 1 {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let (t, v) = golden_min(
            |t| match constant_at(t.exp()) {
                (ClassVerdict::Member, c) => c,
                _ => f64::INFINITY,
            },
            lo.ln(),
            hi.ln(),
            P_REFINE_ITERS,
        );
        if v < best.1 {
            best = (t.exp(), v);
        }
    }
    Ok(InfinityReport {
        verdict: ClassVerdict::Member,
        value: best.1,
        argmin_p: best.0,
        profile,
        diagnostics: "grid infimum; attainment is not claimed".into(),
    })
}

/// `w = Psi^alpha psi v`, kept in closed form when `Psi` is piecewise monomial.
pub fn psi_weight(k: &PsiKernel, v: &Func, alpha: f64) -> Result<Func> {
    if let (Some(prim), Func::Closed(pc), Func::Closed(vc)) = (k.primitive(), k.psi(), v) {
        if let Some(pieces) = prim.monomial_pieces() {
            let base = pc.mul(vc);
            let mut terms = Vec::new();
            for piece in &pieces {
                let cell = base.restrict(Support::new(piece.lo, piece.hi)?);
                if cell.is_zero() {
                    continue;
                }
                if piece.coef <= 0.0 {
                    return Err(Error::ZeroPsi(piece.lo.max(f64::MIN_POSITIVE)));
                }
                terms.extend_from_slice(cell.mul_power(piece.coef.powf(alpha), piece.power * alpha).terms());
            }
            return Ok(Func::Closed(ClosedFormFunc::new(terms)));
        }
    }
    let (kk, pv) = (k.clone(), k.psi().mul(v));
    let sing = match (pv.exponent_at_zero(), k.psi().exponent_at_zero()) {
        (Some(s), Some(a)) => Some(s + alpha * (a + 1.0)),
        _ => None,
    };
    Ok(Func::Eval(
        EvaluableFunc::new("Psi^alpha psi v", move |x| match big_psi(&kk, x) {
            Ok(px) => px.powf(alpha) * pv.value(x),
            Err(_) => f64::NAN,
        })
        .with_singularity_opt(sing),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiWeightRow {
    pub p0: f64,
    pub bound: f64,
    pub measured_sup: f64,
    pub verdict: ClassVerdict,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiWeightReport {
    /// Open interval of admissible `p0`.
    pub admissible: (f64, f64),
    pub rows: Vec<PsiWeightRow>,
    pub pass: bool,
}

/// Check that `w = Psi^alpha psi v` has `QB_{beta,psi,p0}` ratio at most
/// `(beta p0 + alpha + 1)/(p0 - alpha - 1)` for admissible `p0`.
pub fn lemma_psi_weight_bound(
    k: &PsiKernel,
    v: &Func,
    alpha: f64,
    beta: f64,
    p0_grid: Option<&[f64]>,
) -> Result<PsiWeightReport> {
    let b = QBeta::new(beta)?.value();
    let lo = alpha + 1.0;
    let hi = if b < 0.0 { -(alpha + 1.0) / b } else if b == 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::EmptyAdmissibleRange(format!("alpha = {alpha}, beta = {beta}: ({lo}, {hi})")));
    }
    if !(k.is_one() || k.tag() == MonotoneTag::NonDecreasing) {
        return Err(Error::ParameterOutOfRange("psi must be tagged non-decreasing".into()));
    }
    let probe = log_grid(1e-6, 1e6, 121)?;
    if let QmVerdict::CounterexampleAt(a, c) = is_quasi_monotone(v, QBeta::new(0.0)?, &probe)?.verdict {
        return Err(Error::ParameterOutOfRange(format!("v increases between {a} and {c}")));
    }
    let owned: Vec<f64>;
    let grid = match p0_grid {
        Some(g) => g,
        None => {
            let top = if hi.is_finite() { hi } else { lo + 4.0 };
            owned = (1..=8).map(|i| lo + (top - lo) * i as f64 / 9.0).collect();
            &owned
        }
    };
    if grid.is_empty() || grid.iter().any(|&p| !(p > lo && p < hi)) {
        return Err(Error::ParameterOutOfRange(format!("p0 grid must lie in ({lo}, {hi})")));
    }
    let w = psi_weight(k, v, alpha)?;
    let rows = grid
        .iter()
        .map(|&p0| {
            let params = ClassParams::new(b, p0, Domain::HalfLine)?.with_psi(k.clone());
            let rep = qb_constant(&w, &params, None)?;
            let bound = (b * p0 + alpha + 1.0) / (p0 - alpha - 1.0);
            let pass = rep.is_member() && rep.sup_ratio <= bound * (1.0 + 1e-6) + 1e-12;
            Ok(PsiWeightRow { p0, bound, measured_sup: rep.sup_ratio, verdict: rep.verdict, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(PsiWeightReport { admissible: (lo, hi), rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weight_infimum_is_at_largest_p() {
        let t = ClassParams::new(0.0, 2.0, Domain::HalfLine).unwrap();
        let grid = log_grid(1.1, 20.0, 16).unwrap();
        let rep = qb_infinity_constant(&Func::one(), &t, Some(&grid)).unwrap();
        assert_eq!(rep.verdict, ClassVerdict::Member);
        assert!((rep.value - 20.0 / 19.0).abs() < 1e-6, "{rep:?}");
        assert!((rep.argmin_p - 20.0).abs() < 1e-6);
    }

    #[test]
    fn compact_weight_membership_needs_p_above_one() {
        // For chi_(0,1), beta = 0: N/D = (r^{1-p} - 1) r^{p-1}/(p-1) on (0,1), bounded iff p > 1,
        // with supremum 1/(p-1) approached as r -> 0.
        let chi = Func::Closed(ClosedFormFunc::indicator(0.0, 1.0).unwrap());
        let t = ClassParams::new(0.0, 2.0, Domain::HalfLine).unwrap();
        let grid = [0.5, 1.0, 2.0, 4.0];
        let rep = qb_infinity_constant(&chi, &t, Some(&grid)).unwrap();
        assert_eq!(rep.profile[0].1, f64::INFINITY);
        assert_eq!(rep.profile[1].1, f64::INFINITY);
        assert!((rep.profile[2].1 - 2.0).abs() < 1e-6, "{rep:?}");
        assert!((rep.profile[3].1 - (1.0 + 1.0 / 3.0)).abs() < 1e-6, "{rep:?}");
        assert!(rep.value <= 1.0 + 1.0 / 3.0 + 1e-6);
    }

    #[test]
    fn psi_weight_examples() {
        let rep = lemma_psi_weight_bound(&PsiKernel::one(), &Func::one(), 0.0, -0.5, Some(&[1.5])).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.rows[0].bound - 0.5).abs() < 1e-15);
        let chi = Func::Closed(ClosedFormFunc::indicator(0.0, 1.0).unwrap());
        let rep = lemma_psi_weight_bound(&PsiKernel::one(), &chi, 0.0, 0.0, Some(&[2.0])).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = lemma_psi_weight_bound(&PsiKernel::one(), &Func::one(), 0.5, -0.9, None).unwrap();
        assert!((rep.admissible.1 - 1.5 / 0.9).abs() < 1e-12);
        assert!(matches!(
            lemma_psi_weight_bound(&PsiKernel::one(), &Func::one(), 0.5, 0.2, None),
            Err(Error::EmptyAdmissibleRange(_))
        ));
    }

    #[test]
    fn psi_weight_with_power_kernel() {
        let k = PsiKernel::power(0.5).unwrap();
        let rep = lemma_psi_weight_bound(&k, &Func::one(), 0.2, -0.3, None).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
