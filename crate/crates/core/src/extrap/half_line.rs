use super::{
    check_base_exponents, grid_infimum, CertifiedPair, ConstantReport, InequalityCheck, MonotoneFn, CONSTANT_GRID,
};
use crate::error::{Error, Result};
use crate::funcspace::{is_quasi_monotone, Domain, Func, QBeta, QmVerdict, Support};
use crate::norms::weighted_power_integral;
use crate::operators::{s_psi, PsiKernel};
use crate::search::log_grid;
use crate::weightclass::{hat_membership, psi_weight, qb_constant, ClassParams};

/// `int (S_psi f)^p w <= ([w]/(beta+1)^p) int f^p w`, with `[w]` measured.
pub fn theorem_a_check(
    f: &Func,
    k: &PsiKernel,
    beta: f64,
    p: f64,
    w: &Func,
    domain: Domain,
    rel_tol: f64,
) -> Result<InequalityCheck> {
    let b = QBeta::new(beta)?.require_nonpositive()?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("need p >= 1, got {p}")));
    }
    let grid = log_grid(1e-6, domain.upper().min(1e6), 241)?;
    if let QmVerdict::CounterexampleAt(x1, x2) = is_quasi_monotone(f, b, &grid)?.verdict {
        return Err(Error::HypothesisNotCertified(format!("f is not in Q_{beta}: fails between {x1} and {x2}")));
    }
    let params = ClassParams::new(beta, p, domain)?.with_psi(k.clone());
    let class = qb_constant(w, &params, None)?;
    if !class.is_member() {
        return Err(Error::NotInClass(format!("{:?}: {}", class.verdict, class.diagnostics)));
    }
    let sf = s_psi(f, k)?;
    let lhs = weighted_power_integral(&sf, w, p, domain)?;
    let base = weighted_power_integral(f, w, p, domain)?;
    let c_prime = class.class_constant / (beta + 1.0).powf(p);
    Ok(InequalityCheck::new(lhs, c_prime, base, rel_tol))
}

/// `int_0^t f Psi^{p0-1-eps} psi <= phi(p0(beta+1)/eps) int_0^t g Psi^{p0-1-eps} psi` at each `t`.
///
/// For an `S_psi` pair the lemma's `f, g` are `(S_psi u)^{p0}` and `u^{p0}`.
#[allow(clippy::too_many_arguments)]
pub fn lemma22_check(
    pair: &CertifiedPair,
    k: &PsiKernel,
    beta: f64,
    p0: f64,
    eps: f64,
    phi: &MonotoneFn,
    t_grid: &[f64],
    rel_tol: f64,
) -> Result<Vec<InequalityCheck>> {
    let b = QBeta::new(beta)?.value();
    if !(p0 > 0.0) || !(eps > 0.0 && eps < p0 * (b + 1.0)) {
        return Err(Error::ParameterOutOfRange(format!("need 0 < eps < p0(beta+1) = {}, got {eps}", p0 * (b + 1.0))));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidGrid("t values must be positive and finite".into()));
    }
    if let CertifiedPair::SPsiBound { kernel, beta: pb, .. } = pair {
        if pb.value() != b {
            return Err(Error::HypothesisNotCertified(format!("pair certified for beta = {}, not {b}", pb.value())));
        }
        let same = match (kernel.primitive(), k.primitive()) {
            (Some(a), Some(c)) => a == c,
            _ => false,
        };
        if !same {
            return Err(Error::HypothesisNotCertified("pair certified for a different psi".into()));
        }
    }
    pair.require_dominated_by(phi, p0)?;
    if let Some(prim) = k.primitive() {
        if !matches!(prim.exponent_at_infinity(), Some(a) if a > 0.0) {
            return Err(Error::ParameterOutOfRange("Psi must be unbounded".into()));
        }
    }
    let m = psi_weight(k, &Func::one(), p0 - 1.0 - eps)?;
    let (f, g, q) = match pair {
        CertifiedPair::SPsiBound { .. } => {
            let (f, g) = pair.functions()?;
            (f, g, p0)
        }
        CertifiedPair::Diagonal { f } => (f.clone(), f.clone(), 1.0),
    };
    let factor = phi.eval(p0 * (b + 1.0) / eps);
    t_grid
        .iter()
        .map(|&t| {
            let cut = Support::new(0.0, t)?;
            let lhs = weighted_power_integral(&f.restrict(cut), &m, q, Domain::HalfLine)?;
            let base = weighted_power_integral(&g.restrict(cut), &m, q, Domain::HalfLine)?;
            Ok(InequalityCheck::new(lhs, factor, base, rel_tol))
        })
        .collect()
}

fn default_eps_grid(top: f64) -> Vec<f64> {
    log_grid(1e-4 * top, (1.0 - 1e-4) * top, CONSTANT_GRID).expect("valid range")
}

fn check_grid_inside(grid: &[f64], top: f64, what: &str) -> Result<()> {
    if grid.iter().any(|&e| !(e > 0.0 && e < top)) {
        return Err(Error::InvalidGrid(format!("{what} grid must lie in (0, {top})")));
    }
    Ok(())
}

/// `inf_eps [w]_{QB_{beta,(p0-eps)p/p0}} [(1/(beta+1)) ((p0(beta+1)-eps)/(p0-eps)) phi(p0(beta+1)/eps)]^{p/p0}`.
pub fn thm_main_constant(
    w: &Func,
    beta: f64,
    p0: f64,
    p: f64,
    phi: &MonotoneFn,
    eps_grid: Option<&[f64]>,
) -> Result<ConstantReport> {
    let b = check_base_exponents(beta, p0, p)?.value();
    if p0 < 1.0 {
        return Err(Error::ParameterOutOfRange(format!("need p0 >= 1, got {p0}")));
    }
    phi.validate()?;
    let hat = hat_membership(w, &ClassParams::new(b, p, Domain::HalfLine)?, None)?;
    if !hat.is_member() {
        return Err(Error::NotInHatClass(format!("at p = {p}: {}", hat.diagnostics)));
    }
    let top = p0 * (b + 1.0);
    let owned;
    let grid = match eps_grid {
        Some(g) => g,
        None => {
            owned = default_eps_grid(top);
            &owned
        }
    };
    check_grid_inside(grid, top, "eps")?;
    let base = ClassParams::new(b, p, Domain::HalfLine)?;
    grid_infimum(grid, |eps| main_expression(w, &base, b, p0, p, phi, eps))
}

fn main_expression(w: &Func, base: &ClassParams, b: f64, p0: f64, p: f64, phi: &MonotoneFn, eps: f64) -> f64 {
    let q = (p0 - eps) * p / p0;
    let class = match base.at_exponent(q).and_then(|params| qb_constant(w, &params, None)) {
        Ok(rep) if rep.is_member() => rep.class_constant,
        _ => return f64::INFINITY,
    };
    let bracket = (p0 * (b + 1.0) - eps) / ((b + 1.0) * (p0 - eps)) * phi.eval(p0 * (b + 1.0) / eps);
    class * bracket.powf(p / p0)
}

/// `int f^p w <= C int g^p w` with `C` from [`thm_main_constant`].
pub fn thm_main_check(
    pair: &CertifiedPair,
    w: &Func,
    beta: f64,
    p0: f64,
    p: f64,
    phi: &MonotoneFn,
    rel_tol: f64,
) -> Result<(InequalityCheck, ConstantReport)> {
    thm_main_check_with_grid(pair, w, beta, p0, p, phi, None, rel_tol)
}

/// [`thm_main_check`] with an explicit `eps` grid for the constant.
#[allow(clippy::too_many_arguments)]
pub fn thm_main_check_with_grid(
    pair: &CertifiedPair,
    w: &Func,
    beta: f64,
    p0: f64,
    p: f64,
    phi: &MonotoneFn,
    eps_grid: Option<&[f64]>,
    rel_tol: f64,
) -> Result<(InequalityCheck, ConstantReport)> {
    if let CertifiedPair::SPsiBound { kernel, beta: pb, .. } = pair {
        if !kernel.is_one() {
            return Err(Error::HypothesisNotCertified("the half-line extrapolation uses psi = 1 pairs".into()));
        }
        if pb.value() != beta {
            return Err(Error::HypothesisNotCertified(format!("pair certified for beta = {}, not {beta}", pb.value())));
        }
    }
    pair.require_dominated_by(phi, p0)?;
    let constant = thm_main_constant(w, beta, p0, p, phi, eps_grid)?;
    let (f, g) = pair.functions()?;
    let lhs = weighted_power_integral(&f, w, p, Domain::HalfLine)?;
    let base = weighted_power_integral(&g, w, p, Domain::HalfLine)?;
    Ok((InequalityCheck::new(lhs, constant.value, base, rel_tol), constant))
}

/// `inf_{alpha > -1} [w]_{QB_{beta,(alpha+1)p/p0}} (phi(1)/(beta+1))^{p/p0}`.
pub fn thm_infinity_constant(
    w: &Func,
    beta: f64,
    p0: f64,
    p: f64,
    phi: &MonotoneFn,
    alpha_grid: Option<&[f64]>,
) -> Result<ConstantReport> {
    let b = check_base_exponents(beta, p0, p)?.value();
    phi.validate()?;
    // Search over a = alpha + 1 > 0 so the grid can be log-spaced.
    let shifted: Vec<f64> = match alpha_grid {
        Some(g) => {
            if g.iter().any(|&a| !(a > -1.0)) {
                return Err(Error::InvalidGrid("alpha grid must lie in (-1, inf)".into()));
            }
            g.iter().map(|a| a + 1.0).collect()
        }
        None => log_grid(1e-2, 1e2, CONSTANT_GRID)?,
    };
    let factor = (phi.eval(1.0) / (b + 1.0)).powf(p / p0);
    let base = ClassParams::new(b, p, Domain::HalfLine)?;
    let rep = grid_infimum(&shifted, |a| {
        match base.at_exponent(a * p / p0).and_then(|params| qb_constant(w, &params, None)) {
            Ok(r) if r.is_member() => r.class_constant * factor,
            _ => f64::INFINITY,
        }
    })
    .map_err(|e| match e {
        Error::EmptyGrid(m) => Error::NotInClass(format!("no alpha on the grid admits the weight: {m}")),
        e => e,
    })?;
    Ok(ConstantReport {
        argmin: rep.argmin - 1.0,
        profile: rep.profile.into_iter().map(|(a, v)| (a - 1.0, v)).collect(),
        grid: (rep.grid.0 - 1.0, rep.grid.1 - 1.0, rep.grid.2),
        ..rep
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::ClosedFormFunc;

    fn chi01() -> Func {
        Func::Closed(ClosedFormFunc::indicator(0.0, 1.0).unwrap())
    }

    #[test]
    fn theorem_a_equality_case() {
        let c = theorem_a_check(&chi01(), &PsiKernel::one(), 0.0, 2.0, &Func::one(), Domain::HalfLine, 1e-9).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-12);
        assert!((c.rhs_constant * c.rhs_base - 2.0).abs() < 1e-6);
        assert!(c.pass);
    }

    #[test]
    fn theorem_a_with_power_weight() {
        let beta = -0.5;
        let f = Func::Closed(ClosedFormFunc::power(1.0, beta).restrict(Support::UNIT));
        let w = Func::Closed(ClosedFormFunc::power(1.0, 0.5));
        let c = theorem_a_check(&f, &PsiKernel::one(), beta, 2.0, &w, Domain::HalfLine, 1e-9).unwrap();
        assert!(c.pass, "{c:?}");
        let zero = Func::Closed(ClosedFormFunc::zero());
        let c = theorem_a_check(&zero, &PsiKernel::one(), beta, 2.0, &w, Domain::HalfLine, 1e-9).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.pass);
    }

    #[test]
    fn theorem_a_rejects_non_members() {
        let w = Func::Closed(ClosedFormFunc::power(1.0, 1.5));
        let r = theorem_a_check(&chi01(), &PsiKernel::one(), 0.0, 2.0, &w, Domain::HalfLine, 1e-9);
        assert!(matches!(r, Err(Error::NotInClass(_))));
    }

    #[test]
    fn lemma22_examples() {
        let pair = CertifiedPair::s_psi_bound(chi01(), PsiKernel::one(), 0.0).unwrap();
        let checks =
            lemma22_check(&pair, &PsiKernel::one(), 0.0, 2.0, 0.5, &MonotoneFn::Identity, &[1e-3, 0.5, 1.0, 4.0], 1e-9)
                .unwrap();
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
        let diag = CertifiedPair::raw(chi01(), chi01()).unwrap();
        let checks =
            lemma22_check(&diag, &PsiKernel::one(), 0.0, 2.0, 0.5, &MonotoneFn::Identity, &[1.0], 1e-9).unwrap();
        assert!(checks[0].pass);
        // phi = identity is below t/(beta+1)^p0 when beta < 0.
        let u = Func::Closed(ClosedFormFunc::power(1.0, -0.3).restrict(Support::UNIT));
        let pair = CertifiedPair::s_psi_bound(u, PsiKernel::one(), -0.3).unwrap();
        assert!(matches!(
            lemma22_check(&pair, &PsiKernel::one(), -0.3, 2.0, 0.5, &MonotoneFn::Identity, &[1.0], 1e-9),
            Err(Error::HypothesisNotCertified(_))
        ));
    }

    fn main_oracle(eps: f64) -> f64 {
        // w = 1, beta = 0, p0 = 1, p = 2: q = 2(1 - eps), [w] = q/(q - 1), bracket 1/eps.
        let q = 2.0 * (1.0 - eps);
        if q <= 1.0 {
            return f64::INFINITY;
        }
        q / (q - 1.0) / (eps * eps)
    }

    #[test]
    fn main_constant_matches_dense_oracle() {
        let rep = thm_main_constant(&Func::one(), 0.0, 1.0, 2.0, &MonotoneFn::Identity, None).unwrap();
        let oracle = (1..10_000).map(|i| main_oracle(i as f64 / 10_000.0)).fold(f64::INFINITY, f64::min);
        assert!((rep.value - oracle).abs() < 1e-3 * oracle, "{} vs {oracle}", rep.value);
    }

    #[test]
    fn main_constant_with_constant_phi_at_p_equal_p0() {
        let kappa = 3.0;
        let rep = thm_main_constant(&Func::one(), 0.0, 2.0, 2.0, &MonotoneFn::Constant { c: kappa }, None).unwrap();
        let f = |e: f64| {
            let q = 2.0 - e;
            if q <= 1.0 {
                f64::INFINITY
            } else {
                q / (q - 1.0) * (2.0 - e) / (2.0 - e) * kappa
            }
        };
        let oracle = (1..20_000).map(|i| f(2.0 * i as f64 / 20_000.0)).fold(f64::INFINITY, f64::min);
        assert!((rep.value - oracle).abs() < 1e-3 * oracle, "{} vs {oracle}", rep.value);
    }

    #[test]
    fn main_check_passes_for_certified_pair() {
        let pair = CertifiedPair::s_psi_bound(chi01(), PsiKernel::one(), 0.0).unwrap();
        let (c, k) = thm_main_check(&pair, &Func::one(), 0.0, 1.0, 2.0, &MonotoneFn::Identity, 1e-6).unwrap();
        assert!(c.pass, "{c:?}");
        assert!(k.value > 35.0);
    }

    #[test]
    fn infinity_constant_decreases_toward_grid_top() {
        let rep = thm_infinity_constant(&Func::one(), 0.0, 1.0, 2.0, &MonotoneFn::Identity, None).unwrap();
        // Largest exponent q = 2 (alpha + 1) = 200 gives q/(q-1).
        assert!((rep.value - 200.0 / 199.0).abs() < 1e-6, "{rep:?}");
        assert!((rep.argmin - 99.0).abs() < 1e-6);
    }
}
