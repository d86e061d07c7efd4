//! Validation and dispatch of scenarios.

use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;

use qbhardy::extrap::{
    lemma22_check, theorem_a_check, thm_grand_constant, thm_hardy_grand_check, thm_hardy_grand_necessity,
    thm_infinity_constant, thm_main_check_with_grid, CertifiedPair, ConstantReport, HardyGrandOptions,
    InequalityCheck,
};
use qbhardy::funcspace::expr::FuncExpr;
use qbhardy::funcspace::{is_quasi_monotone, Domain, Func, QBeta, QmVerdict};
use qbhardy::norms::{grand_eps_grid, grand_norm, weighted_lp_norm, weighted_power_integral, GrandParams, GRAND_REFINE_ITERS};
use qbhardy::operators::{s_psi, PsiKernel};
use qbhardy::search::log_grid;
use qbhardy::weightclass::{
    default_eps_grid, default_r_grid, hat_membership, qb_constant, ClassParams, ClassVerdict, REFINE_ITERS,
};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::HarnessError;
use crate::report::{Check, Constant, GridProvenance, Profile, Real, ScenarioReport, Status, SuiteReport};

type HResult<T> = Result<T, HarnessError>;

fn need<'a, T>(v: &'a Option<T>, field: &str, kind: ScenarioKind) -> HResult<&'a T> {
    v.as_ref().ok_or_else(|| HarnessError::config(field, format!("required for {}", kind.label())))
}

fn build(expr: &FuncExpr, field: &str) -> HResult<Func> {
    expr.build().map_err(|e| HarnessError::config(field, e.to_string()))
}

fn kernel(cfg: &ScenarioConfig) -> HResult<PsiKernel> {
    match &cfg.psi {
        None => Ok(PsiKernel::one()),
        Some(spec) => {
            PsiKernel::new(build(&spec.function, "psi.function")?, spec.tag).map_err(|e| HarnessError::config("psi", e.to_string()))
        }
    }
}

fn finite(field: &str, v: f64) -> HResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(HarnessError::config(field, "must be finite"))
    }
}

/// Checks shared by every kind: `beta > -1`, a positive tolerance and a finite grid.
fn validate_common(cfg: &ScenarioConfig) -> HResult<()> {
    if !(cfg.beta > -1.0) || !cfg.beta.is_finite() {
        return Err(HarnessError::config("beta", format!("must satisfy beta > -1, got {}", cfg.beta)));
    }
    if !(cfg.tol > 0.0) || !cfg.tol.is_finite() {
        return Err(HarnessError::config("tol", "must be a positive real"));
    }
    for (name, v) in [("p", cfg.p), ("p0", cfg.p0), ("theta", cfg.theta), ("eps", cfg.eps), ("min_growth", cfg.min_growth)] {
        if let Some(v) = v {
            finite(name, v)?;
        }
    }
    if let Some(g) = &cfg.grid {
        if g.is_empty() || g.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::config("grid", "must be a non-empty list of finite reals"));
        }
    }
    if let Some(phi) = &cfg.phi {
        phi.validate().map_err(|e| HarnessError::config("phi", e.to_string()))?;
    }
    Ok(())
}

fn nonpositive_beta(cfg: &ScenarioConfig, theorem: &str) -> HResult<()> {
    if cfg.beta > 0.0 {
        return Err(HarnessError::range(theorem, "beta", "requires -1 < beta <= 0"));
    }
    Ok(())
}

fn increasing(cfg: &ScenarioConfig, theorem: &str) -> HResult<()> {
    if let Some(g) = &cfg.grid {
        if g.windows(2).any(|s| !(s[1] > s[0])) {
            return Err(HarnessError::range(theorem, "grid", "must be strictly increasing"));
        }
    }
    Ok(())
}

fn provenance(parameter: &str, rep: &ConstantReport) -> GridProvenance {
    GridProvenance {
        parameter: parameter.into(),
        lo: Real(rep.grid.0),
        hi: Real(rep.grid.1),
        points: rep.grid.2,
        refine_iters: rep.refine_iters,
    }
}

fn grid_provenance(parameter: &str, grid: &[f64], refine_iters: usize) -> GridProvenance {
    GridProvenance {
        parameter: parameter.into(),
        lo: Real(grid.first().copied().unwrap_or(f64::NAN)),
        hi: Real(grid.last().copied().unwrap_or(f64::NAN)),
        points: grid.len(),
        refine_iters,
    }
}

fn verdict_status(v: ClassVerdict) -> Status {
    match v {
        ClassVerdict::Member => Status::Pass,
        ClassVerdict::NotMember => Status::Fail,
        ClassVerdict::Inconclusive => Status::Inconclusive,
    }
}

fn label<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_else(|| "?".into())
}

fn constant(name: &str, value: f64, at: Option<f64>, grid: Option<GridProvenance>) -> Constant {
    Constant { name: name.into(), value: Real(value), at: at.map(Real), grid }
}

fn checks_status(checks: &[Check]) -> Status {
    if checks.iter().all(|c| c.pass) {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Validate and run one scenario. Configuration problems are errors; numerical outcomes,
/// including failed hypotheses and inconclusive searches, are reported in the result.
pub fn run_scenario(cfg: &ScenarioConfig) -> HResult<ScenarioReport> {
    validate_common(cfg)?;
    let start = Instant::now();
    let mut report = ScenarioReport::new(cfg.clone());
    debug!("running {} ({})", cfg.label(), cfg.kind.label());
    let outcome = dispatch(cfg, &mut report);
    match outcome {
        Ok(status) => report.finish(status),
        Err(HarnessError::Numeric(e)) => {
            let status = match &e {
                qbhardy::Error::NotInClass(_)
                | qbhardy::Error::NotInHatClass(_)
                | qbhardy::Error::HypothesisNotCertified(_)
                | qbhardy::Error::DivergentWI
                | qbhardy::Error::DivergentIntegral(_)
                | qbhardy::Error::EmptyGrid(_)
                | qbhardy::Error::EmptyAdmissibleRange(_) => Status::Fail,
                qbhardy::Error::NotConverged(_) => Status::Inconclusive,
                _ => Status::Error,
            };
            report.error = Some(e.to_string());
            report.finish(status);
        }
        Err(e) => return Err(e),
    }
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    info!("{}: {:?} (ok = {})", cfg.label(), report.status, report.ok);
    Ok(report)
}

fn dispatch(cfg: &ScenarioConfig, rep: &mut ScenarioReport) -> HResult<Status> {
    let kind = cfg.kind;
    match kind {
        ScenarioKind::Classify => {
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let p = *need(&cfg.p, "p", kind)?;
            if !(p > 0.0) {
                return Err(HarnessError::range("class condition", "p", "requires p > 0"));
            }
            increasing(cfg, "class condition")?;
            let params = ClassParams::new(cfg.beta, p, cfg.domain)?.with_psi(kernel(cfg)?);
            let grid = cfg.grid.clone().unwrap_or_else(|| default_r_grid(cfg.domain));
            let r = qb_constant(&w, &params, Some(&grid))?;
            rep.verdicts.push(("class".into(), label(&r.verdict)));
            let prov = grid_provenance("r", &grid, REFINE_ITERS);
            rep.constants.push(constant("class_constant", r.class_constant, Some(r.argmax_r), Some(prov.clone())));
            rep.constants.push(constant("sup_ratio", r.sup_ratio, Some(r.argmax_r), Some(prov)));
            if let Some(c) = &r.certificate {
                rep.diagnostics.push(format!("certificate: {}", serde_json::to_string(c).unwrap_or_default()));
            }
            rep.diagnostics.push(r.diagnostics.clone());
            rep.profiles.push(Profile::new("ratio", "r", "N/D", &r.profile));
            Ok(verdict_status(r.verdict))
        }
        ScenarioKind::HatClassify => {
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let p = *need(&cfg.p, "p", kind)?;
            if !(p > 0.0) {
                return Err(HarnessError::range("hat class", "p", "requires p > 0"));
            }
            increasing(cfg, "hat class")?;
            let params = ClassParams::new(cfg.beta, p, cfg.domain)?.with_psi(kernel(cfg)?);
            let grid = cfg.grid.clone().unwrap_or_else(|| default_eps_grid(cfg.beta, p));
            let h = hat_membership(&w, &params, Some(&grid))?;
            rep.verdicts.push(("hat_class".into(), label(&h.verdict)));
            rep.verdicts.push(("base_class".into(), label(&h.base.verdict)));
            rep.constants.push(constant("class_constant", h.base.class_constant, Some(h.base.argmax_r), None));
            if let Some(e) = h.witness_epsilon {
                let prov = grid_provenance("eps", &grid, 0);
                rep.constants.push(constant("witness_epsilon", e, None, Some(prov)));
            }
            if let Some(s) = &h.shifted {
                rep.constants.push(constant("shifted_class_constant", s.class_constant, Some(s.argmax_r), None));
            }
            rep.diagnostics.push(h.diagnostics.clone());
            Ok(verdict_status(h.verdict))
        }
        ScenarioKind::Norm => {
            let f = build(need(&cfg.function, "function", kind)?, "function")?;
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let p = *need(&cfg.p, "p", kind)?;
            if !(p >= 1.0) {
                return Err(HarnessError::range("weighted Lebesgue norm", "p", "requires p >= 1"));
            }
            let v = weighted_lp_norm(&f, &w, p, cfg.domain)?;
            rep.constants.push(constant("norm", v, None, None));
            Ok(if v.is_finite() { Status::Pass } else { Status::Fail })
        }
        ScenarioKind::GrandNorm => {
            let f = build(need(&cfg.function, "function", kind)?, "function")?;
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let gp = grand_params(cfg, "grand Lebesgue norm")?;
            let g = grand_norm(&f, &w, &gp)?;
            let grid = grand_eps_grid(&gp)?;
            let prov = grid_provenance("eps", &grid, GRAND_REFINE_ITERS);
            rep.constants.push(constant("grand_norm", g.value, Some(g.argmax_eps), Some(prov)));
            rep.verdicts.push(("boundary_flag".into(), label(&g.boundary_flag)));
            rep.profiles.push(Profile::new("eps_profile", "eps", "profile", &g.profile));
            if !g.diagnostics.is_empty() {
                rep.diagnostics.push(g.diagnostics.clone());
            }
            Ok(if g.inconclusive {
                Status::Inconclusive
            } else if g.value.is_finite() {
                Status::Pass
            } else {
                Status::Fail
            })
        }
        ScenarioKind::HardyCheck => {
            let f = build(need(&cfg.function, "function", kind)?, "function")?;
            let k = kernel(cfg)?;
            let beta = QBeta::new(cfg.beta)?;
            let probe = log_grid(1e-6, cfg.domain.upper().min(1e6), 241)?;
            let before = is_quasi_monotone(&f, beta, &probe)?;
            if let QmVerdict::CounterexampleAt(a, b) = before.verdict {
                return Err(HarnessError::range(
                    "Q_beta preservation",
                    "function",
                    format!("input is not in Q_{}: fails between {a} and {b}", cfg.beta),
                ));
            }
            let sf = s_psi(&f, &k)?;
            let after = is_quasi_monotone(&sf, beta, &probe)?;
            rep.verdicts.push(("input_q_beta".into(), format!("{:?}", before.verdict)));
            rep.verdicts.push(("output_q_beta".into(), format!("{:?}", after.verdict)));
            let pts: Vec<(f64, f64)> = probe.iter().step_by(4).map(|&x| (x, sf.value(x))).collect();
            rep.profiles.push(Profile::new("operator_values", "x", "S_psi f", &pts));
            Ok(match (&before.verdict, &after.verdict) {
                (QmVerdict::Member, QmVerdict::Member) => Status::Pass,
                (_, QmVerdict::CounterexampleAt(..)) => Status::Fail,
                _ => Status::Inconclusive,
            })
        }
        ScenarioKind::TheoremA => {
            let f = build(need(&cfg.function, "function", kind)?, "function")?;
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let p = *need(&cfg.p, "p", kind)?;
            nonpositive_beta(cfg, "S_psi bound")?;
            if !(p >= 1.0) {
                return Err(HarnessError::range("S_psi bound", "p", "requires p >= 1"));
            }
            let c = theorem_a_check(&f, &kernel(cfg)?, cfg.beta, p, &w, cfg.domain, cfg.tol)?;
            rep.checks.push(Check::from_inequality("s_psi_bound", &c));
            rep.constants.push(constant("c_prime", c.rhs_constant, None, None));
            Ok(checks_status(&rep.checks))
        }
        ScenarioKind::Lemma22 => {
            let u = build(need(&cfg.function, "function", kind)?, "function")?;
            let p0 = *need(&cfg.p0, "p0", kind)?;
            let eps = *need(&cfg.eps, "eps", kind)?;
            if !(p0 > 0.0) || !(eps > 0.0 && eps < p0 * (cfg.beta + 1.0)) {
                return Err(HarnessError::range("local weighted bound", "eps", "requires 0 < eps < p0 (beta + 1)"));
            }
            let k = kernel(cfg)?;
            let pair = CertifiedPair::s_psi_bound(u, k.clone(), cfg.beta)?;
            let ts = cfg.grid.clone().unwrap_or_else(|| log_grid(1e-3, 1e3, 13).expect("static grid"));
            let phi = cfg.phi.unwrap_or_else(|| pair.certified_phi(p0));
            let checks = lemma22_check(&pair, &k, cfg.beta, p0, eps, &phi, &ts, cfg.tol)?;
            for (t, c) in ts.iter().zip(&checks) {
                rep.checks.push(Check::from_inequality(format!("t={t:?}"), c));
            }
            Ok(checks_status(&rep.checks))
        }
        ScenarioKind::ExtrapolateMain => {
            let u = build(need(&cfg.function, "function", kind)?, "function")?;
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let (p0, p) = base_exponents(cfg, "half-line extrapolation")?;
            if p0 < 1.0 {
                return Err(HarnessError::range("half-line extrapolation", "p0", "requires p0 >= 1"));
            }
            increasing(cfg, "half-line extrapolation")?;
            let pair = CertifiedPair::s_psi_bound(u, PsiKernel::one(), cfg.beta)?;
            let phi = cfg.phi.unwrap_or_else(|| pair.certified_phi(p0));
            let (c, k) = thm_main_check_with_grid(&pair, &w, cfg.beta, p0, p, &phi, cfg.grid.as_deref(), cfg.tol)?;
            rep.constants.push(constant("extrapolation_constant", k.value, Some(k.argmin), Some(provenance("eps", &k))));
            rep.checks.push(Check::from_inequality("extrapolated_bound", &c));
            rep.profiles.push(Profile::new("eps_profile", "eps", "C(eps)", &k.profile));
            Ok(checks_status(&rep.checks))
        }
        ScenarioKind::ExtrapolateInfinity => {
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let (p0, p) = base_exponents(cfg, "QB_infinity extrapolation")?;
            increasing(cfg, "QB_infinity extrapolation")?;
            let phi = cfg.phi();
            let k = thm_infinity_constant(&w, cfg.beta, p0, p, &phi, cfg.grid.as_deref())?;
            rep.constants.push(constant("extrapolation_constant", k.value, Some(k.argmin), Some(provenance("alpha", &k))));
            rep.profiles.push(Profile::new("alpha_profile", "alpha", "K(alpha)", &k.profile));
            // The hypothesis here is stated with the QB_infinity constant, an infimum over all
            // exponents, which the S_psi bound at p0 does not certify. Only diagonal pairs do.
            if let Some(expr) = &cfg.function {
                let f = build(expr, "function")?;
                let pair = CertifiedPair::raw(f.clone(), f)?;
                pair.require_dominated_by(&phi, p0)?;
                let (f, g) = pair.functions()?;
                let lhs = weighted_power_integral(&f, &w, p, Domain::HalfLine)?;
                let base = weighted_power_integral(&g, &w, p, Domain::HalfLine)?;
                let c = InequalityCheck::new(lhs, k.value, base, cfg.tol);
                rep.checks.push(Check::from_inequality("extrapolated_bound", &c));
            }
            Ok(if k.value.is_finite() { checks_status(&rep.checks) } else { Status::Fail })
        }
        ScenarioKind::GrandExtrapolate => {
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let p = *need(&cfg.p, "p", kind)?;
            let theta = *need(&cfg.theta, "theta", kind)?;
            let p0 = cfg.p0.unwrap_or(0.5 * (1.0 + p));
            nonpositive_beta(cfg, "grand-space extrapolation")?;
            if !(p0 > 1.0 && p0 <= p) {
                return Err(HarnessError::range("grand-space extrapolation", "p0", "requires 1 < p0 <= p"));
            }
            if !(theta >= 0.0) {
                return Err(HarnessError::range("grand-space extrapolation", "theta", "requires theta >= 0"));
            }
            increasing(cfg, "grand-space extrapolation")?;
            let c = thm_grand_constant(&w, cfg.beta, p0, p, theta, &cfg.phi(), cfg.grid.as_deref())?;
            let prov = GridProvenance {
                parameter: "sigma".into(),
                lo: Real(c.grid.0),
                hi: Real(c.grid.1),
                points: c.grid.2,
                refine_iters: c.refine_iters,
            };
            rep.constants.push(constant("grand_constant", c.value, Some(c.argmin_sigma), Some(prov)));
            rep.constants.push(constant("w_mass", c.w_mass, None, None));
            rep.verdicts.push(("interior_minimum".into(), c.interior_minimum.to_string()));
            let prod: Vec<(f64, f64)> = c.rows.iter().map(|r| (r.sigma, r.product)).collect();
            let ks: Vec<(f64, f64)> = c.rows.iter().map(|r| (r.sigma, r.k)).collect();
            rep.profiles.push(Profile::new("sigma_profile", "sigma", "product", &prod));
            rep.profiles.push(Profile::new("kprime_root", "sigma", "K'(p-sigma)^(1/(p-sigma))", &ks));
            Ok(if c.value.is_finite() { Status::Pass } else { Status::Fail })
        }
        ScenarioKind::HardyGrand => {
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let exprs: Vec<&FuncExpr> = match (&cfg.family, &cfg.function) {
                (Some(fam), _) if !fam.is_empty() => fam.iter().collect(),
                (_, Some(f)) => vec![f],
                _ => return Err(HarnessError::config("family", "a non-empty family or a function is required")),
            };
            let family = exprs
                .iter()
                .enumerate()
                .map(|(i, e)| build(e, &format!("family[{i}]")))
                .collect::<HResult<Vec<_>>>()?;
            let gp = grand_params(cfg, "grand-space Hardy bound")?;
            nonpositive_beta(cfg, "grand-space Hardy bound")?;
            increasing(cfg, "grand-space Hardy bound")?;
            let opts = HardyGrandOptions { p0: cfg.p0, sigma_grid: cfg.grid.clone(), rel_tol: cfg.tol };
            let r = thm_hardy_grand_check(&family, &w, cfg.beta, gp.p, gp.theta, &opts)?;
            let prov = GridProvenance {
                parameter: "sigma".into(),
                lo: Real(r.constant.grid.0),
                hi: Real(r.constant.grid.1),
                points: r.constant.grid.2,
                refine_iters: r.constant.refine_iters,
            };
            rep.constants.push(constant("grand_constant", r.constant.value, Some(r.constant.argmin_sigma), Some(prov)));
            rep.constants.push(constant("p0", r.p0, None, None));
            for (i, c) in r.checks.iter().enumerate() {
                rep.checks.push(Check::from_inequality(format!("family[{i}]"), c));
            }
            Ok(checks_status(&rep.checks))
        }
        ScenarioKind::Necessity => {
            let w = build(need(&cfg.weight, "weight", kind)?, "weight")?;
            let gp = grand_params(cfg, "necessity profile")?;
            let rs = cfg.grid.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3, 1e-4]);
            if rs.iter().any(|&r| !(r > 0.0 && r < 1.0)) || rs.windows(2).any(|s| !(s[1] < s[0])) {
                return Err(HarnessError::range("necessity profile", "grid", "r must be strictly decreasing in (0, 1)"));
            }
            let n = thm_hardy_grand_necessity(&w, cfg.beta, gp.p, gp.theta, &rs)?;
            let ratios: Vec<(f64, f64)> = n.rows.iter().map(|r| (r.r, r.ratio)).collect();
            rep.profiles.push(Profile::new("ratio", "r", "ratio", &ratios));
            for (i, g) in n.growth_factors.iter().enumerate() {
                rep.constants.push(constant(&format!("growth[{i}]"), *g, Some(rs[i + 1]), None));
            }
            let all_finite = n.rows.iter().all(|r| r.ratio.is_finite());
            Ok(match cfg.min_growth {
                Some(m) if !n.growth_factors.iter().all(|&g| g >= m) => Status::Fail,
                _ if !all_finite => Status::Fail,
                _ => Status::Pass,
            })
        }
    }
}

fn grand_params(cfg: &ScenarioConfig, theorem: &str) -> HResult<GrandParams> {
    let p = *need(&cfg.p, "p", cfg.kind)?;
    let theta = *need(&cfg.theta, "theta", cfg.kind)?;
    if !(p > 1.0) {
        return Err(HarnessError::range(theorem, "p", "requires p > 1"));
    }
    if !(theta > 0.0) {
        return Err(HarnessError::range(theorem, "theta", "requires theta > 0"));
    }
    Ok(GrandParams::new(p, theta)?)
}

fn base_exponents(cfg: &ScenarioConfig, theorem: &str) -> HResult<(f64, f64)> {
    let p0 = *need(&cfg.p0, "p0", cfg.kind)?;
    let p = *need(&cfg.p, "p", cfg.kind)?;
    nonpositive_beta(cfg, theorem)?;
    if !(p0 > 0.0) {
        return Err(HarnessError::range(theorem, "p0", "requires p0 > 0"));
    }
    if !(p >= p0) {
        return Err(HarnessError::range(theorem, "p", "requires p >= p0"));
    }
    Ok((p0, p))
}

/// Report for a scenario that could not run.
pub fn error_report(cfg: &ScenarioConfig, err: &HarnessError) -> ScenarioReport {
    let mut r = ScenarioReport::new(cfg.clone());
    r.error = Some(err.to_string());
    r.finish(Status::Error);
    r
}

/// Run every scenario on a pool of `parallelism` threads. Per-scenario errors are recorded in
/// the corresponding report; only an empty list or a zero width is an error.
pub fn run_suite(configs: &[ScenarioConfig], parallelism: usize) -> HResult<SuiteReport> {
    if configs.is_empty() {
        return Err(HarnessError::config("scenarios", "the suite is empty"));
    }
    if parallelism == 0 {
        return Err(HarnessError::config("jobs", "must be a positive integer"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| HarnessError::config("jobs", e.to_string()))?;
    let reports = pool.install(|| {
        configs.par_iter().map(|c| run_scenario(c).unwrap_or_else(|e| error_report(c, &e))).collect::<Vec<_>>()
    });
    Ok(SuiteReport::from_reports(reports))
}

