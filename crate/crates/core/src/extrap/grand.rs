use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_infimum, ConstantReport, InequalityCheck, MonotoneFn, CONSTANT_GRID, CONSTANT_REFINE_ITERS};
use crate::error::{Error, Result};
use crate::funcspace::{is_quasi_monotone, ClosedFormFunc, Domain, Func, QBeta, QmVerdict, Support};
use crate::norms::{grand_norm, weight_mass_unit, GrandParams};
use crate::operators::hardy;
use crate::search::{argmin, golden_min, is_strictly_increasing, log_grid};
use crate::weightclass::{hat_membership, qb_constant, ClassParams};

fn require_hat_on_unit(w: &Func, beta: f64, p: f64) -> Result<()> {
    let hat = hat_membership(w, &ClassParams::new(beta, p, Domain::UnitInterval)?, None)?;
    if !hat.is_member() {
        return Err(Error::NotInHatClass(format!("on (0,1) at p = {p}: {}", hat.diagnostics)));
    }
    Ok(())
}

fn kprime_expression(w: &Func, base: &ClassParams, b: f64, p0: f64, p_eff: f64, phi: &MonotoneFn, d: f64) -> f64 {
    let q = (p0 - d) * p_eff / p0;
    let class = match base.at_exponent(q).and_then(|params| qb_constant(w, &params, None)) {
        Ok(rep) if rep.is_member() => rep.class_constant,
        _ => return f64::INFINITY,
    };
    let bracket = (p0 * (b + 1.0) - d) / ((b + 1.0) * (p0 - d)) * phi.eval(p0 * (b + 1.0) / d);
    class * bracket.powf(p_eff / p0)
}

fn kprime_unchecked(
    w: &Func,
    b: f64,
    p0: f64,
    p_eff: f64,
    phi: &MonotoneFn,
    delta_grid: Option<&[f64]>,
) -> Result<ConstantReport> {
    let top = p0 * (b + 1.0);
    let owned;
    let grid = match delta_grid {
        Some(g) => g,
        None => {
            owned = log_grid(1e-4 * top, (1.0 - 1e-4) * top, CONSTANT_GRID)?;
            &owned
        }
    };
    if grid.iter().any(|&d| !(d > 0.0 && d < top)) {
        return Err(Error::InvalidGrid(format!("delta grid must lie in (0, {top})")));
    }
    let base = ClassParams::new(b, p_eff, Domain::UnitInterval)?;
    grid_infimum(grid, |d| kprime_expression(w, &base, b, p0, p_eff, phi, d))
}

/// `K'(p_eff)`: the extrapolation constant with interval class constants at `(p0 - delta) p_eff/p0`.
pub fn thm_interval_constant_kprime(
    w: &Func,
    beta: f64,
    p0: f64,
    p_eff: f64,
    phi: &MonotoneFn,
    delta_grid: Option<&[f64]>,
) -> Result<ConstantReport> {
    let b = QBeta::new(beta)?.require_nonpositive()?.value();
    if !(p0 > 0.0 && p0.is_finite()) || !(p_eff > 0.0 && p_eff.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("need p0 > 0 and p_eff > 0, got {p0}, {p_eff}")));
    }
    phi.validate()?;
    require_hat_on_unit(w, b, p_eff)?;
    kprime_unchecked(w, b, p0, p_eff, phi, delta_grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrandConstantRow {
    pub sigma: f64,
    /// `max{1, p^theta sigma^{-theta/(p-sigma)} (W+1)^{(p-1-sigma)/(p-sigma)}}`.
    pub factor: f64,
    /// `K'(p - sigma)^{1/(p - sigma)}`.
    pub k: f64,
    /// Running supremum of `k` over grid points up to `sigma`.
    pub envelope: f64,
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrandConstantReport {
    pub value: f64,
    pub argmin_sigma: f64,
    pub rows: Vec<GrandConstantRow>,
    pub w_mass: f64,
    /// The grid minimum sits strictly inside the sigma grid.
    pub interior_minimum: bool,
    pub grid: (f64, f64, usize),
    pub refine_iters: usize,
}

fn max_factor(p: f64, theta: f64, w_mass: f64, sigma: f64) -> f64 {
    let ln = theta * p.ln() - theta / (p - sigma) * sigma.ln() + (p - 1.0 - sigma) / (p - sigma) * (w_mass + 1.0).ln();
    ln.exp().max(1.0)
}

/// `C* = inf_sigma max{1, ...} sup_{eps <= sigma} K'(p - eps)^{1/(p - eps)}` on a shared grid.
#[allow(clippy::too_many_arguments)]
pub fn thm_grand_constant(
    w: &Func,
    beta: f64,
    p0: f64,
    p: f64,
    theta: f64,
    phi: &MonotoneFn,
    sigma_grid: Option<&[f64]>,
) -> Result<GrandConstantReport> {
    let b = QBeta::new(beta)?.require_nonpositive()?.value();
    if !(p0 > 1.0 && p0 <= p && p.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("need 1 < p0 <= p < inf, got p0 = {p0}, p = {p}")));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("need theta >= 0, got {theta}")));
    }
    phi.validate()?;
    let w_mass = weight_mass_unit(w)?;
    require_hat_on_unit(w, b, p)?;
    let owned;
    let grid = match sigma_grid {
        Some(g) => g,
        None => {
            owned = log_grid(1e-4 * (p - 1.0), 0.999 * (p - 1.0), CONSTANT_GRID)?;
            &owned
        }
    };
    if grid.is_empty() || !is_strictly_increasing(grid) || grid.iter().any(|&s| !(s > 0.0 && s < p - 1.0)) {
        return Err(Error::InvalidGrid(format!("sigma grid must be increasing inside (0, {})", p - 1.0)));
    }
    let k_at = |q: f64| -> f64 {
        match kprime_unchecked(w, b, p0, q, phi, None) {
            Ok(rep) => rep.value.powf(1.0 / q),
            Err(_) => f64::INFINITY,
        }
    };
    let k0 = k_at(p);
    let ks: Vec<f64> = grid.par_iter().map(|&s| k_at(p - s)).collect();
    let mut rows = Vec::with_capacity(grid.len());
    let mut env = k0;
    for (&sigma, &k) in grid.iter().zip(&ks) {
        env = env.max(if k.is_nan() { f64::INFINITY } else { k });
        let factor = max_factor(p, theta, w_mass, sigma);
        rows.push(GrandConstantRow { sigma, factor, k, envelope: env, product: factor * env });
    }
    let products: Vec<f64> = rows.iter().map(|r| r.product).collect();
    let i = argmin(&products)
        .filter(|&i| products[i].is_finite())
        .ok_or_else(|| Error::EmptyGrid("no sigma gives a finite grand constant".into()))?;
    let interior_minimum = i > 0 && i + 1 < rows.len();
    let (mut best_sigma, mut best) = (rows[i].sigma, rows[i].product);
    if rows.len() > 1 {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        // Between grid points the envelope is the grid envelope up to `lo` joined with the new point.
        let env_lo = if i == 0 { k0 } else { rows[i - 1].envelope };
        let (t, v) = golden_min(
            |t| {
                let s = t.exp();
                let k = k_at(p - s);
                let e = if k.is_nan() { f64::INFINITY } else { env_lo.max(k) };
                max_factor(p, theta, w_mass, s) * e
            },
            lo.ln(),
            hi.ln(),
            CONSTANT_REFINE_ITERS,
        );
        if v < best {
            best = v;
            best_sigma = t.exp();
        }
    }
    Ok(GrandConstantReport {
        value: best,
        argmin_sigma: best_sigma,
        rows,
        w_mass,
        interior_minimum,
        grid: (grid[0], grid[grid.len() - 1], grid.len()),
        refine_iters: CONSTANT_REFINE_ITERS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyGrandOptions {
    /// Base exponent of the certified hypothesis; defaults to `(1 + p)/2`.
    pub p0: Option<f64>,
    pub sigma_grid: Option<Vec<f64>>,
    pub rel_tol: f64,
}

impl Default for HardyGrandOptions {
    fn default() -> Self {
        Self { p0: None, sigma_grid: None, rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyGrandReport {
    pub checks: Vec<InequalityCheck>,
    pub constant: GrandConstantReport,
    pub p0: f64,
    pub phi: MonotoneFn,
    pub all_pass: bool,
    pub min_relative_margin: f64,
}

/// `||H f||_{p),theta} <= C* ||f||_{p),theta}` for each family member, with `phi` certified by the
/// `S_psi` bound for pairs `(H f, f)`.
pub fn thm_hardy_grand_check(
    family: &[Func],
    w: &Func,
    beta: f64,
    p: f64,
    theta: f64,
    opts: &HardyGrandOptions,
) -> Result<HardyGrandReport> {
    let b = QBeta::new(beta)?.require_nonpositive()?;
    if family.is_empty() {
        return Err(Error::EmptyGrid("empty function family".into()));
    }
    let probe = log_grid(1e-6, 1.0, 200)?;
    for (i, f) in family.iter().enumerate() {
        if let QmVerdict::CounterexampleAt(a, c) = is_quasi_monotone(f, b, &probe)?.verdict {
            return Err(Error::HypothesisNotCertified(format!(
                "family member {i} is not in Q_{beta}: increases between {a} and {c}"
            )));
        }
    }
    let p0 = opts.p0.unwrap_or(0.5 * (1.0 + p));
    let phi = MonotoneFn::s_psi_bound(beta, p0);
    let constant = thm_grand_constant(w, beta, p0, p, theta, &phi, opts.sigma_grid.as_deref())?;
    let gp = GrandParams::new(p, theta)?;
    let checks = family
        .par_iter()
        .map(|f| {
            let lhs = grand_norm(&hardy(f)?, w, &gp)?.value;
            let base = grand_norm(f, w, &gp)?.value;
            Ok(InequalityCheck::new(lhs, constant.value, base, opts.rel_tol))
        })
        .collect::<Result<Vec<_>>>()?;
    let all_pass = checks.iter().all(|c| c.pass);
    let min_relative_margin = checks.iter().map(|c| c.relative_margin()).fold(f64::INFINITY, f64::min);
    Ok(HardyGrandReport { checks, constant, p0, phi, all_pass, min_relative_margin })
}

/// `f_r = x^beta chi_(0,r)`.
pub fn hardy_test_function(beta: f64, r: f64) -> Result<Func> {
    QBeta::new(beta)?;
    Ok(Func::Closed(ClosedFormFunc::power(1.0, beta).restrict(Support::new(0.0, r)?)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityRow {
    pub r: f64,
    /// `||H f_r||_{p),theta}`.
    pub lhs: f64,
    /// `||f_r||_{p),theta}`.
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub rows: Vec<NecessityRow>,
    /// `ratio(r_{k+1}) / ratio(r_k)`.
    pub growth_factors: Vec<f64>,
}

/// Ratio profile `||H f_r|| / ||f_r||` in the weighted grand norm along a decreasing `r` sequence.
pub fn thm_hardy_grand_necessity(w: &Func, beta: f64, p: f64, theta: f64, r_sequence: &[f64]) -> Result<NecessityReport> {
    QBeta::new(beta)?.require_nonpositive()?;
    if r_sequence.is_empty() || r_sequence.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidGrid("r values must lie in (0, 1)".into()));
    }
    if r_sequence.windows(2).any(|s| !(s[1] < s[0])) {
        return Err(Error::InvalidGrid("r sequence must be strictly decreasing".into()));
    }
    let gp = GrandParams::new(p, theta)?;
    let rows = r_sequence
        .par_iter()
        .map(|&r| {
            let f = hardy_test_function(beta, r)?;
            let lhs = grand_norm(&hardy(&f)?, w, &gp)?.value;
            let rhs = grand_norm(&f, w, &gp)?.value;
            Ok(NecessityRow { r, lhs, rhs, ratio: lhs / rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    let growth_factors = rows.windows(2).map(|s| s[1].ratio / s[0].ratio).collect();
    Ok(NecessityReport { rows, growth_factors })
}
