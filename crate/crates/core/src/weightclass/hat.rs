use serde::{Deserialize, Serialize};

use super::{qb_constant, ClassParams, ClassReport, ClassVerdict};
use crate::error::{Error, Result};
use crate::funcspace::Func;
use crate::search::{is_strictly_increasing, log_grid};

/// Membership at `p` together with the first shifted exponent `p - eps` that also admits `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HatReport {
    pub verdict: ClassVerdict,
    pub base: ClassReport,
    pub witness_epsilon: Option<f64>,
    pub shifted: Option<ClassReport>,
    /// Number of grid values of `eps` examined.
    pub scanned: usize,
    pub diagnostics: String,
}

impl HatReport {
    pub fn is_member(&self) -> bool {
        self.verdict == ClassVerdict::Member
    }
}

/// 32 log-spaced points in `(1e-4 p(beta+1), 0.999 min(p(beta+1), p-1))`; the `p - 1` cap
/// is dropped when `p <= 1`.
pub fn default_eps_grid(beta: f64, p: f64) -> Vec<f64> {
    let top = p * (beta + 1.0);
    let cap = if p > 1.0 { top.min(p - 1.0) } else { top };
    let hi = 0.999 * cap;
    let lo = (1e-4 * top).min(1e-4 * hi);
    log_grid(lo, hi, 32).unwrap_or_else(|_| vec![0.5 * cap])
}

/// Scan `eps` upward; the first `eps` with `w` in the class at `p - eps` is the witness.
pub fn hat_membership(w: &Func, params: &ClassParams, eps_grid: Option<&[f64]>) -> Result<HatReport> {
    let (beta, p) = (params.beta.value(), params.p);
    let top = p * (beta + 1.0);
    let owned;
    let grid = match eps_grid {
        Some(g) => g,
        None => {
            owned = default_eps_grid(beta, p);
            &owned
        }
    };
    if grid.is_empty() || !is_strictly_increasing(grid) || grid.iter().any(|&e| !(e > 0.0 && e < top)) {
        return Err(Error::InvalidGrid(format!("eps grid must be increasing and inside (0, {top})")));
    }
    let base = qb_constant(w, params, None)?;
    if base.verdict == ClassVerdict::NotMember {
        return Ok(HatReport {
            verdict: ClassVerdict::NotMember,
            base,
            witness_epsilon: None,
            shifted: None,
            scanned: 0,
            diagnostics: format!("not in the class at p = {p}"),
        });
    }
    let mut last = None;
    for (i, &eps) in grid.iter().enumerate() {
        let rep = qb_constant(w, &params.at_exponent(p - eps)?, None)?;
        if rep.is_member() {
            let verdict = if base.is_member() { ClassVerdict::Member } else { ClassVerdict::Inconclusive };
            return Ok(HatReport {
                verdict,
                diagnostics: format!("witness eps = {eps}"),
                base,
                witness_epsilon: Some(eps),
                shifted: Some(rep),
                scanned: i + 1,
            });
        }
        last = Some(rep);
    }
    Ok(HatReport {
        verdict: ClassVerdict::Inconclusive,
        base,
        witness_epsilon: None,
        shifted: last,
        scanned: grid.len(),
        diagnostics: format!("no eps on the {}-point grid gives membership at p - eps", grid.len()),
    })
}
