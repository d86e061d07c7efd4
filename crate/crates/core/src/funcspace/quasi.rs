use super::{Func, QBeta};
use crate::error::{Error, Result};
use crate::search::is_strictly_increasing;

/// Relative slack allowed before an increase of `x^-beta f` counts as a violation.
pub const DEFAULT_MONOTONE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum QmVerdict {
    Member,
    /// `x1 < x2` with `x1^-beta f(x1) < x2^-beta f(x2)`.
    CounterexampleAt(f64, f64),
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmReport {
    pub verdict: QmVerdict,
    /// `false` means the verdict comes from grid sampling and is numerical evidence only.
    pub exact: bool,
}

impl QmReport {
    pub fn is_member(&self) -> bool {
        self.verdict == QmVerdict::Member
    }

    pub fn label(&self) -> &'static str {
        if self.exact {
            "exact"
        } else {
            "numerical"
        }
    }
}

/// Decide whether `x^-beta f(x)` is non-increasing, with the default tolerance.
pub fn is_quasi_monotone(f: &Func, beta: QBeta, probe_grid: &[f64]) -> Result<QmReport> {
    is_quasi_monotone_with(f, beta, probe_grid, DEFAULT_MONOTONE_RTOL)
}

/// Decide whether `x^-beta f(x)` is non-increasing on `(0, max(probe_grid)]`.
///
/// Piecewise-monomial closed forms get an exact answer from the exponents and the
/// jumps at breakpoints; everything else is compared on adjacent grid points.
pub fn is_quasi_monotone_with(f: &Func, beta: QBeta, probe_grid: &[f64], rtol: f64) -> Result<QmReport> {
    if probe_grid.len() < 2 || !is_strictly_increasing(probe_grid) || !(probe_grid[0] > 0.0) {
        return Err(Error::InvalidGrid("probe grid must be strictly increasing, positive, with >= 2 points".into()));
    }
    let b = beta.value();
    let x_max = *probe_grid.last().unwrap();
    if let Func::Closed(cf) = f {
        if let Some(pieces) = cf.monomial_pieces() {
            let verdict = exact_verdict(&pieces, b, x_max, rtol);
            return Ok(QmReport { verdict, exact: true });
        }
    }
    let mut prev: Option<(f64, f64)> = None;
    for &x in probe_grid {
        let v = f.value(x);
        if !v.is_finite() {
            return Ok(QmReport { verdict: QmVerdict::Inconclusive(format!("f({x}) = {v}")), exact: false });
        }
        if v < 0.0 {
            return Ok(QmReport { verdict: QmVerdict::Inconclusive(format!("f({x}) = {v} < 0")), exact: false });
        }
        let g = x.powf(-b) * v;
        if let Some((x0, g0)) = prev {
            if g > g0 + rtol * g0.abs().max(g.abs()) {
                return Ok(QmReport { verdict: QmVerdict::CounterexampleAt(x0, x), exact: false });
            }
        }
        prev = Some((x, g));
    }
    Ok(QmReport { verdict: QmVerdict::Member, exact: false })
}

fn exact_verdict(pieces: &[super::MonomialPiece], b: f64, x_max: f64, rtol: f64) -> QmVerdict {
    // x^-b f on a cell is coef * x^(power - b).
    let left_value = |p: &super::MonomialPiece, x: f64| if p.coef == 0.0 { 0.0 } else { p.coef * x.powf(p.power - b) };
    for (i, p) in pieces.iter().enumerate() {
        if p.lo >= x_max {
            break;
        }
        let end = p.hi.min(x_max);
        let slope = p.coef * (p.power - b);
        if p.coef != 0.0 && slope > 1e-12 * p.coef.abs() {
            let w = end - p.lo;
            return QmVerdict::CounterexampleAt(p.lo + 0.25 * w, p.lo + 0.75 * w);
        }
        if p.coef < 0.0 {
            // f < 0 leaves the cone of non-negative functions.
            return QmVerdict::CounterexampleAt(p.lo + 0.25 * (end - p.lo), p.lo + 0.75 * (end - p.lo));
        }
        if let Some(next) = pieces.get(i + 1) {
            let x = p.hi;
            if x > x_max {
                continue;
            }
            let l = left_value(p, x);
            let r = left_value(next, x);
            if r > l + rtol * l.abs().max(r.abs()) {
                let x1 = if p.lo == 0.0 { 0.5 * x } else { 0.5 * (p.lo + x) };
                return QmVerdict::CounterexampleAt(x1, x);
            }
        }
    }
    QmVerdict::Member
}
