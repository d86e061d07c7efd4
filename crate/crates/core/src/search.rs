//! One-dimensional grids, golden-section refinement and edge-limit extrapolation.
//!
//! Every continuous inf/sup in the toolkit is bracketed the same way: evaluate on a
//! log-spaced grid, then polish the best grid cell with golden-section search. When
//! the optimum sits at a grid edge the profile is usually approaching an open-interval
//! limit, and [`aitken`] recovers that limit from the last three grid values.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `n` points log-spaced on `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidGrid(format!("log grid needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(Error::InvalidGrid("log grid needs at least 2 points".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    out[0] = lo;
    out[n - 1] = hi;
    Ok(out)
}

/// `n` points uniformly spaced on `[lo, hi]`, endpoints included.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo && lo.is_finite() && hi.is_finite()) || n < 2 {
        return Err(Error::InvalidGrid(format!("linear grid needs lo < hi and n >= 2, got [{lo}, {hi}], n = {n}")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect())
}

/// Grid on an open interval `(lo, hi)` that is geometric in the distance to both
/// ends: half the points crowd `lo`, half crowd `hi`.
pub fn two_sided_grid(lo: f64, hi: f64, n: usize, min_gap: f64) -> Result<Vec<f64>> {
    let width = hi - lo;
    if !(width > 0.0) || !(min_gap > 0.0 && min_gap < 0.5 * width) || n < 4 {
        return Err(Error::InvalidGrid(format!("two-sided grid on ({lo}, {hi}) with gap {min_gap}, n = {n}")));
    }
    let half = n / 2;
    let mid = 0.5 * width;
    let left = log_grid(min_gap, mid, half)?;
    let right = log_grid(min_gap, mid, n - half + 1)?;
    let mut out: Vec<f64> = left.iter().map(|d| lo + d).collect();
    out.extend(right.iter().rev().skip(1).map(|d| hi - d));
    Ok(out)
}

pub fn is_strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
///
/// Returns the best point seen, including the bracket ends.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut best = (lo, f(lo));
    let fb = f(hi);
    if fb > best.1 {
        best = (hi, fb);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1.is_nan() || f2.is_nan() {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo <= f64::EPSILON * (lo.abs() + hi.abs()) {
            break;
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (x, neg) = golden_max(
        |x| {
            let v = f(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                -v
            }
        },
        a,
        b,
        iters,
    );
    (x, -neg)
}

/// Index of the largest finite value; ties resolve to the smaller index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(j) if values[j] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Index of the smallest non-NaN value; ties resolve to the smaller index.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(j) if values[j] <= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Aitken's delta-squared limit of three consecutive sequence values.
///
/// Exact for sequences of the form `L + c q^k`. Returns `None` unless the
/// increments shrink in magnitude and keep their sign.
pub fn aitken(x0: f64, x1: f64, x2: f64) -> Option<f64> {
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    if !(d1.is_finite() && d2.is_finite()) || d1 == 0.0 {
        return None;
    }
    if d1.signum() != d2.signum() && d2 != 0.0 {
        return None;
    }
    if d2.abs() >= d1.abs() {
        return None;
    }
    let denom = d2 - d1;
    let limit = x2 - d2 * d2 / denom;
    limit.is_finite().then_some(limit)
}

/// How a sampled profile behaves as it runs into one end of its grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeTrend {
    /// Not increasing into the edge; the grid maximum is trustworthy.
    Flat,
    /// Increasing with geometrically shrinking increments; carries the extrapolated limit.
    Converging(f64),
    /// Monotone growth with non-shrinking increments over the inspected window.
    Growing { decades: f64 },
    /// Increasing but neither pattern is clear.
    Unclear,
}

/// Classify the approach of `values` toward the end of the slice.
///
/// `values` are ordered so that the edge is the last element, and `log10_span`
/// gives the number of decades the slice covers in the grid variable.
pub fn edge_trend(values: &[f64], log10_span: f64) -> EdgeTrend {
    let n = values.len();
    if n < 3 {
        return EdgeTrend::Flat;
    }
    let last = values[n - 1];
    let prev = values[n - 2];
    let scale = last.abs().max(prev.abs()).max(f64::MIN_POSITIVE);
    if !(last - prev > 1e-12 * scale) {
        return EdgeTrend::Flat;
    }
    // Longest strictly increasing run ending at the edge.
    let mut start = n - 1;
    while start > 0 && values[start] > values[start - 1] {
        start -= 1;
    }
    let run = &values[start..];
    let steps = run.len() - 1;
    let step_decades = log10_span / (n - 1) as f64;
    let decades = step_decades * steps as f64;
    // Compare increments across the trailing three decades only, so an S-shaped
    // transition earlier in the run does not read as growth.
    let window = ((3.0 / step_decades).ceil() as usize).clamp(1, steps);
    let first_inc = run[steps - window + 1] - run[steps - window];
    let last_inc = run[steps] - run[steps - 1];
    if decades >= 3.0 - 1e-9 && last_inc >= first_inc * (1.0 - 1e-9) {
        return EdgeTrend::Growing { decades };
    }
    match aitken(values[n - 3], prev, last) {
        Some(limit) if limit >= last => EdgeTrend::Converging(limit),
        _ if steps >= 2 && last_inc >= first_inc => EdgeTrend::Growing { decades },
        _ => EdgeTrend::Unclear,
    }
}
