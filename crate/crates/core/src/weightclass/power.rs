use serde::{Deserialize, Serialize};

use super::{qb_constant, ClassParams, ClassVerdict};
use crate::error::{Error, Result};
use crate::funcspace::{ClosedFormFunc, Domain, Func, QBeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PowerMembership {
    Member { sharp_ratio: f64 },
    NotMember { reason: String },
}

impl PowerMembership {
    pub fn is_member(&self) -> bool {
        matches!(self, PowerMembership::Member { .. })
    }
}

/// Analytic rule for `w = x^alpha`: member iff `-beta p - 1 < alpha < p - 1`.
///
/// On the half-line the ratio is `(beta p + alpha + 1)/(p - alpha - 1)` for every `r`. On
/// the unit interval it is that value times `1 - r^{p - alpha - 1}`, so the supremum is
/// only approached as `r -> 0`; it is measured by the radius sweep.
pub fn power_weight_membership(alpha: f64, beta: f64, p: f64, domain: Domain) -> Result<PowerMembership> {
    let b = QBeta::new(beta)?.value();
    if !(p > 0.0) || !alpha.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("need p > 0 and finite alpha, got p = {p}, alpha = {alpha}")));
    }
    if alpha <= -b * p - 1.0 {
        return Ok(PowerMembership::NotMember {
            reason: format!("denominator diverges: x^(beta p + alpha) = x^{} is not integrable at 0", b * p + alpha),
        });
    }
    if alpha >= p - 1.0 {
        let reason = match domain {
            Domain::HalfLine => format!("tail divergence: x^(alpha - p) = x^{} is not integrable at infinity", alpha - p),
            Domain::UnitInterval => "ratio is unbounded as r -> 0 since alpha >= p - 1".to_string(),
        };
        return Ok(PowerMembership::NotMember { reason });
    }
    let sharp = (b * p + alpha + 1.0) / (p - alpha - 1.0);
    match domain {
        Domain::HalfLine => Ok(PowerMembership::Member { sharp_ratio: sharp }),
        Domain::UnitInterval => {
            let params = ClassParams::new(b, p, domain)?;
            let rep = qb_constant(&Func::Closed(ClosedFormFunc::power(1.0, alpha)), &params, None)?;
            let sharp_ratio = if rep.verdict == ClassVerdict::Member { rep.sup_ratio } else { sharp };
            Ok(PowerMembership::Member { sharp_ratio })
        }
    }
}

/// `C* = K (beta (p - eps) + alpha + 1)/(alpha + beta p + 1)` with `K = C (p - alpha - 1)/(p - eps - alpha - 1)`.
pub fn lemma_power_shift_constant(alpha: f64, beta: f64, p: f64, c: f64, eps: f64) -> Result<f64> {
    let b = QBeta::new(beta)?.value();
    if !(-b * p - 1.0 < alpha && alpha < p - 1.0) {
        return Err(Error::ParameterOutOfRange(format!("need -beta p - 1 < alpha < p - 1, got alpha = {alpha}")));
    }
    if !(eps > 0.0 && eps < p - alpha - 1.0) {
        return Err(Error::ParameterOutOfRange(format!("need 0 < eps < p - alpha - 1 = {}, got {eps}", p - alpha - 1.0)));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("constant C must be finite and > 0, got {c}")));
    }
    let k = c * (p - alpha - 1.0) / (p - eps - alpha - 1.0);
    Ok(k * (b * (p - eps) + alpha + 1.0) / (alpha + b * p + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerShiftCheck {
    /// Measured ratio bound at exponent `p`.
    pub c: f64,
    pub c_star: f64,
    /// Measured ratio bound at exponent `p - eps`.
    pub shifted_sup: f64,
    pub pass: bool,
}

/// Measure `C` at `p`, compute `C*`, and confirm the measured bound at `p - eps` stays below it.
pub fn verify_power_shift(alpha: f64, beta: f64, p: f64, eps: f64, rel_tol: f64) -> Result<PowerShiftCheck> {
    let w = Func::Closed(ClosedFormFunc::power(1.0, alpha));
    let params = ClassParams::new(beta, p, Domain::HalfLine)?;
    let base = qb_constant(&w, &params, None)?;
    if !base.is_member() {
        return Err(Error::NotInClass(format!("x^{alpha} at p = {p}: {}", base.diagnostics)));
    }
    let c_star = lemma_power_shift_constant(alpha, beta, p, base.sup_ratio, eps)?;
    let shifted = qb_constant(&w, &params.at_exponent(p - eps)?, None)?;
    let pass = shifted.is_member() && shifted.sup_ratio <= c_star * (1.0 + rel_tol);
    Ok(PowerShiftCheck { c: base.sup_ratio, c_star, shifted_sup: shifted.sup_ratio, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        assert_eq!(
            power_weight_membership(0.0, 0.0, 2.0, Domain::HalfLine).unwrap(),
            PowerMembership::Member { sharp_ratio: 1.0 }
        );
        assert!(!power_weight_membership(1.0, -0.3, 2.0, Domain::HalfLine).unwrap().is_member());
        assert!(!power_weight_membership(-0.4, -0.3, 2.0, Domain::HalfLine).unwrap().is_member());
        assert!(!power_weight_membership(1.0, 0.0, 2.0, Domain::UnitInterval).unwrap().is_member());
    }

    #[test]
    fn interval_sharp_ratio_matches_half_line() {
        let PowerMembership::Member { sharp_ratio } = power_weight_membership(0.3, -0.4, 2.0, Domain::UnitInterval).unwrap()
        else {
            panic!()
        };
        let want = (-0.8 + 1.3) / 0.7;
        assert!((sharp_ratio - want).abs() < 1e-6 * want, "{sharp_ratio} vs {want}");
    }

    #[test]
    fn shift_constant_examples() {
        assert!((lemma_power_shift_constant(0.0, 0.0, 2.0, 1.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        let c = lemma_power_shift_constant(0.2, -0.3, 2.0, 1.7, 1e-12).unwrap();
        assert!((c - 1.7).abs() < 1e-9);
        assert!(lemma_power_shift_constant(0.0, 0.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn shift_constant_bounds_measured_ratio() {
        let chk = verify_power_shift(0.3, -0.4, 2.0, 0.2, 1e-9).unwrap();
        assert!(chk.pass, "{chk:?}");
        // The bound is attained for power weights.
        assert!((chk.shifted_sup - chk.c_star).abs() < 1e-9 * chk.c_star);
    }
}
