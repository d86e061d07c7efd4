//! Property-based invariants.

use proptest::prelude::*;
use qbhardy::funcspace::{is_quasi_monotone, ClosedFormFunc, Domain, Func, QBeta, QmVerdict, Support, Term};
use qbhardy::norms::{grand_norm, weighted_lp_norm, GrandParams};
use qbhardy::operators::hardy;
use qbhardy::quadrature::{integrate, QuadOptions};
use qbhardy::search::log_grid;
use qbhardy::weightclass::{qb_constant, ClassParams};

fn power(c: f64, a: f64) -> Func {
    Func::Closed(ClosedFormFunc::power(c, a))
}

/// `sum c_i x^{a_i} chi_(0, r_i)` with `c_i > 0` and `a_i <= beta`: a member of `Q_beta`.
fn q_beta_member(beta: f64, parts: &[(f64, f64, f64)]) -> Func {
    let terms =
        parts.iter().map(|&(c, da, r)| Term::new(c, beta - da, 0, Support::new(0.0, r).unwrap())).collect();
    Func::Closed(ClosedFormFunc::new(terms))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integral_is_additive(a in -0.95f64..3.0, m in 0.01f64..5.0, k in 1.0f64..20.0) {
        let f = power(1.0, a);
        let o = QuadOptions::default();
        let whole = integrate(&f, 0.0, m * k, &o).unwrap().value;
        let parts = integrate(&f, 0.0, m, &o).unwrap().value + integrate(&f, m, m * k, &o).unwrap().value;
        prop_assert!(rel(whole, parts) < 1e-12);
    }

    #[test]
    fn lp_norm_is_homogeneous(a in -0.4f64..2.0, alpha in -0.5f64..2.0, c in 0.01f64..100.0, p in 1.0f64..6.0) {
        prop_assume!(a * p + alpha > -0.99);
        let w = power(1.0, alpha);
        let n1 = weighted_lp_norm(&power(1.0, a), &w, p, Domain::UnitInterval).unwrap();
        let nc = weighted_lp_norm(&power(c, a), &w, p, Domain::UnitInterval).unwrap();
        prop_assert!(rel(nc, c * n1) < 1e-12);
    }

    #[test]
    fn hardy_is_linear_and_preserves_q_beta(
        beta in -0.9f64..=0.0,
        parts in prop::collection::vec((0.1f64..5.0, 0.0f64..0.09, 0.05f64..20.0), 1..4),
        c in 0.1f64..10.0,
    ) {
        let f = q_beta_member(beta, &parts);
        let probe = log_grid(1e-5, 1e3, 300).unwrap();
        let b = QBeta::new(beta).unwrap();
        prop_assert_eq!(is_quasi_monotone(&f, b, &probe).unwrap().verdict, QmVerdict::Member);
        let h = hardy(&f).unwrap();
        prop_assert_eq!(is_quasi_monotone(&h, b, &probe).unwrap().verdict, QmVerdict::Member);
        let hc = hardy(&q_beta_member(beta, &parts.iter().map(|&(k, d, r)| (c * k, d, r)).collect::<Vec<_>>())).unwrap();
        for &x in probe.iter().step_by(37) {
            prop_assert!(rel(hc.value(x), c * h.value(x)) < 1e-12 || h.value(x) == 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn grand_norm_is_homogeneous(a in -0.3f64..1.0, alpha in -0.5f64..1.0, c in 0.01f64..100.0, theta in 0.1f64..2.0) {
        let gp = GrandParams::new(2.0, theta).unwrap();
        let w = power(1.0, alpha);
        let g1 = grand_norm(&power(1.0, a), &w, &gp).unwrap().value;
        let gc = grand_norm(&power(c, a), &w, &gp).unwrap().value;
        prop_assert!(rel(gc, c * g1) < 1e-10, "{} vs {}", gc, c * g1);
    }

    #[test]
    fn grand_norm_is_monotone(r1 in 0.05f64..1.0, frac in 0.05f64..1.0, p in 1.5f64..4.0) {
        let gp = GrandParams::new(p, 1.0).unwrap();
        let small = Func::Closed(ClosedFormFunc::indicator(0.0, r1 * frac).unwrap());
        let big = Func::Closed(ClosedFormFunc::indicator(0.0, r1).unwrap());
        let a = grand_norm(&small, &Func::one(), &gp).unwrap().value;
        let b = grand_norm(&big, &Func::one(), &gp).unwrap().value;
        prop_assert!(a <= b * (1.0 + 1e-10));
    }

    #[test]
    fn class_constant_is_scale_and_dilation_invariant(lam in 0.01f64..100.0, c in 0.01f64..100.0, p in 1.3f64..4.0) {
        let params = ClassParams::new(0.0, p, Domain::HalfLine).unwrap();
        let base = qb_constant(&Func::Closed(ClosedFormFunc::indicator(0.0, 1.0).unwrap()), &params, None).unwrap();
        let moved = Func::Closed(ClosedFormFunc::indicator(0.0, lam).unwrap().scale(c));
        let other = qb_constant(&moved, &params, None).unwrap();
        prop_assert!(base.is_member() && other.is_member());
        prop_assert!(rel(base.class_constant, other.class_constant) < 1e-6);
    }

    #[test]
    fn class_constant_is_non_increasing_in_p(alpha in -0.7f64..0.15, beta in -0.05f64..=0.0) {
        let w = power(1.0, alpha);
        let mut last = f64::INFINITY;
        for p in [1.2, 1.5, 2.0, 3.0, 5.0] {
            let rep = qb_constant(&w, &ClassParams::new(beta, p, Domain::HalfLine).unwrap(), None).unwrap();
            prop_assert!(rep.is_member());
            prop_assert!(rep.class_constant <= last * (1.0 + 1e-9));
            last = rep.class_constant;
        }
    }
}
