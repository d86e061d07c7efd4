//! End-to-end extrapolation checks.

use qbhardy::extrap::{
    hardy_test_function, thm_grand_constant, thm_hardy_grand_check, thm_hardy_grand_necessity, thm_infinity_constant,
    thm_interval_constant_kprime, thm_main_check, thm_main_constant, CertifiedPair, HardyGrandOptions, MonotoneFn,
};
use qbhardy::funcspace::{ClosedFormFunc, Func};
use qbhardy::operators::PsiKernel;
use qbhardy::Error;

fn power(c: f64, a: f64) -> Func {
    Func::Closed(ClosedFormFunc::power(c, a))
}

#[test]
fn main_constant_beta_zero_matches_straight_line_formula() {
    // w = x^0.3, beta = 0, p0 = 1.5, p = 3, phi = identity:
    // C(eps) = (1 + (alpha+1)/(q-alpha-1)) ((1.5 - eps)/(1.5 - eps) * 1.5/eps)^{2}, q = (1.5 - eps) * 2.
    let alpha: f64 = 0.3;
    let rep = thm_main_constant(&power(1.0, alpha), 0.0, 1.5, 3.0, &MonotoneFn::Identity, None).unwrap();
    let oracle = (1..100_000)
        .map(|i| {
            let e = 1.5 * i as f64 / 100_000.0;
            let q = (1.5 - e) * 2.0;
            if q - alpha - 1.0 <= 0.0 || alpha <= -1.0 {
                return f64::INFINITY;
            }
            let class = 1.0 + (alpha + 1.0) / (q - alpha - 1.0);
            class * (1.5 / e).powi(2)
        })
        .fold(f64::INFINITY, f64::min);
    assert!((rep.value - oracle).abs() < 1e-4 * oracle, "{} vs {oracle}", rep.value);
}

#[test]
fn main_constant_trend_in_p0_is_logged() {
    let vals: Vec<(f64, f64)> = [1.0, 1.25, 1.5, 1.75, 2.0]
        .iter()
        .map(|&p0| (p0, thm_main_constant(&Func::one(), 0.0, p0, 2.0, &MonotoneFn::Identity, None).unwrap().value))
        .collect();
    let non_increasing = vals.windows(2).all(|s| s[1].1 <= s[0].1 * (1.0 + 1e-9));
    println!("main constant by p0 (w = 1, p = 2): {vals:?}; non-increasing: {non_increasing}");
    assert!(vals.iter().all(|(_, v)| v.is_finite()));
}

#[test]
fn main_check_diagonal_pair_passes() {
    let f = power(1.0, -0.2);
    let chi = Func::Closed(ClosedFormFunc::indicator(0.0, 1.0).unwrap());
    let pair = CertifiedPair::raw(chi.clone(), chi).unwrap();
    let (c, k) = thm_main_check(&pair, &power(1.0, 0.2), 0.0, 1.0, 2.0, &MonotoneFn::Identity, 1e-9).unwrap();
    assert!(c.pass && k.value > 1.0, "{c:?}");
    assert!(CertifiedPair::raw(f.clone(), power(2.0, -0.2)).is_err());
}

#[test]
fn main_check_rejects_weights_outside_hat_class() {
    let pair = CertifiedPair::s_psi_bound(Func::Closed(ClosedFormFunc::indicator(0.0, 1.0).unwrap()), PsiKernel::one(), 0.0)
        .unwrap();
    let r = thm_main_check(&pair, &power(1.0, 1.5), 0.0, 1.0, 2.0, &MonotoneFn::Identity, 1e-9);
    assert!(matches!(r, Err(Error::NotInHatClass(_))), "{r:?}");
}

#[test]
fn infinity_constant_fixed_factor() {
    // phi(1) = 1 and beta = 0: the fixed factor is 1, leaving the class constant at the grid top.
    let rep = thm_infinity_constant(&Func::one(), 0.0, 2.0, 2.0, &MonotoneFn::Identity, None).unwrap();
    assert!((rep.value - 100.0 / 99.0).abs() < 1e-6, "{rep:?}");
    let neg = thm_infinity_constant(&Func::one(), -0.5, 2.0, 2.0, &MonotoneFn::Identity, None).unwrap();
    assert!(neg.value > 2.0 * rep.value * 0.99);
}

#[test]
fn kprime_blows_up_toward_small_delta() {
    let rep = thm_interval_constant_kprime(&Func::one(), 0.0, 1.0, 2.0, &MonotoneFn::Identity, None).unwrap();
    let first = rep.profile.first().unwrap().1;
    assert!(first > 1e6 * rep.value);
}

#[test]
fn grand_constant_theta_limit_has_no_sigma_blowup() {
    let phi = MonotoneFn::s_psi_bound(0.0, 1.5);
    let rep = thm_grand_constant(&Func::one(), 0.0, 1.5, 2.0, 1e-9, &phi, None).unwrap();
    for row in &rep.rows {
        let expected = 2f64.powf((1.0 - row.sigma) / (2.0 - row.sigma)).max(1.0);
        assert!((row.factor - expected).abs() < 1e-6 * expected);
    }
}

#[test]
fn grand_constant_rejects_divergent_mass() {
    let phi = MonotoneFn::s_psi_bound(0.0, 1.5);
    let r = thm_grand_constant(&power(1.0, -1.2), 0.0, 1.5, 2.0, 1.0, &phi, None);
    assert!(matches!(r, Err(Error::DivergentWI)), "{r:?}");
}

#[test]
fn hardy_grand_examples() {
    let beta = -0.2;
    let opts = HardyGrandOptions::default();
    let f = hardy_test_function(beta, 0.5).unwrap();
    let rep = thm_hardy_grand_check(&[f], &power(1.0, 0.3), beta, 2.0, 1.0, &opts).unwrap();
    assert!(rep.all_pass, "{rep:?}");
    // f = x^beta: H f = f/(beta+1), so the ratio of grand norms is 1/(beta+1).
    let rep = thm_hardy_grand_check(&[power(1.0, beta)], &power(1.0, 0.3), beta, 2.0, 1.0, &opts).unwrap();
    let c = rep.checks[0];
    assert!((c.lhs / c.rhs_base - 1.0 / (1.0 + beta)).abs() < 1e-9);
    assert!(c.pass);
}

#[test]
fn necessity_member_ratios_stay_below_sufficiency_constant() {
    let rs = [1e-1, 1e-2, 1e-3, 1e-4];
    let nec = thm_hardy_grand_necessity(&Func::one(), 0.0, 2.0, 1.0, &rs).unwrap();
    let phi = MonotoneFn::s_psi_bound(0.0, 1.5);
    let c = thm_grand_constant(&Func::one(), 0.0, 1.5, 2.0, 1.0, &phi, None).unwrap();
    assert!(nec.rows.iter().all(|r| r.ratio <= c.value), "{nec:?} vs {}", c.value);
}

#[test]
fn necessity_ratio_for_boundary_weight_grows_like_sqrt_log() {
    // w = x^{p-1}, p = 2: ratio^2 is asymptotically affine in ln(1/r).
    let rs = [1e-2, 1e-4, 1e-6, 1e-8];
    let rep = thm_hardy_grand_necessity(&power(1.0, 1.0), 0.0, 2.0, 1.0, &rs).unwrap();
    let sq: Vec<f64> = rep.rows.iter().map(|r| r.ratio * r.ratio).collect();
    let d: Vec<f64> = sq.windows(2).map(|s| s[1] - s[0]).collect();
    assert!(d.iter().all(|&x| x > 0.0), "{sq:?}");
    assert!((d[2] / d[1] - 1.0).abs() < 0.1, "{d:?}");
    assert!(rep.growth_factors.iter().all(|&g| g < 2.0));
}
