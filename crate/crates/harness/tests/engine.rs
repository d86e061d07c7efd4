//! Scenario engine behaviour.

use qbhardy_harness::config::{Expectation, ScenarioConfig, ScenarioKind, SuiteFile};
use qbhardy_harness::{run_scenario, run_suite, HarnessError, ScenarioReport, Status};

fn scenario(src: &str) -> ScenarioConfig {
    ScenarioConfig::from_json(src).unwrap()
}

fn without_timing(r: &ScenarioReport) -> String {
    let mut r = r.clone();
    r.timing_ms = 0.0;
    serde_json::to_string(&r).unwrap()
}

#[test]
fn classify_power_weight() {
    // Power-weight formula: 1 + (a+1)/((beta+1)p - a - 1) = 2 for a = 0.5, beta = -0.5, p = 2.
    let r = run_scenario(&scenario(
        r#"{"kind":"classify","weight":{"kind":"power","exponent":0.5},"beta":-0.5,"p":2}"#,
    ))
    .unwrap();
    assert_eq!(r.status, Status::Pass);
    assert!((r.constant("class_constant").unwrap() - 2.0).abs() < 1e-6, "{r:?}");
    let c = r.constants.iter().find(|c| c.name == "class_constant").unwrap();
    assert!(c.grid.is_some(), "constants carry grid provenance");
}

#[test]
fn grand_norm_of_inverse_square_root() {
    let r = run_scenario(&scenario(
        r#"{"kind":"grand-norm","function":{"kind":"power","exponent":-0.5},
            "weight":{"kind":"power","exponent":0},"p":2,"theta":1}"#,
    ))
    .unwrap();
    assert_eq!(r.status, Status::Pass);
    assert!((r.constant("grand_norm").unwrap() - 2.0).abs() < 1e-3, "{r:?}");
    assert!(r.verdicts.iter().any(|(k, v)| k == "boundary_flag" && v == "near_hi"), "{:?}", r.verdicts);
}

#[test]
fn beta_below_minus_one_is_a_config_error() {
    let e = run_scenario(&scenario(
        r#"{"kind":"classify","weight":{"kind":"power","exponent":0.5},"beta":-1.5,"p":2}"#,
    ))
    .unwrap_err();
    assert!(matches!(e, HarnessError::ConfigInvalid { ref field, .. } if field == "beta"), "{e}");
}

#[test]
fn missing_and_out_of_range_parameters() {
    let e = run_scenario(&ScenarioConfig::new(ScenarioKind::Norm)).unwrap_err();
    assert!(e.is_config());
    let e = run_scenario(&scenario(
        r#"{"kind":"extrapolate-main","function":{"kind":"indicator","support":[0,1]},
            "weight":{"kind":"power","exponent":0},"beta":0.2,"p0":1.5,"p":3}"#,
    ))
    .unwrap_err();
    assert!(matches!(e, HarnessError::ParameterOutOfTheoremRange { ref field, .. } if field == "beta"), "{e}");
    let e = run_scenario(&scenario(
        r#"{"kind":"grand-norm","function":{"kind":"power","exponent":0},
            "weight":{"kind":"power","exponent":0},"p":0.5,"theta":1}"#,
    ))
    .unwrap_err();
    assert!(matches!(e, HarnessError::ParameterOutOfTheoremRange { ref field, .. } if field == "p"), "{e}");
}

#[test]
fn hypothesis_failures_are_reported_not_raised() {
    // x^1.5 is outside the hat class at p = 2, beta = 0.
    let r = run_scenario(&scenario(
        r#"{"kind":"extrapolate-main","function":{"kind":"indicator","support":[0,1]},
            "weight":{"kind":"power","exponent":1.5},"p0":1,"p":2}"#,
    ))
    .unwrap();
    assert_eq!(r.status, Status::Fail);
    assert!(r.error.is_some());
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let c = scenario(
        r#"{"kind":"grand-extrapolate","weight":{"kind":"power","exponent":0.3},"beta":-0.2,"p":2.5,"theta":0.5}"#,
    );
    let a = run_scenario(&c).unwrap();
    let b = run_scenario(&c).unwrap();
    assert_eq!(without_timing(&a), without_timing(&b));
}

#[test]
fn reports_round_trip() {
    let r = run_scenario(&scenario(
        r#"{"kind":"norm","function":{"kind":"power","exponent":-0.5},"weight":{"kind":"power","exponent":0},"p":2}"#,
    ))
    .unwrap();
    // Divergent norms are reported as the +inf sentinel.
    assert!(r.constant("norm").unwrap().is_infinite());
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"inf\""), "{json}");
    let back: ScenarioReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

#[test]
fn suite_inverts_expected_failures() {
    let src = r#"[
        {"kind":"classify","weight":{"kind":"power","exponent":0.5},"beta":-0.5,"p":2},
        {"name":"boundary","kind":"classify","weight":{"kind":"power","exponent":1},"p":2,"expect":"fail"}
    ]"#;
    let configs = SuiteFile::from_json(src).unwrap();
    let s = run_suite(&configs, 2).unwrap();
    assert_eq!(s.reports[1].status, Status::Fail);
    assert!(s.reports.iter().all(|r| r.ok));
    assert_eq!(s.exit_code(false), 0);

    let mut flipped = configs.clone();
    flipped[1].expect = Expectation::Pass;
    let s = run_suite(&flipped, 2).unwrap();
    assert_eq!(s.summary.failed, 1);
    assert_eq!(s.exit_code(false), 1);
}

#[test]
fn suite_records_per_scenario_errors() {
    let mut bad = ScenarioConfig::new(ScenarioKind::Classify);
    bad.beta = -2.0;
    let good = scenario(r#"{"kind":"norm","function":{"kind":"power","exponent":0},"weight":{"kind":"power","exponent":0},"p":2,"domain":"unit-interval"}"#);
    let s = run_suite(&[bad, good], 1).unwrap();
    assert_eq!(s.reports[0].status, Status::Error);
    assert!(s.reports[0].error.as_deref().unwrap().contains("beta"));
    assert_eq!(s.reports[1].status, Status::Pass);
    assert_eq!(s.summary.errored, 1);
    assert_eq!(s.exit_code(false), 1);
}

#[test]
fn suite_rejects_empty_list_and_zero_width() {
    assert!(run_suite(&[], 1).unwrap_err().is_config());
    assert!(run_suite(&[ScenarioConfig::new(ScenarioKind::Norm)], 0).unwrap_err().is_config());
}

#[test]
fn demo_suite_passes_in_parallel() {
    let src = include_str!("../scenarios/demo.json");
    let configs = SuiteFile::from_json(src).unwrap();
    let serial = run_suite(&configs, 1).unwrap();
    let parallel = run_suite(&configs, 4).unwrap();
    assert_eq!(parallel.exit_code(true), 0, "{:?}", parallel.summary);
    for (a, b) in serial.reports.iter().zip(&parallel.reports) {
        assert_eq!(without_timing(a), without_timing(b));
    }
}
