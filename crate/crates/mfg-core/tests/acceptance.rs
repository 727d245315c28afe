//! Acceptance gate: every criterion of the verification suite at the
//! desk-scale defaults, one test per criterion, each printing its
//! pass/fail line (visible with `--nocapture` or on failure).

use mfg_core::checks::{self, SuiteConfig};

fn run(report: mfg_core::checks::CriterionReport) {
    println!("{}", report.summary_line());
    for row in &report.rows {
        println!(
            "    {} {} = {:.6e} ({})",
            if row.pass { "ok " } else { "FAIL" },
            row.label,
            row.value,
            row.bound.describe()
        );
    }
    assert!(report.passed, "criterion {} failed: {}", report.id, report.name);
}

#[test]
fn criterion_1_probe_algebra() {
    run(checks::criterion_probe_algebra(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_2_probe_certification() {
    run(checks::criterion_probe_certification(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_3_stationary_state() {
    run(checks::criterion_stationary(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_4_mass_conservation_and_positivity() {
    run(checks::criterion_mass_positivity(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_5_linearization_consistency() {
    run(checks::criterion_linearization(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_6_pairing_identity_suite() {
    run(checks::criterion_identity(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_7_inverse_round_trip() {
    run(checks::criterion_inverse_round_trip(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_8_noise_robustness() {
    run(checks::criterion_noise_robustness(&SuiteConfig::default()).unwrap());
}

#[test]
fn criterion_9_determinism() {
    // two full runs of the suite on the same (reduced) configuration must
    // serialize to byte-identical CSV bodies
    let cfg = SuiteConfig::reduced();
    let first = checks::rows_to_csv(&checks::run_all(&cfg).expect("first run"));
    let second = checks::rows_to_csv(&checks::run_all(&cfg).expect("second run"));
    assert_eq!(first, second, "CSV bodies differ between runs");
    println!("PASS criterion 9: determinism (byte-identical CSV bodies)");
}
