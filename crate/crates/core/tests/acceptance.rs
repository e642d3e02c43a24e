//! Acceptance suite: every criterion runs as its own test and prints one
//! pass/fail line (visible with `--nocapture`). `cli validate` renders the
//! same checks as a table.

use ra_uplink::acceptance::{self, CriterionReport};

fn check(report: CriterionReport) {
    println!("{}", report.summary_line());
    assert!(
        report.passed,
        "criterion {} ({}) failed: {}",
        report.id, report.name, report.details
    );
}

#[test]
fn criterion_01_low_snr_closed_form() {
    check(acceptance::criterion_1());
}

#[test]
fn criterion_02_high_snr_closed_form_vs_exhaustive() {
    check(acceptance::criterion_2());
}

#[test]
fn criterion_03_alpha_identity() {
    check(acceptance::criterion_3());
}

#[test]
fn criterion_04_simulator_vs_analytic_outage() {
    check(acceptance::criterion_4());
}

#[test]
fn criterion_05_rayleigh_corollary() {
    check(acceptance::criterion_5());
}

#[test]
fn criterion_06_rayleigh_path_sum() {
    check(acceptance::criterion_6());
}

#[test]
fn criterion_07_lemma_1_shape() {
    check(acceptance::criterion_7());
}

#[test]
fn criterion_08_bounds_and_orderings() {
    check(acceptance::criterion_8());
}

#[test]
fn criterion_09_fixed_point_contract() {
    check(acceptance::criterion_9());
}

#[test]
fn criterion_10_ibl_dominates_fbl() {
    check(acceptance::criterion_10());
}

#[test]
fn criterion_11_bandwidth_slope() {
    check(acceptance::criterion_11());
}

#[test]
fn criterion_12_trend_suite() {
    check(acceptance::criterion_12());
}
