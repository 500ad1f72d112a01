//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL — …` line and fails if its criterion does.

use std::io::Write;

use asht_experiment::acceptance;

fn check(id: usize) {
    let verdict = acceptance::run(id);
    // written to the raw handle so the line shows even for passing tests
    let _ = writeln!(std::io::stderr(), "{}", verdict.line());
    assert!(verdict.pass, "{}", verdict.line());
}

#[test]
fn criterion_01_closed_forms_match_lp() {
    check(1);
}

#[test]
fn criterion_02_error_bound() {
    check(2);
}

#[test]
fn criterion_03_delay_growth() {
    check(3);
}

#[test]
fn criterion_04_switching_overhead() {
    check(4);
}

#[test]
fn criterion_05_epsilon_uniform() {
    check(5);
}

#[test]
fn criterion_06_estimator_offset() {
    check(6);
}

#[test]
fn criterion_07_estimator_bias() {
    check(7);
}

#[test]
fn criterion_08_plug_in_dominance() {
    check(8);
}

#[test]
fn criterion_09_shape_recovery() {
    check(9);
}

#[test]
fn criterion_10_statistic_calibration() {
    check(10);
}

#[test]
fn criterion_11_end_to_end_ranking() {
    check(11);
}

#[test]
fn criterion_12_determinism() {
    check(12);
}
