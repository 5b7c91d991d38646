//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line. Run with `--nocapture` to see the lines on success too.

use obslab::harness::acceptance::run_criterion;

fn check(id: usize) {
    let outcome = run_criterion(id).expect("criterion should run to completion");
    println!("{outcome}");
    assert!(outcome.pass, "{outcome}");
}

#[test]
fn criterion_01_closed_form_spectra() {
    check(1);
}

#[test]
fn criterion_02_unitary_baseline() {
    check(2);
}

#[test]
fn criterion_03_adjoints_and_compositions() {
    check(3);
}

#[test]
fn criterion_04_resolvent_seven_delta() {
    check(4);
}

#[test]
fn criterion_05_neu_fading_rate() {
    check(5);
}

#[test]
fn criterion_06_dirichlet_monotonicity() {
    check(6);
}

#[test]
fn criterion_07_solidifying_spectra() {
    check(7);
}

#[test]
fn criterion_08_annulus_shooting() {
    check(8);
}

#[test]
fn criterion_09_nonconcentration_tau() {
    check(9);
}

#[test]
fn criterion_10_extension_boundedness() {
    check(10);
}

#[test]
fn criterion_11_kernel_oracles() {
    check(11);
}

#[test]
fn criterion_12_closed_form_constants() {
    check(12);
}
