//! Acceptance suite: one test per exit criterion, each printing its
//! pass/fail line with the measured numbers. The same checks back the CLI
//! `verify-all` subcommand.
//!
//! Criterion 7's d=2 oracle sub-check is expected to fail: finite-box
//! spectra cannot resolve band-edge gaps of order exp(-2 pi / mu) at
//! mu <= 1e-2, in any floating-point format at any box size. The failure is
//! genuine and is reported rather than masked; the d=1 oracle path and the
//! Birman–Schwinger path for both dimensions are asserted in full.

use bandedge::acceptance as acc;
use bandedge::acceptance::CriterionResult;

fn report(r: &CriterionResult) {
    println!(
        "criterion {:>2}: {} — {} ({:.2}s) :: {}",
        r.id,
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        r.runtime.as_secs_f64(),
        r.detail
    );
    assert!(r.passed, "criterion {} failed: {}", r.id, r.detail);
}

#[test]
fn criterion_01_green_closed_form() {
    report(&acc::criterion_01_green_closed_form());
}

#[test]
fn criterion_02_t_alpha_oracle() {
    report(&acc::criterion_02_t_alpha_oracle());
}

#[test]
fn criterion_03_trace_identities() {
    report(&acc::criterion_03_trace_identities());
}

#[test]
fn criterion_04_realness() {
    report(&acc::criterion_04_realness());
}

#[test]
fn criterion_05_bs_principle_equivalence() {
    report(&acc::criterion_05_bs_principle_equivalence());
}

#[test]
fn criterion_06_single_site_exact_solve() {
    report(&acc::criterion_06_single_site_exact_solve());
}

#[test]
fn criterion_07_small_mu_regimes_as_stated() {
    // Expected red: the d=2 oracle sub-check demands resolving gaps of
    // order exp(-2 pi/mu) ~ 1e-273, below any finite-box resolution.
    report(&acc::criterion_07_small_mu_regimes());
}

#[test]
fn criterion_07_attainable_paths() {
    report(&acc::criterion_07_attainable_paths());
}

#[test]
fn criterion_08_d1_kappa0_positive_law() {
    report(&acc::criterion_08_d1_kappa0_positive_law());
}

#[test]
fn criterion_09_d1_kappa0_zero_law() {
    report(&acc::criterion_09_d1_kappa0_zero_law());
}

#[test]
fn criterion_10_d2_kappa0_positive_law() {
    report(&acc::criterion_10_d2_kappa0_positive_law());
}

#[test]
fn criterion_11_d2_kappa0_zero_law() {
    report(&acc::criterion_11_d2_kappa0_zero_law());
}

#[test]
fn criterion_12_bargmann_structure() {
    report(&acc::criterion_12_bargmann_structure());
}

#[test]
fn criterion_13_bs_property_suites_as_stated() {
    // Expected red: the stated d=2 threshold probe (gap 1e-6, tol 5e-2)
    // contradicts the exact deviation kappa1/(4a) = 9.5e-2 at that gap.
    report(&acc::criterion_13_bs_property_suites());
}

#[test]
fn criterion_13_attainable_probes() {
    report(&acc::criterion_13_attainable_probes());
}

#[test]
fn criterion_14_reproducibility() {
    report(&acc::criterion_14_reproducibility());
}
