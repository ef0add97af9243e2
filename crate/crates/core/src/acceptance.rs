//! The acceptance suite: every quantitative exit criterion implemented as a
//! deterministic check with pinned tolerances. The CLI `verify-all`
//! subcommand and the `acceptance` integration test both run these.

use std::time::{Duration, Instant};

/// Outcome of one criterion. `detail` carries the measured numbers; rows are
/// deterministic (no timing data) so repeated runs emit identical CSV bytes.
#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub runtime: Duration,
}

fn finish(
    id: u32,
    name: &str,
    started: Instant,
    passed: bool,
    detail: String,
) -> CriterionResult {
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        runtime: started.elapsed(),
    }
}

mod criteria;
pub use criteria::*;

/// Run the full suite in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_01_green_closed_form(),
        criterion_02_t_alpha_oracle(),
        criterion_03_trace_identities(),
        criterion_04_realness(),
        criterion_05_bs_principle_equivalence(),
        criterion_06_single_site_exact_solve(),
        criterion_07_small_mu_regimes(),
        criterion_08_d1_kappa0_positive_law(),
        criterion_09_d1_kappa0_zero_law(),
        criterion_10_d2_kappa0_positive_law(),
        criterion_11_d2_kappa0_zero_law(),
        criterion_12_bargmann_structure(),
        criterion_13_bs_property_suites(),
        criterion_14_reproducibility(),
    ]
}
