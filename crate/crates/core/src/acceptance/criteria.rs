//! Individual acceptance criteria. Each function is deterministic (fixed
//! seeds), records the measured extremes in its detail string, and applies
//! the pinned tolerance.

use super::{finish, CriterionResult};
use crate::asymptotics::{
    bargmann_check, compare_counts, count_bs_ladder, solve_bottom_detailed, solve_top_detailed,
    MuGrid, OracleParams,
};
use crate::birman::{
    bs_eigenvalues_ln, bs_spectrum, build_bs_matrix, build_bs_matrix_ln, lambda_max_ln,
    rank_one_split, trace_identities,
};
use crate::cli::ExperimentConfig;
use crate::dispersion::{extract_morse_constant, GeneratingCoefficients, Site};
use crate::green::{t_alpha, Edge, GreenEvaluator, QuadratureSpec};
use crate::potential::LatticePotential;
use crate::spectrum_oracle::{build_truncated, oracle_spectrum, Boundary};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::time::Instant;

const SEED: u64 = 42;

fn lap(dim: usize) -> GeneratingCoefficients {
    GeneratingCoefficients::laplacian(dim).unwrap()
}

fn evaluator(dim: usize) -> GreenEvaluator {
    GreenEvaluator::new(lap(dim), QuadratureSpec::default_for_dim(dim)).unwrap()
}

/// Evaluator with a coarser base grid for bulk random-instance sweeps.
fn evaluator_fast(dim: usize) -> GreenEvaluator {
    GreenEvaluator::new(lap(dim), QuadratureSpec::new(64, 8, 1e-10, true).unwrap()).unwrap()
}

fn pot1(entries: &[(i64, f64)]) -> LatticePotential {
    LatticePotential::new(1, entries.iter().map(|&(x, v)| ([x, 0], v))).unwrap()
}

fn pot2(entries: &[(Site, f64)]) -> LatticePotential {
    LatticePotential::new(2, entries.iter().copied()).unwrap()
}

/// d=1 Laplacian closed forms.
fn a_closed(z: f64) -> f64 {
    let u = z - 1.0;
    u.signum() / (u * u - 1.0).sqrt()
}

fn g_closed(x: i64, z: f64) -> f64 {
    let u = z - 1.0;
    let root = (u * u - 1.0).sqrt();
    let beta = u - root;
    (-beta).powi(x.abs() as i32) / root
}

struct Checker {
    failures: Vec<String>,
    metrics: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Checker { failures: Vec::new(), metrics: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn metric(&mut self, m: String) {
        self.metrics.push(m);
    }

    fn detail(&self) -> String {
        if self.failures.is_empty() {
            self.metrics.join("; ")
        } else {
            format!("FAILED: {} | {}", self.failures.join(" | "), self.metrics.join("; "))
        }
    }

    fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_potential(rng: &mut ChaCha8Rng, dim: usize, radius: i64, max_sites: usize) -> LatticePotential {
    loop {
        let n = rng.random_range(1..=max_sites);
        let mut sites: BTreeSet<Site> = BTreeSet::new();
        while sites.len() < n {
            let x = rng.random_range(-radius..=radius);
            let y = if dim == 1 { 0 } else { rng.random_range(-radius..=radius) };
            sites.insert([x, y]);
        }
        let entries: Vec<(Site, f64)> = sites
            .into_iter()
            .map(|s| {
                let mag = rng.random_range(0.1..2.0);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (s, sign * mag)
            })
            .collect();
        if let Ok(p) = LatticePotential::new(dim, entries) {
            return p;
        }
    }
}

fn random_z(rng: &mut ChaCha8Rng, e_min: f64, e_max: f64) -> f64 {
    let u = rng.random_range(0.1..3.0);
    if rng.random_bool(0.5) {
        e_max + u
    } else {
        e_min - u
    }
}

fn random_instances(dim: usize, count: usize) -> Vec<(LatticePotential, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + dim as u64);
    let (e_min, e_max) = if dim == 1 { (0.0, 2.0) } else { (0.0, 4.0) };
    let radius = if dim == 1 { 5 } else { 2 };
    let max_sites = if dim == 1 { 6 } else { 5 };
    (0..count)
        .map(|_| {
            let p = random_potential(&mut rng, dim, radius, max_sites);
            let z = random_z(&mut rng, e_min, e_max);
            (p, z)
        })
        .collect()
}

// -------------------------------------------------------------------------

/// 1. d=1 closed forms: a(z) to 1e-10 on the pinned z list, G(x; z) for
/// |x| <= 5; runtime under 1 s.
pub fn criterion_01_green_closed_form() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(1);
    let mut worst_a = 0.0f64;
    let mut worst_g = 0.0f64;
    for z in [2.001, 2.1, 3.0, 10.0] {
        let got = g.a_of_z(z).unwrap();
        let err = (got - a_closed(z)).abs();
        worst_a = worst_a.max(err);
        for x in -5..=5i64 {
            let gv = g.green_x([x, 0], z).unwrap();
            let err = (gv - g_closed(x, z)).abs();
            worst_g = worst_g.max(err);
        }
    }
    c.require(worst_a < 1e-10, || format!("a(z) error {worst_a:.3e} >= 1e-10"));
    c.require(worst_g < 1e-10, || format!("G(x;z) error {worst_g:.3e} >= 1e-10"));
    let secs = started.elapsed().as_secs_f64();
    c.require(secs < 1.0, || format!("runtime {secs:.2}s >= 1s"));
    c.metric(format!("max |a - closed| = {worst_a:.3e}, max |G - closed| = {worst_g:.3e}"));
    finish(1, "green closed form (d=1)", started, c.passed(), c.detail())
}

/// 2. T_alpha against the closed forms for alpha in {0, 1} on 1e3 random
/// (omega, r0), plus the alpha > 1 bound; runtime under 5 s.
pub fn criterion_02_t_alpha_oracle() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst0 = 0.0f64;
    let mut worst1 = 0.0f64;
    let mut bound_violation = 0.0f64;
    for _ in 0..1000 {
        let omega = (rng.random_range(-2.0f64..1.0)).exp() * 10.0f64.powf(rng.random_range(-1.0..0.5));
        let omega = omega.clamp(1e-2, 10.0);
        let r0 = rng.random_range(0.05..0.95);
        let t0 = t_alpha(0.0, omega, r0).unwrap();
        let c0 = (r0 / omega).atan() / omega;
        worst0 = worst0.max((t0 - c0).abs() / c0.abs().max(1.0));
        let t1 = t_alpha(1.0, omega, r0).unwrap();
        let c1 = 0.5 * ((r0 * r0 + omega * omega) / (omega * omega)).ln();
        worst1 = worst1.max((t1 - c1).abs() / c1.abs().max(1.0));
        let alpha = rng.random_range(1.05..4.0);
        let ta = t_alpha(alpha, omega, r0).unwrap();
        let cap = r0.powf(alpha - 1.0) / (alpha - 1.0);
        bound_violation = bound_violation.max(ta - cap);
    }
    c.require(worst0 < 1e-10, || format!("alpha=0 error {worst0:.3e} >= 1e-10"));
    c.require(worst1 < 1e-10, || format!("alpha=1 error {worst1:.3e} >= 1e-10"));
    c.require(bound_violation <= 1e-12, || {
        format!("alpha>1 bound violated by {bound_violation:.3e}")
    });
    let secs = started.elapsed().as_secs_f64();
    c.require(secs < 5.0, || format!("runtime {secs:.2}s >= 5s"));
    c.metric(format!(
        "max rel err: alpha=0 {worst0:.3e}, alpha=1 {worst1:.3e}; bound slack {bound_violation:.3e}"
    ));
    finish(2, "T_alpha closed-form oracle", started, c.passed(), c.detail())
}

fn trace_sweep(dim: usize, count: usize) -> (f64, f64) {
    let g = evaluator_fast(dim);
    let instances = random_instances(dim, count);
    let results: Vec<(f64, f64)> = instances
        .par_iter()
        .map(|(p, z)| {
            let m = build_bs_matrix(&g, p, *z).unwrap();
            let t = trace_identities(&m, &g, p).unwrap();
            let a = g.a_of_z(*z).unwrap();
            let scale = 1.0 + a.abs() * p.abs_sum();
            let rel = t.residual_b.max(t.residual_abs_b) / scale;
            let s = bs_spectrum(&m).unwrap();
            (rel, s.max_imag_residual)
        })
        .collect();
    let worst_rel = results.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let worst_imag = results.iter().map(|r| r.1).fold(0.0f64, f64::max);
    (worst_rel, worst_imag)
}

/// 3. Trace identities to 1e-9 relative on 1e3 random (potential, z)
/// instances across both dimensions; runtime under 30 s.
pub fn criterion_03_trace_identities() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let (rel1, _) = trace_sweep(1, 500);
    let (rel2, _) = trace_sweep(2, 500);
    let worst = rel1.max(rel2);
    c.require(worst < 1e-9, || format!("trace residual {worst:.3e} >= 1e-9"));
    let secs = started.elapsed().as_secs_f64();
    c.require(secs < 30.0, || format!("runtime {secs:.2}s >= 30s"));
    c.metric(format!("max relative residual d1 {rel1:.3e}, d2 {rel2:.3e}"));
    finish(3, "trace identities on random instances", started, c.passed(), c.detail())
}

/// 4. Realness of the Birman–Schwinger spectrum on the same instance set:
/// imaginary residuals below 1e-8.
pub fn criterion_04_realness() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let (_, imag1) = trace_sweep(1, 500);
    let (_, imag2) = trace_sweep(2, 500);
    let worst = imag1.max(imag2);
    c.require(worst < 1e-8, || format!("imaginary residual {worst:.3e} >= 1e-8"));
    c.metric(format!("max |Im eigenvalue| d1 {imag1:.3e}, d2 {imag2:.3e}"));
    finish(4, "spectrum realness on random instances", started, c.passed(), c.detail())
}

/// 5. Oracle counts (L = 2000) equal Birman–Schwinger ladder counts on 50
/// random d=1 potentials at mu in {0.5, 1, 2}, and each oracle bound state
/// satisfies |mu lambda(E) - 1| < 1e-6; runtime under 5 min.
pub fn criterion_05_bs_principle_equivalence() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(1);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5a5a);
    let pots: Vec<LatticePotential> =
        (0..50).map(|_| random_potential(&mut rng, 1, 5, 6)).collect();
    let oracle = OracleParams { l: 2000, boundary: Boundary::Dirichlet, margin: 1e-3 };
    let cases: Vec<(usize, f64)> = (0..pots.len())
        .flat_map(|i| [0.5, 1.0, 2.0].into_iter().map(move |mu| (i, mu)))
        .collect();
    let results: Vec<crate::error::Result<(usize, f64, crate::asymptotics::CountComparison)>> =
        cases
            .par_iter()
            .map(|&(i, mu)| {
                let cmp = compare_counts(&g, &pots[i], mu, oracle)?;
                Ok((i, mu, cmp))
            })
            .collect();
    let mut mismatches = 0usize;
    let mut worst_resid = 0.0f64;
    let mut total_states = 0usize;
    for r in results {
        match r {
            Ok((i, mu, cmp)) => {
                if cmp.n_plus_oracle != cmp.n_plus_bs || cmp.n_minus_oracle != cmp.n_minus_bs {
                    mismatches += 1;
                    c.require(false, || {
                        format!(
                            "count mismatch at instance {i}, mu={mu}: oracle ({}, {}) vs bs ({}, {})",
                            cmp.n_plus_oracle, cmp.n_minus_oracle, cmp.n_plus_bs, cmp.n_minus_bs
                        )
                    });
                }
                total_states += cmp.n_plus_oracle + cmp.n_minus_oracle;
                if cmp.max_bs_residual.is_finite() {
                    worst_resid = worst_resid.max(cmp.max_bs_residual);
                }
            }
            Err(e) => c.require(false, || format!("instance failed: {e}")),
        }
    }
    c.require(worst_resid < 1e-6, || {
        format!("BS principle residual {worst_resid:.3e} >= 1e-6")
    });
    let secs = started.elapsed().as_secs_f64();
    c.require(secs < 300.0, || format!("runtime {secs:.2}s >= 300s"));
    c.metric(format!(
        "150 runs, {total_states} bound states, {mismatches} count mismatches, \
         max |mu lambda(E) - 1| = {worst_resid:.3e}"
    ));
    finish(5, "Birman–Schwinger principle vs oracle", started, c.passed(), c.detail())
}

/// 6. Single-site exact solve: E(mu) = 1 + sqrt(1 + mu^2) to 1e-10 by the
/// root solver and to 1e-6 by the L = 2000 oracle, mu in {0.01, 0.1, 1}.
pub fn criterion_06_single_site_exact_solve() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(1);
    let p = pot1(&[(0, 1.0)]);
    let mut worst_solver = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for mu in [0.01f64, 0.1, 1.0] {
        let exact = 1.0 + (1.0 + mu * mu).sqrt();
        let sol = solve_top_detailed(&g, &p, mu).unwrap().unwrap();
        worst_solver = worst_solver.max((sol.energy - exact).abs());
        let h = build_truncated(g.coeffs(), &p, mu, 2000, Boundary::Dirichlet).unwrap();
        let margin = 0.5 * (exact - 2.0);
        let s = oracle_spectrum(&h, 0.0, 2.0, margin).unwrap();
        c.require(s.n_plus == 1, || format!("oracle missed the bound state at mu={mu}"));
        if let Some(e) = s.eigenvalues_above.first() {
            worst_oracle = worst_oracle.max((e - exact).abs());
        }
    }
    c.require(worst_solver < 1e-10, || {
        format!("solver error {worst_solver:.3e} >= 1e-10")
    });
    c.require(worst_oracle < 1e-6, || {
        format!("oracle error {worst_oracle:.3e} >= 1e-6")
    });
    c.metric(format!(
        "solver max err {worst_solver:.3e}, oracle max err {worst_oracle:.3e}"
    ));
    finish(6, "single-site exact bound state", started, c.passed(), c.detail())
}

/// 7. Small-mu regime counts (n+, n-) = (1,0) / (0,1) / (1,1) for the three
/// canonical potentials at mu in {1e-2, 1e-3}, d = 1 and d = 2, via both the
/// Birman–Schwinger and oracle paths.
///
/// The d = 2 oracle sub-check is expected to fail: the bound-state gaps are
/// exp(-2 pi / mu) and smaller, far below any attainable finite-box
/// resolution, so the truncated spectrum cannot register the state. The
/// check is still executed as specified and its failure reported honestly.
pub fn criterion_07_small_mu_regimes() -> CriterionResult {
    criterion_07_parts(true)
}

/// Criterion 7 restricted to its attainable sub-checks: the
/// Birman–Schwinger path in both dimensions and the d = 1 oracle path.
pub fn criterion_07_attainable_paths() -> CriterionResult {
    criterion_07_parts(false)
}

fn criterion_07_parts(include_d2_oracle: bool) -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let mus = [1e-2, 1e-3];

    for dim in [1usize, 2] {
        let g = evaluator(dim);
        let cases: Vec<(&str, LatticePotential, (usize, usize))> = if dim == 1 {
            vec![
                ("+delta0", pot1(&[(0, 1.0)]), (1, 0)),
                ("-delta0", pot1(&[(0, -1.0)]), (0, 1)),
                ("delta0-delta1", pot1(&[(0, 1.0), (1, -1.0)]), (1, 1)),
            ]
        } else {
            vec![
                ("+delta0", pot2(&[([0, 0], 1.0)]), (1, 0)),
                ("-delta0", pot2(&[([0, 0], -1.0)]), (0, 1)),
                ("delta0-delta1", pot2(&[([0, 0], 1.0), ([1, 0], -1.0)]), (1, 1)),
            ]
        };
        for (name, p, want) in &cases {
            for &mu in &mus {
                // Birman–Schwinger path: ladder floors chosen below the
                // predicted gap scale for each dimension and regime.
                let ln_floor = if dim == 1 { -46.0 } else { -4.0e7 };
                let np = count_bs_ladder(&g, p, mu, Edge::Top, ln_floor, 24).unwrap();
                let nm = count_bs_ladder(&g, p, mu, Edge::Bottom, ln_floor, 24).unwrap();
                c.require((np, nm) == *want, || {
                    format!("BS counts d={dim} {name} mu={mu}: got ({np}, {nm}), want {want:?}")
                });
            }
        }
    }

    // Oracle path, d = 1: margin set to half the solver gap and the box
    // sized to the bound state's localization length 1/sqrt(2 gap), so the
    // kappa0 = 0 gaps of order mu^4 stay resolvable. The banded-inertia
    // path makes million-site boxes cheap.
    let g1 = evaluator(1);
    let cases1 = [
        ("+delta0", pot1(&[(0, 1.0)]), (1usize, 0usize)),
        ("-delta0", pot1(&[(0, -1.0)]), (0, 1)),
        ("delta0-delta1", pot1(&[(0, 1.0), (1, -1.0)]), (1, 1)),
    ];
    for (name, p, want) in &cases1 {
        for &mu in &mus {
            let gap_top = solve_top_detailed(&g1, p, mu).unwrap().map(|s| s.ln_gap.exp());
            let gap_bot = solve_bottom_detailed(&g1, p, mu).unwrap().map(|s| s.ln_gap.exp());
            let min_gap = gap_top
                .unwrap_or(f64::INFINITY)
                .min(gap_bot.unwrap_or(f64::INFINITY));
            let margin = 0.5 * min_gap;
            let localization = 1.0 / (2.0 * min_gap).sqrt();
            let l = ((6.0 * localization).ceil() as i64).clamp(2000, 3_000_000);
            let h = build_truncated(g1.coeffs(), p, mu, l, Boundary::Dirichlet).unwrap();
            let s = oracle_spectrum(&h, 0.0, 2.0, margin).unwrap();
            c.require((s.n_plus, s.n_minus) == *want, || {
                format!(
                    "oracle counts d=1 {name} mu={mu} (L={l}): got ({}, {}), want {want:?}",
                    s.n_plus, s.n_minus
                )
            });
        }
    }

    if !include_d2_oracle {
        c.metric("BS path and d=1 oracle path verified for all three regimes".into());
        return finish(7, "small-mu regime counts (attainable paths)", started, c.passed(), c.detail());
    }

    // Oracle path, d = 2, as specified. The gaps are sub-resolution
    // (exp(-628) at mu = 1e-2), so these sub-checks fail by necessity;
    // executed with the smallest meaningful margin and reported as measured.
    let g2 = evaluator(2);
    let cases2 = [
        ("+delta0", pot2(&[([0, 0], 1.0)]), (1usize, 0usize)),
        ("-delta0", pot2(&[([0, 0], -1.0)]), (0, 1)),
        ("delta0-delta1", pot2(&[([0, 0], 1.0), ([1, 0], -1.0)]), (1, 1)),
    ];
    let mut d2_oracle_note = String::new();
    let d2_runs: Vec<(&str, &LatticePotential, (usize, usize), f64)> = cases2
        .iter()
        .flat_map(|(n, p, w)| mus.iter().map(move |&mu| (*n, p, *w, mu)))
        .collect();
    let d2_results: Vec<(String, (usize, usize), (usize, usize), f64)> = d2_runs
        .par_iter()
        .map(|&(name, p, want, mu)| {
            let h = build_truncated(g2.coeffs(), p, mu, 100, Boundary::Dirichlet).unwrap();
            let s = oracle_spectrum(&h, 0.0, 4.0, 1e-9).unwrap();
            (name.to_string(), (s.n_plus, s.n_minus), want, mu)
        })
        .collect();
    for (name, got, want, mu) in d2_results {
        if got != want {
            d2_oracle_note = format!(
                "d=2 oracle cannot resolve gaps ~exp(-2pi/mu); e.g. {name} mu={mu}: \
                 got {got:?}, want {want:?}"
            );
            c.require(false, || {
                format!("oracle counts d=2 {name} mu={mu}: got {got:?}, want {want:?}")
            });
        }
    }
    if !d2_oracle_note.is_empty() {
        c.metric(d2_oracle_note);
    }
    c.metric("BS path and d=1 oracle path verified for all three regimes".into());
    finish(7, "small-mu regime counts (both paths)", started, c.passed(), c.detail())
}

/// 8. d=1, kappa0 > 0 law: sqrt(E - e_max) / mu -> pi J0 kappa0 with
/// relative error < 1e-3 at mu = 1e-3, single-site (closed form) and
/// two-site kappa0 = 2 (solver vs extracted Morse constant).
pub fn criterion_08_d1_kappa0_positive_law() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(1);
    let mu = 1e-3;
    let pi_j0 = extract_morse_constant(&g, Edge::Top).unwrap().pi_j0;

    let p1 = pot1(&[(0, 1.0)]);
    let sol = solve_top_detailed(&g, &p1, mu).unwrap().unwrap();
    let extracted = (0.5 * sol.ln_gap).exp() / mu;
    let predicted = pi_j0 * 1.0;
    let rel1 = (extracted - predicted).abs() / predicted;
    c.require(rel1 < 1e-3, || format!("single-site rel err {rel1:.3e} >= 1e-3"));
    // closed-form side as well
    let exact = 1.0 + (1.0 + mu * mu).sqrt();
    c.require((sol.energy - exact).abs() < 1e-10, || {
        format!("solver vs closed form: {:.3e}", (sol.energy - exact).abs())
    });

    let p2 = pot1(&[(0, 1.0), (1, 1.0)]);
    let sol2 = solve_top_detailed(&g, &p2, mu).unwrap().unwrap();
    let extracted2 = (0.5 * sol2.ln_gap).exp() / mu;
    let predicted2 = pi_j0 * 2.0;
    let rel2 = (extracted2 - predicted2).abs() / predicted2;
    c.require(rel2 < 1e-3, || format!("two-site rel err {rel2:.3e} >= 1e-3"));

    c.metric(format!(
        "pi_j0 = {pi_j0:.9} (exact 0.707106781...); rel errs {rel1:.3e}, {rel2:.3e}"
    ));
    finish(8, "d=1 absorption law, kappa0 > 0", started, c.passed(), c.detail())
}

/// 9. d=1, kappa0 = 0 law for delta0 - delta1 (kappa1 = kappa2 = 2):
/// sqrt(gap)/mu^2 -> sqrt(2) on both edges, within 1% at mu = 1e-2 and
/// 0.1% at mu = 1e-3.
pub fn criterion_09_d1_kappa0_zero_law() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(1);
    let p = pot1(&[(0, 1.0), (1, -1.0)]);
    let target = 2.0f64.sqrt();
    let mut metrics = Vec::new();
    for (mu, tol) in [(1e-2, 1e-2), (1e-3, 1e-3)] {
        let top = solve_top_detailed(&g, &p, mu).unwrap().unwrap();
        let ext_top = (0.5 * top.ln_gap).exp() / (mu * mu);
        let rel_top = (ext_top - target).abs() / target;
        c.require(rel_top < tol, || {
            format!("top edge mu={mu}: rel err {rel_top:.3e} >= {tol:.0e}")
        });
        let bottom = solve_bottom_detailed(&g, &p, mu).unwrap().unwrap();
        // e(mu) < 0 = e_min, gap = -e(mu)
        let ext_bot = (0.5 * bottom.ln_gap).exp() / (mu * mu);
        let rel_bot = (ext_bot - target).abs() / target;
        c.require(rel_bot < tol, || {
            format!("bottom edge mu={mu}: rel err {rel_bot:.3e} >= {tol:.0e}")
        });
        metrics.push(format!("mu={mu}: top {rel_top:.2e}, bottom {rel_bot:.2e}"));
    }
    c.metric(metrics.join("; "));
    finish(9, "d=1 absorption law, kappa0 = 0", started, c.passed(), c.detail())
}

fn d2_ladder_check(
    c: &mut Checker,
    g: &GreenEvaluator,
    p: &LatticePotential,
    mass_power: i32,
    predicted: f64,
    final_tol: f64,
    label: &str,
) {
    let mut extracted = Vec::new();
    for k in 0..=4 {
        let mu = 0.2 * 0.5f64.powi(k);
        let sol = solve_top_detailed(g, p, mu).unwrap().unwrap();
        let ext = -1.0 / (mu.powi(mass_power) * sol.ln_gap);
        extracted.push((mu, ext));
    }
    let devs: Vec<f64> = extracted.iter().map(|(_, e)| (e - predicted).abs()).collect();
    for w in devs.windows(2) {
        c.require(w[1] < w[0], || {
            format!("{label}: deviations not strictly decreasing: {devs:?}")
        });
    }
    let final_rel = devs.last().unwrap() / predicted.abs();
    c.require(final_rel < final_tol, || {
        format!("{label}: final rung rel dev {final_rel:.3e} >= {final_tol}")
    });
    c.metric(format!(
        "{label}: extracted last {:.6}, predicted {predicted:.6}, final rel {final_rel:.2e}",
        extracted.last().unwrap().1
    ));
}

/// 10. d=2, kappa0 > 0 law: -1/(mu ln gap) marches toward pi J0 with
/// strictly decreasing deviations along mu = 0.2 * 2^-k, k = 0..4; final
/// rung within 5%.
pub fn criterion_10_d2_kappa0_positive_law() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(2);
    let p = pot2(&[([0, 0], 1.0)]);
    let pi_j0 = extract_morse_constant(&g, Edge::Top).unwrap().pi_j0;
    d2_ladder_check(&mut c, &g, &p, 1, pi_j0, 5e-2, "kappa0>0");
    finish(10, "d=2 absorption law, kappa0 > 0", started, c.passed(), c.detail())
}

/// 11. d=2, kappa0 = 0 law: -1/(mu^2 ln gap) marches toward pi J0 kappa1
/// (kappa1 from quadrature) with the same ladder discipline; final rung
/// within 7%.
pub fn criterion_11_d2_kappa0_zero_law() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(2);
    let p = pot2(&[([0, 0], 1.0), ([1, 0], -1.0)]);
    let pi_j0 = extract_morse_constant(&g, Edge::Top).unwrap().pi_j0;
    let kappa1 = g.kappa_top(&p).unwrap();
    d2_ladder_check(&mut c, &g, &p, 2, pi_j0 * kappa1, 7e-2, "kappa0=0");
    c.metric(format!("kappa1 = {kappa1:.9} (exact 1 by symmetry)"));
    finish(11, "d=2 absorption law, kappa0 = 0", started, c.passed(), c.detail())
}

/// 12. Counting-bound structure: width-10 positive box potential, mu in
/// {1, 2, 4, 8}: counts finite, non-decreasing, bounded by 1 + slope * mu *
/// weighted_sum for a single fitted slope; non-positive potentials give zero
/// counts above the band.
pub fn criterion_12_bargmann_structure() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(1);
    let box_pot = pot1(&(0..10).map(|x| (x, 1.0)).collect::<Vec<_>>());
    let grid = MuGrid::new(vec![8.0, 4.0, 2.0, 1.0]).unwrap();
    let oracle = OracleParams { l: 500, boundary: Boundary::Dirichlet, margin: 1e-3 };
    let chk = bargmann_check(&g, &box_pot, 0.5, &grid, oracle).unwrap();
    // grid descends; counts must be non-decreasing in mu
    let mut sorted_pairs: Vec<(f64, usize)> =
        chk.mu_values.iter().copied().zip(chk.counts_plus.iter().copied()).collect();
    sorted_pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted_pairs.windows(2) {
        c.require(w[1].1 >= w[0].1, || {
            format!("counts not non-decreasing in mu: {sorted_pairs:?}")
        });
    }
    c.require(chk.bound_holds(), || "envelope bound violated".into());
    c.metric(format!(
        "counts over mu {:?}: {:?}; envelope slope {:.6}",
        chk.mu_values, chk.counts_plus, chk.envelope_slope_plus
    ));

    let neg_pot = pot1(&(0..10).map(|x| (x, -1.0)).collect::<Vec<_>>());
    for mu in [1.0, 2.0, 4.0, 8.0] {
        let h = build_truncated(g.coeffs(), &neg_pot, mu, 500, Boundary::Dirichlet).unwrap();
        let s = oracle_spectrum(&h, 0.0, 2.0, 1e-3).unwrap();
        c.require(s.n_plus == 0, || {
            format!("negative potential produced {} states above the band at mu={mu}", s.n_plus)
        });
    }
    finish(12, "counting-bound structure", started, c.passed(), c.detail())
}

/// 13. Property suites for the eigenvalue curves: monotonicity, the zero
/// test, rank-one residual laws, sign-definite trace gap, and the threshold
/// limits lambda/a -> kappa0 and lambda^2/a -> kappa1 at their stated
/// tolerances.
///
/// The d = 2 threshold probe as stated (relative error < 5e-2 at gap 1e-6)
/// is unattainable for the canonical zero-mass potential: there
/// lambda^2/a - kappa1 = -kappa1^2/(4 a) + O(delta ln delta) exactly, and
/// a(1e-6) = 2.64 puts the true deviation at 9.5%. The probe would need a
/// gap below ~1e-13 to meet 5e-2. It is run as specified and its failure
/// reported; `criterion_13_attainable_probes` covers everything else.
pub fn criterion_13_bs_property_suites() -> CriterionResult {
    criterion_13_parts(true)
}

/// Criterion 13 without the unattainable stated-form d = 2 probe; the same
/// probe is asserted instead at gap 1e-16 (model regime), where the exact
/// deviation kappa1/(4 a) = 4.2e-2 meets the 5e-2 tolerance.
pub fn criterion_13_attainable_probes() -> CriterionResult {
    criterion_13_parts(false)
}

fn criterion_13_parts(stated_d2_probe: bool) -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let g = evaluator(1);

    // Monotone principal curve on random potentials with positive part.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x13);
    for _ in 0..20 {
        let mut p = random_potential(&mut rng, 1, 4, 5);
        if p.iter().all(|(_, v)| *v <= 0.0) {
            p = pot1(&[(0, 1.0), (1, -0.5)]);
        }
        let mut prev = f64::INFINITY;
        for k in 0..24 {
            let delta = 10.0 * 0.4f64.powi(k);
            let lam = lambda_max_ln(&g, &p, Edge::Top, delta.ln()).unwrap();
            // descending z-grid means ascending lambda
            if lam > 1e-12 && prev.is_finite() {
                c.require(lam >= prev, || {
                    format!("lambda not monotone: {lam} < {prev} at delta {delta}")
                });
            }
            prev = lam;
        }
    }

    // Zero test: non-positive potentials have lambda identically zero.
    for _ in 0..10 {
        let p = random_potential(&mut rng, 1, 4, 5);
        let entries: Vec<(Site, f64)> = p.iter().map(|(&x, &v)| (x, -v.abs())).collect();
        let p = LatticePotential::new(1, entries).unwrap();
        for k in 0..10 {
            let delta = 5.0 * 0.25f64.powi(k);
            let lam = lambda_max_ln(&g, &p, Edge::Top, delta.ln()).unwrap();
            c.require(lam == 0.0, || format!("lambda = {lam} != 0 for v <= 0"));
        }
    }

    // Prop: kappa0 > 0 limit lambda/a -> kappa0, rel err < 1e-2 at gap 1e-8.
    let p_pos = pot1(&[(0, 1.0), (1, 1.0)]);
    let lam = lambda_max_ln(&g, &p_pos, Edge::Top, (1e-8f64).ln()).unwrap();
    let a = g.a_ln(Edge::Top, (1e-8f64).ln()).unwrap();
    let rel = (lam / a - 2.0).abs() / 2.0;
    c.require(rel < 1e-2, || format!("lambda/a -> kappa0: rel {rel:.3e} >= 1e-2"));
    c.metric(format!("lambda/a at gap 1e-8: rel dev {rel:.2e}"));

    // Prop: kappa0 = 0 limit lambda^2/a -> kappa1 (= 2), d = 1.
    let p_zero = pot1(&[(0, 1.0), (1, -1.0)]);
    let lam = lambda_max_ln(&g, &p_zero, Edge::Top, (1e-8f64).ln()).unwrap();
    let rel = (lam * lam / a - 2.0).abs() / 2.0;
    c.require(rel < 1e-2, || format!("lambda^2/a -> kappa1 d1: rel {rel:.3e} >= 1e-2"));
    c.metric(format!("lambda^2/a d1 at gap 1e-8: rel dev {rel:.2e}"));

    // d = 2 variant of the threshold probe. The stated form (gap 1e-6,
    // tolerance 5e-2) cannot hold: the deviation is exactly kappa1/(4 a)
    // up to O(delta ln delta), which is 9.5e-2 there. The attainable
    // variant probes the same limit at gap 1e-16.
    let g2 = evaluator(2);
    let p2z = pot2(&[([0, 0], 1.0), ([1, 0], -1.0)]);
    let ln_gap2 = if stated_d2_probe { (1e-6f64).ln() } else { (1e-16f64).ln() };
    let lam2 = lambda_max_ln(&g2, &p2z, Edge::Top, ln_gap2).unwrap();
    let a2 = g2.a_ln(Edge::Top, ln_gap2).unwrap();
    let kappa1_d2 = g2.kappa_top(&p2z).unwrap();
    let rel2 = (lam2 * lam2 / a2 - kappa1_d2).abs() / kappa1_d2;
    c.require(rel2 < 5e-2, || format!("lambda^2/a -> kappa1 d2: rel {rel2:.3e} >= 5e-2"));
    let predicted_dev = kappa1_d2 / (4.0 * a2);
    c.metric(format!(
        "lambda^2/a d2 at ln gap {ln_gap2:.1}: rel dev {rel2:.2e} (exact leading deviation kappa1/(4a) = {predicted_dev:.2e})"
    ));

    // Boundedness: second branch stays bounded while the first diverges.
    let lam_all_coarse = bs_eigenvalues_ln(&g, &p_pos, Edge::Top, (1e-2f64).ln()).unwrap();
    let lam_all_fine = bs_eigenvalues_ln(&g, &p_pos, Edge::Top, (1e-8f64).ln()).unwrap();
    c.require(lam_all_fine[0] > 30.0 * lam_all_coarse[0], || {
        "first branch failed to diverge".into()
    });
    c.require(lam_all_fine[1].abs() < 2.0 * lam_all_coarse[1].abs() + 1.0, || {
        format!(
            "second branch not bounded: {} -> {}",
            lam_all_coarse[1], lam_all_fine[1]
        )
    });

    // Sign-definite trace gap (v >= 0): |Tr b - lambda0| bounded along the
    // ladder, compared against 10x its value at the coarse point.
    let coarse_gap = {
        let m = build_bs_matrix_ln(&g, &p_pos, Edge::Top, (1e-4f64).ln()).unwrap();
        let s = bs_spectrum(&m).unwrap();
        (m.mat.trace() - s.eigenvalues[0]).abs()
    };
    for k in 0..=6 {
        let delta = 1e-2 * 10f64.powi(-(k as i32));
        let m = build_bs_matrix_ln(&g, &p_pos, Edge::Top, delta.ln()).unwrap();
        let s = bs_spectrum(&m).unwrap();
        let gap = (m.mat.trace() - s.eigenvalues[0]).abs();
        c.require(gap <= 10.0 * coarse_gap.max(1e-6), || {
            format!("trace gap {gap:.3e} grows beyond 10x coarse {coarse_gap:.3e}")
        });
    }

    // Rank-one residual laws.
    let mut prev_ratio = f64::INFINITY;
    for delta in [1e-2, 1e-4, 1e-6] {
        let r = rank_one_split(&g, &p_zero, 2.0 + delta).unwrap();
        let ratio = r.q1_norm / g.a_of_z(2.0 + delta).unwrap();
        c.require(ratio < prev_ratio, || "q1/a not decreasing".into());
        prev_ratio = ratio;
    }
    let p2_pos = pot2(&[([0, 0], 1.0), ([1, 0], 1.0)]);
    let q1_coarse = rank_one_split(&g2, &p2_pos, 4.0 + 1e-2).unwrap().q1_norm;
    let q1_fine = rank_one_split(&g2, &p2_pos, 4.0 + 1e-6).unwrap().q1_norm;
    c.require(
        q1_fine < 2.0 * q1_coarse && q1_coarse < 2.0 * q1_fine,
        || format!("d=2 q1 norms differ beyond 2x: {q1_coarse:.3e} vs {q1_fine:.3e}"),
    );
    c.metric(format!("d=2 q1 norms at gaps 1e-2/1e-6: {q1_coarse:.4}/{q1_fine:.4}"));

    finish(13, "eigenvalue-curve property suites", started, c.passed(), c.detail())
}

/// 14. Reproducibility: every CSV-emitting subcommand run twice on the same
/// config produces byte-identical CSV files.
pub fn criterion_14_reproducibility() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checker::new();
    let config_src = r#"{
        "dispersion": {"preset": "laplacian", "dim": 1},
        "potential": [{"x": [0], "v": 1.0}, {"x": [1], "v": -1.0}],
        "gamma": 0.5,
        "mu_grid": {"start": 0.4, "factor": 0.5, "count": 3},
        "oracle": {"l": 500, "boundary": "dirichlet", "margin": 1e-3},
        "z_values": [2.5, 3.0, -1.0],
        "x_values": [[0], [1], [2]]
    }"#;
    let cfg = ExperimentConfig::from_str_source(config_src).unwrap();
    let base = std::env::temp_dir().join(format!("bandedge-accept-{}", std::process::id()));
    let subcommands = ["extrema", "green", "bs-spectrum", "solve", "count", "asymptotics", "bargmann"];
    for sub in subcommands {
        let mut renders = Vec::new();
        for pass in 0..2 {
            let dir = base.join(format!("{sub}-{pass}"));
            let summary = crate::cli::run(sub, &cfg, &dir);
            match summary {
                Ok(s) => {
                    let mut bytes = Vec::new();
                    for f in &s.files {
                        if f.extension().map(|e| e == "csv").unwrap_or(false) {
                            bytes.push(std::fs::read(f).unwrap());
                        }
                    }
                    renders.push(bytes);
                }
                Err(e) => c.require(false, || format!("{sub} failed: {e}")),
            }
        }
        if renders.len() == 2 {
            c.require(renders[0] == renders[1], || {
                format!("{sub}: CSV bytes differ between runs")
            });
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    c.metric(format!("{} subcommands, two runs each, byte-compared", subcommands.len()));
    finish(14, "byte-identical reproducibility", started, c.passed(), c.detail())
}
