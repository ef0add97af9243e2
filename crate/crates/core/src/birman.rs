//! The Birman–Schwinger operator b(z) = s sqrt|v| (z - h0)^{-1} sqrt|v|
//! realized as a finite matrix over the potential support. Since v has finite
//! support the reduction is exact: the only discretization error is the
//! Green-function quadrature. Provides the real spectrum, the principal
//! eigenvalue curve lambda(z), the rank-one decomposition b = a(z) Q + Q1,
//! the trace identities, and the bound-state crossing counts.

use crate::dispersion::Site;
use crate::error::{Error, Result};
use crate::green::{Edge, GreenEvaluator};
use crate::potential::{sign_split, LatticePotential, SignSplit};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Tolerance scale for the realness assertion on the spectrum.
pub const REALNESS_TOL: f64 = 1e-8;

/// Finite Birman–Schwinger matrix at spectral parameter z.
#[derive(Clone, Debug)]
pub struct BSMatrix {
    pub z: f64,
    /// Ordered support of the potential (zero-valued sites dropped).
    pub sites: Vec<Site>,
    /// mat = S K with S = diag(sign v); spectrum real.
    pub mat: DMatrix<f64>,
    /// K = sqrt|v| |(z - h0)^{-1}| sqrt|v|, positive semi-definite off the
    /// band: |b(z)| on both sides.
    pub sym: DMatrix<f64>,
}

/// Eigenvalues of b(z), sorted descending, with the discarded imaginary size.
#[derive(Clone, Debug)]
pub struct BSSpectrum {
    pub z: f64,
    pub eigenvalues: Vec<f64>,
    pub max_imag_residual: f64,
}

/// Rank-one part a(z) Q of b(z) and the norm of the residual Q1.
#[derive(Clone, Debug)]
pub struct RankOneSplit {
    pub q_matrix: DMatrix<f64>,
    pub q1_norm: f64,
}

/// Trace identities of b(z) and |b(z)|.
#[derive(Clone, Copy, Debug)]
pub struct TraceIdentities {
    pub tr_b: f64,
    pub tr_abs_b: f64,
    pub residual_b: f64,
    pub residual_abs_b: f64,
}

fn split_for(g: &GreenEvaluator, pot: &LatticePotential) -> Result<SignSplit> {
    if pot.dim() != g.dim() {
        return Err(Error::Parameter("potential dimension mismatch".into()));
    }
    Ok(sign_split(pot))
}

/// Distinct difference vectors x_i - x_j over the support.
fn difference_table(sites: &[Site]) -> Vec<Site> {
    let mut set: BTreeMap<Site, ()> = BTreeMap::new();
    for &a in sites {
        for &b in sites {
            set.insert([a[0] - b[0], a[1] - b[1]], ());
        }
    }
    set.into_keys().collect()
}

fn assemble(
    split: &SignSplit,
    greens: &BTreeMap<Site, f64>,
    edge: Edge,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = split.sites.len();
    let sign_of_side = if edge == Edge::Top { 1.0 } else { -1.0 };
    let mut mat = DMatrix::zeros(n, n);
    let mut sym = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = [
                split.sites[i][0] - split.sites[j][0],
                split.sites[i][1] - split.sites[j][1],
            ];
            let green = greens[&d];
            let k = split.sqrt_abs[i] * green * split.sqrt_abs[j];
            mat[(i, j)] = split.signs[i] * k;
            // |b(z)| flips the resolvent sign below the band
            sym[(i, j)] = sign_of_side * k;
        }
    }
    (mat, sym)
}

fn greens_table(
    g: &GreenEvaluator,
    sites: &[Site],
    edge: Edge,
    ln_delta: f64,
) -> Result<BTreeMap<Site, f64>> {
    let diffs = difference_table(sites);
    let vals = g.resolvent_batch_ln(edge, &diffs, ln_delta)?;
    Ok(diffs.into_iter().zip(vals).collect())
}

/// Build b(z) at a spectral parameter outside the band.
pub fn build_bs_matrix(
    g: &GreenEvaluator,
    pot: &LatticePotential,
    z: f64,
) -> Result<BSMatrix> {
    let (edge, delta) = if z > g.e_max() {
        (Edge::Top, z - g.e_max())
    } else if z < g.e_min() {
        (Edge::Bottom, g.e_min() - z)
    } else {
        return Err(Error::ZInsideBand { z, e_min: g.e_min(), e_max: g.e_max() });
    };
    build_bs_matrix_ln(g, pot, edge, delta.ln()).map(|mut m| {
        m.z = z;
        m
    })
}

/// Build b at gap exp(ln_delta) from the chosen edge; `z` is reconstructed
/// as well as f64 permits (it may round to the edge itself for tiny gaps).
pub fn build_bs_matrix_ln(
    g: &GreenEvaluator,
    pot: &LatticePotential,
    edge: Edge,
    ln_delta: f64,
) -> Result<BSMatrix> {
    let split = split_for(g, pot)?;
    let greens = greens_table(g, &split.sites, edge, ln_delta)?;
    let (mat, sym) = assemble(&split, &greens, edge);
    let z = match edge {
        Edge::Top => g.e_max() + ln_delta.exp(),
        Edge::Bottom => g.e_min() - ln_delta.exp(),
    };
    Ok(BSMatrix { z, sites: split.sites, mat, sym })
}

/// Real spectrum of the (non-symmetric) matrix, descending. The imaginary
/// parts are asserted small relative to the spectral scale and discarded;
/// a violation signals a construction bug, not an input error.
pub fn bs_spectrum(m: &BSMatrix) -> Result<BSSpectrum> {
    let eig = m.mat.clone().complex_eigenvalues();
    let scale = eig.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let max_imag = eig.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max);
    if max_imag > REALNESS_TOL * (1.0 + scale) {
        return Err(Error::RealnessViolation { max_imag, scale });
    }
    let mut vals: Vec<f64> = eig.iter().map(|c| c.re).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(BSSpectrum { z: m.z, eigenvalues: vals, max_imag_residual: max_imag })
}

/// lambda(z) = sup of the spectrum of b(z), clamped at 0 to match the
/// compact-operator convention (0 always belongs to the spectrum).
pub fn lambda_max(g: &GreenEvaluator, pot: &LatticePotential, z: f64) -> Result<f64> {
    let m = build_bs_matrix(g, pot, z)?;
    let s = bs_spectrum(&m)?;
    Ok(s.eigenvalues.first().copied().unwrap_or(0.0).max(0.0))
}

/// lambda at gap exp(ln_delta) from the chosen edge.
pub fn lambda_max_ln(
    g: &GreenEvaluator,
    pot: &LatticePotential,
    edge: Edge,
    ln_delta: f64,
) -> Result<f64> {
    let m = build_bs_matrix_ln(g, pot, edge, ln_delta)?;
    let s = bs_spectrum(&m)?;
    Ok(s.eigenvalues.first().copied().unwrap_or(0.0).max(0.0))
}

/// Full descending eigenvalue list at gap exp(ln_delta).
pub fn bs_eigenvalues_ln(
    g: &GreenEvaluator,
    pot: &LatticePotential,
    edge: Edge,
    ln_delta: f64,
) -> Result<Vec<f64>> {
    let m = build_bs_matrix_ln(g, pot, edge, ln_delta)?;
    Ok(bs_spectrum(&m)?.eigenvalues)
}

/// Rank-one decomposition b(z) = a(z) Q + Q1(z) at the top edge, with the
/// spectral norm of the residual. Q's unique nonzero eigenvalue is kappa0.
pub fn rank_one_split(
    g: &GreenEvaluator,
    pot: &LatticePotential,
    z: f64,
) -> Result<RankOneSplit> {
    if z <= g.e_max() {
        return Err(Error::Parameter(
            "rank-one split is defined at the top edge (z > e_max); use the \
             mirrored pair for the bottom edge"
                .into(),
        ));
    }
    let split = split_for(g, pot)?;
    let n = split.sites.len();
    let m = build_bs_matrix(g, pot, z)?;
    let a = g.a_of_z(z)?;
    // Lattice transcription of the rank-one momentum kernel: entries
    // s_i sqrt|v_i| sqrt|v_j| e^{i (x_j - x_i) . p_max}, real at snapped edges.
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = [
                split.sites[j][0] - split.sites[i][0],
                split.sites[j][1] - split.sites[i][1],
            ];
            let phase = num_complex::Complex64::from_polar(
                1.0,
                crate::dispersion::site_dot(d, g.extrema().p_max),
            );
            debug_assert!(phase.im.abs() < 1e-6 || !g.coeffs().is_real_symmetric());
            q[(i, j)] = split.signs[i] * split.sqrt_abs[i] * split.sqrt_abs[j] * phase.re;
        }
    }
    let resid = &m.mat - &(q.clone() * a);
    let q1_norm = resid.svd(false, false).singular_values.max();
    Ok(RankOneSplit { q_matrix: q, q1_norm })
}

/// Verify Tr b(z) = a(z) kappa0 and Tr |b(z)| = |a(z)| sum|v| against the
/// quadrature, with a relative tolerance of 1e-9.
pub fn trace_identities(
    m: &BSMatrix,
    g: &GreenEvaluator,
    pot: &LatticePotential,
) -> Result<TraceIdentities> {
    let a = g.a_of_z(m.z)?;
    let tr_b = m.mat.trace();
    let tr_abs_b = m.sym.trace();
    let kappa0 = pot.kappa0();
    let abs_sum = pot.abs_sum();
    let residual_b = (tr_b - a * kappa0).abs();
    let residual_abs_b = (tr_abs_b - a.abs() * abs_sum).abs();
    let tol = 1e-9 * (1.0 + a.abs() * abs_sum);
    if residual_b > tol || residual_abs_b > tol {
        return Err(Error::IdentityViolation {
            residual: residual_b.max(residual_abs_b),
            tol,
        });
    }
    Ok(TraceIdentities { tr_b, tr_abs_b, residual_b, residual_abs_b })
}

/// Number of Birman–Schwinger branches at or past the coupling threshold:
/// #{k : mu * lambda_k(z) >= 1} over the positive eigenvalues of b(z). By the
/// Birman–Schwinger principle this counts bound states beyond z on either
/// side of the band (the spectrum of b(z) itself carries the bottom-edge
/// count as well, since b is invariant under the (-e, -v, -z) mirror).
pub fn count_bs_crossings(
    g: &GreenEvaluator,
    pot: &LatticePotential,
    mu: f64,
    z: f64,
) -> Result<usize> {
    if !(mu > 0.0) {
        return Err(Error::Parameter(format!("mu = {mu} must be positive")));
    }
    let m = build_bs_matrix(g, pot, z)?;
    let s = bs_spectrum(&m)?;
    Ok(s.eigenvalues.iter().filter(|l| **l > 0.0 && mu * **l >= 1.0).count())
}

/// Crossing count at gap exp(ln_delta) from the chosen edge.
pub fn count_bs_crossings_ln(
    g: &GreenEvaluator,
    pot: &LatticePotential,
    mu: f64,
    edge: Edge,
    ln_delta: f64,
) -> Result<usize> {
    if !(mu > 0.0) {
        return Err(Error::Parameter(format!("mu = {mu} must be positive")));
    }
    let vals = bs_eigenvalues_ln(g, pot, edge, ln_delta)?;
    Ok(vals.iter().filter(|l| **l > 0.0 && mu * **l >= 1.0).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::GeneratingCoefficients;
    use crate::green::QuadratureSpec;
    use approx::assert_relative_eq;

    fn eval_1d() -> GreenEvaluator {
        GreenEvaluator::new(
            GeneratingCoefficients::laplacian(1).unwrap(),
            QuadratureSpec::default_for_dim(1),
        )
        .unwrap()
    }

    fn pot(entries: &[(i64, f64)]) -> LatticePotential {
        LatticePotential::new(1, entries.iter().map(|&(x, v)| ([x, 0], v))).unwrap()
    }

    #[test]
    fn single_site_matrix_is_a_of_z() {
        let g = eval_1d();
        let m = build_bs_matrix(&g, &pot(&[(0, 1.0)]), 3.0).unwrap();
        assert_eq!(m.mat.nrows(), 1);
        assert_relative_eq!(m.mat[(0, 0)], 0.5773502691896258, max_relative = 1e-10);
    }

    #[test]
    fn two_site_matrix_entries() {
        let g = eval_1d();
        let m = build_bs_matrix(&g, &pot(&[(0, 1.0), (1, -1.0)]), 3.0).unwrap();
        let g0 = 0.5773502691896258;
        let g1 = -0.15470053837925146;
        assert_relative_eq!(m.mat[(0, 0)], g0, max_relative = 1e-10);
        assert_relative_eq!(m.mat[(0, 1)], g1, max_relative = 1e-10);
        assert_relative_eq!(m.mat[(1, 0)], -g1, max_relative = 1e-10);
        assert_relative_eq!(m.mat[(1, 1)], -g0, max_relative = 1e-10);
    }

    #[test]
    fn in_band_rejected() {
        let g = eval_1d();
        assert!(matches!(
            build_bs_matrix(&g, &pot(&[(0, 1.0)]), 1.0),
            Err(Error::ZInsideBand { .. })
        ));
    }

    #[test]
    fn two_site_spectrum_plus_minus_pair() {
        let g = eval_1d();
        let m = build_bs_matrix(&g, &pot(&[(0, 1.0), (1, -1.0)]), 3.0).unwrap();
        let s = bs_spectrum(&m).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert_relative_eq!(s.eigenvalues[0], 0.5562383273008999, max_relative = 1e-9);
        assert_relative_eq!(s.eigenvalues[1], -0.5562383273008999, max_relative = 1e-9);
        assert!(s.max_imag_residual < 1e-10);
    }

    #[test]
    fn nonpositive_potential_has_no_positive_eigenvalues() {
        let g = eval_1d();
        for z in [2.1, 2.5, 4.0] {
            let m = build_bs_matrix(&g, &pot(&[(0, -1.0), (2, -0.5)]), z).unwrap();
            let s = bs_spectrum(&m).unwrap();
            assert!(s.eigenvalues.iter().all(|l| *l <= 1e-14));
        }
    }

    #[test]
    fn lambda_clamps_at_zero() {
        let g = eval_1d();
        assert_relative_eq!(
            lambda_max(&g, &pot(&[(0, 1.0)]), 3.0).unwrap(),
            0.5773502691896258,
            max_relative = 1e-10
        );
        assert_eq!(lambda_max(&g, &pot(&[(0, -1.0)]), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn rank_one_split_single_site_vanishes() {
        let g = eval_1d();
        for z in [2.01, 3.0, 7.0] {
            let r = rank_one_split(&g, &pot(&[(0, 1.0)]), z).unwrap();
            assert_eq!(r.q_matrix[(0, 0)], 1.0);
            assert!(r.q1_norm < 1e-12);
        }
    }

    #[test]
    fn rank_one_residual_small_relative_to_a_near_edge() {
        let g = eval_1d();
        let p = pot(&[(0, 1.0), (1, -1.0)]);
        let mut prev = f64::INFINITY;
        for delta in [1e-2, 1e-4, 1e-6] {
            let z = 2.0 + delta;
            let r = rank_one_split(&g, &p, z).unwrap();
            let ratio = r.q1_norm / g.a_of_z(z).unwrap();
            assert!(ratio < prev);
            prev = ratio;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn trace_identities_examples() {
        let g = eval_1d();
        let p = pot(&[(0, 1.0), (1, -1.0)]);
        let m = build_bs_matrix(&g, &p, 3.0).unwrap();
        let t = trace_identities(&m, &g, &p).unwrap();
        assert!(t.tr_b.abs() < 1e-10);
        assert_relative_eq!(t.tr_abs_b, 2.0 / 3.0f64.sqrt(), max_relative = 1e-9);

        let p1 = pot(&[(0, 1.0)]);
        let m1 = build_bs_matrix(&g, &p1, 3.0).unwrap();
        let t1 = trace_identities(&m1, &g, &p1).unwrap();
        assert_relative_eq!(t1.tr_b, 0.5773502691896258, max_relative = 1e-9);
        assert_relative_eq!(t1.tr_abs_b, 0.5773502691896258, max_relative = 1e-9);

        let pm = pot(&[(0, -1.0)]);
        let mm = build_bs_matrix(&g, &pm, 3.0).unwrap();
        let tm = trace_identities(&mm, &g, &pm).unwrap();
        assert_relative_eq!(tm.tr_b, -0.5773502691896258, max_relative = 1e-9);
        assert_relative_eq!(tm.tr_abs_b, 0.5773502691896258, max_relative = 1e-9);
    }

    #[test]
    fn crossing_counts() {
        let g = eval_1d();
        let p = pot(&[(0, 1.0)]);
        assert_eq!(count_bs_crossings(&g, &p, 1.0, 3.0).unwrap(), 0);
        assert_eq!(count_bs_crossings(&g, &p, 2.0, 3.0).unwrap(), 1);
        let pm = pot(&[(0, -1.0)]);
        for mu in [0.5, 1.0, 4.0] {
            assert_eq!(count_bs_crossings(&g, &pm, mu, 2.5).unwrap(), 0);
        }
        // bottom edge: single negative site binds below the band
        assert_eq!(count_bs_crossings(&g, &pm, 1.0, -0.41).unwrap(), 1);
        assert_eq!(count_bs_crossings(&g, &pm, 1.0, -0.5).unwrap(), 0);
    }

    #[test]
    fn momentum_space_kernel_spot_check() {
        // Discretize the momentum kernel
        //   B(p,q;z) = sum_{x,y} s_x sqrt|v_x| e^{ipx} G(x - y; z) e^{-iqy} sqrt|v_y|
        // on an n-point grid with weight 1/n; for n beyond the support size
        // its nonzero eigenvalues coincide with the lattice matrix exactly up
        // to quadrature error in G.
        use nalgebra::DMatrix as Mat;
        use num_complex::Complex64;
        let g = eval_1d();
        let p = pot(&[(0, 1.0), (1, -1.0)]);
        let z = 2.7;
        let m = build_bs_matrix(&g, &p, z).unwrap();
        let lattice = bs_spectrum(&m).unwrap();

        let n = 32usize;
        let split = crate::potential::sign_split(&p);
        let mut kernel = Mat::<Complex64>::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let pa = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * a as f64 / n as f64;
                let qb = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * b as f64 / n as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &x) in split.sites.iter().enumerate() {
                    for (j, &y) in split.sites.iter().enumerate() {
                        let green = g.green_x([x[0] - y[0], 0], z).unwrap();
                        let ph = Complex64::from_polar(1.0, pa * x[0] as f64 - qb * y[0] as f64);
                        acc += split.signs[i] * split.sqrt_abs[i] * split.sqrt_abs[j] * green * ph;
                    }
                }
                kernel[(a, b)] = acc / n as f64;
            }
        }
        // Real 2n x 2n embedding [[Re, -Im], [Im, Re]]: its spectrum is the
        // kernel's spectrum together with the complex conjugates.
        let mut emb = Mat::<f64>::zeros(2 * n, 2 * n);
        for a in 0..n {
            for b in 0..n {
                emb[(a, b)] = kernel[(a, b)].re;
                emb[(a + n, b + n)] = kernel[(a, b)].re;
                emb[(a, b + n)] = -kernel[(a, b)].im;
                emb[(a + n, b)] = kernel[(a, b)].im;
            }
        }
        let eig = emb.complex_eigenvalues();
        let mut nonzero: Vec<f64> = eig
            .iter()
            .filter(|c| c.norm() > 1e-10)
            .map(|c| {
                assert!(c.im.abs() < 1e-8);
                c.re
            })
            .collect();
        nonzero.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // each lattice eigenvalue shows up twice in the embedding
        assert_eq!(nonzero.len(), 4);
        for (got, want) in [nonzero[0], nonzero[2]].iter().zip(&lattice.eigenvalues) {
            assert_relative_eq!(*got, *want, max_relative = 1e-8);
        }
    }
}
