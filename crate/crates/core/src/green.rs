//! Torus integrals of the free resolvent: a(z) = int dp / (z - e(p)) with
//! normalized Haar measure, lattice Green functions G(x; z), the threshold
//! constants kappa_1/kappa_2, and the parametric integrals T_alpha(omega).
//!
//! Everything near a band edge is evaluated through an edge chart that
//! computes the distance-to-edge h(q) = |e_edge - e(p_edge + q)| as a sum of
//! individually small trigonometric terms, so integrands remain accurate for
//! gaps as small as 1e-22 (d = 1). In d = 2 the gap can be far below the f64
//! underflow threshold; there an asymptotic edge model a ~ -piJ0 ln(delta) + b
//! calibrated against direct quadrature takes over, and all solvers carry
//! ln(gap) rather than the gap itself.

use crate::dispersion::{
    find_extrema, site_dot, wrap_angle, ExtremaReport, GeneratingCoefficients, Point, Site,
};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, smoothstep7};
use crate::potential::LatticePotential;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// Band edge selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Top,
    Bottom,
}

/// Distance from the band below which the peak-splitting path activates.
pub const NEAR_EDGE_THRESHOLD: f64 = 1e-3;
/// In d = 2, below this gap the calibrated edge model replaces quadrature.
pub const D2_MODEL_LN_THRESHOLD: f64 = -18.420680743952367; // ln(1e-8)
/// Smallest gap the d = 1 direct quadrature accepts.
pub const D1_MIN_LN_DELTA: f64 = -50.656872045869005; // ln(1e-22)

/// Quadrature controls for the torus integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Trapezoid points per axis at the coarsest level.
    pub base_n: usize,
    /// Maximum number of grid doublings.
    pub max_refine: usize,
    /// Absolute tolerance target per integral.
    pub abs_tol: f64,
    /// Enables the near-edge peak splitting; without it only the plain
    /// trapezoid is used and accuracy degrades close to the band.
    pub singularity_subtraction: bool,
}

impl QuadratureSpec {
    pub fn new(base_n: usize, max_refine: usize, abs_tol: f64, singularity_subtraction: bool) -> Result<Self> {
        if base_n < 64 {
            return Err(Error::Parameter(format!("base_n = {base_n} < 64")));
        }
        if !(abs_tol > 0.0) {
            return Err(Error::Parameter(format!("abs_tol = {abs_tol} must be positive")));
        }
        if max_refine > 14 {
            return Err(Error::Parameter(format!("max_refine = {max_refine} > 14")));
        }
        Ok(Self { base_n, max_refine, abs_tol, singularity_subtraction })
    }

    pub fn default_for_dim(dim: usize) -> Self {
        Self {
            base_n: if dim == 1 { 256 } else { 128 },
            max_refine: 6,
            abs_tol: 1e-10,
            singularity_subtraction: true,
        }
    }
}

/// Integration weight in edge coordinates q = p - p_edge.
#[derive(Clone, Copy)]
enum Weight<'a> {
    One,
    Cos(Site),
    /// |v(q)|^2 for a zero-mass potential, via the cancellation-free symbol.
    VSquared(&'a LatticePotential),
}

impl Weight<'_> {
    fn eval(&self, q: Point) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Cos(x) => site_dot(*x, q).cos(),
            Weight::VSquared(p) => p.symbol_minus_mass(q).norm_sqr(),
        }
    }
}

/// Edge-local data: the distance to the edge as a cancellation-free
/// trigonometric sum, the Hessian of that distance at the extremum, and the
/// quadratic coefficients used by the peak quadrature.
#[derive(Clone, Debug)]
struct EdgeChart {
    /// h(q) = sum_y [ a_y * 2 sin^2(y.q/2) + b_y * sin(y.q) ] >= 0.
    terms: Vec<(Site, f64, f64)>,
    /// Hessian of h at q = 0, positive definite.
    hess: [[f64; 2]; 2],
    /// All sine coefficients vanish: h is even in q.
    symmetric: bool,
    /// Center components lie exactly on {0, pi} after snapping.
    snapped: bool,
    /// Parity masks: phase(x) = (-1)^(sum over pi-components of x).
    pi_mask: [bool; 2],
    r0: f64,
    r1: f64,
}

impl EdgeChart {
    fn build(coeffs: &GeneratingCoefficients, extrema: &ExtremaReport, edge: Edge) -> Self {
        let dim = coeffs.dim();
        let (raw_center, sign) = match edge {
            Edge::Top => (extrema.p_max, 1.0),
            Edge::Bottom => (extrema.p_min, -1.0),
        };
        // Snap to the exact symmetry points when within tolerance; for
        // real symmetric coefficient tables the extremum is exactly there.
        let mut center = raw_center;
        let mut snapped = true;
        let mut pi_mask = [false; 2];
        for i in 0..dim {
            let w = wrap_angle(center[i]);
            if w.abs() < 1e-7 {
                center[i] = 0.0;
            } else if (w.abs() - PI).abs() < 1e-7 {
                center[i] = PI;
                pi_mask[i] = true;
            } else {
                snapped = false;
            }
        }
        let mut terms = Vec::new();
        for (&y, &v) in coeffs.iter() {
            if y == [0, 0] {
                continue;
            }
            let phase = num_complex::Complex64::from_polar(1.0, site_dot(y, center));
            let c = v * phase;
            // Top edge: h = sum c_y (1 - e^{iyq}); bottom edge the negative.
            let a = sign * c.re;
            let b = sign * c.im;
            terms.push((y, a, b));
        }
        // Hessian of h = -sign * Hessian of e at the center.
        let he = coeffs.hessian(center);
        let hess = [
            [-sign * he[0][0], -sign * he[0][1]],
            [-sign * he[1][0], -sign * he[1][1]],
        ];
        let symmetric = terms.iter().all(|(_, _, b)| b.abs() < 1e-13);
        let r0 = 1.0;
        EdgeChart {
            terms,
            hess,
            symmetric,
            snapped,
            pi_mask,
            r0,
            r1: 0.5 * r0,
        }
    }

    /// Distance to the edge, exact trigonometric form, >= 0.
    fn h(&self, q: Point) -> f64 {
        let mut acc = 0.0;
        for &(y, a, b) in &self.terms {
            let half = 0.5 * site_dot(y, q);
            let s = half.sin();
            acc += a * 2.0 * s * s;
            if b != 0.0 {
                acc += b * (2.0 * half).sin();
            }
        }
        acc
    }

    /// Quadratic coefficient of h along the unit direction d.
    fn c_along(&self, d: Point) -> f64 {
        0.5 * (d[0] * (self.hess[0][0] * d[0] + self.hess[0][1] * d[1])
            + d[1] * (self.hess[1][0] * d[0] + self.hess[1][1] * d[1]))
    }

    /// Exact phase Re(e^{-i x.center}) = +-1 for snapped centers.
    fn phase(&self, x: Site) -> f64 {
        let mut parity = 0i64;
        if self.pi_mask[0] {
            parity += x[0];
        }
        if self.pi_mask[1] {
            parity += x[1];
        }
        if parity.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Smooth cutoff: identically 1 on [0, r1], C^7 descent to 0 at r0.
    fn cutoff(&self, r: f64) -> f64 {
        if r <= self.r1 {
            1.0
        } else if r >= self.r0 {
            0.0
        } else {
            1.0 - smoothstep7((r - self.r1) / (self.r0 - self.r1))
        }
    }
}

/// Calibrated d = 2 edge model: a(delta) = -pi_j0 ln(delta) + b + o(1) and
/// cos-weighted integrals differing from a by a per-site constant.
struct EdgeModel {
    pi_j0: f64,
    b_const: f64,
    ladder_ln: Vec<f64>,
    d0: Mutex<BTreeMap<Site, f64>>,
}

/// Quadrature engine bound to one dispersion with certified extrema.
pub struct GreenEvaluator {
    coeffs: GeneratingCoefficients,
    extrema: ExtremaReport,
    quad: QuadratureSpec,
    charts: [EdgeChart; 2],
    real_symmetric: bool,
    models: [OnceLock<EdgeModel>; 2],
}

impl GreenEvaluator {
    /// Certify extrema on a 256-point-per-axis scan and build the evaluator.
    pub fn new(coeffs: GeneratingCoefficients, quad: QuadratureSpec) -> Result<Self> {
        let extrema = find_extrema(&coeffs, 256)?;
        Self::with_extrema(coeffs, extrema, quad)
    }

    pub fn with_extrema(
        coeffs: GeneratingCoefficients,
        extrema: ExtremaReport,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        if !extrema.certified() {
            return Err(Error::UncertifiedExtrema {
                nondegenerate: extrema.nondegenerate,
                unique: extrema.unique,
            });
        }
        let top = EdgeChart::build(&coeffs, &extrema, Edge::Top);
        let bottom = EdgeChart::build(&coeffs, &extrema, Edge::Bottom);
        let real_symmetric = coeffs.is_real_symmetric();
        Ok(Self {
            coeffs,
            extrema,
            quad,
            charts: [top, bottom],
            real_symmetric,
            models: [OnceLock::new(), OnceLock::new()],
        })
    }

    pub fn coeffs(&self) -> &GeneratingCoefficients {
        &self.coeffs
    }

    pub fn extrema(&self) -> &ExtremaReport {
        &self.extrema
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn e_min(&self) -> f64 {
        self.extrema.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.extrema.e_max
    }

    /// Evaluator for the mirrored pair (-e): band flipped, edges swapped.
    pub fn mirrored(&self) -> Result<GreenEvaluator> {
        GreenEvaluator::with_extrema(self.coeffs.negated(), self.extrema.mirrored(), self.quad)
    }

    fn chart(&self, edge: Edge) -> &EdgeChart {
        match edge {
            Edge::Top => &self.charts[0],
            Edge::Bottom => &self.charts[1],
        }
    }

    fn check_outside(&self, z: f64) -> Result<(Edge, f64)> {
        if z > self.e_max() {
            Ok((Edge::Top, z - self.e_max()))
        } else if z < self.e_min() {
            Ok((Edge::Bottom, self.e_min() - z))
        } else {
            Err(Error::ZInsideBand { z, e_min: self.e_min(), e_max: self.e_max() })
        }
    }

    /// a(z) with the sign dictated by the side of the band.
    pub fn a_of_z(&self, z: f64) -> Result<f64> {
        self.a_of_z_with_error(z).map(|(v, _)| v)
    }

    pub fn a_of_z_with_error(&self, z: f64) -> Result<(f64, f64)> {
        let (edge, delta) = self.check_outside(z)?;
        let (val, err) = self.edge_integral_ln(edge, delta.ln(), Weight::One)?;
        let sign = if edge == Edge::Top { 1.0 } else { -1.0 };
        Ok((sign * val, err))
    }

    /// Positive edge integral int dq / (delta + h_edge(q)) parameterized by
    /// ln(delta); equals |a(z)| at z = e_max + delta resp. e_min - delta.
    pub fn a_ln(&self, edge: Edge, ln_delta: f64) -> Result<f64> {
        self.edge_integral_ln(edge, ln_delta, Weight::One).map(|(v, _)| v)
    }

    /// Lattice Green function G(x; z) = int e^{-i x.p} / (z - e(p)) dp.
    /// Real for real symmetric coefficient tables.
    pub fn green_x(&self, x: Site, z: f64) -> Result<f64> {
        self.green_x_with_error(x, z).map(|(v, _)| v)
    }

    pub fn green_x_with_error(&self, x: Site, z: f64) -> Result<(f64, f64)> {
        let (edge, delta) = self.check_outside(z)?;
        let (val, err) = self.resolvent_ln_with_error(edge, x, delta.ln())?;
        Ok((val, err))
    }

    /// G(x; z) at gap exp(ln_delta) from the given edge, including the edge
    /// sign and phase. Requires a real symmetric dispersion.
    pub fn resolvent_ln(&self, edge: Edge, x: Site, ln_delta: f64) -> Result<f64> {
        self.resolvent_ln_with_error(edge, x, ln_delta).map(|(v, _)| v)
    }

    fn require_symmetric(&self, edge: Edge) -> Result<()> {
        let chart = self.chart(edge);
        if !(self.real_symmetric && chart.symmetric && chart.snapped) {
            return Err(Error::Parameter(
                "lattice Green function requires a real symmetric coefficient table \
                 (even symbol with extrema at symmetry points)"
                    .into(),
            ));
        }
        Ok(())
    }

    fn resolvent_ln_with_error(&self, edge: Edge, x: Site, ln_delta: f64) -> Result<(f64, f64)> {
        self.require_symmetric(edge)?;
        let chart = self.chart(edge);
        let (ic, err) = self.edge_integral_ln(edge, ln_delta, Weight::Cos(x))?;
        let sign = if edge == Edge::Top { 1.0 } else { -1.0 };
        Ok((sign * chart.phase(x) * ic, err))
    }

    /// Batched resolvent values sharing the integration grids: one entry per
    /// requested difference vector. Far cheaper than separate calls when
    /// assembling Birman–Schwinger matrices.
    pub fn resolvent_batch_ln(
        &self,
        edge: Edge,
        diffs: &[Site],
        ln_delta: f64,
    ) -> Result<Vec<f64>> {
        self.require_symmetric(edge)?;
        let chart = self.chart(edge);
        let weights: Vec<Weight> = diffs.iter().map(|&x| Weight::Cos(x)).collect();
        let vals = self.edge_integral_batch_ln(edge, ln_delta, &weights)?;
        let sign = if edge == Edge::Top { 1.0 } else { -1.0 };
        Ok(diffs
            .iter()
            .zip(vals)
            .map(|(&x, (v, _))| sign * chart.phase(x) * v)
            .collect())
    }

    /// kappa_1 = int |v(p - p_max)|^2 / (e_max - e(p)) dp, finite iff the
    /// potential has zero total mass.
    pub fn kappa_top(&self, pot: &LatticePotential) -> Result<f64> {
        self.kappa_edge(Edge::Top, pot)
    }

    /// kappa_2, the band-bottom mirror of kappa_top; computed through the
    /// mirrored pair (-e, -v) so both edges share one code path.
    pub fn kappa_bottom(&self, pot: &LatticePotential) -> Result<f64> {
        self.mirrored()?.kappa_edge(Edge::Top, &pot.negated())
    }

    fn kappa_edge(&self, edge: Edge, pot: &LatticePotential) -> Result<f64> {
        if pot.dim() != self.dim() {
            return Err(Error::Parameter("potential dimension mismatch".into()));
        }
        let kappa0 = pot.kappa0();
        if kappa0.abs() > 1e-12 * (1.0 + pot.abs_sum()) {
            return Err(Error::KappaDiverges { kappa0 });
        }
        let (val, _) = self.edge_integral_batch_raw(edge, 0.0, &[Weight::VSquared(pot)])?[0];
        Ok(val)
    }

    // ---- core integration ----------------------------------------------

    fn edge_integral_ln(&self, edge: Edge, ln_delta: f64, w: Weight) -> Result<(f64, f64)> {
        Ok(self.edge_integral_batch_ln(edge, ln_delta, &[w])?[0])
    }

    fn edge_integral_batch_ln(
        &self,
        edge: Edge,
        ln_delta: f64,
        weights: &[Weight],
    ) -> Result<Vec<(f64, f64)>> {
        if !ln_delta.is_finite() {
            return Err(Error::Parameter(format!("ln_delta = {ln_delta} not finite")));
        }
        if self.dim() == 2 && ln_delta < D2_MODEL_LN_THRESHOLD {
            return self.model_values(edge, ln_delta, weights);
        }
        if self.dim() == 1 && ln_delta < D1_MIN_LN_DELTA {
            return Err(Error::Parameter(format!(
                "gap exp({ln_delta:.3}) below the d=1 quadrature floor"
            )));
        }
        let delta = ln_delta.exp();
        self.edge_integral_batch_raw(edge, delta, weights)
    }

    /// Direct quadrature of int W(q) / (delta + h(q)) dq for every weight.
    /// delta = 0 is allowed only for weights vanishing at q = 0 (kappa).
    fn edge_integral_batch_raw(
        &self,
        edge: Edge,
        delta: f64,
        weights: &[Weight],
    ) -> Result<Vec<(f64, f64)>> {
        let chart = self.chart(edge);
        let split = self.quad.singularity_subtraction && delta < NEAR_EDGE_THRESHOLD;
        if !split {
            return self.trapezoid_batch(chart, delta, weights, 1.0);
        }
        if !chart.snapped && delta < 1e-18 {
            return Err(Error::Parameter(
                "gap too small for a non-symmetric edge chart".into(),
            ));
        }
        // Smooth remainder: cutoff support excluded, uniformly resolvable.
        let smooth = self.trapezoid_batch(chart, delta, weights, -1.0)?;
        // Peak: polar quadrature of the cutoff-weighted integrand.
        let peak = self.peak_batch(chart, delta, weights)?;
        Ok(smooth
            .into_iter()
            .zip(peak)
            .map(|((s, se), (p, pe))| (s + p, se + pe))
            .collect())
    }

    /// Adaptive tensor trapezoid in edge coordinates. `cutoff_sign`:
    /// +1 integrates W/(delta+h) plainly, -1 multiplies by (1 - cutoff).
    fn trapezoid_batch(
        &self,
        chart: &EdgeChart,
        delta: f64,
        weights: &[Weight],
        cutoff_sign: f64,
    ) -> Result<Vec<(f64, f64)>> {
        let tol = 0.5 * self.quad.abs_tol;
        let mut n = self.quad.base_n;
        let mut prev = self.trapezoid_level(chart, delta, weights, cutoff_sign, n);
        let mut diff = f64::INFINITY;
        for _ in 0..self.quad.max_refine.max(1) {
            n *= 2;
            let cur = self.trapezoid_level(chart, delta, weights, cutoff_sign, n);
            diff = cur
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            prev = cur;
            if diff <= tol {
                return Ok(prev.into_iter().map(|v| (v, diff)).collect());
            }
        }
        Err(Error::Accuracy { best: prev[0], est_error: diff })
    }

    fn trapezoid_level(
        &self,
        chart: &EdgeChart,
        delta: f64,
        weights: &[Weight],
        cutoff_sign: f64,
        n: usize,
    ) -> Vec<f64> {
        let dim = self.dim();
        let mut acc = vec![0.0f64; weights.len()];
        let step = 2.0 * PI / n as f64;
        if dim == 1 {
            for i in 0..n {
                let q = [-PI + step * i as f64, 0.0];
                self.accumulate_node(chart, delta, weights, cutoff_sign, q, &mut acc);
            }
            let w = 1.0 / n as f64;
            acc.iter_mut().for_each(|v| *v *= w);
        } else {
            for i in 0..n {
                let qa = -PI + step * i as f64;
                for j in 0..n {
                    let q = [qa, -PI + step * j as f64];
                    self.accumulate_node(chart, delta, weights, cutoff_sign, q, &mut acc);
                }
            }
            let w = 1.0 / (n as f64 * n as f64);
            acc.iter_mut().for_each(|v| *v *= w);
        }
        acc
    }

    #[inline]
    fn accumulate_node(
        &self,
        chart: &EdgeChart,
        delta: f64,
        weights: &[Weight],
        cutoff_sign: f64,
        q: Point,
        acc: &mut [f64],
    ) {
        let h = chart.h(q);
        let factor = if cutoff_sign < 0.0 {
            let r = (q[0] * q[0] + q[1] * q[1]).sqrt();
            1.0 - chart.cutoff(r)
        } else {
            1.0
        };
        if factor == 0.0 {
            return;
        }
        let denom = delta + h;
        for (k, w) in weights.iter().enumerate() {
            let num = factor * w.eval(q);
            if num != 0.0 {
                acc[k] += num / denom;
            }
        }
    }

    /// Peak contribution in polar coordinates around the edge point, with
    /// geometric radial panels and a tangent substitution on the innermost
    /// core so the quadratic peak is resolved at any positive gap.
    fn peak_batch(
        &self,
        chart: &EdgeChart,
        delta: f64,
        weights: &[Weight],
    ) -> Result<Vec<(f64, f64)>> {
        let dim = self.dim();
        if dim == 1 {
            let mut vals = vec![(0.0, 0.0); weights.len()];
            for dir in [[1.0, 0.0], [-1.0, 0.0]] {
                let part = self.radial_batch(chart, delta, weights, dir)?;
                for (v, p) in vals.iter_mut().zip(part) {
                    v.0 += p.0 / (2.0 * PI);
                    v.1 += p.1 / (2.0 * PI);
                }
            }
            Ok(vals)
        } else {
            // angular trapezoid with doubling
            let tol = 0.5 * self.quad.abs_tol;
            let mut n_theta = 32usize;
            let mut prev: Option<Vec<(f64, f64)>> = None;
            loop {
                let mut acc = vec![(0.0, 0.0); weights.len()];
                for j in 0..n_theta {
                    let th = 2.0 * PI * j as f64 / n_theta as f64;
                    let dir = [th.cos(), th.sin()];
                    let part = self.radial_batch(chart, delta, weights, dir)?;
                    for (a, p) in acc.iter_mut().zip(part) {
                        a.0 += p.0;
                        a.1 += p.1;
                    }
                }
                let norm = 2.0 * PI / n_theta as f64 / (4.0 * PI * PI);
                let cur: Vec<(f64, f64)> =
                    acc.into_iter().map(|(v, e)| (v * norm, e * norm)).collect();
                if let Some(p) = &prev {
                    let diff = cur
                        .iter()
                        .zip(p)
                        .map(|(a, b)| (a.0 - b.0).abs())
                        .fold(0.0f64, f64::max);
                    if diff <= tol || n_theta >= 1024 {
                        if diff <= tol {
                            return Ok(cur.into_iter().map(|(v, e)| (v, e + diff)).collect());
                        }
                        return Err(Error::Accuracy { best: cur[0].0, est_error: diff });
                    }
                }
                prev = Some(cur);
                n_theta *= 2;
            }
        }
    }

    /// Radial integral int_0^{r0} r^{d-1} cutoff(r) W(r d) / (delta + h(r d)) dr
    /// along one direction, with a GL16/GL32 panel error estimate.
    fn radial_batch(
        &self,
        chart: &EdgeChart,
        delta: f64,
        weights: &[Weight],
        dir: Point,
    ) -> Result<Vec<(f64, f64)>> {
        let c = chart.c_along(dir);
        if !(c > 0.0) {
            return Err(Error::Parameter("non-positive edge curvature".into()));
        }

        // Panel boundaries descend from r0 through the cutoff junctions and
        // halve until the quadratic core takes over.
        let r_core = if delta > 0.0 {
            (4.0 * (delta / c).sqrt()).min(chart.r1)
        } else {
            chart.r1 * 0.5f64.powi(14)
        };
        let mut bounds = vec![chart.r0, 0.5 * (chart.r0 + chart.r1), chart.r1];
        let mut b = chart.r1;
        while b > 2.0 * r_core && bounds.len() < 96 {
            b *= 0.5;
            bounds.push(b);
        }
        let core_top = *bounds.last().unwrap();

        let mut vals = vec![(0.0, 0.0); weights.len()];
        for win in bounds.windows(2) {
            let (hi, lo) = (win[0], win[1]);
            let g16 = self.panel_gl(chart, delta, weights, dir, lo, hi, 16);
            let g32 = self.panel_gl(chart, delta, weights, dir, lo, hi, 32);
            for k in 0..weights.len() {
                vals[k].0 += g32[k];
                vals[k].1 += (g32[k] - g16[k]).abs();
            }
        }

        // Innermost core.
        if delta > 0.0 {
            let s = (delta / c).sqrt();
            let phi_max = (core_top / s).atan();
            let (nodes, wts) = gauss_legendre(32);
            let mid = 0.5 * phi_max;
            let half = 0.5 * phi_max;
            let mut acc = vec![0.0; weights.len()];
            for (xn, wq) in nodes.iter().zip(wts) {
                let phi = mid + half * xn;
                let (sin_phi, cos_phi) = phi.sin_cos();
                let r = s * (sin_phi / cos_phi);
                let q = [r * dir[0], r * dir[1]];
                let rho = if r > 0.0 { chart.h(q) / (c * r * r) } else { 1.0 };
                let denom_phi = cos_phi * cos_phi + rho * sin_phi * sin_phi;
                let cut = chart.cutoff(r);
                let base = if self.dim() == 1 {
                    1.0 / (delta * c).sqrt()
                } else {
                    (sin_phi / cos_phi) / c
                };
                for (k, w) in weights.iter().enumerate() {
                    let num = cut * w.eval(q);
                    if num != 0.0 {
                        acc[k] += wq * num * base / denom_phi;
                    }
                }
            }
            for k in 0..weights.len() {
                vals[k].0 += acc[k] * half;
            }
        } else {
            // delta = 0: weights vanish at the origin quadratically; plain GL
            // on [0, core_top] with the cancellation-free ratio.
            let g = self.panel_gl(chart, 0.0, weights, dir, 0.0, core_top, 32);
            for k in 0..weights.len() {
                vals[k].0 += g[k];
            }
        }
        Ok(vals)
    }

    fn panel_gl(
        &self,
        chart: &EdgeChart,
        delta: f64,
        weights: &[Weight],
        dir: Point,
        lo: f64,
        hi: f64,
        order: usize,
    ) -> Vec<f64> {
        let dim = self.dim();
        let (nodes, wts) = gauss_legendre(order);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut acc = vec![0.0; weights.len()];
        for (x, w) in nodes.iter().zip(wts) {
            let r = mid + half * x;
            let q = [r * dir[0], r * dir[1]];
            let h = chart.h(q);
            let cut = chart.cutoff(r);
            let jac = if dim == 1 { 1.0 } else { r };
            let denom = delta + h;
            for (k, wt) in weights.iter().enumerate() {
                let num = cut * jac * wt.eval(q);
                if num != 0.0 {
                    acc[k] += w * num / denom;
                }
            }
        }
        acc.iter().map(|a| a * half).collect()
    }

    // ---- d = 2 edge model ------------------------------------------------

    fn model(&self, edge: Edge) -> Result<&EdgeModel> {
        let slot = match edge {
            Edge::Top => &self.models[0],
            Edge::Bottom => &self.models[1],
        };
        if let Some(m) = slot.get() {
            return Ok(m);
        }
        let ladder_ln: Vec<f64> = (0..6).map(|j| (1e-6 * 0.25f64.powi(j)).ln()).collect();
        let mut a_vals = Vec::with_capacity(ladder_ln.len());
        for &ld in &ladder_ln {
            let (v, _) = self.edge_integral_batch_raw(edge, ld.exp(), &[Weight::One])?[0];
            a_vals.push(v);
        }
        let m = ladder_ln.len();
        let pi_j0 = (a_vals[m - 1] - a_vals[m - 2]) / (ladder_ln[m - 2] - ladder_ln[m - 1]);
        let b_const = a_vals[m - 1] + pi_j0 * ladder_ln[m - 1];
        let model = EdgeModel { pi_j0, b_const, ladder_ln, d0: Mutex::new(BTreeMap::new()) };
        let _ = slot.set(model);
        Ok(slot.get().unwrap())
    }

    fn model_values(
        &self,
        edge: Edge,
        ln_delta: f64,
        weights: &[Weight],
    ) -> Result<Vec<(f64, f64)>> {
        let model = self.model(edge)?;
        let a = -model.pi_j0 * ln_delta + model.b_const;
        let mut out = Vec::with_capacity(weights.len());
        for w in weights {
            match w {
                Weight::One => out.push((a, 1e-6 * a.abs())),
                Weight::Cos(x) => {
                    let d0 = self.model_d0(edge, model, *x)?;
                    out.push((a + d0, 1e-6 * a.abs()))
                }
                Weight::VSquared(_) => {
                    return Err(Error::Parameter(
                        "kappa integrals are not defined through the edge model".into(),
                    ))
                }
            }
        }
        Ok(out)
    }

    /// Per-site offset lim_{delta -> 0} [Ic(x, delta) - a(delta)], cached.
    fn model_d0(&self, edge: Edge, model: &EdgeModel, x: Site) -> Result<f64> {
        if x == [0, 0] {
            return Ok(0.0);
        }
        if let Some(v) = model.d0.lock().unwrap().get(&x) {
            return Ok(*v);
        }
        let ld = *model.ladder_ln.last().unwrap();
        let pair =
            self.edge_integral_batch_raw(edge, ld.exp(), &[Weight::One, Weight::Cos(x)])?;
        let d0 = pair[1].0 - pair[0].0;
        model.d0.lock().unwrap().insert(x, d0);
        Ok(d0)
    }
}

/// T_alpha(omega) = int_0^{r0} r^alpha / (r^2 + omega^2) dr, alpha >= 0,
/// omega > 0, r0 in (0, 1). A power series handles [0, min(omega/4, r0)]
/// analytically (any real alpha), geometric GL panels the rest.
pub fn t_alpha(alpha: f64, omega: f64, r0: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Parameter(format!("omega = {omega} must be positive")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} must be nonnegative")));
    }
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::Parameter(format!("r0 = {r0} outside (0, 1)")));
    }
    let m = (0.25 * omega).min(r0);
    // series: (1/w^2) sum_k (-1)^k (m/w)^{2k} m^{alpha+1} / (alpha + 2k + 1)
    let mut series = 0.0;
    let ratio = (m / omega) * (m / omega);
    let mut pow = 1.0;
    let mut k = 0usize;
    loop {
        let term = pow * m.powf(alpha + 1.0) / (alpha + 2.0 * k as f64 + 1.0);
        series += term;
        if term.abs() < 1e-18 * series.abs().max(1e-300) || k > 200 {
            break;
        }
        pow *= -ratio;
        k += 1;
    }
    series /= omega * omega;
    if m >= r0 {
        return Ok(series);
    }
    // panels [m, 2m, 4m, ..., r0]
    let mut acc = 0.0;
    let mut lo = m;
    while lo < r0 {
        let hi = (2.0 * lo).min(r0);
        let mut f = |r: f64| r.powf(alpha) / (r * r + omega * omega);
        acc += crate::numerics::gl_integrate(&mut f, lo, hi, 32);
        lo = hi;
    }
    Ok(series + acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::GeneratingCoefficients;
    use approx::assert_relative_eq;

    fn eval_1d() -> GreenEvaluator {
        GreenEvaluator::new(
            GeneratingCoefficients::laplacian(1).unwrap(),
            QuadratureSpec::default_for_dim(1),
        )
        .unwrap()
    }

    fn eval_2d() -> GreenEvaluator {
        GreenEvaluator::new(
            GeneratingCoefficients::laplacian(2).unwrap(),
            QuadratureSpec::default_for_dim(2),
        )
        .unwrap()
    }

    /// d=1 Laplacian closed form: a(z) = sign(z-1)/sqrt((z-1)^2 - 1).
    fn a_closed(z: f64) -> f64 {
        let u = z - 1.0;
        u.signum() / (u * u - 1.0).sqrt()
    }

    /// d=1 Laplacian Green function: G(x; z) = (-beta)^{|x|} a(z) with
    /// beta = (z-1) - sqrt((z-1)^2 - 1) for z > 2.
    fn g_closed(x: i64, z: f64) -> f64 {
        let u = z - 1.0;
        let root = (u * u - 1.0).sqrt();
        let beta = u - root;
        (-beta).powi(x.abs() as i32) / root
    }

    #[test]
    fn a_of_z_matches_closed_form_d1() {
        let g = eval_1d();
        for z in [2.001, 2.1, 3.0, 10.0, 2.0001] {
            let v = g.a_of_z(z).unwrap();
            assert_relative_eq!(v, a_closed(z), max_relative = 1e-11);
        }
        // band-bottom mirror
        let v = g.a_of_z(-1.0).unwrap();
        assert_relative_eq!(v, -1.0 / 3.0f64.sqrt(), max_relative = 1e-11);
    }

    #[test]
    fn a_rejects_in_band() {
        let g = eval_1d();
        assert!(matches!(g.a_of_z(1.0), Err(Error::ZInsideBand { .. })));
        assert!(matches!(g.a_of_z(0.0), Err(Error::ZInsideBand { .. })));
    }

    #[test]
    fn green_x_matches_contour_formula() {
        let g = eval_1d();
        assert_relative_eq!(g.green_x([0, 0], 3.0).unwrap(), 0.5773502691896258, max_relative = 1e-11);
        assert_relative_eq!(g.green_x([1, 0], 3.0).unwrap(), -0.15470053837925146, max_relative = 1e-11);
        assert_relative_eq!(g.green_x([2, 0], 3.0).unwrap(), 0.041451884327380954, max_relative = 1e-10);
        for x in -5..=5i64 {
            let v = g.green_x([x, 0], 2.5).unwrap();
            assert_relative_eq!(v, g_closed(x, 2.5), max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn green_symmetric_in_x() {
        let g = eval_1d();
        for x in 1..=4i64 {
            let a = g.green_x([x, 0], 2.7).unwrap();
            let b = g.green_x([-x, 0], 2.7).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn a_strictly_decreasing_above_band() {
        let g = eval_1d();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let z = 2.0 + 1e-4 * 1.6f64.powi(k);
            let v = g.a_of_z(z).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn near_edge_quadrature_tracks_closed_form_at_tiny_gaps() {
        let g = eval_1d();
        for ln_delta in [-10.0f64, -16.0, -20.0, -27.0] {
            let got = g.a_ln(Edge::Top, ln_delta).unwrap();
            let delta = ln_delta.exp();
            let want = 1.0 / (delta * (2.0 + delta)).sqrt();
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn d2_edge_blowup_is_logarithmic() {
        // a(4 + delta) = -ln(delta)/(2 pi) + O(1): the raw ratio
        // a/(-ln delta) drifts like 1/ln(delta); after one elimination level
        // in t = -1/ln(delta) the sequence is Cauchy below 1e-3 relative and
        // pins pi*J0 = 1/(2 pi).
        let g = eval_2d();
        let deltas: Vec<f64> = (0..=6).map(|k| 1e-2 * 0.25f64.powi(k)).collect();
        let ts: Vec<f64> = deltas.iter().map(|d| -1.0 / d.ln()).collect();
        let ratios: Vec<f64> = deltas
            .iter()
            .map(|d| g.a_ln(Edge::Top, d.ln()).unwrap() / (-d.ln()))
            .collect();
        let mut eliminated = Vec::new();
        for k in 0..deltas.len() - 1 {
            let (x0, x1) = (ts[k], ts[k + 1]);
            eliminated.push((x0 * ratios[k + 1] - x1 * ratios[k]) / (x0 - x1));
        }
        let pi_j0 = 1.0 / (2.0 * PI);
        // Cauchy tail: increments strictly shrink and drop below 1e-3 relative
        let diffs: Vec<f64> = eliminated.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for w in diffs.windows(2) {
            assert!(w[1] < w[0], "increments not decreasing: {diffs:?}");
        }
        assert!(*diffs.last().unwrap() < 1e-3 * pi_j0);
        assert_relative_eq!(*eliminated.last().unwrap(), pi_j0, max_relative = 1e-4);
        // raw deviations shrink monotonically as well
        for w in ratios.windows(2) {
            assert!((w[1] - pi_j0).abs() < (w[0] - pi_j0).abs());
        }
        // the two-level extraction stays inside its advertised residual
        let ext = crate::dispersion::extract_morse_constant(&g, Edge::Top).unwrap();
        assert!(ext.extraction_error < 1e-4);
        assert_relative_eq!(ext.pi_j0, pi_j0, max_relative = 1e-3);
    }

    #[test]
    fn d2_model_continues_the_quadrature() {
        let g = eval_2d();
        // straddle the model threshold: values must agree to ~1e-5 relative
        let a_direct = g.a_ln(Edge::Top, (2e-8f64).ln()).unwrap();
        let a_model = g.a_ln(Edge::Top, (0.5e-8f64).ln()).unwrap();
        let pi_j0 = 1.0 / (2.0 * PI);
        let b_direct = a_direct + pi_j0 * (2e-8f64).ln();
        let b_model = a_model + pi_j0 * (0.5e-8f64).ln();
        assert!((b_direct - b_model).abs() < 1e-4 * b_direct.abs().max(1.0));
        // deep model values remain sane
        let a_deep = g.a_ln(Edge::Top, -40000.0).unwrap();
        assert_relative_eq!(a_deep, 40000.0 / (2.0 * PI), max_relative = 1e-3);
    }

    #[test]
    fn kappa_top_analytic_cancellation() {
        let g = eval_1d();
        let pot = crate::potential::LatticePotential::new(1, [([0, 0], 1.0), ([1, 0], -1.0)]).unwrap();
        let k1 = g.kappa_top(&pot).unwrap();
        assert_relative_eq!(k1, 2.0, max_relative = 1e-9);
        let k2 = g.kappa_bottom(&pot).unwrap();
        assert_relative_eq!(k2, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn kappa_rejects_nonzero_mass() {
        let g = eval_1d();
        let pot = crate::potential::LatticePotential::new(1, [([0, 0], 1.0), ([1, 0], 1.0)]).unwrap();
        assert!(matches!(g.kappa_top(&pot), Err(Error::KappaDiverges { .. })));
    }

    #[test]
    fn kappa_d2_two_resolutions_agree() {
        let g = eval_2d();
        let pot = crate::potential::LatticePotential::new(2, [([0, 0], 1.0), ([1, 0], -1.0)]).unwrap();
        let k = g.kappa_bottom(&pot).unwrap();
        let g2 = GreenEvaluator::new(
            GeneratingCoefficients::laplacian(2).unwrap(),
            QuadratureSpec::new(256, 6, 1e-10, true).unwrap(),
        )
        .unwrap();
        let k_fine = g2.kappa_bottom(&pot).unwrap();
        assert!(k > 0.0);
        assert!((k - k_fine).abs() < 1e-6 * k.abs());
        // by the p1 <-> p2 exchange symmetry the d=2 value is exactly 1
        assert_relative_eq!(k, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn t_alpha_closed_forms() {
        let got = t_alpha(0.0, 1.0, 1.0 - 1e-15).unwrap();
        assert_relative_eq!(got, PI / 4.0, max_relative = 1e-12);
        let got = t_alpha(1.0, 1.0, 1.0 - 1e-15).unwrap();
        assert_relative_eq!(got, 0.5 * 2.0f64.ln(), max_relative = 1e-12);
        // alpha = 2, omega -> 0: T -> r0
        let got = t_alpha(2.0, 1e-5, 0.5).unwrap();
        assert!((got - 0.5).abs() < 1e-4);
        // domain errors
        assert!(t_alpha(0.0, 0.0, 0.5).is_err());
        assert!(t_alpha(0.0, -1.0, 0.5).is_err());
        assert!(t_alpha(-0.5, 1.0, 0.5).is_err());
        assert!(t_alpha(0.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn plain_trapezoid_fails_honestly_near_edge() {
        // with peak splitting disabled the refinement budget cannot resolve
        // a 1e-8 gap and the accuracy error carries the best estimate
        let g = GreenEvaluator::new(
            GeneratingCoefficients::laplacian(1).unwrap(),
            QuadratureSpec::new(64, 4, 1e-10, false).unwrap(),
        )
        .unwrap();
        match g.a_of_z(2.0 + 1e-8) {
            Err(Error::Accuracy { best, est_error }) => {
                assert!(best.is_finite() && est_error > 0.0);
            }
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn uncertified_extrema_rejected() {
        // double-cosine symbol: two global maxima, so the evaluator refuses
        let c = GeneratingCoefficients::new(
            1,
            [
                ([0, 0], num_complex::Complex64::new(1.0, 0.0)),
                ([1, 0], num_complex::Complex64::new(-0.25, 0.0)),
                ([-1, 0], num_complex::Complex64::new(-0.25, 0.0)),
                ([2, 0], num_complex::Complex64::new(-0.25, 0.0)),
                ([-2, 0], num_complex::Complex64::new(-0.25, 0.0)),
            ],
        )
        .unwrap();
        match GreenEvaluator::new(c, QuadratureSpec::default_for_dim(1)) {
            Err(Error::UncertifiedExtrema { unique: false, .. }) => {}
            other => panic!("expected uncertified extrema, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn mirrored_evaluator_flips_band() {
        let g = eval_1d();
        let m = g.mirrored().unwrap();
        assert_relative_eq!(m.e_min(), -2.0, epsilon = 1e-12);
        assert_relative_eq!(m.e_max(), 0.0, epsilon = 1e-12);
        // a_mirror(-z) = -a(z)
        let z = 3.0;
        assert_relative_eq!(m.a_of_z(-z).unwrap(), -g.a_of_z(z).unwrap(), max_relative = 1e-11);
    }
}

