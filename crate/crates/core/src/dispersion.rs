//! Free-operator dispersion: finite Hermitian coefficient tables, the symbol
//! e(p) = sum_x e(x) exp(i x.p) on the torus, and certification of the unique
//! non-degenerate extrema that every band-edge computation relies on.

use crate::error::{Error, Result};
use crate::green::{Edge, GreenEvaluator};
use crate::numerics::neville_to_zero;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Lattice site. For dim = 1 the second coordinate is fixed to 0.
pub type Site = [i64; 2];
/// Point on the torus (-pi, pi]^d. For dim = 1 the second coordinate is 0.
pub type Point = [f64; 2];

/// Tolerance for identifying torus points modulo 2*pi.
pub const TORUS_TOL: f64 = 1e-9;
/// Below this |det Hess| an extremum is rejected as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Wrap a single angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Wrap a point coordinate-wise into (-pi, pi]^d.
pub fn wrap_point(p: Point) -> Point {
    [wrap_angle(p[0]), wrap_angle(p[1])]
}

/// Wrapped torus distance between two points.
pub fn torus_distance(a: Point, b: Point) -> f64 {
    let d0 = wrap_angle(a[0] - b[0]);
    let d1 = wrap_angle(a[1] - b[1]);
    (d0 * d0 + d1 * d1).sqrt()
}

pub fn site_dot(x: Site, p: Point) -> f64 {
    x[0] as f64 * p[0] + x[1] as f64 * p[1]
}

/// Finite Hermitian coefficient table generating the hopping operator
/// `h0 f(x) = sum_y e(y) f(x + y)`; its symbol is real-valued on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratingCoefficients {
    dim: usize,
    entries: BTreeMap<Site, Complex64>,
}

impl GeneratingCoefficients {
    /// Build from explicit entries, verifying Hermitian symmetry
    /// `conj(e(-x)) = e(x)` and nonempty finite support.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (Site, Complex64)>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension { dim });
        }
        let mut map = BTreeMap::new();
        for (x, v) in entries {
            if dim == 1 && x[1] != 0 {
                return Err(Error::Parameter(format!(
                    "site {x:?} has a nonzero second coordinate in dimension 1"
                )));
            }
            if map.insert(x, v).is_some() {
                return Err(Error::Parameter(format!("duplicate coefficient site {x:?}")));
            }
        }
        map.retain(|_, v| v.norm() != 0.0);
        if map.is_empty() {
            return Err(Error::Parameter("empty coefficient support".into()));
        }
        for (&x, &v) in &map {
            let neg = [-x[0], -x[1]];
            let mirrored = map.get(&neg).copied().unwrap_or(Complex64::new(0.0, 0.0));
            let residual = (mirrored.conj() - v).norm();
            if residual > 1e-12 * (1.0 + v.norm()) {
                return Err(Error::NonHermitian { site: x, residual });
            }
        }
        Ok(Self { dim, entries: map })
    }

    /// Build from a raw list, filling each missing `-x` with `conj(e(x))`
    /// (the closure applied to CLI input) and then verifying as in `new`.
    pub fn hermitian_closure(
        dim: usize,
        entries: impl IntoIterator<Item = (Site, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Site, Complex64> = BTreeMap::new();
        for (x, v) in entries {
            if map.insert(x, v).is_some() {
                return Err(Error::Parameter(format!("duplicate coefficient site {x:?}")));
            }
        }
        let snapshot: Vec<(Site, Complex64)> = map.iter().map(|(&x, &v)| (x, v)).collect();
        for (x, v) in snapshot {
            let neg = [-x[0], -x[1]];
            map.entry(neg).or_insert_with(|| v.conj());
        }
        Self::new(dim, map)
    }

    /// Discrete Laplacian preset: e(0) = d, e(±1_j) = -1/2, with symbol
    /// `sum_j (1 - cos p_j)`.
    pub fn laplacian(dim: usize) -> Result<Self> {
        match dim {
            1 => Self::new(
                1,
                [
                    ([0, 0], Complex64::new(1.0, 0.0)),
                    ([1, 0], Complex64::new(-0.5, 0.0)),
                    ([-1, 0], Complex64::new(-0.5, 0.0)),
                ],
            ),
            2 => Self::new(
                2,
                [
                    ([0, 0], Complex64::new(2.0, 0.0)),
                    ([1, 0], Complex64::new(-0.5, 0.0)),
                    ([-1, 0], Complex64::new(-0.5, 0.0)),
                    ([0, 1], Complex64::new(-0.5, 0.0)),
                    ([0, -1], Complex64::new(-0.5, 0.0)),
                ],
            ),
            d => Err(Error::UnsupportedDimension { dim: d }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &Complex64)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = Site> + '_ {
        self.entries.keys().copied()
    }

    /// Largest coordinate magnitude over the support (hopping range).
    pub fn range(&self) -> i64 {
        self.entries
            .keys()
            .map(|x| x[0].abs().max(x[1].abs()))
            .max()
            .unwrap_or(0)
    }

    /// Full complex symbol value; the imaginary part cancels for Hermitian
    /// tables up to rounding.
    pub fn symbol_complex(&self, p: Point) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &v) in &self.entries {
            acc += v * Complex64::from_polar(1.0, site_dot(x, p));
        }
        acc
    }

    /// Real symbol value e(p).
    pub fn symbol(&self, p: Point) -> f64 {
        let s = self.symbol_complex(p);
        debug_assert!(s.im.abs() < 1e-10 * (1.0 + s.re.abs()));
        s.re
    }

    /// Exact gradient of the symbol.
    pub fn gradient(&self, p: Point) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (&x, &v) in &self.entries {
            let ph = Complex64::from_polar(1.0, site_dot(x, p));
            // d/dp_j of e(x) exp(i x.p) = i x_j e(x) exp(i x.p); the real part survives
            let t = v * ph;
            g[0] += -(x[0] as f64) * t.im;
            g[1] += -(x[1] as f64) * t.im;
        }
        g
    }

    /// Exact Hessian of the symbol.
    pub fn hessian(&self, p: Point) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for (&x, &v) in &self.entries {
            let ph = Complex64::from_polar(1.0, site_dot(x, p));
            let t = (v * ph).re;
            for a in 0..2 {
                for b in 0..2 {
                    h[a][b] -= (x[a] as f64) * (x[b] as f64) * t;
                }
            }
        }
        h
    }

    /// Table for the mirrored operator -h0.
    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|(&x, &v)| (x, -v)).collect(),
        }
    }

    /// True when all coefficients are real and symmetric, e(-x) = e(x); then
    /// the symbol is even and the lattice Green function is real.
    pub fn is_real_symmetric(&self) -> bool {
        self.entries.iter().all(|(&x, &v)| {
            let neg = [-x[0], -x[1]];
            let m = self.entries.get(&neg).copied().unwrap_or(Complex64::new(0.0, 0.0));
            v.im.abs() < 1e-14 && (m - v).norm() < 1e-14 * (1.0 + v.norm())
        })
    }
}

/// Certified location of the unique band extrema.
#[derive(Clone, Debug)]
pub struct ExtremaReport {
    pub p_min: Point,
    pub p_max: Point,
    pub e_min: f64,
    pub e_max: f64,
    pub hess_min: [[f64; 2]; 2],
    pub hess_max: [[f64; 2]; 2],
    pub nondegenerate: bool,
    pub unique: bool,
}

impl ExtremaReport {
    /// Report for the mirrored symbol -e: minima and maxima swap.
    pub fn mirrored(&self) -> Self {
        let neg = |h: [[f64; 2]; 2]| [[-h[0][0], -h[0][1]], [-h[1][0], -h[1][1]]];
        ExtremaReport {
            p_min: self.p_max,
            p_max: self.p_min,
            e_min: -self.e_max,
            e_max: -self.e_min,
            hess_min: neg(self.hess_max),
            hess_max: neg(self.hess_min),
            nondegenerate: self.nondegenerate,
            unique: self.unique,
        }
    }

    pub fn certified(&self) -> bool {
        self.nondegenerate && self.unique
    }
}

fn det2(h: [[f64; 2]; 2], dim: usize) -> f64 {
    if dim == 1 {
        h[0][0]
    } else {
        h[0][0] * h[1][1] - h[0][1] * h[1][0]
    }
}

fn positive_definite(h: [[f64; 2]; 2], dim: usize) -> bool {
    if dim == 1 {
        h[0][0] > 0.0
    } else {
        h[0][0] > 0.0 && det2(h, 2) > 0.0
    }
}

struct PolishedExtremum {
    p: Point,
    value: f64,
}

/// Newton-polish a candidate minimizer of `sign * e`. Returns None when the
/// iteration fails to settle.
fn polish(coeffs: &GeneratingCoefficients, sign: f64, start: Point) -> Option<PolishedExtremum> {
    let dim = coeffs.dim();
    let mut p = start;
    for _ in 0..80 {
        let g = coeffs.gradient(p);
        let h = coeffs.hessian(p);
        let (g, h) = (
            [sign * g[0], sign * g[1]],
            [[sign * h[0][0], sign * h[0][1]], [sign * h[1][0], sign * h[1][1]]],
        );
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn < 1e-13 {
            return Some(PolishedExtremum { p: wrap_point(p), value: coeffs.symbol(p) });
        }
        let step = if dim == 1 {
            if h[0][0].abs() < 1e-14 {
                return None;
            }
            [g[0] / h[0][0], 0.0]
        } else {
            let det = det2(h, 2);
            if det.abs() < 1e-14 {
                return None;
            }
            [
                (h[1][1] * g[0] - h[0][1] * g[1]) / det,
                (-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ]
        };
        p = wrap_point([p[0] - step[0], p[1] - step[1]]);
    }
    None
}

/// All distinct local minimizers of `sign * e` found from a grid scan plus
/// Newton polish, de-duplicated modulo 2*pi.
fn local_minimizers(
    coeffs: &GeneratingCoefficients,
    sign: f64,
    grid_n: usize,
) -> Vec<PolishedExtremum> {
    let dim = coeffs.dim();
    let n = grid_n as i64;
    let node = |i: i64| -> f64 { wrap_angle(2.0 * PI * (i.rem_euclid(n)) as f64 / n as f64) };
    let mut values = Vec::new();
    if dim == 1 {
        values = (0..n).map(|i| sign * coeffs.symbol([node(i), 0.0])).collect();
    } else {
        values.reserve((n * n) as usize);
        for i in 0..n {
            for j in 0..n {
                values.push(sign * coeffs.symbol([node(i), node(j)]));
            }
        }
    }
    let at = |i: i64, j: i64| -> f64 {
        let i = i.rem_euclid(n);
        let j = j.rem_euclid(n);
        if dim == 1 {
            values[i as usize]
        } else {
            values[(i * n + j) as usize]
        }
    };

    let mut found: Vec<PolishedExtremum> = Vec::new();
    let mut consider = |i: i64, j: i64| {
        let start = [node(i), if dim == 1 { 0.0 } else { node(j) }];
        if let Some(c) = polish(coeffs, sign, start) {
            if !found.iter().any(|f| torus_distance(f.p, c.p) < 1e-6) {
                found.push(c);
            }
        }
    };
    if dim == 1 {
        for i in 0..n {
            if at(i, 0) <= at(i - 1, 0) && at(i, 0) <= at(i + 1, 0) {
                consider(i, 0);
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                let c = at(i, j);
                let mut is_min = true;
                'nb: for di in -1..=1_i64 {
                    for dj in -1..=1_i64 {
                        if (di, dj) != (0, 0) && at(i + di, j + dj) < c {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if is_min {
                    consider(i, j);
                }
            }
        }
    }
    found.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    found
}

/// Locate and certify the extrema of the symbol: coarse scan with `grid_n`
/// points per axis, Newton polish on the gradient, exact Hessians. `unique`
/// is true when the global minimum and the global maximum are each attained
/// at a single torus point (a numerical certificate at the scan resolution,
/// not a proof). A Hessian with |det| below 1e-10 at a global extremum is a
/// hard error since every downstream result assumes non-degeneracy.
pub fn find_extrema(coeffs: &GeneratingCoefficients, grid_n: usize) -> Result<ExtremaReport> {
    if grid_n < 16 {
        return Err(Error::Parameter(format!("grid_n = {grid_n} < 16")));
    }
    let dim = coeffs.dim();

    let minima = local_minimizers(coeffs, 1.0, grid_n);
    let maxima = local_minimizers(coeffs, -1.0, grid_n);
    if minima.is_empty() || maxima.is_empty() {
        return Err(Error::Parameter(
            "no extrema found: Newton polish failed on every grid candidate".into(),
        ));
    }

    let e_min = minima[0].value;
    let e_max = maxima.iter().map(|m| m.value).fold(f64::NEG_INFINITY, f64::max);
    let value_tol = 1e-9 * (1.0 + e_min.abs().max(e_max.abs()));
    let n_min = minima.iter().filter(|m| m.value - e_min < value_tol).count();
    let max_at: Vec<&PolishedExtremum> =
        maxima.iter().filter(|m| e_max - m.value < value_tol).collect();
    let n_max = max_at.len();

    let p_min = minima[0].p;
    let p_max = max_at[0].p;
    let hess_min = coeffs.hessian(p_min);
    let hess_max = coeffs.hessian(p_max);

    for (p, h) in [(p_min, hess_min), (p_max, hess_max)] {
        let det = det2(h, dim);
        if det.abs() < DEGENERACY_TOL {
            return Err(Error::DegenerateExtremum { point: p, det });
        }
    }
    let neg_hess_max = [
        [-hess_max[0][0], -hess_max[0][1]],
        [-hess_max[1][0], -hess_max[1][1]],
    ];
    let nondegenerate = positive_definite(hess_min, dim) && positive_definite(neg_hess_max, dim);

    Ok(ExtremaReport {
        p_min,
        p_max,
        e_min,
        e_max,
        hess_min,
        hess_max,
        nondegenerate,
        unique: n_min == 1 && n_max == 1,
    })
}

/// Leading Morse constants of the band-edge expansion of a(z): `pi * J0` at
/// the band top and bottom, with the observed extrapolation residual.
#[derive(Clone, Debug)]
pub struct MorseConstant {
    pub pi_j0_max: f64,
    pub pi_j0_min: f64,
    pub extraction_error: f64,
}

impl MorseConstant {
    pub fn compute(green: &GreenEvaluator) -> Result<Self> {
        let top = extract_morse_constant(green, Edge::Top)?;
        let bottom = extract_morse_constant(green, Edge::Bottom)?;
        Ok(MorseConstant {
            pi_j0_max: top.pi_j0,
            pi_j0_min: bottom.pi_j0,
            extraction_error: top.extraction_error.max(bottom.extraction_error),
        })
    }

    pub fn for_edge(&self, edge: Edge) -> f64 {
        match edge {
            Edge::Top => self.pi_j0_max,
            Edge::Bottom => self.pi_j0_min,
        }
    }
}

/// Single-edge Morse-constant extraction.
#[derive(Clone, Copy, Debug)]
pub struct MorseExtraction {
    pub pi_j0: f64,
    pub extraction_error: f64,
}

/// Extract pi*J0 at the chosen edge by extrapolating the edge law of a(z):
/// for d = 1 the limit of sqrt(delta) * a along delta_k = 4^-k * 1e-2, for
/// d = 2 the limit of a / (-ln delta); both via two-level polynomial
/// extrapolation in the natural variable (sqrt(delta), resp. -1/ln delta).
pub fn extract_morse_constant(green: &GreenEvaluator, edge: Edge) -> Result<MorseExtraction> {
    let dim = green.dim();
    let deltas: Vec<f64> = (0..=6).map(|k| 1e-2 * 0.25_f64.powi(k)).collect();
    let mut xs = Vec::with_capacity(deltas.len());
    let mut fs = Vec::with_capacity(deltas.len());
    for &delta in &deltas {
        let a = green.a_ln(edge, delta.ln())?;
        if dim == 1 {
            xs.push(delta.sqrt());
            fs.push(delta.sqrt() * a);
        } else {
            xs.push(-1.0 / delta.ln());
            fs.push(a / (-delta.ln()));
        }
    }
    let (value, residual) = neville_to_zero(&xs, &fs, 2);
    if !(residual.abs() <= 1e-4) {
        return Err(Error::ExtractionFailure { residual });
    }
    Ok(MorseExtraction { pi_j0: value, extraction_error: residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian_1d() -> GeneratingCoefficients {
        GeneratingCoefficients::laplacian(1).unwrap()
    }

    #[test]
    fn laplacian_preset_values() {
        let c = laplacian_1d();
        let entries: Vec<(Site, Complex64)> = c.iter().map(|(&x, &v)| (x, v)).collect();
        assert_eq!(entries.len(), 3);
        assert_eq!(c.symbol([0.0, 0.0]), 0.0);
        assert_relative_eq!(c.symbol([PI, 0.0]), 2.0, epsilon = 1e-14);

        let c2 = GeneratingCoefficients::laplacian(2).unwrap();
        assert_eq!(c2.iter().count(), 5);
        assert_relative_eq!(c2.symbol([PI, PI]), 4.0, epsilon = 1e-14);

        assert!(matches!(
            GeneratingCoefficients::laplacian(3),
            Err(Error::UnsupportedDimension { dim: 3 })
        ));
    }

    #[test]
    fn symbol_at_trivial_points() {
        let c = laplacian_1d();
        assert_relative_eq!(c.symbol([0.0, 0.0]), 0.0, epsilon = 1e-15);
        assert_relative_eq!(c.symbol([PI, 0.0]), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let r = GeneratingCoefficients::new(
            1,
            [
                ([0, 0], Complex64::new(1.0, 0.0)),
                ([1, 0], Complex64::new(-0.5, 0.1)),
                ([-1, 0], Complex64::new(-0.5, 0.1)), // conj mismatch
            ],
        );
        assert!(matches!(r, Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn hermitian_closure_fills_mirror_sites() {
        let c = GeneratingCoefficients::hermitian_closure(
            1,
            [
                ([0, 0], Complex64::new(1.0, 0.0)),
                ([1, 0], Complex64::new(-0.25, 0.1)),
            ],
        )
        .unwrap();
        assert_eq!(c.iter().count(), 3);
        // symbol real everywhere
        for k in 0..32 {
            let p = [-PI + 2.0 * PI * k as f64 / 32.0, 0.0];
            let s = c.symbol_complex(p);
            assert!(s.im.abs() < 1e-13);
        }
    }

    #[test]
    fn extrema_of_1d_laplacian() {
        let c = laplacian_1d();
        let r = find_extrema(&c, 64).unwrap();
        assert!(r.unique && r.nondegenerate);
        assert_relative_eq!(r.e_min, 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.e_max, 2.0, epsilon = 1e-12);
        assert!(torus_distance(r.p_min, [0.0, 0.0]) < 1e-9);
        assert!(torus_distance(r.p_max, [PI, 0.0]) < 1e-9);
        assert_relative_eq!(r.hess_min[0][0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(r.hess_max[0][0], -1.0, epsilon = 1e-10);
    }

    #[test]
    fn extrema_of_2d_laplacian() {
        let c = GeneratingCoefficients::laplacian(2).unwrap();
        let r = find_extrema(&c, 64).unwrap();
        assert!(r.unique && r.nondegenerate);
        assert_relative_eq!(r.e_min, 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.e_max, 4.0, epsilon = 1e-12);
        assert!(torus_distance(r.p_max, [PI, PI]) < 1e-9);
    }

    #[test]
    fn double_cosine_symbol_has_non_unique_maximum() {
        // e(p) = 1 - (cos p + cos 2p)/2: global maximum attained at +-arccos(-1/4)
        let c = GeneratingCoefficients::new(
            1,
            [
                ([0, 0], Complex64::new(1.0, 0.0)),
                ([1, 0], Complex64::new(-0.25, 0.0)),
                ([-1, 0], Complex64::new(-0.25, 0.0)),
                ([2, 0], Complex64::new(-0.25, 0.0)),
                ([-2, 0], Complex64::new(-0.25, 0.0)),
            ],
        )
        .unwrap();
        let r = find_extrema(&c, 256).unwrap();
        assert!(!r.unique);
        assert_relative_eq!(r.e_max, 1.5625, epsilon = 1e-9);
    }

    #[test]
    fn extrema_mirror_symmetry() {
        let c = GeneratingCoefficients::new(
            1,
            [
                ([0, 0], Complex64::new(0.3, 0.0)),
                ([1, 0], Complex64::new(-0.5, 0.2)),
                ([-1, 0], Complex64::new(-0.5, -0.2)),
                ([2, 0], Complex64::new(0.1, 0.0)),
                ([-2, 0], Complex64::new(0.1, 0.0)),
            ],
        )
        .unwrap();
        let r = find_extrema(&c, 256).unwrap();
        let rn = find_extrema(&c.negated(), 256).unwrap();
        assert_relative_eq!(rn.e_min, -r.e_max, epsilon = 1e-10);
        assert_relative_eq!(rn.e_max, -r.e_min, epsilon = 1e-10);
        assert!(torus_distance(rn.p_min, r.p_max) < 1e-7);
        assert!(torus_distance(rn.p_max, r.p_min) < 1e-7);
    }

    #[test]
    fn extrema_bracket_dense_grid() {
        let c = GeneratingCoefficients::new(
            1,
            [
                ([0, 0], Complex64::new(0.0, 0.0)),
                ([1, 0], Complex64::new(-0.5, 0.31)),
                ([-1, 0], Complex64::new(-0.5, -0.31)),
            ],
        )
        .unwrap();
        let r = find_extrema(&c, 256).unwrap();
        let n = 1_000_000;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let v = c.symbol([-PI + 2.0 * PI * k as f64 / n as f64, 0.0]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo >= r.e_min - 1e-9 && hi <= r.e_max + 1e-9);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let c = GeneratingCoefficients::laplacian(2).unwrap();
        let r = find_extrema(&c, 64).unwrap();
        let p = r.p_min;
        let h = 1e-5;
        for a in 0..2 {
            for b in 0..2 {
                let mut ea = [0.0, 0.0];
                ea[a] = h;
                let mut eb = [0.0, 0.0];
                eb[b] = h;
                let fd = (c.symbol([p[0] + ea[0] + eb[0], p[1] + ea[1] + eb[1]])
                    - c.symbol([p[0] + ea[0] - eb[0], p[1] + ea[1] - eb[1]])
                    - c.symbol([p[0] - ea[0] + eb[0], p[1] - ea[1] + eb[1]])
                    + c.symbol([p[0] - ea[0] - eb[0], p[1] - ea[1] - eb[1]]))
                    / (4.0 * h * h);
                assert!((fd - r.hess_min[a][b]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn morse_constants_both_edges_d1() {
        use crate::green::QuadratureSpec;
        let g = crate::green::GreenEvaluator::new(
            laplacian_1d(),
            QuadratureSpec::default_for_dim(1),
        )
        .unwrap();
        let m = MorseConstant::compute(&g).unwrap();
        // symmetric band: both edge constants equal 1/sqrt(2)
        assert_relative_eq!(m.pi_j0_max, 1.0 / 2.0f64.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(m.pi_j0_min, 1.0 / 2.0f64.sqrt(), epsilon = 1e-8);
        assert!(m.extraction_error < 1e-6);
        assert_eq!(m.for_edge(Edge::Top), m.pi_j0_max);
    }

    #[test]
    fn grid_too_coarse_rejected() {
        let c = laplacian_1d();
        assert!(matches!(find_extrema(&c, 8), Err(Error::Parameter(_))));
    }
}
