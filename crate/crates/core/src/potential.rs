//! Finitely supported real on-site potentials: sign/magnitude split, the
//! Fourier symbol v(p), and the decay functionals entering the counting
//! bounds and threshold constants.

use crate::dispersion::{site_dot, Point, Site};
use crate::error::{Error, Result};
use crate::numerics::kahan_sum;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Finite real table v: Z^d -> R, nonempty support.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticePotential {
    dim: usize,
    entries: BTreeMap<Site, f64>,
}

impl LatticePotential {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (Site, f64)>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension { dim });
        }
        let mut map = BTreeMap::new();
        for (x, v) in entries {
            if dim == 1 && x[1] != 0 {
                return Err(Error::Parameter(format!(
                    "potential site {x:?} has a nonzero second coordinate in dimension 1"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Parameter(format!("non-finite potential value at {x:?}")));
            }
            if map.insert(x, v).is_some() {
                return Err(Error::Parameter(format!("duplicate potential site {x:?}")));
            }
        }
        if map.is_empty() || map.values().all(|v| *v == 0.0) {
            return Err(Error::ZeroPotential);
        }
        Ok(Self { dim, entries: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &f64)> {
        self.entries.iter()
    }

    pub fn value(&self, x: Site) -> f64 {
        self.entries.get(&x).copied().unwrap_or(0.0)
    }

    /// Sites carrying a nonzero value, in lexicographic order.
    pub fn active_sites(&self) -> Vec<Site> {
        self.entries
            .iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|(&x, _)| x)
            .collect()
    }

    /// Largest coordinate magnitude over the support.
    pub fn radius(&self) -> i64 {
        self.entries
            .keys()
            .map(|x| x[0].abs().max(x[1].abs()))
            .max()
            .unwrap_or(0)
    }

    /// Total mass kappa0 = sum v(x), compensated.
    pub fn kappa0(&self) -> f64 {
        kahan_sum(self.entries.values().copied())
    }

    pub fn abs_sum(&self) -> f64 {
        kahan_sum(self.entries.values().map(|v| v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Potential for the mirrored operator (-e, -v).
    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|(&x, &v)| (x, -v)).collect(),
        }
    }

    /// Fourier symbol v(p) = sum_x v(x) exp(i x.p); v(0) = kappa0.
    pub fn symbol(&self, p: Point) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &v) in &self.entries {
            acc += v * Complex64::from_polar(1.0, site_dot(x, p));
        }
        acc
    }

    /// Symbol relative to its value at zero, evaluated without cancellation:
    /// v(q) - kappa0 = sum_x v(x) (exp(i x.q) - 1). For kappa0 = 0 this is
    /// v(q) itself and stays accurate down to |q| ~ 1e-300.
    pub fn symbol_minus_mass(&self, q: Point) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (&x, &v) in &self.entries {
            let half = 0.5 * site_dot(x, q);
            let s = half.sin();
            re -= v * 2.0 * s * s;
            im += v * (2.0 * half).sin();
        }
        Complex64::new(re, im)
    }
}

/// Decay functionals of the potential at weight exponent gamma.
#[derive(Clone, Copy, Debug)]
pub struct DecayReport {
    pub gamma: f64,
    /// sum_x |x|^(2-d+gamma) |v(x)|; the origin contributes zero.
    pub weighted_sum: f64,
    pub abs_sum: f64,
    pub kappa0: f64,
}

fn decay_report_inner(pot: &LatticePotential, gamma: f64) -> Result<DecayReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma = {gamma} outside (0, 1)")));
    }
    let exponent = 2.0 - pot.dim() as f64 + gamma;
    let weighted_sum = kahan_sum(pot.iter().map(|(&x, &v)| {
        let r2 = (x[0] * x[0] + x[1] * x[1]) as f64;
        if r2 == 0.0 {
            0.0
        } else {
            r2.sqrt().powf(exponent) * v.abs()
        }
    }));
    Ok(DecayReport {
        gamma,
        weighted_sum,
        abs_sum: pot.abs_sum(),
        kappa0: pot.kappa0(),
    })
}

/// Strict decay report: rejects potentials whose weighted sum vanishes (a
/// single site at the origin), as the decay hypothesis demands 0 < sum.
pub fn decay_report(pot: &LatticePotential, gamma: f64) -> Result<DecayReport> {
    let r = decay_report_inner(pot, gamma)?;
    if r.weighted_sum == 0.0 {
        return Err(Error::Parameter(
            "weighted decay sum is zero (support = origin only); \
             add a non-origin site or use decay_report_permissive"
                .into(),
        ));
    }
    Ok(r)
}

/// Permissive variant allowing weighted_sum = 0 (pure origin potential); the
/// counting bounds then degenerate to the trivial constant term.
pub fn decay_report_permissive(pot: &LatticePotential, gamma: f64) -> Result<DecayReport> {
    decay_report_inner(pot, gamma)
}

/// Pointwise sign and square-root-magnitude split of the potential. Sites
/// with v(x) = 0 are dropped (they do not enter the Birman–Schwinger support).
#[derive(Clone, Debug)]
pub struct SignSplit {
    pub sites: Vec<Site>,
    pub signs: Vec<f64>,
    pub sqrt_abs: Vec<f64>,
}

pub fn sign_split(pot: &LatticePotential) -> SignSplit {
    let mut sites = Vec::new();
    let mut signs = Vec::new();
    let mut sqrt_abs = Vec::new();
    for (&x, &v) in pot.iter() {
        if v == 0.0 {
            continue;
        }
        sites.push(x);
        signs.push(if v > 0.0 { 1.0 } else { -1.0 });
        sqrt_abs.push(v.abs().sqrt());
    }
    SignSplit { sites, signs, sqrt_abs }
}
