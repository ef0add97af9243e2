//! C ABI over the bandedge library. Handles are opaque pointers owned by the
//! caller (create/free pairs); every fallible call returns a status code and
//! writes results through out-pointers. The most recent error message is
//! kept per thread and retrieved with `bandedge_last_error_message`.

use bandedge::asymptotics::{solve_bottom_detailed, solve_top_detailed};
use bandedge::birman::{count_bs_crossings, lambda_max};
use bandedge::dispersion::{extract_morse_constant, find_extrema, GeneratingCoefficients};
use bandedge::green::{Edge, GreenEvaluator, QuadratureSpec};
use bandedge::num_complex::Complex64;
use bandedge::potential::LatticePotential;
use bandedge::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BandedgeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Spectral parameter inside the band, or another domain violation.
    Domain = 3,
    /// Quadrature, eigensolver or root-finder failure.
    Numerical = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Hermitian hopping-coefficient table (opaque).
pub struct BandedgeDispersion {
    inner: GeneratingCoefficients,
}

/// Finite real on-site potential (opaque).
pub struct BandedgePotential {
    inner: LatticePotential,
}

/// Green-function evaluator with certified band extrema (opaque).
pub struct BandedgeEvaluator {
    inner: GreenEvaluator,
}

/// Certified band extrema in flat form.
#[repr(C)]
pub struct BandedgeExtrema {
    pub p_min: [f64; 2],
    pub p_max: [f64; 2],
    pub e_min: f64,
    pub e_max: f64,
    pub nondegenerate: bool,
    pub unique: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BandedgeStatus {
    match e {
        Error::Parameter(_)
        | Error::Config(_)
        | Error::UnsupportedDimension { .. }
        | Error::NonHermitian { .. }
        | Error::ZeroPotential => BandedgeStatus::InvalidArgument,
        Error::ZInsideBand { .. } | Error::KappaDiverges { .. } => BandedgeStatus::Domain,
        _ => BandedgeStatus::Numerical,
    }
}

fn fail(e: Error) -> BandedgeStatus {
    let code = status_of(&e);
    set_error(e.to_string());
    code
}

/// Run a fallible body with panic containment.
fn guarded(body: impl FnOnce() -> BandedgeStatus) -> BandedgeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            BandedgeStatus::Panic
        }
    }
}

macro_rules! nonnull {
    ($p:expr) => {
        if $p.is_null() {
            set_error(format!("null pointer argument `{}`", stringify!($p)));
            return BandedgeStatus::NullPointer;
        }
    };
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bandedge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Most recent error message on this thread, or NULL. The caller owns the
/// returned string and must release it with `bandedge_string_free`.
#[no_mangle]
pub extern "C" fn bandedge_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(c) => c.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned by
/// `bandedge_last_error_message`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bandedge_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Discrete-Laplacian preset dispersion for dim 1 or 2.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bandedge_dispersion_laplacian(
    dim: u32,
    out: *mut *mut BandedgeDispersion,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(out);
        match GeneratingCoefficients::laplacian(dim as usize) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(BandedgeDispersion { inner: c }));
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Dispersion from an explicit coefficient list; the Hermitian closure
/// (filling each missing -x with the conjugate) is applied and verified.
/// `sites` holds n pairs (x1, x2); the second coordinate is ignored for
/// dim = 1.
///
/// # Safety
/// `sites` must point to 2n i64 values, `re`/`im` to n doubles each, and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_dispersion_new(
    dim: u32,
    n: usize,
    sites: *const i64,
    re: *const f64,
    im: *const f64,
    out: *mut *mut BandedgeDispersion,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(out);
        nonnull!(sites);
        nonnull!(re);
        nonnull!(im);
        let mut entries = Vec::with_capacity(n);
        for k in 0..n {
            let x = [*sites.add(2 * k), if dim == 1 { 0 } else { *sites.add(2 * k + 1) }];
            entries.push((x, Complex64::new(*re.add(k), *im.add(k))));
        }
        match GeneratingCoefficients::hermitian_closure(dim as usize, entries) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(BandedgeDispersion { inner: c }));
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `d` must be NULL or a pointer from a `bandedge_dispersion_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn bandedge_dispersion_free(d: *mut BandedgeDispersion) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Symbol value e(p) at a torus point p (length 2; second entry ignored for
/// dim = 1).
///
/// # Safety
/// `d`, `p` (2 doubles) and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_dispersion_symbol(
    d: *const BandedgeDispersion,
    p: *const f64,
    out: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(d);
        nonnull!(p);
        nonnull!(out);
        *out = (*d).inner.symbol([*p, *p.add(1)]);
        BandedgeStatus::Ok
    })
}

/// Locate and certify the band extrema on a 256-point scan per axis.
///
/// # Safety
/// `d` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_dispersion_extrema(
    d: *const BandedgeDispersion,
    out: *mut BandedgeExtrema,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(d);
        nonnull!(out);
        match find_extrema(&(*d).inner, 256) {
            Ok(r) => {
                *out = BandedgeExtrema {
                    p_min: r.p_min,
                    p_max: r.p_max,
                    e_min: r.e_min,
                    e_max: r.e_max,
                    nondegenerate: r.nondegenerate,
                    unique: r.unique,
                };
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Potential from n (site, value) pairs; duplicate sites are rejected.
///
/// # Safety
/// `sites` must point to 2n i64 values, `values` to n doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_potential_new(
    dim: u32,
    n: usize,
    sites: *const i64,
    values: *const f64,
    out: *mut *mut BandedgePotential,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(out);
        nonnull!(sites);
        nonnull!(values);
        let mut entries = Vec::with_capacity(n);
        for k in 0..n {
            let x = [*sites.add(2 * k), if dim == 1 { 0 } else { *sites.add(2 * k + 1) }];
            entries.push((x, *values.add(k)));
        }
        match LatticePotential::new(dim as usize, entries) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(BandedgePotential { inner: p }));
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `p` must be NULL or a pointer from `bandedge_potential_new`.
#[no_mangle]
pub unsafe extern "C" fn bandedge_potential_free(p: *mut BandedgePotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Total potential mass kappa0 = sum v(x).
///
/// # Safety
/// `p` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_potential_kappa0(
    p: *const BandedgePotential,
    out: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(p);
        nonnull!(out);
        *out = (*p).inner.kappa0();
        BandedgeStatus::Ok
    })
}

/// Green-function evaluator with the default quadrature for the dimension;
/// fails if the dispersion's extrema are degenerate or non-unique.
///
/// # Safety
/// `d` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_evaluator_new(
    d: *const BandedgeDispersion,
    out: *mut *mut BandedgeEvaluator,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(d);
        nonnull!(out);
        let coeffs = (*d).inner.clone();
        let quad = QuadratureSpec::default_for_dim(coeffs.dim());
        match GreenEvaluator::new(coeffs, quad) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(BandedgeEvaluator { inner: g }));
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `g` must be NULL or a pointer from `bandedge_evaluator_new`.
#[no_mangle]
pub unsafe extern "C" fn bandedge_evaluator_free(g: *mut BandedgeEvaluator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// a(z) = int dp / (z - e(p)) for z outside the band, with the estimated
/// quadrature error.
///
/// # Safety
/// `g`, `value` and `est_error` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_a_of_z(
    g: *const BandedgeEvaluator,
    z: f64,
    value: *mut f64,
    est_error: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(value);
        nonnull!(est_error);
        match (*g).inner.a_of_z_with_error(z) {
            Ok((v, e)) => {
                *value = v;
                *est_error = e;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Lattice Green function G(x; z) (site given as 2 i64; second entry
/// ignored for dim = 1).
///
/// # Safety
/// `g`, `x` (2 i64), `value`, `est_error` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_green_x(
    g: *const BandedgeEvaluator,
    x: *const i64,
    z: f64,
    value: *mut f64,
    est_error: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(x);
        nonnull!(value);
        nonnull!(est_error);
        let site = [*x, *x.add(1)];
        match (*g).inner.green_x_with_error(site, z) {
            Ok((v, e)) => {
                *value = v;
                *est_error = e;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// lambda(z) = sup spectrum of the Birman–Schwinger matrix, clamped at 0.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_lambda_max(
    g: *const BandedgeEvaluator,
    p: *const BandedgePotential,
    z: f64,
    out: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(p);
        nonnull!(out);
        match lambda_max(&(*g).inner, &(*p).inner, z) {
            Ok(v) => {
                *out = v;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of Birman–Schwinger branches with mu * lambda_k(z) >= 1.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_count_bs_crossings(
    g: *const BandedgeEvaluator,
    p: *const BandedgePotential,
    mu: f64,
    z: f64,
    out: *mut usize,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(p);
        nonnull!(out);
        match count_bs_crossings(&(*g).inner, &(*p).inner, mu, z) {
            Ok(v) => {
                *out = v;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Threshold constant kappa1 (top edge); requires kappa0 = 0.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_kappa_top(
    g: *const BandedgeEvaluator,
    p: *const BandedgePotential,
    out: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(p);
        nonnull!(out);
        match (*g).inner.kappa_top(&(*p).inner) {
            Ok(v) => {
                *out = v;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Threshold constant kappa2 (bottom edge); requires kappa0 = 0.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_kappa_bottom(
    g: *const BandedgeEvaluator,
    p: *const BandedgePotential,
    out: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(p);
        nonnull!(out);
        match (*g).inner.kappa_bottom(&(*p).inner) {
            Ok(v) => {
                *out = v;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Leading Morse constant pi*J0 of the a(z) edge law; edge 0 = top,
/// 1 = bottom.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_morse_constant(
    g: *const BandedgeEvaluator,
    edge: u32,
    pi_j0: *mut f64,
    extraction_error: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(pi_j0);
        nonnull!(extraction_error);
        let e = if edge == 0 { Edge::Top } else { Edge::Bottom };
        match extract_morse_constant(&(*g).inner, e) {
            Ok(m) => {
                *pi_j0 = m.pi_j0;
                *extraction_error = m.extraction_error;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Discrete eigenvalue above the band at coupling mu, when it exists.
/// `exists` is set accordingly; `energy` and `ln_gap` are written only when
/// it does. `ln_gap` carries ln(E - e_max), meaningful even when the gap
/// underflows `energy` itself.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_solve_top(
    g: *const BandedgeEvaluator,
    p: *const BandedgePotential,
    mu: f64,
    exists: *mut bool,
    energy: *mut f64,
    ln_gap: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(p);
        nonnull!(exists);
        nonnull!(energy);
        nonnull!(ln_gap);
        match solve_top_detailed(&(*g).inner, &(*p).inner, mu) {
            Ok(Some(sol)) => {
                *exists = true;
                *energy = sol.energy;
                *ln_gap = sol.ln_gap;
                BandedgeStatus::Ok
            }
            Ok(None) => {
                *exists = false;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Discrete eigenvalue below the band at coupling mu, when it exists;
/// `ln_gap` carries ln(e_min - e).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bandedge_solve_bottom(
    g: *const BandedgeEvaluator,
    p: *const BandedgePotential,
    mu: f64,
    exists: *mut bool,
    energy: *mut f64,
    ln_gap: *mut f64,
) -> BandedgeStatus {
    guarded(|| {
        nonnull!(g);
        nonnull!(p);
        nonnull!(exists);
        nonnull!(energy);
        nonnull!(ln_gap);
        match solve_bottom_detailed(&(*g).inner, &(*p).inner, mu) {
            Ok(Some(sol)) => {
                *exists = true;
                *energy = sol.energy;
                *ln_gap = sol.ln_gap;
                BandedgeStatus::Ok
            }
            Ok(None) => {
                *exists = false;
                BandedgeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
