//! Exercises the C ABI exactly as a foreign caller would: through raw
//! pointers and status codes.

use bandedge_ffi::*;
use std::ptr;

fn make_laplacian_1d() -> *mut BandedgeDispersion {
    let mut d: *mut BandedgeDispersion = ptr::null_mut();
    let st = unsafe { bandedge_dispersion_laplacian(1, &mut d) };
    assert_eq!(st, BandedgeStatus::Ok);
    assert!(!d.is_null());
    d
}

fn make_evaluator(d: *const BandedgeDispersion) -> *mut BandedgeEvaluator {
    let mut g: *mut BandedgeEvaluator = ptr::null_mut();
    let st = unsafe { bandedge_evaluator_new(d, &mut g) };
    assert_eq!(st, BandedgeStatus::Ok);
    g
}

fn make_potential(entries: &[([i64; 2], f64)]) -> *mut BandedgePotential {
    let sites: Vec<i64> = entries.iter().flat_map(|(x, _)| [x[0], x[1]]).collect();
    let values: Vec<f64> = entries.iter().map(|(_, v)| *v).collect();
    let mut p: *mut BandedgePotential = ptr::null_mut();
    let st = unsafe {
        bandedge_potential_new(1, entries.len(), sites.as_ptr(), values.as_ptr(), &mut p)
    };
    assert_eq!(st, BandedgeStatus::Ok);
    p
}

#[test]
fn version_is_nonempty() {
    let v = bandedge_version();
    assert!(!v.is_null());
    let s = unsafe { std::ffi::CStr::from_ptr(v) }.to_str().unwrap();
    assert!(!s.is_empty());
}

#[test]
fn extrema_and_green_roundtrip() {
    let d = make_laplacian_1d();
    let mut ext = BandedgeExtrema {
        p_min: [0.0; 2],
        p_max: [0.0; 2],
        e_min: 0.0,
        e_max: 0.0,
        nondegenerate: false,
        unique: false,
    };
    let st = unsafe { bandedge_dispersion_extrema(d, &mut ext) };
    assert_eq!(st, BandedgeStatus::Ok);
    assert!((ext.e_max - 2.0).abs() < 1e-12);
    assert!(ext.nondegenerate && ext.unique);

    let g = make_evaluator(d);
    let (mut v, mut err) = (0.0, 0.0);
    let st = unsafe { bandedge_a_of_z(g, 3.0, &mut v, &mut err) };
    assert_eq!(st, BandedgeStatus::Ok);
    assert!((v - 0.5773502691896258).abs() < 1e-10);

    let x = [1i64, 0];
    let st = unsafe { bandedge_green_x(g, x.as_ptr(), 3.0, &mut v, &mut err) };
    assert_eq!(st, BandedgeStatus::Ok);
    assert!((v + 0.15470053837925146).abs() < 1e-10);

    unsafe {
        bandedge_evaluator_free(g);
        bandedge_dispersion_free(d);
    }
}

#[test]
fn solve_and_count_through_abi() {
    let d = make_laplacian_1d();
    let g = make_evaluator(d);
    let p = make_potential(&[([0, 0], 1.0)]);

    let mut lam = 0.0;
    assert_eq!(unsafe { bandedge_lambda_max(g, p, 3.0, &mut lam) }, BandedgeStatus::Ok);
    assert!((lam - 0.5773502691896258).abs() < 1e-10);

    let mut count = 0usize;
    assert_eq!(
        unsafe { bandedge_count_bs_crossings(g, p, 2.0, 3.0, &mut count) },
        BandedgeStatus::Ok
    );
    assert_eq!(count, 1);

    let (mut exists, mut energy, mut ln_gap) = (false, 0.0, 0.0);
    let st = unsafe { bandedge_solve_top(g, p, 1.0, &mut exists, &mut energy, &mut ln_gap) };
    assert_eq!(st, BandedgeStatus::Ok);
    assert!(exists);
    assert!((energy - (1.0 + 2.0f64.sqrt())).abs() < 1e-10);

    let st = unsafe { bandedge_solve_bottom(g, p, 0.5, &mut exists, &mut energy, &mut ln_gap) };
    assert_eq!(st, BandedgeStatus::Ok);
    assert!(!exists);

    let (mut pj, mut perr) = (0.0, 0.0);
    assert_eq!(unsafe { bandedge_morse_constant(g, 0, &mut pj, &mut perr) }, BandedgeStatus::Ok);
    assert!((pj - 1.0 / 2.0f64.sqrt()).abs() < 1e-6);

    unsafe {
        bandedge_potential_free(p);
        bandedge_evaluator_free(g);
        bandedge_dispersion_free(d);
    }
}

#[test]
fn kappa_through_abi() {
    let d = make_laplacian_1d();
    let g = make_evaluator(d);
    let p = make_potential(&[([0, 0], 1.0), ([1, 0], -1.0)]);
    let mut k = 0.0;
    assert_eq!(unsafe { bandedge_kappa_top(g, p, &mut k) }, BandedgeStatus::Ok);
    assert!((k - 2.0).abs() < 1e-8);
    assert_eq!(unsafe { bandedge_kappa_bottom(g, p, &mut k) }, BandedgeStatus::Ok);
    assert!((k - 2.0).abs() < 1e-8);

    // kappa0 != 0 must surface as a domain error with a message
    let bad = make_potential(&[([0, 0], 1.0)]);
    assert_eq!(unsafe { bandedge_kappa_top(g, bad, &mut k) }, BandedgeStatus::Domain);
    let msg = bandedge_last_error_message();
    assert!(!msg.is_null());
    let text = unsafe { std::ffi::CStr::from_ptr(msg) }.to_string_lossy().to_string();
    assert!(text.contains("kappa"), "{text}");
    unsafe { bandedge_string_free(msg) };

    unsafe {
        bandedge_potential_free(bad);
        bandedge_potential_free(p);
        bandedge_evaluator_free(g);
        bandedge_dispersion_free(d);
    }
}

#[test]
fn error_paths_and_nulls() {
    let d = make_laplacian_1d();
    let g = make_evaluator(d);
    let p = make_potential(&[([0, 0], 1.0)]);

    let (mut v, mut err) = (0.0, 0.0);
    // z inside the band
    assert_eq!(unsafe { bandedge_a_of_z(g, 1.0, &mut v, &mut err) }, BandedgeStatus::Domain);
    // null pointer detection
    assert_eq!(
        unsafe { bandedge_a_of_z(ptr::null(), 3.0, &mut v, &mut err) },
        BandedgeStatus::NullPointer
    );
    // invalid dimension
    let mut d3: *mut BandedgeDispersion = ptr::null_mut();
    assert_eq!(
        unsafe { bandedge_dispersion_laplacian(3, &mut d3) },
        BandedgeStatus::InvalidArgument
    );

    unsafe {
        bandedge_potential_free(p);
        bandedge_evaluator_free(g);
        bandedge_dispersion_free(d);
    }
}

#[test]
fn header_was_generated() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bandedge.h");
    let text = std::fs::read_to_string(header).expect("cbindgen header present");
    assert!(text.contains("BANDEDGE_H"));
    assert!(text.contains("bandedge_solve_top"));
    assert!(text.contains("typedef struct BandedgeEvaluator BandedgeEvaluator;"));
}
