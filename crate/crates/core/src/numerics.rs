//! Small shared numerical utilities: compensated summation, Gauss–Legendre
//! rules, polynomial extrapolation to zero, smooth cutoffs, bisection.

use std::sync::OnceLock;

/// Compensated (Kahan–Neumaier) summation.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial and cached per order.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static CACHE32: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        16 => CACHE16.get_or_init(|| gl_compute(16)),
        32 => CACHE32.get_or_init(|| gl_compute(32)),
        _ => panic!("gauss_legendre cached only for n = 16, 32"),
    }
}

fn gl_compute(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Chebyshev-based initial guess for the k-th root.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate `f` over [a, b] with a fixed-order Gauss–Legendre rule.
pub fn gl_integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Polynomial (Neville) extrapolation of samples (x_k, f_k) to x = 0, using
/// `levels` elimination columns. Returns the extrapolated value together with
/// the difference between the last two entries of the final column, which
/// serves as the observed residual.
pub fn neville_to_zero(xs: &[f64], fs: &[f64], levels: usize) -> (f64, f64) {
    assert_eq!(xs.len(), fs.len());
    assert!(xs.len() > levels, "need more samples than elimination levels");
    let mut col: Vec<f64> = fs.to_vec();
    let n = xs.len();
    for m in 1..=levels {
        let mut next = Vec::with_capacity(n - m);
        for k in 0..n - m {
            let x0 = xs[k];
            let x1 = xs[k + m];
            // Value at 0 of the interpolant through the two lower-level entries.
            next.push((x0 * col[k + 1] - x1 * col[k]) / (x0 - x1));
        }
        col = next;
    }
    let last = *col.last().unwrap();
    let resid = if col.len() >= 2 { (last - col[col.len() - 2]).abs() } else { f64::NAN };
    (last, resid)
}

/// C^7 polynomial smoothstep on [0, 1]: S(0) = 0, S(1) = 1, with seven
/// vanishing derivatives at both ends. Piecewise-polynomial, so quadrature
/// panels that end exactly at the junctions see an analytic integrand.
pub fn smoothstep7(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    // Evaluate on [0, 1/2] and reflect; the alternating sum cancels badly
    // near 1.
    if s > 0.5 {
        return 1.0 - smoothstep7(1.0 - s);
    }
    // S_7(x) = x^8 * sum_{k=0}^{7} C(7+k, k) C(15, 7-k) (-x)^k
    let coeffs = [6435.0, -40040.0, 108108.0, -163800.0, 150150.0, -83160.0, 25740.0, -3432.0];
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * s + c;
    }
    acc * s.powi(8)
}

/// Bisection for a monotone-decreasing `f` with f(lo) >= 0 >= f(hi).
/// Returns the midpoint after `iters` halvings.
pub fn bisect_decreasing(
    mut lo: f64,
    mut hi: f64,
    f: &mut dyn FnMut(f64) -> f64,
    iters: usize,
) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope through the origin of y against x. Zero when all x vanish.
pub fn ls_slope_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    sxy / sxx
}
