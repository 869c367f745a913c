//! Special functions used across the crate.
//!
//! Real gamma and Bessel functions come from `libm`; the complex log-gamma
//! and the Bessel zero finder live here.

use nalgebra::Complex;
use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Surface area of the unit sphere S^{n} embedded in R^{n+1}, continued to
/// real `n > -1`: 2 pi^{(n+1)/2} / Gamma((n+1)/2).
pub fn sphere_area(n: f64) -> f64 {
    2.0 * PI.powf(0.5 * (n + 1.0)) / gamma(0.5 * (n + 1.0))
}

// Bernoulli coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// Principal-branch-free log-gamma for complex arguments with `Re z > 0`.
///
/// The imaginary part is only correct modulo 2 pi, which is all callers need
/// (they take `exp` or the real part).
pub fn ln_gamma_complex(z: Complex<f64>) -> Complex<f64> {
    debug_assert!(z.re > 0.0, "ln_gamma_complex needs Re z > 0");
    let mut shift = Complex::new(0.0, 0.0);
    let mut w = z;
    while w.re < 10.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

/// ln |Gamma(x + i y)|.
pub fn ln_abs_gamma(x: f64, y: f64) -> f64 {
    ln_gamma_complex(Complex::new(x, y)).re
}

/// Bessel function of the first kind of integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    libm::jn(n, x)
}

/// The first `count` positive zeros of J_n, n >= 0.
pub fn bessel_j_zeros(n: u32, count: usize) -> Vec<f64> {
    let order = n as i32;
    let f = |x: f64| bessel_j(order, x);
    let mut zeros = Vec::with_capacity(count);
    // J_n > 0 on (0, j_{n,1}) and j_{n,1} > n; consecutive zeros are more
    // than 3 apart, so a 0.25 scan cannot skip a sign change.
    let step = 0.25;
    let mut lo = (n as f64).max(0.5);
    let mut flo = f(lo);
    while zeros.len() < count {
        let hi = lo + step;
        let fhi = f(hi);
        if flo == 0.0 {
            zeros.push(lo);
        } else if flo.signum() != fhi.signum() {
            zeros.push(refine_root(&f, lo, hi, flo));
        }
        lo = hi;
        flo = fhi;
    }
    zeros
}

fn refine_root(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_log_gamma_matches_real_axis() {
        for &x in &[0.25, 0.5, 1.0, 1.75, 3.3, 12.5, 40.0] {
            let got = ln_gamma_complex(Complex::new(x, 0.0)).re;
            assert!((got - ln_gamma(x)).abs() < 1e-13 * ln_gamma(x).abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn abs_gamma_on_critical_line() {
        // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
        for &y in &[0.0, 0.3, 1.0, 4.0, 12.0] {
            let lhs = 2.0 * ln_abs_gamma(0.5, y);
            let rhs = (PI / (PI * y).cosh()).ln();
            assert!((lhs - rhs).abs() < 1e-12, "y={y}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(0.0) - 2.0).abs() < 1e-14);
        assert!((sphere_area(1.0) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2.0) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn first_bessel_zeros() {
        let z0 = bessel_j_zeros(0, 3);
        for (z, want) in z0.iter().zip([2.404825557695773, 5.520078110286311, 8.653727912911013]) {
            assert!((z - want).abs() < 1e-12);
        }
        let z1 = bessel_j_zeros(1, 2);
        assert!((z1[0] - 3.831705970207512).abs() < 1e-12);
        assert!((z1[1] - 7.015586669815619).abs() < 1e-12);
        let z5 = bessel_j_zeros(5, 1);
        assert!((z5[0] - 8.771483815959954).abs() < 1e-11);
    }
}
