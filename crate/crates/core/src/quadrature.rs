//! Adaptive Gauss-Kronrod quadrature and the angular kernels over S^{d-1}.
//!
//! The integrator is a global adaptive scheme: the segment with the largest
//! error estimate is bisected until the summed estimate meets the tolerance.
//! Segment selection breaks ties by creation order, so a given integrand and
//! tolerance always produce the same bits.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::sphere_area;

/// Outcome of a quadrature: value, error estimate and the number of
/// integrand evaluations spent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: 0.0, abs_error_estimate: 0.0, evaluations: 0 }
    }

    pub fn scaled(self, factor: f64) -> Self {
        QuadResult {
            value: self.value * factor,
            abs_error_estimate: self.abs_error_estimate * factor.abs(),
            evaluations: self.evaluations,
        }
    }

    /// Sum of two independent results.
    pub fn combine(self, other: QuadResult) -> Self {
        QuadResult {
            value: self.value + other.value,
            abs_error_estimate: self.abs_error_estimate + other.abs_error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

pub const DEFAULT_MAX_SUBDIVISIONS: usize = 10_000;

// 15-point Kronrod extension of the 7-point Gauss rule. Nodes are listed
// from the centre outwards; even indices are shared with the Gauss rule.
const XGK: [f64; 8] = [
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];

const WGK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];

const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

const NODES_PER_SEGMENT: usize = 15;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
    id: usize,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on error; older segments first on ties.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, id: usize) -> Result<Segment> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    check_finite(fc, centre)?;
    let mut kronrod = WGK[0] * fc;
    let mut gauss = WG[0] * fc;
    let mut resabs = WGK[0] * fc.abs();
    for j in 1..8 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        check_finite(f1, centre - dx)?;
        check_finite(f2, centre + dx)?;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 0 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        resabs: resabs * half.abs(),
        id,
    })
}

/// Nodes and weights of the 15-point Kronrod rule repeated on `panels`
/// equal panels of [a, b]. For smooth integrands sampled many times.
pub fn composite_rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut out = Vec::with_capacity(panels * NODES_PER_SEGMENT);
    for p in 0..panels {
        let centre = a + (p as f64 + 0.5) * width;
        out.push((centre, WGK[0] * half));
        for j in 1..8 {
            out.push((centre - half * XGK[j], WGK[j] * half));
            out.push((centre + half * XGK[j], WGK[j] * half));
        }
    }
    out
}

fn check_finite(v: f64, x: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InputDomain(format!("integrand returned {v} at x = {x}")))
    }
}

/// Global adaptive Gauss-Kronrod integrator.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Integrator {
    pub fn new(rel_tol: f64) -> Self {
        Integrator { rel_tol, abs_tol: 0.0, max_subdivisions: DEFAULT_MAX_SUBDIVISIONS }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 || self.abs_tol > 0.0) || self.rel_tol < 0.0 || self.abs_tol < 0.0 {
            return Err(Error::Config(format!(
                "tolerances must be non-negative and not both zero (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        Ok(())
    }

    /// Integrates over a finite interval.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrates over `[points[0], points[last]]`, starting from the
    /// segments delimited by `points` (which must be finite and increasing).
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<QuadResult> {
        self.validate()?;
        if points.len() < 2 {
            return Err(Error::Config("need at least two break points".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InputDomain("break points must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("break points must be non-decreasing".into()));
        }

        let mut heap = BinaryHeap::new();
        let mut next_id = 0;
        for w in points.windows(2) {
            if w[1] > w[0] {
                heap.push(gauss_kronrod(&f, w[0], w[1], next_id)?);
                next_id += 1;
            }
        }
        if heap.is_empty() {
            return Ok(QuadResult { value: 0.0, abs_error_estimate: 0.0, evaluations: 0 });
        }
        let mut evaluations = heap.len() * NODES_PER_SEGMENT;
        let mut subdivisions = 0;
        let (mut value, mut error, mut resabs) = totals(&heap);

        loop {
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            let roundoff = 50.0 * f64::EPSILON * resabs;
            if error <= target || error <= roundoff {
                let (value, error, _) = totals(&heap);
                return Ok(QuadResult { value, abs_error_estimate: error, evaluations });
            }
            let worst = *heap.peek().expect("heap is non-empty");
            let mid = 0.5 * (worst.a + worst.b);
            let splittable = mid > worst.a && mid < worst.b;
            if subdivisions >= self.max_subdivisions || !splittable {
                let (value, error, _) = totals(&heap);
                return Err(Error::AccuracyNotReached {
                    best: QuadResult { value, abs_error_estimate: error, evaluations },
                    subdivisions,
                });
            }
            heap.pop();
            let left = gauss_kronrod(&f, worst.a, mid, next_id)?;
            let right = gauss_kronrod(&f, mid, worst.b, next_id + 1)?;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            resabs += left.resabs + right.resabs - worst.resabs;
            heap.push(left);
            heap.push(right);
            next_id += 2;
            evaluations += 2 * NODES_PER_SEGMENT;
            subdivisions += 1;
            // running sums drift; resynchronise now and then
            if subdivisions % 256 == 0 {
                (value, error, resabs) = totals(&heap);
            }
        }
    }
    /// Integrates over `(a, b)` where `b` may be `+inf`.
    ///
    /// Semi-infinite ranges are mapped onto a finite one: for `a > 0` by
    /// `x = a e^s`, for `a = 0` by `x = e^s`, both followed by a rational
    /// compactification of `s`; for `a < 0` by `x = a + t/(1-t)`. Nodes that
    /// land beyond the floating-point range contribute zero.
    pub fn integrate_to<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        if a.is_nan() || b.is_nan() || a == f64::NEG_INFINITY {
            return Err(Error::InputDomain(format!("unsupported interval ({a}, {b})")));
        }
        if b.is_finite() {
            return self.integrate(f, a, b);
        }
        if b != f64::INFINITY {
            return Err(Error::InputDomain(format!("unsupported interval ({a}, {b})")));
        }
        if a > 0.0 {
            let g = |t: f64| {
                let one_minus = 1.0 - t;
                let s = t / one_minus;
                let x = a * s.exp();
                let jac = x / (one_minus * one_minus);
                if !x.is_finite() || !jac.is_finite() {
                    return 0.0;
                }
                f(x) * jac
            };
            self.integrate(g, 0.0, 1.0)
        } else if a == 0.0 {
            let g = |u: f64| {
                let q = 1.0 - u * u;
                let s = u / q;
                let x = s.exp();
                let jac = x * (1.0 + u * u) / (q * q);
                if !x.is_finite() || !jac.is_finite() || x == 0.0 {
                    return 0.0;
                }
                f(x) * jac
            };
            self.integrate_with_breaks(g, &[-1.0, 0.0, 1.0])
        } else {
            let g = |t: f64| {
                let one_minus = 1.0 - t;
                let x = a + t / one_minus;
                let jac = 1.0 / (one_minus * one_minus);
                if !x.is_finite() || !jac.is_finite() {
                    return 0.0;
                }
                f(x) * jac
            };
            self.integrate(g, 0.0, 1.0)
        }
    }
}

fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64, f64) {
    // Sum in position order so the result does not depend on heap layout.
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    segs.iter().fold((0.0, 0.0, 0.0), |(v, e, r), s| (v + s.value, e + s.error, r + s.resabs))
}

/// Integrates `f` over `(a, b)` (`b` may be `+inf`) to relative tolerance `tol`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if !(b > a) {
        return Err(Error::InputDomain(format!("need a < b, got ({a}, {b})")));
    }
    Integrator::new(tol).integrate_to(f, a, b)
}

/// Parameters of the angular kernel
/// K_d(u, eta) = int_{S^{d-1}} dw [ (u - w.e)^{(d+1)/2} + eta ]^{-1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularKernelQuery {
    pub d: f64,
    pub u: f64,
    pub eta: f64,
}

pub const DEFAULT_KERNEL_TOL: f64 = 1e-12;

pub fn angular_kernel(q: AngularKernelQuery) -> Result<QuadResult> {
    if !(q.u >= 1.0) {
        return Err(Error::InputDomain(format!("angular kernel needs u >= 1, got {}", q.u)));
    }
    angular_kernel_shifted(q.d, q.u - 1.0, q.eta, DEFAULT_KERNEL_TOL)
}

/// K_d evaluated at `u = 1 + delta`.
///
/// Taking `delta` directly keeps full relative precision when `u` is within
/// rounding of 1, which is where the radial integrals spend their effort.
pub fn angular_kernel_shifted(d: f64, delta: f64, eta: f64, tol: f64) -> Result<QuadResult> {
    if !(d >= 1.0) || !d.is_finite() {
        return Err(Error::InputDomain(format!("dimension must be >= 1, got {d}")));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InputDomain(format!("u - 1 must be >= 0, got {delta}")));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InputDomain(format!("regulariser must be >= 0, got {eta}")));
    }
    if eta == 0.0 && delta == 0.0 {
        return Err(Error::Singular("angular kernel at u = 1 without regulariser".into()));
    }
    let p = 0.5 * (d + 1.0);

    if d == 1.0 {
        // S^0 = {e, -e}
        let value = 1.0 / (delta.powf(p) + eta) + 1.0 / ((delta + 2.0).powf(p) + eta);
        return Ok(QuadResult { value, abs_error_estimate: 0.0, evaluations: 2 });
    }

    // u - cos(theta) = delta + 2 sin^2(theta/2)
    let near = |theta: f64| {
        let s = (0.5 * theta).sin();
        1.0 / ((delta + 2.0 * s * s).powf(p) + eta)
    };
    // same, written in phi = pi - theta
    let far = |phi: f64| {
        let c = (0.5 * phi).cos();
        1.0 / ((delta + 2.0 * c * c).powf(p) + eta)
    };
    let integ = Integrator::new(tol);
    let half_pi = 0.5 * PI;

    // Width of the peak at theta = 0.
    let scale = delta.max(if eta > 0.0 { eta.powf(1.0 / p) } else { 0.0 });
    let width = (2.0 * scale).sqrt().min(half_pi);

    let sin_weight = |theta: f64| {
        if theta == 0.0 {
            1.0
        } else {
            (theta.sin() / theta).powf(d - 2.0)
        }
    };

    let (head, tail) = if d < 2.0 {
        // theta = w v^{1/(d-1)} absorbs the integrable theta^{d-2} endpoint
        // singularity: sin^{d-2}(theta) d theta = (sin theta/theta)^{d-2} w^{d-1}/(d-1) dv.
        let q = 1.0 / (d - 1.0);
        let head_factor = width.powf(d - 1.0) / (d - 1.0);
        let head = integ.integrate(
            |v| {
                let theta = width * v.powf(q);
                sin_weight(theta) * near(theta) * head_factor
            },
            0.0,
            1.0,
        )?;
        let tail_factor = half_pi.powf(d - 1.0) / (d - 1.0);
        let tail = integ.integrate(
            |v| {
                let phi = half_pi * v.powf(q);
                sin_weight(phi) * far(phi) * tail_factor
            },
            0.0,
            1.0,
        )?;
        (head, tail)
    } else {
        let head = integ.integrate(|t| t.sin().powf(d - 2.0) * near(t), 0.0, width)?;
        let tail = integ.integrate(|phi| phi.sin().powf(d - 2.0) * far(phi), 0.0, half_pi)?;
        (head, tail)
    };

    let mut breaks = vec![width];
    while let Some(&last) = breaks.last() {
        let next = 4.0 * last;
        if next >= half_pi {
            break;
        }
        breaks.push(next);
    }
    breaks.push(half_pi);
    let middle = if width < half_pi {
        integ.integrate_with_breaks(|t| t.sin().powf(d - 2.0) * near(t), &breaks)?
    } else {
        QuadResult::zero()
    };

    Ok(head.combine(middle).combine(tail).scaled(sphere_area(d - 2.0)))
}
