//! Quadratic form of |x||p| + |p||x| in the position-space representation of
//! |p|, the constant gamma_d with its sign change at d = 2, and the
//! non-relativistic counterpart |x| p^2 + p^2 |x| which fails in 2D.
//!
//! For a radial state the double integral over R^d x R^d is reduced to the
//! ratio `rho = |x|/|y|` and the magnitude `s = |y|`; the angular part is the
//! kernel `K_d` of [`crate::quadrature`]. Folding `rho -> 1/rho` and writing
//! `rho = e^{-x}`, `s = e^y` gives
//!
//! ```text
//! t = 2 |S^{d-1}| 2^{-(d+1)/2} int_0^inf dx e^{-x(d-1)/2} K_d(cosh x, eta) I(x),
//! I(x) = int dy e^{d y} (psi(e^{y-x}) - psi(e^y)) (e^{-x} psi(e^{y-x}) - psi(e^y)).
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{angular_kernel_shifted, Integrator, QuadResult};
use crate::special::{gamma as gamma_fn, sphere_area};
use crate::trial::TrialFunction;

/// Spatial dimension, continued to real values above 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Dimension(f64);

impl Dimension {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 1.0) || !d.is_finite() {
            return Err(Error::InputDomain(format!("dimension must be a finite real > 1, got {d}")));
        }
        Ok(Dimension(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Exponent (d+1)/2 of the kernel |x - y|^{-(d+1)}.
    fn half_exponent(self) -> f64 {
        0.5 * (self.0 + 1.0)
    }
}

/// alpha_d = Gamma((d+1)/2) / (2 pi^{(d+1)/2}), the prefactor of the
/// position-space form of |p|.
pub fn alpha(d: Dimension) -> f64 {
    let h = d.half_exponent();
    gamma_fn(h) / (2.0 * PI.powf(h))
}

/// r^{(d-1)/2} + r^{-(d-1)/2} - r^{1/2} - r^{-1/2}.
///
/// Evaluated as 4 sinh(d L/4) sinh((d-2) L/4) with L = ln r, which keeps the
/// sign exact near d = 2 and r = 1.
pub fn bracket(d: Dimension, r: f64) -> f64 {
    bracket_log(d.value(), r.ln())
}

fn bracket_log(d: f64, log_r: f64) -> f64 {
    4.0 * (0.25 * d * log_r).sinh() * (0.25 * (d - 2.0) * log_r).sinh()
}

/// Which substitution carries the gamma_d integral over (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaRoute {
    /// r = e^{-s}, s in (0, inf)
    Exponential,
    /// r = t^2, t in (0, 1)
    Square,
}

fn inner_tol(tol: f64) -> f64 {
    (tol * 1e-2).clamp(1e-13, 1e-8)
}

/// gamma_d = 2^{-(d-1)/2} int_0^1 (dr/r) bracket(d, r) K_d((r + 1/r)/2, 0).
pub fn gamma(d: Dimension, tol: f64) -> Result<QuadResult> {
    gamma_via(d, tol, GammaRoute::Exponential)
}

pub fn gamma_via(d: Dimension, tol: f64, route: GammaRoute) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let dv = d.value();
    let ktol = inner_tol(tol);
    let prefactor = 2f64.powf(-0.5 * (dv - 1.0));
    // inner kernel failures are smuggled out through this cell
    let failure = std::cell::RefCell::new(None);
    let kernel = |delta: f64| match angular_kernel_shifted(dv, delta, 0.0, ktol) {
        // the bracket vanishes to second order where the kernel blows up
        _ if !delta.is_finite() || delta < 1e-200 => 0.0,
        Ok(k) => k.value,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let integ = Integrator::new(tol).with_abs_tol(1e-300);
    let result = match route {
        GammaRoute::Exponential => integ.integrate_to(
            |s: f64| {
                let b = bracket_log(dv, -s);
                if b == 0.0 || !b.is_finite() {
                    return 0.0;
                }
                let half = (0.5 * s).sinh();
                b * kernel(2.0 * half * half)
            },
            0.0,
            f64::INFINITY,
        ),
        GammaRoute::Square => integ.integrate_with_breaks(
            |t: f64| {
                let b = bracket_log(dv, 2.0 * t.ln());
                if b == 0.0 || !b.is_finite() {
                    return 0.0;
                }
                let w = 1.0 - t * t;
                2.0 / t * b * kernel(w * w / (2.0 * t * t))
            },
            &[0.0, 0.5, 0.9, 0.99, 1.0],
        ),
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(result?.scaled(prefactor))
}

/// 2 alpha_d gamma_d, the lower bound on |x||p| + |p||x|.
pub fn lower_bound(d: Dimension) -> Result<f64> {
    Ok(2.0 * alpha(d) * gamma(d, 1e-10)?.value)
}

/// Bisection for the zero of d -> gamma_d on `[lo, hi]`.
pub fn gamma_root(lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let sign = |d: f64| -> Result<f64> { Ok(gamma(Dimension::new(d)?, 1e-8)?.value.signum()) };
    let (mut a, mut b) = (lo, hi);
    let sa = sign(a)?;
    if sa == sign(b)? {
        return Err(Error::InputDomain(format!("gamma_d has no sign change on [{lo}, {hi}]")));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let s = sign(mid)?;
        if s == 0.0 {
            return Ok(mid);
        }
        if s == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Extrapolated value of the regularised form together with its schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    /// t at eps -> 0, extrapolated from the schedule.
    pub value: f64,
    /// (eps, t(eps)) in schedule order.
    pub epsilon_schedule: Vec<(f64, f64)>,
    pub extrapolated: bool,
    /// t evaluated with no regulariser; the integrand is bounded on the diagonal.
    pub direct: f64,
    /// ||psi||^2 in R^d, the natural scale of t.
    pub scale: f64,
    /// Whether t(eps) is monotone across the schedule.
    pub monotone_in_eps: bool,
    /// Exponent p of the assumed expansion t(eps) = t(0) + c1 eps^p + c2 eps^{2p} + ...
    pub order: f64,
}

impl FormValue {
    /// Re(|x| psi, |p| psi) = alpha_d t.
    pub fn weighted(&self, d: Dimension) -> f64 {
        alpha(d) * self.value
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FormOptions {
    pub outer_tol: f64,
    pub inner_tol: f64,
}

impl Default for FormOptions {
    fn default() -> Self {
        FormOptions { outer_tol: 1e-9, inner_tol: 1e-11 }
    }
}

pub const DEFAULT_EPS_SCHEDULE: [f64; 4] = [1e-4, 1e-6, 1e-8, 1e-10];

/// ||psi||^2 = |S^{d-1}| int e^{d y} psi(e^y)^2 dy.
pub fn norm_squared(psi: &dyn TrialFunction, d: Dimension, tol: f64) -> Result<f64> {
    let dv = d.value();
    if !psi.integrable_with(dv) {
        return Err(Error::InputDomain(format!("trial function is not square integrable in dimension {dv}")));
    }
    let (lo, hi) = psi.log_window(dv);
    let mut breaks = vec![lo, hi];
    breaks.extend(psi.log_kinks().into_iter().filter(|k| *k > lo && *k < hi));
    breaks.sort_by(f64::total_cmp);
    let r = Integrator::new(tol)
        .with_abs_tol(1e-300)
        .integrate_with_breaks(|y| (dv * y + 2.0 * psi.log_value(y)).exp(), &breaks)?;
    Ok(sphere_area(dv - 1.0) * r.value)
}

fn validate_schedule(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Error::Config(format!("epsilon schedule needs at least 3 entries, got {}", eps.len())));
    }
    if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::Config("epsilon values must be positive and finite".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("epsilon schedule must be strictly decreasing".into()));
    }
    Ok(())
}

// e^{dy} (psi(e^{y-x}) - psi(e^y)) (e^{-x} psi(e^{y-x}) - psi(e^y))
fn pair_integrand(psi: &dyn TrialFunction, d: f64, y: f64, x: f64) -> f64 {
    let ly = psi.log_value(y);
    let ratio = psi.log_ratio(y, x);
    if ly.is_finite() && ratio.is_finite() && ratio.abs() <= 1.0 {
        (d * y + 2.0 * ly).exp() * ratio.exp_m1() * (ratio - x).exp_m1()
    } else {
        let lyx = psi.log_value(y - x);
        let h = 0.5 * d * y;
        let a = (h + lyx).exp() - (h + ly).exp();
        let b = (h + lyx - x).exp() - (h + ly).exp();
        a * b
    }
}

// e^{(d-1)y} (psi(e^{y-x}) - psi(e^y))^2
fn momentum_integrand(psi: &dyn TrialFunction, d: f64, y: f64, x: f64) -> f64 {
    let ly = psi.log_value(y);
    let ratio = psi.log_ratio(y, x);
    if ly.is_finite() && ratio.is_finite() && ratio.abs() <= 1.0 {
        let m = ratio.exp_m1();
        ((d - 1.0) * y + 2.0 * ly).exp() * m * m
    } else {
        let h = 0.5 * (d - 1.0) * y;
        let a = (h + psi.log_value(y - x)).exp() - (h + ly).exp();
        a * a
    }
}

fn y_breaks(psi: &dyn TrialFunction, weight: f64, x: f64) -> Vec<f64> {
    let (lo, hi) = psi.log_window(weight);
    let mut pts = vec![lo, hi, lo + x, hi + x];
    for k in psi.log_kinks() {
        pts.push(k);
        pts.push(k + x);
    }
    let (a, b) = (lo, hi + x);
    pts.retain(|p| *p >= a && *p <= b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

const X_BREAKS: [f64; 12] = [0.0, 1e-3, 1e-2, 0.05, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 44.0];

/// Outer radial integral shared by the anticommutator and |p| forms.
fn folded_form(
    psi: &dyn TrialFunction,
    d: Dimension,
    eps: f64,
    opts: FormOptions,
    weight: f64,
    inner: impl Fn(&dyn TrialFunction, f64, f64, f64) -> f64 + Sync,
) -> Result<QuadResult> {
    let dv = d.value();
    if !psi.integrable_with(weight) {
        return Err(Error::InputDomain(format!(
            "trial function decays too slowly for dimension {dv}: need 2 kappa > {weight}"
        )));
    }
    let p = d.half_exponent();
    let failure = std::cell::RefCell::new(None);
    let outer = |x: f64| -> f64 {
        if x < 1e-150 {
            return 0.0;
        }
        let half = (0.5 * x).sinh();
        let delta = 2.0 * half * half;
        let eta = 2.0 * eps * (p * x).cosh();
        let kernel = match angular_kernel_shifted(dv, delta, eta, opts.inner_tol) {
            Ok(k) => k.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return 0.0;
            }
        };
        let pts = y_breaks(psi, weight, x);
        let radial = match Integrator::new(opts.inner_tol)
            .with_abs_tol(1e-300)
            .integrate_with_breaks(|y| inner(psi, dv, y, x), &pts)
        {
            Ok(r) => r.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return 0.0;
            }
        };
        (-0.5 * (dv - 1.0) * x).exp() * kernel * radial
    };
    let result = Integrator::new(opts.outer_tol).with_abs_tol(1e-300).integrate_with_breaks(outer, &X_BREAKS);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let prefactor = 2.0 * sphere_area(dv - 1.0) * 2f64.powf(-p);
    Ok(result?.scaled(prefactor))
}

/// t(eps) for one regulariser value; `eps = 0` is allowed.
pub fn regularized_form(psi: &dyn TrialFunction, d: Dimension, eps: f64, opts: FormOptions) -> Result<QuadResult> {
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {eps}")));
    }
    folded_form(psi, d, eps, opts, d.value() + 1.0, pair_integrand)
}

/// (psi, |p| psi) = alpha_d int int |psi(x) - psi(y)|^2 / |x - y|^{d+1}.
pub fn momentum_form(psi: &dyn TrialFunction, d: Dimension, opts: FormOptions) -> Result<f64> {
    let raw = folded_form(psi, d, 0.0, opts, d.value(), momentum_integrand)?;
    Ok(alpha(d) * raw.value)
}

/// Regularised anticommutator form t(eps) over a schedule, extrapolated to
/// eps = 0.
///
/// Near the diagonal the regulariser only bites where (u - 1) is below
/// eta^{2/(d+1)}, which makes t(eps) - t(0) scale like eps^{1/(d+1)}; the
/// extrapolation is the interpolating polynomial in h = eps^{1/(d+1)} through
/// every schedule point, evaluated at h = 0.
pub fn relativistic_form(
    psi: &dyn TrialFunction,
    d: Dimension,
    eps_schedule: &[f64],
    opts: FormOptions,
) -> Result<FormValue> {
    validate_schedule(eps_schedule)?;
    let dv = d.value();
    let (lo, hi) = psi.log_window(dv + 1.0);
    if !(hi > lo) {
        return Err(Error::InputDomain("trial function has an empty support window".into()));
    }
    let mut schedule = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        schedule.push((eps, regularized_form(psi, d, eps, opts)?.value));
    }
    let direct = regularized_form(psi, d, 0.0, opts)?.value;
    let order = 1.0 / (dv + 1.0);
    let value = extrapolate_to_zero(&schedule, order);
    let diffs: Vec<f64> = schedule.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let monotone = diffs.iter().all(|v| *v >= 0.0) || diffs.iter().all(|v| *v <= 0.0);
    Ok(FormValue {
        value,
        epsilon_schedule: schedule,
        extrapolated: true,
        direct,
        scale: norm_squared(psi, d, 1e-12)?,
        monotone_in_eps: monotone,
        order,
    })
}

/// Lagrange interpolation in h = eps^order evaluated at h = 0.
pub fn extrapolate_to_zero(points: &[(f64, f64)], order: f64) -> f64 {
    let hs: Vec<f64> = points.iter().map(|(e, _)| e.powf(order)).collect();
    let mut total = 0.0;
    for (i, (_, ti)) in points.iter().enumerate() {
        let mut w = 1.0;
        for (j, hj) in hs.iter().enumerate() {
            if i != j {
                w *= hj / (hj - hs[i]);
            }
        }
        total += w * ti;
    }
    total
}

/// Non-relativistic form Re<|x| psi, p^2 psi> for a radial state in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonrelForm {
    /// Q = 2 pi ( int r^2 psi'^2 dr - 1/2 int psi^2 dr )
    pub q: f64,
    /// 2 pi int psi^2 dr
    pub norm: f64,
    /// Q / norm, invariant under dilations
    pub normalized: f64,
    pub abs_error_estimate: f64,
}

pub fn nonrel_form(psi: &dyn TrialFunction) -> Result<NonrelForm> {
    if !psi.integrable_with(3.0) {
        return Err(Error::InputDomain("r psi'(r) must be square integrable against r dr".into()));
    }
    let (lo, hi) = psi.log_window(3.0);
    let mut breaks = vec![lo, hi];
    breaks.extend(psi.log_kinks().into_iter().filter(|k| *k > lo && *k < hi));
    breaks.sort_by(f64::total_cmp);
    let integ = Integrator::new(1e-13).with_abs_tol(1e-300);
    // int r^2 psi'^2 dr = int (dpsi/dy)^2 e^y dy
    let kinetic = integ.integrate_with_breaks(
        |y| {
            let s = psi.slope(y);
            s * s * y.exp()
        },
        &breaks,
    )?;
    let mass = integ.integrate_with_breaks(|y| (y + 2.0 * psi.log_value(y)).exp(), &breaks)?;
    let q = 2.0 * PI * (kinetic.value - 0.5 * mass.value);
    let norm = 2.0 * PI * mass.value;
    Ok(NonrelForm {
        q,
        norm,
        normalized: q / norm,
        abs_error_estimate: 2.0 * PI * (kinetic.abs_error_estimate + 0.5 * mass.abs_error_estimate),
    })
}

/// Minimiser of the normalised non-relativistic form over log-Gaussian widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonrelScan {
    pub sigma: f64,
    pub form: NonrelForm,
    /// A negative value was found and its error estimate is smaller than it.
    pub violation: bool,
}

pub fn find_nonrel_violation(sigma_lo: f64, sigma_hi: f64) -> Result<NonrelScan> {
    use crate::trial::LogGaussian;
    if !(sigma_lo > 0.0) || !(sigma_hi > sigma_lo) {
        return Err(Error::Config(format!("invalid width range [{sigma_lo}, {sigma_hi}]")));
    }
    let eval = |s: f64| -> Result<NonrelForm> { nonrel_form(&LogGaussian::new(s)?) };
    let n = 64;
    let grid: Vec<f64> = (0..=n).map(|i| sigma_lo + (sigma_hi - sigma_lo) * i as f64 / n as f64).collect();
    let mut best = 0;
    let mut values = Vec::with_capacity(grid.len());
    for (i, &s) in grid.iter().enumerate() {
        let v = eval(s)?.normalized;
        if i == 0 || v < values[best] {
            best = i;
        }
        values.push(v);
    }
    // golden-section refinement on the neighbouring cells
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let mut fc = eval(c)?.normalized;
    let mut fe = eval(e)?.normalized;
    for _ in 0..60 {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = eval(c)?.normalized;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = eval(e)?.normalized;
        }
    }
    let mut sigma = 0.5 * (a + b);
    let mut form = eval(sigma)?;
    if values[best] < form.normalized {
        sigma = grid[best];
        form = eval(sigma)?;
    }
    Ok(NonrelScan { sigma, form, violation: form.q < 0.0 && form.abs_error_estimate < form.q.abs() })
}
