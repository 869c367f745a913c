//! Radial channel eigenproblems in two (and for l = 0, three) dimensions.
//!
//! Every channel operator is stored in unitary coordinates: a radial
//! function sampled as `f_i` is represented by `v_i = sqrt(w_i) f_i` where
//! `sum w_i f_i^2` approximates `int f^2 r^{d-1} dr`. The angular factor
//! `|S^{d-1}|` is left out.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{composite_rule, Integrator};
use crate::special::{bessel_j, bessel_j_zeros, ln_abs_gamma};

pub const MAX_CHANNEL: i32 = 64;

/// Logarithmically spaced radial nodes `r_min ..= r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        let g = GridSpec { r_min, r_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0) || !(self.r_max > self.r_min) || !self.r_max.is_finite() {
            return Err(Error::Config(format!("grid needs 0 < r_min < r_max, got [{}, {}]", self.r_min, self.r_max)));
        }
        if self.n < 16 {
            return Err(Error::Config(format!("grid needs at least 16 nodes, got {}", self.n)));
        }
        Ok(())
    }

    pub fn log_step(&self) -> f64 {
        (self.r_max / self.r_min).ln() / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let (a, h) = (self.r_min.ln(), self.log_step());
        (0..self.n).map(|i| (a + h * i as f64).exp()).collect()
    }

    /// Same interval with `n` replaced.
    pub fn with_nodes(&self, n: usize) -> Self {
        GridSpec { n, ..*self }
    }

    /// Log grid of width `2 half_width` e-folds centred on r = 1 with spacing `h`.
    pub fn symmetric_log(half_width: f64, h: f64) -> Result<Self> {
        let n = (2.0 * half_width / h).round() as usize + 1;
        GridSpec::new((-half_width).exp(), half_width.exp(), n)
    }
}

/// |p| restricted to one angular channel, as a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct ChannelOperator {
    pub m: i32,
    pub dimension: u32,
    pub scheme: &'static str,
    pub grid: GridSpec,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub matrix: DMatrix<f64>,
    /// max |T^2 - I| of the underlying transform; 0 when there is none.
    pub orthogonality_error: f64,
}

impl ChannelOperator {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Unitary coordinates of the radial function `f`.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.nodes.iter().zip(&self.weights).map(|(r, w)| w.sqrt() * f(*r)))
    }

    /// <v, P v> / <v, v>.
    pub fn rayleigh(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.matrix * v)) / v.norm_squared()
    }

    pub fn symmetry_error(&self) -> f64 {
        let scale = self.matrix.amax().max(f64::MIN_POSITIVE);
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(self.matrix.clone())
    }

    /// Multiplication by r in unitary coordinates.
    pub fn position(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.nodes)
    }
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// A discretisation of |p| in a single angular channel.
pub trait MomentumScheme: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn channel(&self, m: i32, grid: &GridSpec, dimension: u32) -> Result<ChannelOperator>;
}

/// Discrete Hankel transform on the zeros of J_|m| (2D), or the sine
/// transform for the l = 0 channel in 3D. Uses `r_max` and `n`; nodes are
/// the scaled Bessel zeros, so `r_min` plays no role.
#[derive(Debug, Clone, Copy)]
pub struct HankelScheme {
    pub max_orthogonality_error: f64,
}

impl Default for HankelScheme {
    fn default() -> Self {
        HankelScheme { max_orthogonality_error: 1e-2 }
    }
}

impl MomentumScheme for HankelScheme {
    fn name(&self) -> &'static str {
        "hankel"
    }

    fn channel(&self, m: i32, grid: &GridSpec, dimension: u32) -> Result<ChannelOperator> {
        grid.validate()?;
        check_channel(m)?;
        let n = grid.n;
        let big_r = grid.r_max;
        let (nodes, weights, transform, k) = match dimension {
            2 => {
                let order = m.unsigned_abs();
                let zeros = bessel_j_zeros(order, n + 1);
                let s = zeros[n];
                let jn1: Vec<f64> = zeros[..n].iter().map(|z| bessel_j(order as i32 + 1, *z)).collect();
                let mut t = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..=i {
                        let v = 2.0 * bessel_j(order as i32, zeros[i] * zeros[j] / s) / (jn1[i].abs() * jn1[j].abs() * s);
                        t[(i, j)] = v;
                        t[(j, i)] = v;
                    }
                }
                let nodes = zeros[..n].iter().map(|z| z * big_r / s).collect();
                let weights = jn1.iter().map(|b| 2.0 * big_r * big_r / (s * s * b * b)).collect();
                let k: Vec<f64> = zeros[..n].iter().map(|z| z / big_r).collect();
                (nodes, weights, t, k)
            }
            3 => {
                if m != 0 {
                    return Err(Error::InputDomain("the 3D scheme only covers the l = 0 channel".into()));
                }
                let np1 = (n + 1) as f64;
                let dr = big_r / np1;
                let norm = (2.0 / np1).sqrt();
                let t = DMatrix::from_fn(n, n, |i, j| norm * (PI * ((i + 1) * (j + 1)) as f64 / np1).sin());
                let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * dr).collect();
                let weights = nodes.iter().map(|r| dr * r * r).collect();
                let k = (1..=n).map(|j| PI * j as f64 / big_r).collect();
                (nodes, weights, t, k)
            }
            _ => return Err(Error::InputDomain(format!("dimension {dimension} not supported"))),
        };
        let orthogonality_error = (&transform * &transform - DMatrix::<f64>::identity(n, n)).amax();
        if !(orthogonality_error <= self.max_orthogonality_error) {
            return Err(Error::GridRejected(format!(
                "transform orthogonality error {orthogonality_error:.3e} exceeds {:.1e}",
                self.max_orthogonality_error
            )));
        }
        let scaled = DMatrix::from_fn(n, n, |i, j| transform[(i, j)] * k[j]);
        let mut matrix = &scaled * &transform;
        symmetrize(&mut matrix);
        Ok(ChannelOperator {
            m,
            dimension,
            scheme: self.name(),
            grid: *grid,
            nodes,
            weights,
            matrix,
            orthogonality_error,
        })
    }
}

/// Sinc discretisation in s = ln r. With f = u(s)/r the form of |p| in
/// channel m is int Phi_m(tau) |u^(tau)|^2 dtau / (2 pi) after the r^{-1/2}
/// sandwich, where Phi_m is the Mellin symbol; the grid samples u at the
/// log nodes and Phi_m is band-limited to |tau| < pi/h.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogMellinScheme;

/// Phi_m(tau) = 2 |Gamma((|m| + 3/2 + i tau)/2) / Gamma((|m| + 1/2 + i tau)/2)|^2.
pub fn mellin_symbol(m: i32, tau: f64) -> f64 {
    let a = m.unsigned_abs() as f64;
    let y = 0.5 * tau;
    2.0 * (2.0 * (ln_abs_gamma(0.5 * (a + 1.5), y) - ln_abs_gamma(0.5 * (a + 0.5), y))).exp()
}

/// a_n = (1/pi) int_0^pi Phi_m(theta/h) cos(n theta) d theta, n < len.
fn toeplitz_coefficients(m: i32, h: f64, len: usize) -> Vec<f64> {
    let rule = composite_rule(0.0, PI, len + 64);
    let sampled: Vec<(f64, f64)> = rule.iter().map(|(th, w)| (*th, w * mellin_symbol(m, th / h) / PI)).collect();
    (0..len)
        .into_par_iter()
        .map(|n| sampled.iter().map(|(th, w)| w * (n as f64 * th).cos()).sum())
        .collect()
}

impl MomentumScheme for LogMellinScheme {
    fn name(&self) -> &'static str {
        "log-mellin"
    }

    fn channel(&self, m: i32, grid: &GridSpec, dimension: u32) -> Result<ChannelOperator> {
        grid.validate()?;
        check_channel(m)?;
        if dimension != 2 {
            return Err(Error::InputDomain("the log-mellin scheme is two-dimensional".into()));
        }
        let h = grid.log_step();
        let nodes = grid.nodes();
        let a = toeplitz_coefficients(m, h, grid.n);
        let root: Vec<f64> = nodes.iter().map(|r| r.sqrt()).collect();
        let matrix = DMatrix::from_fn(grid.n, grid.n, |i, j| a[i.abs_diff(j)] / (root[i] * root[j]));
        let weights = nodes.iter().map(|r| h * r * r).collect();
        Ok(ChannelOperator {
            m,
            dimension,
            scheme: self.name(),
            grid: *grid,
            nodes,
            weights,
            matrix,
            orthogonality_error: 0.0,
        })
    }
}

fn check_channel(m: i32) -> Result<()> {
    if m.abs() > MAX_CHANNEL {
        return Err(Error::InputDomain(format!("channel |m| <= {MAX_CHANNEL} required, got {m}")));
    }
    Ok(())
}

/// Momentum schemes by name.
#[derive(Debug)]
pub struct MomentumSchemeRegistry {
    schemes: BTreeMap<String, Box<dyn MomentumScheme>>,
}

impl MomentumSchemeRegistry {
    pub fn empty() -> Self {
        MomentumSchemeRegistry { schemes: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(HankelScheme::default()));
        r.register(Box::new(LogMellinScheme));
        r
    }

    pub fn register(&mut self, scheme: Box<dyn MomentumScheme>) {
        self.schemes.insert(scheme.name().to_string(), scheme);
    }

    pub fn names(&self) -> Vec<&str> {
        self.schemes.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn MomentumScheme> {
        self.schemes
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Config(format!("unknown momentum scheme '{name}'; known: {}", self.names().join(", "))))
    }
}

/// |p| in channel m of R^2 with the Hankel scheme.
pub fn momentum_channel(m: i32, grid: &GridSpec) -> Result<ChannelOperator> {
    HankelScheme::default().channel(m, grid, 2)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = f64::EPSILON * (diag[i].abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` lowest eigenvalues of a symmetric tridiagonal matrix.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    (0..count.min(n))
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(diag, off, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Lowest `count` eigenvalues of -1/2 Laplacian - Z/r in channel m.
///
/// Finite differences in x = ln r with the form
/// 1/2 int (R_x^2 + m^2 R^2) dx - Z int r R^2 dx against the mass
/// int r^2 R^2 dx; reflecting at r_min, Dirichlet at r_max.
pub fn hydrogen_channel(z: f64, m: i32, grid: &GridSpec, count: usize) -> Result<Vec<f64>> {
    grid.validate()?;
    let dx = grid.log_step();
    let r = grid.nodes();
    let n = grid.n;
    let half_m2 = 0.5 * (m as f64) * (m as f64);
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let bonds = if i == 0 { 1.0 } else { 2.0 };
            (0.5 * bonds / dx + (half_m2 - z * r[i]) * dx) / (r[i] * r[i] * dx)
        })
        .collect();
    let off: Vec<f64> = (0..n - 1).map(|i| -0.5 / dx / (r[i] * r[i + 1] * dx)).collect();
    Ok(tridiagonal_lowest(&diag, &off, count))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpectrum {
    pub m: i32,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub degeneracy: usize,
    pub channels: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub n: usize,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub z: f64,
    pub channels: Vec<ChannelSpectrum>,
    pub levels: Vec<Level>,
    /// Level energies on n/4, n/2 and n nodes.
    pub refinement: Vec<RefinementStep>,
}

/// -Z^2 / (2 (n + 1/2)^2).
pub fn hydrogen2d_exact(z: f64, n: u32) -> f64 {
    let q = n as f64 + 0.5;
    -z * z / (2.0 * q * q)
}

pub fn default_hydrogen_grid(z: f64) -> GridSpec {
    GridSpec { r_min: 1e-9 / z, r_max: 100.0 / z, n: 4001 }
}

const LEVEL_MERGE_TOL: f64 = 1e-3;
const REFINEMENT_TOL: f64 = 1e-3;

fn channel_spectra(z: f64, m_max: u32, grid: &GridSpec) -> Result<Vec<ChannelSpectrum>> {
    let m_max = m_max as i32;
    (-m_max..=m_max)
        .into_par_iter()
        .map(|m| {
            let count = (m_max - m.abs() + 1) as usize;
            Ok(ChannelSpectrum { m, eigenvalues: hydrogen_channel(z, m, grid, count)? })
        })
        .collect()
}

fn assemble_levels(channels: &[ChannelSpectrum]) -> Vec<Level> {
    let mut all: Vec<(f64, i32)> =
        channels.iter().flat_map(|c| c.eigenvalues.iter().map(move |e| (*e, c.m))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut levels: Vec<Level> = Vec::new();
    for (e, m) in all {
        match levels.last_mut() {
            Some(l) if (e - l.energy).abs() <= LEVEL_MERGE_TOL * l.energy.abs() => {
                l.energy = (l.energy * l.degeneracy as f64 + e) / (l.degeneracy + 1) as f64;
                l.degeneracy += 1;
                l.channels.push(m);
            }
            _ => levels.push(Level { energy: e, degeneracy: 1, channels: vec![m] }),
        }
    }
    for l in &mut levels {
        l.channels.sort_unstable();
    }
    levels
}

/// 2D hydrogen levels with principal number up to `m_max`, from channels
/// -m_max..=m_max, plus a three-step refinement trace.
pub fn hydrogen2d(z: f64, m_max: u32, grid: &GridSpec) -> Result<SpectrumReport> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InputDomain(format!("nuclear charge must be positive, got {z}")));
    }
    grid.validate()?;
    if grid.n / 4 < 16 {
        return Err(Error::Config("hydrogen refinement needs n >= 64".into()));
    }
    let channels = channel_spectra(z, m_max, grid)?;
    let levels = assemble_levels(&channels);
    let mut refinement = Vec::new();
    for n in [grid.n / 4, grid.n / 2] {
        let coarse = assemble_levels(&channel_spectra(z, m_max, &grid.with_nodes(n))?);
        refinement.push(RefinementStep { n, energies: coarse.iter().map(|l| l.energy).collect() });
    }
    refinement.push(RefinementStep { n: grid.n, energies: levels.iter().map(|l| l.energy).collect() });
    let prev = &refinement[1].energies;
    let drift = levels
        .iter()
        .zip(prev)
        .map(|(l, p)| (l.energy - p).abs() / l.energy.abs())
        .fold(0.0, f64::max);
    if prev.len() != levels.len() || drift > REFINEMENT_TOL {
        let trace = refinement
            .iter()
            .map(|s| (s.n as f64, s.energies.first().copied().unwrap_or(f64::NAN)))
            .collect();
        return Err(Error::Diagnostic {
            message: format!("hydrogen levels moved by {drift:.2e} under refinement; grid needs refinement"),
            trace,
        });
    }
    Ok(SpectrumReport { z, channels, levels, refinement })
}

/// Lowest eigenvalue of P - nu / r for a channel operator.
///
/// The spectrum spans the full range 1/r_max .. 1/r_min, so when the
/// sandwiched form r^{1/2} (P - nu/r) r^{1/2} is positive definite the
/// lowest eigenvalue is taken as the inverse of the largest eigenvalue of
/// the inverse, which keeps its relative accuracy.
pub fn lowest_with_coulomb(op: &ChannelOperator, nu: f64) -> Result<f64> {
    if !(nu >= 0.0) {
        return Err(Error::InputDomain(format!("coupling must be >= 0, got {nu}")));
    }
    let n = op.len();
    let root: Vec<f64> = op.nodes.iter().map(|r| r.sqrt()).collect();
    let mut b = DMatrix::from_fn(n, n, |i, j| root[i] * op.matrix[(i, j)] * root[j]);
    for i in 0..n {
        b[(i, i)] -= nu;
    }
    if let Some(chol) = Cholesky::new(b) {
        let inv = chol.inverse();
        let mut g = DMatrix::from_fn(n, n, |i, j| root[i] * inv[(i, j)] * root[j]);
        symmetrize(&mut g);
        let top = sorted_eigenvalues(g).last().copied().unwrap_or(f64::NAN);
        if !(top > 0.0) || !top.is_finite() {
            return Err(Error::Numerical(format!("inverse form has largest eigenvalue {top}")));
        }
        return Ok(1.0 / top);
    }
    let h = DMatrix::from_fn(n, n, |i, j| op.matrix[(i, j)] - if i == j { nu / op.nodes[i] } else { 0.0 });
    Ok(sorted_eigenvalues(h)[0])
}

/// Lowest eigenvalue of |p| - nu/|x| in channel m on the log-mellin grid.
pub fn chandrasekhar_lowest(nu: f64, m: i32, grid: &GridSpec) -> Result<f64> {
    lowest_with_coulomb(&LogMellinScheme.channel(m, grid, 2)?, nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Divergent,
}

/// Divergent when the lowest eigenvalue is negative and grows by more than
/// a factor 2 on two consecutive refinements.
pub fn classify_refinement(lowest: &[f64]) -> Stability {
    let mut run = 0;
    for w in lowest.windows(2) {
        if w[0] < 0.0 && w[1] / w[0] > 2.0 {
            run += 1;
            if run >= 2 {
                return Stability::Divergent;
            }
        } else {
            run = 0;
        }
    }
    Stability::Stable
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCoupling {
    pub method: String,
    pub nu_c: f64,
    pub interval: (f64, f64),
    /// (nu, lowest eigenvalue on the finest grid) for bisection;
    /// (m, M_m(0)) for the Mellin method.
    pub trace: Vec<(f64, f64)>,
}

/// A method for the critical coupling of |p| - nu/|x| in 2D.
pub trait CriticalCouplingMethod: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self) -> Result<CriticalCoupling>;
}

#[derive(Debug, Clone)]
pub struct BisectMethod {
    pub schedule: Vec<GridSpec>,
    pub tol: f64,
}

impl Default for BisectMethod {
    fn default() -> Self {
        BisectMethod { schedule: default_bisect_schedule(), tol: 1e-5 }
    }
}

/// Log grids of half width 40, 50 and 60 e-folds at spacing 1/4.
pub fn default_bisect_schedule() -> Vec<GridSpec> {
    [40.0, 50.0, 60.0].iter().map(|w| GridSpec::symmetric_log(*w, 0.25).expect("valid grid")).collect()
}

impl CriticalCouplingMethod for BisectMethod {
    fn name(&self) -> &'static str {
        "bisect"
    }

    fn estimate(&self) -> Result<CriticalCoupling> {
        critical_coupling_bisect_tol(&self.schedule, self.tol)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MellinMethod {
    pub m_max: u32,
}

impl Default for MellinMethod {
    fn default() -> Self {
        MellinMethod { m_max: 3 }
    }
}

impl CriticalCouplingMethod for MellinMethod {
    fn name(&self) -> &'static str {
        "mellin"
    }

    fn estimate(&self) -> Result<CriticalCoupling> {
        critical_coupling_mellin(self.m_max)
    }
}

#[derive(Debug)]
pub struct CriticalCouplingRegistry {
    methods: BTreeMap<String, Box<dyn CriticalCouplingMethod>>,
}

impl CriticalCouplingRegistry {
    pub fn empty() -> Self {
        CriticalCouplingRegistry { methods: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(BisectMethod::default()));
        r.register(Box::new(MellinMethod::default()));
        r
    }

    pub fn register(&mut self, method: Box<dyn CriticalCouplingMethod>) {
        self.methods.insert(method.name().to_string(), method);
    }

    pub fn names(&self) -> Vec<&str> {
        self.methods.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn CriticalCouplingMethod> {
        self.methods.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::Config(format!("unknown critical-coupling method '{name}'; known: {}", self.names().join(", ")))
        })
    }
}

/// Lowest eigenvalues of |p| - nu/|x| (m = 0) on each grid of a schedule.
pub struct CoulombProbe {
    operators: Vec<ChannelOperator>,
}

impl CoulombProbe {
    pub fn new(schedule: &[GridSpec]) -> Result<Self> {
        if schedule.len() < 3 {
            return Err(Error::Config(format!("refinement schedule needs at least 3 grids, got {}", schedule.len())));
        }
        let operators = schedule.iter().map(|g| LogMellinScheme.channel(0, g, 2)).collect::<Result<Vec<_>>>()?;
        Ok(CoulombProbe { operators })
    }

    pub fn lowest(&self, nu: f64) -> Result<Vec<f64>> {
        self.operators.iter().map(|op| lowest_with_coulomb(op, nu)).collect()
    }

    pub fn classify(&self, nu: f64) -> Result<(Stability, Vec<f64>)> {
        let l = self.lowest(nu)?;
        Ok((classify_refinement(&l), l))
    }
}

pub fn critical_coupling_bisect(schedule: &[GridSpec]) -> Result<CriticalCoupling> {
    critical_coupling_bisect_tol(schedule, 1e-5)
}

pub fn critical_coupling_bisect_tol(schedule: &[GridSpec], tol: f64) -> Result<CriticalCoupling> {
    let probe = CoulombProbe::new(schedule)?;
    let mut trace = Vec::new();
    // coarse scan: the transition has to be a single stable -> divergent switch
    let mut seen_divergent = false;
    let mut lo = 0.0;
    let mut hi = f64::NAN;
    for i in 0..=20 {
        let nu = 0.05 * i as f64;
        let (s, l) = probe.classify(nu)?;
        trace.push((nu, *l.last().unwrap()));
        match s {
            Stability::Stable if seen_divergent => {
                return Err(Error::Diagnostic {
                    message: format!("stable again at nu = {nu} after a divergent coupling"),
                    trace,
                });
            }
            Stability::Stable => lo = nu,
            Stability::Divergent => {
                if !seen_divergent {
                    hi = nu;
                }
                seen_divergent = true;
            }
        }
    }
    if !seen_divergent {
        return Err(Error::Diagnostic { message: "no divergent coupling found in [0, 1]".into(), trace });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (s, l) = probe.classify(mid)?;
        trace.push((mid, *l.last().unwrap()));
        match s {
            Stability::Stable => lo = mid,
            Stability::Divergent => hi = mid,
        }
    }
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    if trace.windows(2).any(|w| w[1].1 > w[0].1 * (1.0 + 1e-9) + 1e-300 && w[0].1 > 0.0) {
        return Err(Error::Diagnostic { message: "lowest eigenvalue is not decreasing in nu".into(), trace });
    }
    Ok(CriticalCoupling { method: "bisect".into(), nu_c: 0.5 * (lo + hi), interval: (lo, hi), trace })
}

/// k_m(t) = (1/pi) int_0^pi cos(m theta) / sqrt((1-t)^2 + 4 t sin^2(theta/2)) d theta,
/// with `one_minus_t` = 1 - t supplied separately near t = 1.
pub fn channel_kernel(m: i32, t: f64, one_minus_t: f64, tol: f64) -> Result<f64> {
    let mf = m as f64;
    let f = |th: f64| {
        let s = (0.5 * th).sin();
        (mf * th).cos() / (one_minus_t * one_minus_t + 4.0 * t * s * s).sqrt()
    };
    let mut pts = vec![0.0];
    for c in [1.0, 10.0, 100.0] {
        let p = c * one_minus_t;
        if p < PI {
            pts.push(p);
        }
    }
    pts.push(PI);
    let r = Integrator::new(tol).with_abs_tol(1e-300).integrate_with_breaks(f, &pts)?;
    Ok(r.value / PI)
}

/// M_m(tau) = int_0^inf e^{-x/2} k_m(e^{-x}) 2 cos(tau x) dx.
pub fn mellin_multiplier(m: i32, tau: f64, tol: f64) -> Result<f64> {
    let inner = (tol * 1e-2).max(1e-13);
    let failure = std::cell::RefCell::new(None);
    let f = |x: f64| {
        // the log singularity at x = 0 contributes below 1e-12 on (0, 1e-14)
        if x < 1e-14 {
            return 0.0;
        }
        match channel_kernel(m, (-x).exp(), -(-x).exp_m1(), inner) {
            Ok(k) => (-0.5 * x).exp() * k * 2.0 * (tau * x).cos(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let r = Integrator::new(tol)
        .with_abs_tol(1e-300)
        .integrate_with_breaks(f, &[0.0, 1e-6, 1e-3, 1e-2, 0.1, 1.0, 5.0, 20.0, 80.0]);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

/// nu_c = 1 / max_m sup_tau M_m(tau); the supremum is scanned on tau in [0, 4].
pub fn critical_coupling_mellin(m_max: u32) -> Result<CriticalCoupling> {
    let tol = 1e-10;
    let per_channel: Vec<(i32, f64, f64)> = (0..=m_max as i32)
        .into_par_iter()
        .map(|m| {
            let mut best = (0.0, f64::NEG_INFINITY);
            for i in 0..=16 {
                let tau = 0.25 * i as f64;
                let v = mellin_multiplier(m, tau, tol)?;
                if v > best.1 {
                    best = (tau, v);
                }
            }
            Ok((m, best.0, best.1))
        })
        .collect::<Result<Vec<_>>>()?;
    let top = per_channel.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    let nu = 1.0 / top;
    let spread = nu * 1e-8;
    Ok(CriticalCoupling {
        method: "mellin".into(),
        nu_c: nu,
        interval: (nu - spread, nu + spread),
        trace: per_channel.iter().map(|(m, _, v)| (*m as f64, *v)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnticommEstimate {
    pub dimension: u32,
    pub value: f64,
    /// (nodes, lowest eigenvalue) per refinement step.
    pub trace: Vec<(usize, f64)>,
    pub monotone: bool,
}

/// Lowest eigenvalue of X P + P X in the radial channel, X = multiplication by r.
pub fn lambda_min_anticomm(d: u32, grid: &GridSpec) -> Result<f64> {
    if d != 2 && d != 3 {
        return Err(Error::InputDomain(format!("dimension must be 2 or 3, got {d}")));
    }
    let op = HankelScheme::default().channel(0, grid, d)?;
    let x = op.position();
    let n = op.len();
    let mut a = DMatrix::from_fn(n, n, |i, j| (x[i] + x[j]) * op.matrix[(i, j)]);
    symmetrize(&mut a);
    Ok(sorted_eigenvalues(a)[0])
}

/// `lambda_min_anticomm` on n, 2n, 4n, ... nodes.
pub fn lambda_min_refinement(d: u32, grid: &GridSpec, steps: usize) -> Result<AnticommEstimate> {
    let trace = (0..steps)
        .map(|k| {
            let n = grid.n << k;
            Ok((n, lambda_min_anticomm(d, &grid.with_nodes(n))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = trace.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(AnticommEstimate { dimension: d, value: trace.last().map_or(f64::NAN, |t| t.1), trace, monotone })
}

pub fn default_anticomm_grid() -> GridSpec {
    GridSpec { r_min: 1e-3, r_max: 1.0, n: 200 }
}
