//! Magnetic kinetic operators on a square lattice and the diamagnetic
//! (Kato) inequality for T_m = sqrt((p + A)^2 + m^2) - m.
//!
//! The lattice Laplacian uses Peierls links: the hop from x to x + h e picks
//! up the phase exp(i h A . e) with A averaged over the two end nodes.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

pub const MAX_SIDE: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Hops leaving the grid are dropped.
    Dirichlet,
    Periodic,
}

/// `side x side` nodes at spacing h, centred so the origin sits in the
/// middle of a plaquette.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub side: usize,
    pub spacing: f64,
    pub boundary: Boundary,
}

impl LatticeGrid {
    pub fn new(side: usize, extent: f64, boundary: Boundary) -> Result<Self> {
        if side < 2 {
            return Err(Error::Config(format!("lattice side must be >= 2, got {side}")));
        }
        if side % 2 == 1 {
            return Err(Error::Config(format!("odd side {side} puts the origin on a node")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Config(format!("lattice extent must be positive, got {extent}")));
        }
        Ok(LatticeGrid { side, spacing: extent / side as f64, boundary })
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.side + j
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.side as f64 - 1.0)) * self.spacing
    }

    /// Position of node k.
    pub fn position(&self, k: usize) -> [f64; 2] {
        [self.coord(k / self.side), self.coord(k % self.side)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldConfig {
    Zero,
    /// Background potential only: constant field B.
    Homogeneous,
    /// Background plus cavity potential: no field inside |x| < R.
    Dot,
}

/// Background (B/2)(-x2, x1).
pub fn background_potential(b: f64, x: [f64; 2]) -> [f64; 2] {
    [-0.5 * b * x[1], 0.5 * b * x[0]]
}

/// Cavity potential: -(B/2)(-x2, x1) inside |x| < R and
/// -(B R^2 / (2 |x|^2))(-x2, x1) outside.
pub fn cavity_potential(b: f64, r: f64, x: [f64; 2]) -> [f64; 2] {
    let rho2 = x[0] * x[0] + x[1] * x[1];
    let scale = if rho2 < r * r { 0.5 * b } else { 0.5 * b * r * r / rho2 };
    [scale * x[1], -scale * x[0]]
}

/// Flux removed by the cavity, B R^2 / 2.
pub fn flux_parameter(b: f64, r: f64) -> f64 {
    0.5 * b * r * r
}

/// Sampled potentials and the Peierls phases built from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    pub grid: LatticeGrid,
    pub b: f64,
    pub radius: f64,
    pub config: FieldConfig,
    pub background: Vec<[f64; 2]>,
    pub cavity: Vec<[f64; 2]>,
    /// Phase on the bond from node k to its +x1 neighbour.
    pub phase_x: Vec<f64>,
    /// Phase on the bond from node k to its +x2 neighbour.
    pub phase_y: Vec<f64>,
}

/// Background plus cavity potential (the dot configuration).
pub fn make_fields(b: f64, radius: f64, grid: LatticeGrid) -> Result<LatticeField> {
    LatticeField::new(b, radius, grid, FieldConfig::Dot)
}

impl LatticeField {
    pub fn new(b: f64, radius: f64, grid: LatticeGrid, config: FieldConfig) -> Result<Self> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InputDomain(format!("field strength must be >= 0, got {b}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InputDomain(format!("cavity radius must be positive, got {radius}")));
        }
        if grid.boundary == Boundary::Periodic && config != FieldConfig::Zero && b != 0.0 {
            return Err(Error::Config("periodic lattices only carry the zero field".into()));
        }
        let n = grid.len();
        let pos: Vec<[f64; 2]> = (0..n).map(|k| grid.position(k)).collect();
        let background: Vec<[f64; 2]> = pos.iter().map(|x| background_potential(b, *x)).collect();
        let cavity: Vec<[f64; 2]> = pos.iter().map(|x| cavity_potential(b, radius, *x)).collect();
        let total: Vec<[f64; 2]> = (0..n)
            .map(|k| match config {
                FieldConfig::Zero => [0.0, 0.0],
                FieldConfig::Homogeneous => background[k],
                FieldConfig::Dot => [background[k][0] + cavity[k][0], background[k][1] + cavity[k][1]],
            })
            .collect();
        let h = grid.spacing;
        let s = grid.side;
        let mut phase_x = vec![0.0; n];
        let mut phase_y = vec![0.0; n];
        for i in 0..s {
            for j in 0..s {
                let k = grid.index(i, j);
                if i + 1 < s {
                    phase_x[k] = 0.5 * h * (total[k][0] + total[grid.index(i + 1, j)][0]);
                }
                if j + 1 < s {
                    phase_y[k] = 0.5 * h * (total[k][1] + total[grid.index(i, j + 1)][1]);
                }
            }
        }
        Ok(LatticeField { grid, b, radius, config, background, cavity, phase_x, phase_y })
    }

    pub fn zero(grid: LatticeGrid) -> Result<Self> {
        LatticeField::new(0.0, 1.0, grid, FieldConfig::Zero)
    }

    /// A -> A + grad chi with the lattice gradient chi(x + h e) - chi(x).
    pub fn gauge_shift(&self, chi: &[f64]) -> Result<Self> {
        if chi.len() != self.grid.len() {
            return Err(Error::InputDomain("gauge function has the wrong length".into()));
        }
        let mut out = self.clone();
        let s = self.grid.side;
        for i in 0..s {
            for j in 0..s {
                let k = self.grid.index(i, j);
                if i + 1 < s {
                    out.phase_x[k] += chi[self.grid.index(i + 1, j)] - chi[k];
                }
                if j + 1 < s {
                    out.phase_y[k] += chi[self.grid.index(i, j + 1)] - chi[k];
                }
            }
        }
        Ok(out)
    }

    /// Circulation per unit area around each plaquette, with its centre.
    pub fn discrete_curl(&self) -> Vec<([f64; 2], f64)> {
        let g = &self.grid;
        let s = g.side;
        let h2 = g.spacing * g.spacing;
        let mut out = Vec::with_capacity((s - 1) * (s - 1));
        for i in 0..s - 1 {
            for j in 0..s - 1 {
                let k = g.index(i, j);
                let circ = self.phase_x[k] + self.phase_y[g.index(i + 1, j)]
                    - self.phase_x[g.index(i, j + 1)]
                    - self.phase_y[k];
                let c = [g.coord(i) + 0.5 * g.spacing, g.coord(j) + 0.5 * g.spacing];
                out.push((c, circ / h2));
            }
        }
        out
    }

    /// (p + A)^2 as a Hermitian matrix.
    pub fn laplacian(&self) -> DMatrix<C64> {
        let g = &self.grid;
        let s = g.side;
        let n = g.len();
        let inv_h2 = 1.0 / (g.spacing * g.spacing);
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for i in 0..s {
            for j in 0..s {
                let k = g.index(i, j);
                m[(k, k)] += C64::new(4.0 * inv_h2, 0.0);
                let mut hop = |a: usize, b: usize, theta: f64| {
                    let link = C64::from_polar(inv_h2, theta);
                    m[(a, b)] -= link;
                    m[(b, a)] -= link.conj();
                };
                match g.boundary {
                    Boundary::Dirichlet => {
                        if i + 1 < s {
                            hop(k, g.index(i + 1, j), self.phase_x[k]);
                        }
                        if j + 1 < s {
                            hop(k, g.index(i, j + 1), self.phase_y[k]);
                        }
                    }
                    Boundary::Periodic => {
                        hop(k, g.index((i + 1) % s, j), 0.0);
                        hop(k, g.index(i, (j + 1) % s), 0.0);
                    }
                }
            }
        }
        m
    }

    /// max |A0(x)| |x| / (B R^2 / 2) over nodes.
    pub fn field_bound_ratio(&self) -> Result<f64> {
        field_bound_check(self)
    }
}

pub fn field_bound_check(field: &LatticeField) -> Result<f64> {
    let delta = flux_parameter(field.b, field.radius);
    if !(delta > 0.0) {
        return Err(Error::InputDomain("field bound needs B > 0".into()));
    }
    Ok((0..field.grid.len())
        .map(|k| {
            let x = field.grid.position(k);
            let a = field.cavity[k];
            (a[0] * a[0] + a[1] * a[1]).sqrt() * (x[0] * x[0] + x[1] * x[1]).sqrt() / delta
        })
        .fold(0.0, f64::max))
}

/// T_m(p + A) with its spectrum.
#[derive(Debug, Clone)]
pub struct KineticMatrix {
    pub matrix: DMatrix<C64>,
    pub mass: f64,
    /// Eigenvalues of T_m, ascending.
    pub eigenvalues: Vec<f64>,
}

impl KineticMatrix {
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    pub fn norm(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// sqrt(l + m^2) - m without cancellation.
fn relativistic(l: f64, m: f64) -> f64 {
    let l = l.max(0.0);
    if m == 0.0 {
        return l.sqrt();
    }
    l / ((l + m * m).sqrt() + m)
}

pub fn kinetic_matrix(field: &LatticeField, mass: f64) -> Result<KineticMatrix> {
    if !(mass >= 0.0) || !mass.is_finite() {
        return Err(Error::InputDomain(format!("mass must be >= 0, got {mass}")));
    }
    if field.grid.side > MAX_SIDE {
        return Err(Error::Config(format!("lattice side {} exceeds {MAX_SIDE}", field.grid.side)));
    }
    let eig = SymmetricEigen::try_new(field.laplacian(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition did not converge".into()))?;
    let f: Vec<f64> = eig.eigenvalues.iter().map(|l| relativistic(*l, mass)).collect();
    let v = &eig.eigenvectors;
    let n = f.len();
    let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * f[j]);
    let mut matrix = scaled * v.adjoint();
    for i in 0..n {
        matrix[(i, i)].im = 0.0;
        for j in 0..i {
            let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)].conj());
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg.conj();
        }
    }
    let mut eigenvalues = f;
    eigenvalues.sort_by(f64::total_cmp);
    Ok(KineticMatrix { matrix, mass, eigenvalues })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoSample {
    pub lhs: f64,
    pub rhs: f64,
    /// (lhs - rhs) / (|eta| |phi| |T|); positive means a violation.
    pub relative_violation: f64,
}

/// lhs = <eta, T_m(p)|phi|>, rhs = Re <eta, conj(sgn phi) T_m(p + A) phi>.
pub fn kato_test(eta: &[f64], phi: &[C64], free: &KineticMatrix, magnetic: &KineticMatrix) -> Result<KatoSample> {
    let n = free.matrix.nrows();
    if eta.len() != n || phi.len() != n || magnetic.matrix.nrows() != n {
        return Err(Error::InputDomain("kato_test arguments have mismatched sizes".into()));
    }
    if eta.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InputDomain("eta must be nonnegative".into()));
    }
    let modulus = DVector::from_iterator(n, phi.iter().map(|z| C64::new(z.norm(), 0.0)));
    let t_abs = free.apply(&modulus);
    let t_phi = magnetic.apply(&DVector::from_column_slice(phi));
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for k in 0..n {
        lhs += eta[k] * t_abs[k].re;
        let a = phi[k].norm();
        if a > 0.0 {
            rhs += eta[k] * (phi[k].conj() * t_phi[k]).re / a;
        }
    }
    let eta_norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    let phi_norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = eta_norm * phi_norm * free.norm().max(magnetic.norm());
    let relative_violation = if scale > 0.0 { (lhs - rhs) / scale } else { 0.0 };
    Ok(KatoSample { lhs, rhs, relative_violation })
}

/// Upper edges of the violation histogram bins; the last bin is open.
pub const VIOLATION_BINS: [f64; 4] = [0.0, 1e-14, 1e-12, 1e-10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoExperiment {
    pub config: FieldConfig,
    pub mass: f64,
    pub seed: u64,
    pub samples: usize,
    /// Counts for (-inf, 0], (0, 1e-14], (1e-14, 1e-12], (1e-12, 1e-10], (1e-10, inf).
    pub histogram: [usize; 5],
    pub max_violation: f64,
    pub violations: usize,
    pub tolerance: f64,
}

impl KatoExperiment {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn bin_of(v: f64) -> usize {
    VIOLATION_BINS.iter().position(|edge| v <= *edge).unwrap_or(VIOLATION_BINS.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiSampling {
    ComplexGaussian,
    /// |N(0,1)| at every node: the equality case when the field vanishes.
    NonnegativeReal,
}

/// Random eta >= 0 (uniform) and complex Gaussian phi. Sample i uses stream
/// i of the seeded generator, so results do not depend on thread count.
pub fn kato_experiment(field: &LatticeField, mass: f64, samples: usize, seed: u64) -> Result<KatoExperiment> {
    kato_experiment_with(field, mass, samples, seed, PhiSampling::ComplexGaussian)
}

pub fn kato_experiment_with(
    field: &LatticeField,
    mass: f64,
    samples: usize,
    seed: u64,
    phi_sampling: PhiSampling,
) -> Result<KatoExperiment> {
    let free = kinetic_matrix(&LatticeField::zero(field.grid)?, mass)?;
    let magnetic = kinetic_matrix(field, mass)?;
    let n = field.grid.len();
    let tolerance = 1e-10;
    let results = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let eta: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let phi: Vec<C64> = match phi_sampling {
                PhiSampling::ComplexGaussian => (0..n)
                    .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
                    .collect(),
                PhiSampling::NonnegativeReal => {
                    (0..n).map(|_| C64::new(rng.sample::<f64, _>(StandardNormal).abs(), 0.0)).collect()
                }
            };
            kato_test(&eta, &phi, &free, &magnetic)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut histogram = [0usize; 5];
    let mut max_violation = f64::NEG_INFINITY;
    for r in &results {
        histogram[bin_of(r.relative_violation)] += 1;
        max_violation = max_violation.max(r.relative_violation);
    }
    let violations = results.iter().filter(|r| r.relative_violation > tolerance).count();
    Ok(KatoExperiment { config: field.config, mass, seed, samples, histogram, max_violation, violations, tolerance })
}

/// Dispersion of the periodic zero-field lattice: |k|_h for k = 2 pi (a, b) / (side h).
pub fn periodic_dispersion(grid: &LatticeGrid) -> Vec<f64> {
    let s = grid.side;
    let h = grid.spacing;
    let mut out = Vec::with_capacity(s * s);
    for a in 0..s {
        for b in 0..s {
            let ka = PI * a as f64 / s as f64;
            let kb = PI * b as f64 / s as f64;
            out.push((4.0 / (h * h) * (ka.sin().powi(2) + kb.sin().powi(2))).sqrt());
        }
    }
    out.sort_by(f64::total_cmp);
    out
}
