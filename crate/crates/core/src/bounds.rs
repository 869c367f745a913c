//! Closed-form excess-charge bounds for a 2D dot and the pair-sum step
//! behind them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InputDomain(format!("{name} must be a finite value >= 0, got {v}")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InputDomain(format!("{name} must be a finite value > 0, got {v}")));
    }
    Ok(())
}

/// N < 2(delta + Z) + 1.
pub fn excess_charge_relativistic(delta: f64, z: f64) -> Result<f64> {
    nonnegative("delta", delta)?;
    nonnegative("Z", z)?;
    Ok(2.0 * (delta + z) + 1.0)
}

/// N <= 2Z + ln(Z^{1/2}) + 7/2.
pub fn excess_charge_nonrel_2d(z: f64) -> Result<f64> {
    positive("Z", z)?;
    Ok(2.0 * z + 0.5 * z.ln() + 3.5)
}

/// (psi, |x_1|^{-1} psi) <= 4 ln(Z^{1/2}) + 10.
pub fn expectation_bound(z: f64) -> Result<f64> {
    positive("Z", z)?;
    Ok(2.0 * z.ln() + 10.0)
}

/// delta = B R^2 / 2.
pub fn flux_delta(b: f64, r: f64) -> Result<f64> {
    nonnegative("B", b)?;
    nonnegative("R", r)?;
    Ok(0.5 * b * r * r)
}

/// Largest N with -(delta + Z) N + N (N - 1)/2 < 0, i.e. the largest
/// integer strictly below 2(delta + Z) + 1. Zero when there is none.
pub fn max_bindable(delta: f64, z: f64) -> Result<u64> {
    let t = excess_charge_relativistic(delta, z)?;
    let n = t.ceil() - 1.0;
    if n > u64::MAX as f64 {
        return Err(Error::InputDomain(format!("bound {t} exceeds the integer range")));
    }
    Ok(n.max(0.0) as u64)
}

/// Points of R^2, pairwise distinct and away from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    points: Vec<[f64; 2]>,
}

impl Configuration {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InputDomain(format!("point {i} is not finite")));
            }
            if p[0] == 0.0 && p[1] == 0.0 {
                return Err(Error::InputDomain(format!("point {i} sits at the origin")));
            }
            if points[..i].iter().any(|q| q == p) {
                return Err(Error::InputDomain(format!("point {i} coincides with an earlier point")));
            }
        }
        Ok(Configuration { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// S = 1/2 sum_{m != n} (|x_m| + |x_n|) / |x_m - x_n|.
pub fn pair_sum(config: &Configuration) -> f64 {
    let p = config.points();
    let norm = |a: [f64; 2]| a[0].hypot(a[1]);
    let mut s = 0.0;
    for m in 0..p.len() {
        for n in m + 1..p.len() {
            let d = [p[m][0] - p[n][0], p[m][1] - p[n][1]];
            s += (norm(p[m]) + norm(p[n])) / norm(d);
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrintedVariant {
    /// (Gamma(1/4)^4 / (8 pi^2) + 8 pi^2 / Gamma(1/4))^{-1}
    AsPrinted,
    /// (Gamma(1/4)^4 / (8 pi^2) + 8 pi^2 / Gamma(1/4)^4)^{-1}
    FourthPower,
}

pub fn critical_constant_printed(variant: PrintedVariant) -> f64 {
    let g = gamma(0.25);
    let g4 = g.powi(4);
    let second = match variant {
        PrintedVariant::AsPrinted => 8.0 * PI * PI / g,
        PrintedVariant::FourthPower => 8.0 * PI * PI / g4,
    };
    1.0 / (g4 / (8.0 * PI * PI) + second)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    pub z: f64,
    pub field: Option<(f64, f64)>,
    pub relativistic: f64,
    /// Only defined for Z > 0.
    pub nonrelativistic: Option<f64>,
    pub expectation: Option<f64>,
    pub max_bindable: u64,
    /// The bound assumes E_N < E_{N-1}; carried along, never checked.
    pub assumes_binding_threshold: bool,
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub fn new(delta: f64, z: f64) -> Result<Self> {
        let mut warnings = Vec::new();
        let kappa = critical_constant_printed(PrintedVariant::AsPrinted);
        if z > kappa {
            warnings.push(format!("Z = {z} exceeds the printed critical constant {kappa:.6}"));
        }
        let (nonrelativistic, expectation) =
            if z > 0.0 { (Some(excess_charge_nonrel_2d(z)?), Some(expectation_bound(z)?)) } else { (None, None) };
        Ok(BoundReport {
            delta,
            z,
            field: None,
            relativistic: excess_charge_relativistic(delta, z)?,
            nonrelativistic,
            expectation,
            max_bindable: max_bindable(delta, z)?,
            assumes_binding_threshold: true,
            warnings,
        })
    }

    /// delta taken from the cavity field, B R^2 / 2.
    pub fn from_field(b: f64, r: f64, z: f64) -> Result<Self> {
        let mut report = BoundReport::new(flux_delta(b, r)?, z)?;
        report.field = Some((b, r));
        Ok(report)
    }
}
