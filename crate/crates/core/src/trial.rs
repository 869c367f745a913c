//! Radial trial functions and the registry that builds them by family name.
//!
//! Every family is described in the logarithmic variable `y = ln r`, which is
//! where all radial integrals in this crate are carried out.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial profile psi(r) of a trial state.
pub trait TrialFunction: Debug + Send + Sync {
    fn family(&self) -> &'static str;

    /// ln psi(e^y); `-inf` where psi vanishes.
    fn log_value(&self, y: f64) -> f64;

    /// ln psi(e^{y-x}) - ln psi(e^y).
    ///
    /// Families override this when the difference can be formed without
    /// cancellation for small `x`.
    fn log_ratio(&self, y: f64, x: f64) -> f64 {
        self.log_value(y - x) - self.log_value(y)
    }

    /// d psi / dy = r psi'(r) at r = e^y.
    fn slope(&self, y: f64) -> f64;

    /// Range of `y` outside which `e^{k y} psi(e^y)^2` is negligible for every
    /// `0 <= k <= weight`.
    fn log_window(&self, weight: f64) -> (f64, f64);

    /// Points in `y` where psi is not smooth.
    fn log_kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// kappa when psi(r) ~ r^{-kappa} at infinity; `None` for faster decay.
    fn tail_exponent(&self) -> Option<f64> {
        None
    }

    /// Whether e^{weight y} psi(e^y)^2 is integrable at y -> inf.
    fn integrable_with(&self, weight: f64) -> bool {
        self.tail_exponent().is_none_or(|k| 2.0 * k > weight)
    }

    fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.log_value(r.ln()).exp()
    }

    fn derivative(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.slope(r.ln()) / r
    }
}

// exp(-TAIL) is the relative size of what the windows cut off.
const TAIL: f64 = 46.0;

/// psi(r) = exp(-(ln r - c)^2 / (2 sigma^2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGaussian {
    pub sigma: f64,
    pub center: f64,
}

impl LogGaussian {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InputDomain(format!("log-Gaussian width must be positive, got {sigma}")));
        }
        Ok(LogGaussian { sigma, center: 0.0 })
    }
}

impl TrialFunction for LogGaussian {
    fn family(&self) -> &'static str {
        "log-gaussian"
    }

    fn log_value(&self, y: f64) -> f64 {
        let z = y - self.center;
        -z * z / (2.0 * self.sigma * self.sigma)
    }

    fn log_ratio(&self, y: f64, x: f64) -> f64 {
        // (z^2 - (z - x)^2) / (2 sigma^2) with z = y - c
        let z = y - self.center;
        x * (2.0 * z - x) / (2.0 * self.sigma * self.sigma)
    }

    fn slope(&self, y: f64) -> f64 {
        let z = y - self.center;
        -z / (self.sigma * self.sigma) * self.log_value(y).exp()
    }

    fn log_window(&self, weight: f64) -> (f64, f64) {
        // e^{k y} psi^2 peaks at c + k sigma^2 / 2 with standard deviation sigma / sqrt(2)
        let spread = self.sigma * (TAIL).sqrt();
        (self.center - spread, self.center + 0.5 * weight * self.sigma * self.sigma + spread)
    }
}

/// psi(r) = min(r/e^c, e^c/r)^kappa: linear in ln r on both sides of a cusp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLinearCutoff {
    pub kappa: f64,
    pub center: f64,
}

impl LogLinearCutoff {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InputDomain(format!("log-linear slope must be positive, got {kappa}")));
        }
        Ok(LogLinearCutoff { kappa, center: 0.0 })
    }
}

impl TrialFunction for LogLinearCutoff {
    fn family(&self) -> &'static str {
        "log-linear"
    }

    fn log_value(&self, y: f64) -> f64 {
        -self.kappa * (y - self.center).abs()
    }

    fn slope(&self, y: f64) -> f64 {
        let z = y - self.center;
        -self.kappa * z.signum() * self.log_value(y).exp()
    }

    fn log_window(&self, weight: f64) -> (f64, f64) {
        // right tail decays like e^{(weight - 2 kappa) y}; callers check 2 kappa > weight
        let right_rate = (2.0 * self.kappa - weight).max(1e-3);
        (self.center - TAIL / (2.0 * self.kappa), self.center + TAIL / right_rate)
    }

    fn log_kinks(&self) -> Vec<f64> {
        vec![self.center]
    }

    fn tail_exponent(&self) -> Option<f64> {
        Some(self.kappa)
    }
}

/// User-supplied samples of psi on increasing `ln r` nodes, linearly
/// interpolated in `y` and zero outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampled {
    log_r: Vec<f64>,
    values: Vec<f64>,
}

impl Sampled {
    pub fn new(log_r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if log_r.len() != values.len() || log_r.len() < 2 {
            return Err(Error::Config("sampled trial needs >= 2 matching nodes and values".into()));
        }
        if log_r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("sampled nodes must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InputDomain("sampled values must be finite and non-negative".into()));
        }
        Ok(Sampled { log_r, values })
    }

    fn locate(&self, y: f64) -> Option<usize> {
        if y < self.log_r[0] || y > *self.log_r.last().unwrap() {
            return None;
        }
        let idx = self.log_r.partition_point(|&node| node <= y);
        Some(idx.saturating_sub(1).min(self.log_r.len() - 2))
    }

    fn interpolate(&self, y: f64) -> f64 {
        match self.locate(y) {
            None => 0.0,
            Some(i) => {
                let t = (y - self.log_r[i]) / (self.log_r[i + 1] - self.log_r[i]);
                self.values[i] * (1.0 - t) + self.values[i + 1] * t
            }
        }
    }
}

impl TrialFunction for Sampled {
    fn family(&self) -> &'static str {
        "sampled"
    }

    fn log_value(&self, y: f64) -> f64 {
        self.interpolate(y).ln()
    }

    fn slope(&self, y: f64) -> f64 {
        match self.locate(y) {
            None => 0.0,
            Some(i) => (self.values[i + 1] - self.values[i]) / (self.log_r[i + 1] - self.log_r[i]),
        }
    }

    fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            self.interpolate(r.ln())
        }
    }

    fn log_window(&self, _weight: f64) -> (f64, f64) {
        (self.log_r[0], *self.log_r.last().unwrap())
    }

    fn log_kinks(&self) -> Vec<f64> {
        self.log_r.clone()
    }
}

/// psi_lambda(r) = psi(lambda r).
#[derive(Debug)]
pub struct Dilated {
    inner: Box<dyn TrialFunction>,
    log_lambda: f64,
}

impl Dilated {
    pub fn new(inner: Box<dyn TrialFunction>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InputDomain(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(Dilated { inner, log_lambda: lambda.ln() })
    }
}

impl TrialFunction for Dilated {
    fn family(&self) -> &'static str {
        self.inner.family()
    }

    fn log_value(&self, y: f64) -> f64 {
        self.inner.log_value(y + self.log_lambda)
    }

    fn log_ratio(&self, y: f64, x: f64) -> f64 {
        self.inner.log_ratio(y + self.log_lambda, x)
    }

    fn slope(&self, y: f64) -> f64 {
        self.inner.slope(y + self.log_lambda)
    }

    fn log_window(&self, weight: f64) -> (f64, f64) {
        let (lo, hi) = self.inner.log_window(weight);
        (lo - self.log_lambda, hi - self.log_lambda)
    }

    fn log_kinks(&self) -> Vec<f64> {
        self.inner.log_kinks().into_iter().map(|k| k - self.log_lambda).collect()
    }

    fn tail_exponent(&self) -> Option<f64> {
        self.inner.tail_exponent()
    }
}

/// Family name plus numeric parameters, as read from the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub samples: Option<(Vec<f64>, Vec<f64>)>,
}

impl TrialSpec {
    pub fn new(family: &str) -> Self {
        TrialSpec { family: family.to_string(), ..Default::default() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Config(format!("family '{}' needs parameter '{key}'", self.family)))
    }
}

pub type TrialFactory = fn(&TrialSpec) -> Result<Box<dyn TrialFunction>>;

/// Maps family names to constructors.
pub struct TrialRegistry {
    factories: BTreeMap<String, TrialFactory>,
}

impl TrialRegistry {
    pub fn empty() -> Self {
        TrialRegistry { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("log-gaussian", |spec| Ok(Box::new(LogGaussian::new(spec.param("sigma")?)?)));
        reg.register("log-linear", |spec| Ok(Box::new(LogLinearCutoff::new(spec.param("kappa")?)?)));
        reg.register("sampled", |spec| {
            let (log_r, values) = spec
                .samples
                .clone()
                .ok_or_else(|| Error::Config("family 'sampled' needs sample data".into()))?;
            Ok(Box::new(Sampled::new(log_r, values)?))
        });
        reg
    }

    pub fn register(&mut self, name: &str, factory: TrialFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    /// Builds the trial function, applying a `lambda` parameter as a dilation.
    pub fn create(&self, spec: &TrialSpec) -> Result<Box<dyn TrialFunction>> {
        let factory = self
            .factories
            .get(&spec.family)
            .ok_or_else(|| Error::Config(format!("unknown trial family '{}' (known: {:?})", spec.family, self.names())))?;
        let base = factory(spec)?;
        match spec.params.get("lambda") {
            Some(&lambda) if lambda != 1.0 => Ok(Box::new(Dilated::new(base, lambda)?)),
            _ => Ok(base),
        }
    }
}

impl Default for TrialRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
