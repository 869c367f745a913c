use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use opineq::anticommutator::{
    alpha, gamma, nonrel_form, relativistic_form, Dimension, FormOptions,
};
use opineq::bounds::{critical_constant_printed, BoundReport, PrintedVariant};
use opineq::lattice::{
    kato_experiment_with, Boundary, FieldConfig, LatticeField, LatticeGrid, PhiSampling, VIOLATION_BINS,
};
use opineq::spectra::{
    default_hydrogen_grid, hydrogen2d, hydrogen2d_exact, BisectMethod, CriticalCouplingRegistry, GridSpec,
    MellinMethod,
};
use opineq::trial::{TrialRegistry, TrialSpec};
use rayon::prelude::*;

use crate::report::{num, Cell, Provenance, Report};

fn join(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected \"rmin,rmax,n\", got {s:?}"));
    }
    let r_min: f64 = parts[0].parse().map_err(|e| format!("rmin: {e}"))?;
    let r_max: f64 = parts[1].parse().map_err(|e| format!("rmax: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("n: {e}"))?;
    GridSpec::new(r_min, r_max, n).map_err(|e| e.to_string())
}

fn grid_string(g: &GridSpec) -> String {
    format!("{},{},{}", num(g.r_min), num(g.r_max), g.n)
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    /// Dimensions to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,3", allow_negative_numbers = true)]
    pub dimension: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

pub fn gamma_cmd(a: &GammaArgs, report: &mut Report) -> Result<()> {
    report.param("dimension", join(&a.dimension)).param("tol", num(a.tol));
    let rows = a
        .dimension
        .par_iter()
        .map(|&d| {
            let dim = Dimension::new(d)?;
            let g = gamma(dim, a.tol)?;
            Ok((d, g.value, 2.0 * alpha(dim) * g.value, g.abs_error_estimate))
        })
        .collect::<opineq::Result<Vec<_>>>()?;
    report.columns(&[
        ("d", Provenance::Input),
        ("gamma", Provenance::Quadrature),
        ("two_alpha_gamma", Provenance::Quadrature),
        ("abs_error", Provenance::Quadrature),
    ]);
    let mut signs_ok = true;
    for &(d, g, lb, e) in &rows {
        report.row(vec![d.into(), g.into(), lb.into(), e.into()]);
        if d == 2.0 {
            report.check("vanishes_at_2", g.abs() < 1e-8, format!("|gamma(2)| = {:e}", g.abs()));
        } else {
            signs_ok &= g * (d - 2.0) > 0.0;
        }
    }
    report.check("sign_of_d_minus_2", signs_ok, "gamma(d) has the sign of d - 2");
    Ok(())
}

#[derive(Debug, Args)]
pub struct PositivityArgs {
    /// Trial family: log-gaussian (grid over sigma) or log-linear (grid over kappa).
    #[arg(long, default_value = "log-gaussian")]
    pub family: String,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
    pub sigma_grid: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub dimension: f64,
    #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-6,1e-8,1e-10")]
    pub eps_schedule: Vec<f64>,
    /// Dilation factor for the scaling column.
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Add the non-relativistic form (log-gaussian, d = 2 only).
    #[arg(long)]
    pub nonrel: bool,
    /// Relative tolerance for the dilation check.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

pub fn positivity_cmd(a: &PositivityArgs, report: &mut Report) -> Result<()> {
    report
        .param("family", &a.family)
        .param("sigma-grid", join(&a.sigma_grid))
        .param("dimension", num(a.dimension))
        .param("eps-schedule", join(&a.eps_schedule))
        .param("lambda", num(a.lambda))
        .param("nonrel", a.nonrel)
        .param("tol", num(a.tol));
    let key = match a.family.as_str() {
        "log-gaussian" => "sigma",
        "log-linear" => "kappa",
        other => bail!(opineq::Error::Config(format!("unknown trial family {other}"))),
    };
    if a.nonrel && (key != "sigma" || a.dimension != 2.0) {
        bail!(opineq::Error::Config("--nonrel needs the log-gaussian family in d = 2".into()));
    }
    let dim = Dimension::new(a.dimension)?;
    let registry = TrialRegistry::with_builtins();
    let opts = FormOptions::default();
    let expected = a.lambda.powf(-a.dimension);
    let rows = a
        .sigma_grid
        .par_iter()
        .map(|&p| {
            let spec = TrialSpec::new(&a.family).with(key, p);
            let psi = registry.create(&spec)?;
            let scaled = registry.create(&spec.clone().with("lambda", a.lambda))?;
            let f = relativistic_form(psi.as_ref(), dim, &a.eps_schedule, opts)?;
            let fs = relativistic_form(scaled.as_ref(), dim, &a.eps_schedule, opts)?;
            let nonrel = if a.nonrel { Some(nonrel_form(psi.as_ref())?.normalized) } else { None };
            Ok((p, f.value, f.scale, fs.value, nonrel))
        })
        .collect::<opineq::Result<Vec<_>>>()?;
    let mut cols = vec![
        (key, Provenance::Input),
        ("t", Provenance::Quadrature),
        ("scale", Provenance::Quadrature),
        ("t_over_scale", Provenance::Derived),
        ("t_lambda", Provenance::Quadrature),
        ("lambda_ratio", Provenance::Derived),
        ("expected_ratio", Provenance::ClosedForm),
    ];
    if a.nonrel {
        cols.push(("nonrel_normalized", Provenance::Quadrature));
        cols.push(("nonrel_oracle", Provenance::ClosedForm));
    }
    report.columns(&cols);
    let (mut nonneg, mut scaling, mut oracle) = (true, 0.0f64, 0.0f64);
    for &(p, t, scale, ts, nonrel) in &rows {
        nonneg &= t >= -1e-6 * scale;
        let ratio = ts / t;
        scaling = scaling.max((ratio / expected - 1.0).abs());
        let mut row: Vec<Cell> =
            vec![p.into(), t.into(), scale.into(), (t / scale).into(), ts.into(), ratio.into(), expected.into()];
        if let Some(q) = nonrel {
            let want = 0.5 / (p * p) - 0.25;
            oracle = oracle.max(if want.abs() > 1e-12 { (q - want).abs() / want.abs() } else { q.abs() });
            row.push(q.into());
            row.push(want.into());
        }
        report.row(row);
    }
    report.check("nonnegative", nonneg, "t >= -1e-6 * scale at every grid point");
    report.check("dilation", scaling <= a.tol, format!("max |ratio / lambda^-d - 1| = {scaling:e}"));
    if a.nonrel {
        report.check("nonrel_oracle", oracle <= 1e-6, format!("max deviation from 1/(2 sigma^2) - 1/4 = {oracle:e}"));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct HydrogenArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub z: f64,
    /// Highest principal number; channels -m_max..=m_max are solved.
    #[arg(long, default_value_t = 2)]
    pub m_max: u32,
    /// "rmin,rmax,n"; defaults to [1e-9, 100]/Z with 4001 nodes.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
    /// Relative tolerance against the exact levels.
    #[arg(long, default_value_t = 5e-3)]
    pub tol: f64,
}

pub fn hydrogen_cmd(a: &HydrogenArgs, report: &mut Report) -> Result<()> {
    if a.z.is_nan() || a.z <= 0.0 {
        bail!(opineq::Error::InputDomain(format!("nuclear charge must be positive, got {}", a.z)));
    }
    let grid = a.grid.unwrap_or_else(|| default_hydrogen_grid(a.z));
    report.param("z", num(a.z)).param("m-max", a.m_max).param("grid", grid_string(&grid)).param("tol", num(a.tol));
    let rep = hydrogen2d(a.z, a.m_max, &grid)?;
    report.columns(&[
        ("n", Provenance::Input),
        ("energy", Provenance::Eigensolver),
        ("exact", Provenance::ClosedForm),
        ("rel_error", Provenance::Derived),
        ("degeneracy", Provenance::Eigensolver),
        ("channels", Provenance::Eigensolver),
    ]);
    let (mut degeneracy_ok, mut worst) = (true, 0.0f64);
    let complete = (a.m_max as usize + 1).min(rep.levels.len());
    for (n, level) in rep.levels.iter().take(complete).enumerate() {
        let exact = hydrogen2d_exact(a.z, n as u32);
        let rel = (level.energy - exact).abs() / exact.abs();
        worst = worst.max(rel);
        degeneracy_ok &= level.degeneracy == 2 * n + 1;
        let channels: Vec<String> = level.channels.iter().map(|m| m.to_string()).collect();
        report.row(vec![
            n.into(),
            level.energy.into(),
            exact.into(),
            rel.into(),
            level.degeneracy.into(),
            channels.join(" ").into(),
        ]);
    }
    let mut monotone = true;
    for n in 0..complete {
        let exact = hydrogen2d_exact(a.z, n as u32);
        let errs: Vec<f64> = rep.refinement.iter().filter_map(|s| s.energies.get(n)).map(|e| (e - exact).abs()).collect();
        monotone &= errs.len() == rep.refinement.len() && errs.windows(2).all(|w| w[1] <= w[0]);
    }
    for step in &rep.refinement {
        let e: Vec<String> = step.energies.iter().take(complete).map(|v| num(*v)).collect();
        report.summary(&format!("refinement_n{}", step.n), e.join(" "), Provenance::Eigensolver);
    }
    report.check("levels_complete", complete == a.m_max as usize + 1, format!("{complete} levels"));
    report.check("degeneracy_2n_plus_1", degeneracy_ok, "level n has multiplicity 2n+1");
    report.check("energies", worst <= a.tol, format!("max relative error {worst:e}"));
    report.check("refinement_monotone", monotone, "errors shrink on n/4, n/2, n nodes");
    Ok(())
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// bisect, mellin or all.
    #[arg(long, default_value = "all")]
    pub method: String,
    /// Half widths (in e-folds) of the bisection log grids.
    #[arg(long, value_delimiter = ',', default_value = "40,50,60")]
    pub widths: Vec<f64>,
    /// Log-grid spacing for bisection.
    #[arg(long, default_value_t = 0.25)]
    pub h: f64,
    /// Bisection interval width.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Highest channel for the Mellin method.
    #[arg(long, default_value_t = 3)]
    pub m_max: u32,
    /// Allowed relative difference between methods.
    #[arg(long, default_value_t = 0.01)]
    pub agreement: f64,
}

pub fn critical_cmd(a: &CriticalArgs, report: &mut Report) -> Result<()> {
    report
        .param("method", &a.method)
        .param("widths", join(&a.widths))
        .param("h", num(a.h))
        .param("tol", num(a.tol))
        .param("m-max", a.m_max)
        .param("agreement", num(a.agreement));
    let schedule = a.widths.iter().map(|w| GridSpec::symmetric_log(*w, a.h)).collect::<opineq::Result<Vec<_>>>()?;
    let mut registry = CriticalCouplingRegistry::empty();
    registry.register(Box::new(BisectMethod { schedule, tol: a.tol }));
    registry.register(Box::new(MellinMethod { m_max: a.m_max }));
    let names: Vec<String> = if a.method == "all" {
        registry.names().iter().map(|s| s.to_string()).collect()
    } else {
        vec![a.method.clone()]
    };
    let results = names
        .par_iter()
        .map(|name| registry.get(name)?.estimate())
        .collect::<opineq::Result<Vec<_>>>()?;
    report.columns(&[
        ("method", Provenance::Input),
        ("nu_c", Provenance::Row),
        ("lo", Provenance::Row),
        ("hi", Provenance::Row),
        ("provenance", Provenance::Input),
    ]);
    for r in &results {
        let source = if r.method == "mellin" { Provenance::Quadrature } else { Provenance::Eigensolver };
        report.row(vec![
            r.method.as_str().into(),
            r.nu_c.into(),
            r.interval.0.into(),
            r.interval.1.into(),
            source.tag().into(),
        ]);
    }
    report.summary("printed_constant", critical_constant_printed(PrintedVariant::AsPrinted), Provenance::ClosedForm);
    report.summary(
        "printed_constant_fourth_power",
        critical_constant_printed(PrintedVariant::FourthPower),
        Provenance::ClosedForm,
    );
    if results.len() >= 2 {
        let lo = results.iter().map(|r| r.nu_c).fold(f64::INFINITY, f64::min);
        let hi = results.iter().map(|r| r.nu_c).fold(f64::NEG_INFINITY, f64::max);
        let rel = (hi - lo) / lo;
        report.summary("relative_spread", rel, Provenance::Derived);
        report.check("methods_agree", rel <= a.agreement, format!("spread {rel:e}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FieldArg {
    Zero,
    Homogeneous,
    Dot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PhiArg {
    Complex,
    Nonnegative,
}

#[derive(Debug, Args)]
pub struct KatoArgs {
    #[arg(long, value_enum, default_value = "dot")]
    pub field: FieldArg,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mass: f64,
    /// Grid side length in nodes (even, at most 48).
    #[arg(long, default_value_t = 24)]
    pub side: usize,
    /// Physical side length of the grid.
    #[arg(long, default_value_t = 8.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "complex")]
    pub phi: PhiArg,
}

pub fn kato_cmd(a: &KatoArgs, seed: u64, report: &mut Report) -> Result<()> {
    let config = match a.field {
        FieldArg::Zero => FieldConfig::Zero,
        FieldArg::Homogeneous => FieldConfig::Homogeneous,
        FieldArg::Dot => FieldConfig::Dot,
    };
    let sampling = match a.phi {
        PhiArg::Complex => PhiSampling::ComplexGaussian,
        PhiArg::Nonnegative => PhiSampling::NonnegativeReal,
    };
    report
        .param("field", format!("{config:?}").to_lowercase())
        .param("b", num(a.b))
        .param("r", num(a.r))
        .param("mass", num(a.mass))
        .param("side", a.side)
        .param("extent", num(a.extent))
        .param("samples", a.samples)
        .param("phi", format!("{:?}", a.phi).to_lowercase());
    let grid = LatticeGrid::new(a.side, a.extent, Boundary::Dirichlet)?;
    let field = LatticeField::new(a.b, a.r, grid, config)?;
    let e = kato_experiment_with(&field, a.mass, a.samples, seed, sampling)?;
    report.columns(&[("bin_upper", Provenance::Input), ("count", Provenance::Eigensolver)]);
    for (i, count) in e.histogram.iter().enumerate() {
        let edge = VIOLATION_BINS.get(i).map_or("inf".to_string(), |v| num(*v));
        report.row(vec![edge.into(), (*count).into()]);
    }
    report.summary("max_violation", e.max_violation, Provenance::Eigensolver);
    report.summary("violations", e.violations, Provenance::Eigensolver);
    report.summary("tolerance", e.tolerance, Provenance::Input);
    report.check("no_violations", e.passed(), format!("{} samples above {:e}", e.violations, e.tolerance));
    let total: usize = e.histogram.iter().sum();
    report.check("histogram_total", total == a.samples, format!("{total} of {}", a.samples));
    Ok(())
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["b", "r"])]
    pub delta: Option<f64>,
    /// Cavity field strength; delta = B R^2 / 2.
    #[arg(long, allow_negative_numbers = true, requires = "r")]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "b")]
    pub r: Option<f64>,
}

pub fn bounds_cmd(a: &BoundsArgs, report: &mut Report) -> Result<()> {
    let rep = match (a.delta, a.b, a.r) {
        (_, Some(b), Some(r)) => {
            report.param("b", num(b)).param("r", num(r)).param("z", num(a.z));
            BoundReport::from_field(b, r, a.z)?
        }
        (d, _, _) => {
            let d = d.unwrap_or(0.0);
            report.param("delta", num(d)).param("z", num(a.z));
            BoundReport::new(d, a.z)?
        }
    };
    report.columns(&[("quantity", Provenance::Input), ("value", Provenance::Row), ("provenance", Provenance::Input)]);
    let tag = |p: Provenance| Cell::from(p.tag());
    let delta_source = if rep.field.is_some() { Provenance::ClosedForm } else { Provenance::Input };
    report.row(vec!["delta".into(), rep.delta.into(), tag(delta_source)]);
    report.row(vec!["z".into(), rep.z.into(), tag(Provenance::Input)]);
    report.row(vec!["relativistic".into(), rep.relativistic.into(), tag(Provenance::ClosedForm)]);
    if let Some(v) = rep.nonrelativistic {
        report.row(vec!["nonrelativistic".into(), v.into(), tag(Provenance::ClosedForm)]);
    }
    if let Some(v) = rep.expectation {
        report.row(vec!["expectation".into(), v.into(), tag(Provenance::ClosedForm)]);
    }
    report.row(vec!["max_bindable".into(), rep.max_bindable.into(), tag(Provenance::ClosedForm)]);
    report.summary("assumes_binding_threshold", rep.assumes_binding_threshold.to_string(), Provenance::Input);
    for (i, w) in rep.warnings.iter().enumerate() {
        report.summary(&format!("warning_{i}"), w.as_str(), Provenance::Derived);
    }
    report.check(
        "max_bindable_below_bound",
        (rep.max_bindable as f64) < rep.relativistic,
        format!("{} < {}", rep.max_bindable, rep.relativistic),
    );
    Ok(())
}

