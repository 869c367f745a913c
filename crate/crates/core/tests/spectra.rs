use std::f64::consts::PI;

use opineq::anticommutator::{momentum_form, Dimension, FormOptions};
use opineq::quadrature::Integrator;
use opineq::spectra::*;
use opineq::trial::{LogGaussian, TrialFunction};
use opineq::Error;

fn hankel(m: i32, r_max: f64, n: usize) -> ChannelOperator {
    momentum_channel(m, &GridSpec::new(1e-3, r_max, n).unwrap()).unwrap()
}

#[test]
fn channel_matrices_are_symmetric_and_nonnegative() {
    for m in [0, 1, 3] {
        let op = hankel(m, 10.0, 120);
        assert!(op.symmetry_error() < 1e-12);
        let ev = op.eigenvalues();
        assert!(ev[0] >= -1e-10 * ev[ev.len() - 1]);
    }
    let g = GridSpec::symmetric_log(10.0, 0.25).unwrap();
    let op = LogMellinScheme.channel(2, &g, 2).unwrap();
    assert!(op.symmetry_error() < 1e-12);
}

// |p| e^{-r^2/2} = int_0^inf k^2 e^{-k^2/2} J_0(k r) dk
fn gaussian_image(r: f64) -> f64 {
    Integrator::new(1e-12)
        .with_abs_tol(1e-14)
        .integrate(|k| k * k * (-0.5 * k * k).exp() * libm::j0(k * r), 0.0, 14.0)
        .unwrap()
        .value
}

#[test]
fn gaussian_image_inner_region() {
    let op = hankel(0, 32.0, 600);
    let v = op.sample(|r| (-0.5 * r * r).exp());
    let pv = &op.matrix * &v;
    let (mut err, mut norm) = (0.0, 0.0);
    for i in 0..op.len() {
        let r = op.nodes[i];
        if r >= 6.0 {
            break;
        }
        let want = gaussian_image(r);
        let got = pv[i] / op.weights[i].sqrt();
        err += op.weights[i] * (got - want).powi(2);
        norm += op.weights[i] * want * want;
    }
    let rel = (err / norm).sqrt();
    assert!(rel < 1e-4, "relative image error {rel:.3e}");
}

#[test]
fn gaussian_rayleigh_quotient() {
    let op = hankel(0, 12.0, 200);
    let q = op.rayleigh(&op.sample(|r| (-0.5 * r * r).exp()));
    let want = PI.sqrt() / 2.0;
    assert!((q - want).abs() < 1e-3 * want, "{q}");
}

#[test]
fn rayleigh_matches_double_integral() {
    let op = LogMellinScheme.channel(0, &GridSpec::symmetric_log(30.0, 0.125).unwrap(), 2).unwrap();
    for sigma in [0.5, 1.0, 2.0] {
        let psi = LogGaussian::new(sigma).unwrap();
        let v = op.sample(|r| psi.value(r));
        let spectral = 2.0 * PI * v.dot(&(&op.matrix * &v));
        let direct = momentum_form(&psi, Dimension::new(2.0).unwrap(), FormOptions::default()).unwrap();
        assert!((spectral - direct).abs() < 1e-3 * direct, "sigma={sigma}: {spectral} vs {direct}");
    }
}

#[test]
fn bump_rayleigh_scales_linearly() {
    let bump = |r: f64| (1.0 - r * r).max(0.0).powi(2);
    let base = hankel(0, 2.0, 150);
    let q1 = base.rayleigh(&base.sample(bump));
    let lam = 3.0;
    let small = hankel(0, 2.0 / lam, 150);
    let q2 = small.rayleigh(&small.sample(|r| bump(lam * r)));
    assert!((q2 / q1 - lam).abs() < 1e-10);
}

#[test]
fn hydrogen_levels_and_degeneracy() {
    let rep = hydrogen2d(1.0, 2, &default_hydrogen_grid(1.0)).unwrap();
    let want = [(-2.0, 1), (-2.0 / 9.0, 3), (-2.0 / 25.0, 5)];
    assert_eq!(rep.levels.len(), 3);
    for (n, (level, (e, deg))) in rep.levels.iter().zip(want).enumerate() {
        assert!((level.energy - e).abs() < 5e-3 * e.abs());
        assert_eq!(level.degeneracy, deg);
        let expected: Vec<i32> = (-(n as i32)..=n as i32).collect();
        assert_eq!(level.channels, expected);
    }
}

#[test]
fn hydrogen_charge_scaling_and_refinement() {
    let z1 = hydrogen2d(1.0, 1, &default_hydrogen_grid(1.0)).unwrap();
    let z2 = hydrogen2d(2.0, 1, &default_hydrogen_grid(2.0)).unwrap();
    assert!((z2.levels[0].energy + 8.0).abs() < 0.04);
    for (a, b) in z1.levels.iter().zip(&z2.levels) {
        assert!((b.energy / a.energy - 4.0).abs() < 1e-9);
    }
    for (k, exact) in [hydrogen2d_exact(1.0, 0), hydrogen2d_exact(1.0, 1)].iter().enumerate() {
        let errs: Vec<f64> = z1.refinement.iter().map(|s| (s.energies[k] - exact).abs()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }
}

#[test]
fn hydrogen_coarse_grid_requests_refinement() {
    let g = GridSpec::new(1e-6, 100.0, 80).unwrap();
    assert!(matches!(hydrogen2d(1.0, 1, &g), Err(Error::Diagnostic { .. })));
    assert!(hydrogen2d(0.0, 1, &default_hydrogen_grid(1.0)).is_err());
}

#[test]
fn chandrasekhar_regimes() {
    let schedule = [30.0, 35.0, 40.0].map(|w| GridSpec::symmetric_log(w, 0.25).unwrap());
    let free: Vec<f64> = schedule.iter().map(|g| chandrasekhar_lowest(0.0, 0, g).unwrap()).collect();
    assert!(free.iter().all(|l| *l >= -1e-10));
    let probe = CoulombProbe::new(&schedule).unwrap();
    let (weak, l) = probe.classify(0.1).unwrap();
    assert_eq!(weak, Stability::Stable);
    assert!(l.iter().all(|v| *v > 0.0));
    let (strong, l) = probe.classify(0.4).unwrap();
    assert_eq!(strong, Stability::Divergent);
    assert!(l[1] / l[0] > 2.0 && l[2] / l[1] > 2.0);
}

#[test]
fn transition_brackets_the_mellin_value() {
    let nu_c = critical_coupling_mellin(0).unwrap().nu_c;
    let probe = CoulombProbe::new(&default_bisect_schedule()).unwrap();
    assert_eq!(probe.classify(0.5 * nu_c).unwrap().0, Stability::Stable);
    assert_eq!(probe.classify(2.0 * nu_c).unwrap().0, Stability::Divergent);
}

#[test]
fn bisection_needs_three_grids() {
    let g = GridSpec::symmetric_log(10.0, 0.5).unwrap();
    assert!(matches!(critical_coupling_bisect(&[g, g]), Err(Error::Config(_))));
}

#[test]
fn mellin_multiplier_shape() {
    let tol = 1e-10;
    for m in [0, 1] {
        for tau in [0.5, 1.7] {
            let a = mellin_multiplier(m, tau, tol).unwrap();
            let b = mellin_multiplier(m, -tau, tol).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs());
        }
    }
    let m0 = mellin_multiplier(0, 0.0, tol).unwrap();
    let m1 = mellin_multiplier(1, 0.0, tol).unwrap();
    let m2 = mellin_multiplier(2, 0.0, tol).unwrap();
    assert!(m0 > m1 && m1 > m2);
    for tau in [0.25, 1.0, 3.0] {
        assert!(mellin_multiplier(0, tau, tol).unwrap() < m0);
    }
    // 1/M_0(0) against the closed form 2 Gamma(3/4)^2 / Gamma(1/4)^2 = 0.228473290522...
    assert!((1.0 / m0 - 0.22847329052223).abs() < 1e-9);
}

#[test]
fn anticommutator_lower_edge() {
    let g = default_anticomm_grid();
    assert!(lambda_min_anticomm(2, &g).unwrap() >= -1e-3);
    let three = lambda_min_refinement(3, &g, 2).unwrap();
    assert!(three.monotone);
    assert!(three.value >= 0.95);
    assert!(lambda_min_anticomm(4, &g).is_err());
}

#[test]
fn anticommutator_rayleigh_is_dilation_invariant() {
    let op = hankel(0, 40.0, 400);
    let x = op.position();
    let q = |f: &dyn Fn(f64) -> f64| {
        let v = op.sample(f);
        let xv = v.component_mul(&x);
        let pv = &op.matrix * &v;
        2.0 * xv.dot(&pv) / v.norm_squared()
    };
    let a = q(&|r: f64| (-0.5 * r * r).exp());
    let b = q(&|r: f64| (-2.0 * r * r).exp());
    assert!((a - b).abs() < 1e-3 * a, "{a} vs {b}");
}
