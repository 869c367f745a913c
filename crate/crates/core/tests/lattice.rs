use nalgebra::{Complex, SymmetricEigen};
use opineq::lattice::*;
use opineq::Error;
use rustfft::FftPlanner;

fn dirichlet(side: usize, extent: f64) -> LatticeGrid {
    LatticeGrid::new(side, extent, Boundary::Dirichlet).unwrap()
}

#[test]
fn periodic_free_spectrum_matches_fft() {
    let grid = LatticeGrid::new(8, 4.0, Boundary::Periodic).unwrap();
    let t = kinetic_matrix(&LatticeField::zero(grid).unwrap(), 0.0).unwrap();
    // the Laplacian is circulant: the 2D FFT of its stencil gives its spectrum
    let s = grid.side;
    let lap = LatticeField::zero(grid).unwrap().laplacian();
    let mut stencil: Vec<Complex<f64>> = (0..s * s).map(|k| lap[(k, 0)]).collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(s);
    for row in stencil.chunks_mut(s) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); s];
    for j in 0..s {
        for i in 0..s {
            col[i] = stencil[i * s + j];
        }
        fft.process(&mut col);
        for i in 0..s {
            stencil[i * s + j] = col[i];
        }
    }
    let mut from_fft: Vec<f64> = stencil.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    from_fft.sort_by(f64::total_cmp);
    let analytic = periodic_dispersion(&grid);
    for ((a, b), c) in t.eigenvalues.iter().zip(&from_fft).zip(&analytic) {
        assert!((a - b).abs() < 1e-10 && (b - c).abs() < 1e-10);
    }
}

#[test]
fn periodic_field_rejected() {
    let grid = LatticeGrid::new(8, 4.0, Boundary::Periodic).unwrap();
    assert!(matches!(LatticeField::new(1.0, 1.0, grid, FieldConfig::Homogeneous), Err(Error::Config(_))));
}

#[test]
fn kinetic_matrices_are_psd() {
    let grid = dirichlet(10, 5.0);
    for cfg in [FieldConfig::Zero, FieldConfig::Homogeneous, FieldConfig::Dot] {
        let f = LatticeField::new(1.0, 1.0, grid, cfg).unwrap();
        for m in [0.0, 1.0] {
            let t = kinetic_matrix(&f, m).unwrap();
            assert!(t.eigenvalues[0] >= -1e-12 * t.norm());
            let asym = (&t.matrix - t.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(asym < 1e-12 * t.norm());
        }
    }
}

#[test]
fn heavy_mass_limit() {
    let f = LatticeField::new(1.0, 1.0, dirichlet(10, 5.0), FieldConfig::Homogeneous).unwrap();
    let scale = std::f64::consts::PI / f.grid.spacing;
    let m = 100.0 * scale;
    let t = kinetic_matrix(&f, m).unwrap();
    let mut nonrel: Vec<f64> = SymmetricEigen::new(f.laplacian()).eigenvalues.iter().map(|l| l / (2.0 * m)).collect();
    nonrel.sort_by(f64::total_cmp);
    for (t, n) in t.eigenvalues.iter().zip(&nonrel).take(5) {
        assert!((t - n).abs() < 0.05 * n);
    }
}

#[test]
fn gauge_shift_keeps_spectrum() {
    let f = make_fields(1.0, 1.0, dirichlet(10, 4.0)).unwrap();
    let chi: Vec<f64> = (0..f.grid.len())
        .map(|k| {
            let x = f.grid.position(k);
            (1.3 * x[0]).sin() + x[0] * x[1] * 0.4
        })
        .collect();
    let a = kinetic_matrix(&f, 0.5).unwrap();
    let b = kinetic_matrix(&f.gauge_shift(&chi).unwrap(), 0.5).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn curl_checks() {
    let b = 1.4;
    let r = 1.5;
    let f = make_fields(b, r, dirichlet(24, 6.0)).unwrap();
    let h = f.grid.spacing;
    let homogeneous = LatticeField::new(b, r, f.grid, FieldConfig::Homogeneous).unwrap();
    for (_, c) in homogeneous.discrete_curl() {
        assert!((c - b).abs() < 1e-10);
    }
    for (centre, c) in f.discrete_curl() {
        if centre[0].hypot(centre[1]) < r - 2.0 * h {
            assert!(c.abs() < 1e-2 * b);
        }
    }
}

#[test]
fn field_bound_examples() {
    let (b, r) = (1.0, 1.0);
    let delta = flux_parameter(b, r);
    let ratio = |x: [f64; 2]| {
        let a = cavity_potential(b, r, x);
        a[0].hypot(a[1]) * x[0].hypot(x[1]) / delta
    };
    assert!((ratio([2.0 * r, 0.0]) - 1.0).abs() < 1e-15);
    assert!((ratio([0.0, 0.5 * r]) - 0.25).abs() < 1e-15);
    let f = make_fields(b, r, dirichlet(32, 4.0)).unwrap();
    let max = field_bound_check(&f).unwrap();
    assert!(max <= 1.0 + 1e-12 && max > 1.0 - 1e-12);
    assert_eq!(flux_parameter(1.0, 2.0), 2.0);
}

#[test]
fn kato_equality_for_zero_field() {
    let grid = dirichlet(8, 4.0);
    let t = kinetic_matrix(&LatticeField::zero(grid).unwrap(), 1.0).unwrap();
    let n = grid.len();
    let eta: Vec<f64> = (0..n).map(|k| ((k * 7) % 11) as f64 / 11.0).collect();
    let phi: Vec<Complex<f64>> = (0..n).map(|k| Complex::new(((k * 3) % 5) as f64 + 1.0, 0.0)).collect();
    let s = kato_test(&eta, &phi, &t, &t).unwrap();
    assert!(s.relative_violation.abs() < 1e-13);
}

#[test]
fn kato_small_experiment() {
    let grid = dirichlet(8, 4.0);
    for cfg in [FieldConfig::Homogeneous, FieldConfig::Dot] {
        let f = LatticeField::new(1.0, 1.0, grid, cfg).unwrap();
        let e = kato_experiment(&f, 1.0, 40, 11).unwrap();
        assert!(e.passed());
        assert_eq!(e.histogram.iter().sum::<usize>(), 40);
        let again = kato_experiment(&f, 1.0, 40, 11).unwrap();
        assert_eq!(e, again);
    }
}

#[test]
fn kato_rejects_negative_eta() {
    let grid = dirichlet(4, 2.0);
    let t = kinetic_matrix(&LatticeField::zero(grid).unwrap(), 0.0).unwrap();
    let mut eta = vec![1.0; 16];
    eta[3] = -0.1;
    let phi = vec![Complex::new(1.0, 0.0); 16];
    assert!(kato_test(&eta, &phi, &t, &t).is_err());
}

#[test]
fn nonnegative_phi_zero_field_has_no_gap() {
    let f = LatticeField::zero(dirichlet(8, 4.0)).unwrap();
    let e = kato_experiment_with(&f, 0.0, 20, 3, PhiSampling::NonnegativeReal).unwrap();
    assert!(e.max_violation.abs() < 1e-14);
}
