//! Grid quantities against closed forms and fine quadrature, and their
//! orders under refinement.

use std::f64::consts::PI;

use capflow::geometry::{
    area, enclosed_volume, laplace_beltrami, mean_curvature, second_fundamental_norm, tilt,
};
use capflow::{Grid, Profile};

const EPS: f64 = 0.1;

fn rho(z: f64) -> f64 {
    3.0 + EPS * (PI * z).cos()
}
fn rho_d(z: f64) -> f64 {
    -EPS * PI * (PI * z).sin()
}
fn rho_dd(z: f64) -> f64 {
    -EPS * PI * PI * (PI * z).cos()
}
fn q(z: f64) -> f64 {
    1.0 + rho_d(z) * rho_d(z)
}
fn h_exact(z: f64) -> f64 {
    -rho_dd(z) / q(z).powf(1.5) + 1.0 / (rho(z) * q(z).sqrt())
}
fn a2_exact(z: f64) -> f64 {
    rho_dd(z).powi(2) / q(z).powi(3) + 1.0 / (rho(z).powi(2) * q(z))
}

/// Fourth-order central derivative of a closed form.
fn deriv(f: impl Fn(f64) -> f64, z: f64) -> f64 {
    let s = 1e-3;
    (8.0 * (f(z + s) - f(z - s)) - (f(z + 2.0 * s) - f(z - 2.0 * s))) / (12.0 * s)
}

/// `ΔH = (ρ v)^{-1} d/dz (ρ/v · H')` for n = 2.
fn lap_h_exact(z: f64) -> f64 {
    let flux = |z: f64| rho(z) / q(z).sqrt() * deriv(h_exact, z);
    deriv(flux, z) / (rho(z) * q(z).sqrt())
}

/// Composite Simpson on `[0, 1]` with a very fine mesh.
fn simpson(f: impl Fn(f64) -> f64) -> f64 {
    let n = 200_000;
    let h = 1.0 / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(0.0) + f(1.0) + inner) * h / 3.0
}

fn cosine(m: usize) -> Profile {
    Profile::from_fn(Grid::new(1.0, m).unwrap(), 2, rho).unwrap()
}

fn max_err(values: &[f64], p: &Profile, exact: impl Fn(f64) -> f64) -> f64 {
    p.grid()
        .nodes()
        .zip(values)
        .map(|(z, v)| (v - exact(z)).abs())
        .fold(0.0, f64::max)
}

/// Errors at `m - 1 = 50, 100, 200` and the two successive ratios.
fn refinement(err: impl Fn(&Profile) -> f64) -> (Vec<f64>, Vec<f64>) {
    let errs: Vec<f64> = [51, 101, 201].iter().map(|&m| err(&cosine(m))).collect();
    let ratios = errs.windows(2).map(|w| w[0] / w[1]).collect();
    (errs, ratios)
}

fn assert_second_order(name: &str, err: impl Fn(&Profile) -> f64) {
    let (errs, ratios) = refinement(err);
    for r in &ratios {
        assert!(*r >= 3.8, "{name}: errors {errs:?}, ratios {ratios:?}");
    }
}

#[test]
fn mean_curvature_is_second_order() {
    assert_second_order("H", |p| max_err(&mean_curvature(p), p, h_exact));
}

#[test]
fn second_fundamental_form_is_second_order() {
    assert_second_order("|A|²", |p| max_err(&second_fundamental_norm(p), p, a2_exact));
}

#[test]
fn tilt_is_second_order() {
    assert_second_order("v", |p| max_err(&tilt(p), p, |z| q(z).sqrt()));
}

#[test]
fn laplacian_of_mean_curvature_is_second_order() {
    assert_second_order("ΔH", |p| {
        max_err(&laplace_beltrami(p, &mean_curvature(p)), p, lap_h_exact)
    });
}

#[test]
fn area_against_quadrature() {
    let exact = simpson(|z| 2.0 * PI * rho(z) * q(z).sqrt());
    let p = cosine(201);
    // tilt carries the only O(Δz²) error; the trapezoid rule is spectrally
    // accurate on the even reflection of a smooth profile
    assert!((area(&p) - exact).abs() / exact < 1e-5);
    assert_second_order("area", |p| (area(p) - exact).abs());
}

#[test]
fn volume_is_exact_for_the_cosine() {
    let exact = PI * (9.0 + EPS * EPS / 2.0);
    for m in [11, 51, 201] {
        let v = enclosed_volume(&cosine(m));
        assert!((v - exact).abs() < 1e-12 * exact, "m = {m}: {v} vs {exact}");
    }
}

#[test]
fn laplacian_on_cylinder_is_the_axial_second_derivative() {
    for m in [51, 101, 201] {
        let p = Profile::from_fn(Grid::new(1.0, m).unwrap(), 2, |_| 1.7).unwrap();
        let f = capflow::ScalarField::new(p.grid().nodes().map(|z| (PI * z).cos()).collect(), "");
        let lap = laplace_beltrami(&p, &f);
        let dz = p.grid().spacing();
        let err = max_err(&lap, &p, |z| -PI * PI * (PI * z).cos());
        assert!(err < PI.powi(4) * dz * dz / 12.0 * 1.01, "m = {m}: {err}");
    }
}

#[test]
fn sphere_is_second_order() {
    let sphere = |m: usize| {
        Profile::from_fn(Grid::new(1.0, m).unwrap(), 2, |z| (4.0 - z * z).sqrt()).unwrap()
    };
    // the sphere is not flat at z = 1, so compare interior nodes only
    let err = |m: usize| {
        let p = sphere(m);
        let h = mean_curvature(&p);
        h[1..m - 1].iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
    };
    let ratio = err(101) / err(201);
    assert!(ratio > 3.8, "ratio {ratio}");
}
