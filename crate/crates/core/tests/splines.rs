use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Rotation3, Vector3};
use proptest::prelude::*;
use vessel_coords::splines::{
    eval_basis, fit_curve, fit_curve_with_params, fit_surface, BivariateSpline, KnotVector, SplineCurve3,
    SurfaceSample,
};

/// Textbook de Boor evaluation of a cubic with the given full knot vector.
/// Independent of the library's span-basis code.
fn de_boor(knots: &[f64], coeffs: &[f64], t: f64) -> f64 {
    let p = 3;
    let n = coeffs.len();
    let mut k = p;
    while k + 1 < n && !(t < knots[k + 1]) {
        k += 1;
    }
    let mut d: Vec<f64> = (0..=p).map(|j| coeffs[j + k - p]).collect();
    for r in 1..=p {
        for j in (r..=p).rev() {
            let i = j + k - p;
            let denom = knots[i + p + 1 - r] - knots[i];
            let alpha = if denom > 0.0 { (t - knots[i]) / denom } else { 0.0 };
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
        }
    }
    d[p]
}

#[test]
fn single_span_midpoint_matches_de_boor() {
    let kv = KnotVector::clamped_unit(2).unwrap();
    assert_eq!(kv.n_coefficients(), 4);
    let t = 0.5;
    let mut sum = 0.0;
    for i in 0..4 {
        let b = eval_basis(&kv, i, t).unwrap();
        let mut unit = vec![0.0; 4];
        unit[i] = 1.0;
        let oracle = de_boor(kv.knots(), &unit, t);
        assert!((b - oracle).abs() < 1e-15, "basis {i}: {b} vs {oracle}");
        assert!(b > 0.0);
        sum += b;
    }
    assert!((sum - 1.0).abs() < 1e-15);
    // Bernstein values at 1/2
    assert!((eval_basis(&kv, 0, t).unwrap() - 0.125).abs() < 1e-15);
    assert!((eval_basis(&kv, 1, t).unwrap() - 0.375).abs() < 1e-15);
}

#[test]
fn clamped_basis_matches_de_boor_everywhere() {
    let kv = KnotVector::clamped_unit(9).unwrap();
    for i in 0..kv.n_coefficients() {
        let mut unit = vec![0.0; kv.n_coefficients()];
        unit[i] = 1.0;
        for s in 0..400 {
            let t = s as f64 / 400.0;
            let b = eval_basis(&kv, i, t).unwrap();
            assert!((b - de_boor(kv.knots(), &unit, t)).abs() < 1e-14);
        }
    }
}

#[test]
fn local_support_spans_four_intervals() {
    for kv in [KnotVector::clamped_unit(11).unwrap(), KnotVector::periodic_angle(11).unwrap()] {
        let (lo, hi) = kv.domain();
        let h = kv.spacing();
        let n = kv.n_coefficients();
        for i in 0..n {
            let mut support = 0.0;
            let steps = 4000;
            for s in 0..steps {
                let t = lo + (hi - lo) * (s as f64 + 0.5) / steps as f64;
                if eval_basis(&kv, i, t).unwrap() > 0.0 {
                    support += (hi - lo) / steps as f64;
                }
            }
            assert!(support <= 4.0 * h + 1e-9, "basis {i} support {support} > 4 spans");
        }
    }
}

proptest! {
    #[test]
    fn partition_of_unity(t in 0.0f64..=1.0, count in 2usize..25) {
        let kv = KnotVector::clamped_unit(count).unwrap();
        let sum: f64 = (0..kv.n_coefficients()).map(|i| eval_basis(&kv, i, t).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for i in 0..kv.n_coefficients() {
            prop_assert!(eval_basis(&kv, i, t).unwrap() >= 0.0);
        }
    }

    #[test]
    fn periodic_partition_of_unity(theta in 0.0f64..=TAU, count in 4usize..25) {
        let kv = KnotVector::periodic_angle(count).unwrap();
        let sum: f64 = (0..kv.n_coefficients()).map(|i| eval_basis(&kv, i, theta).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rigid_equivariance(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in -PI..PI,
        tx in -50.0f64..50.0, ty in -50.0f64..50.0, tz in -50.0f64..50.0, t in 0.0f64..=1.0,
    ) {
        let curve = helix_curve();
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(ax, ay, az)), angle);
        let shift = Vector3::new(tx, ty, tz);
        let moved = curve.map_coefficients(|c| rot * c + shift);
        let lhs = moved.point(t).unwrap();
        let rhs = rot * curve.point(t).unwrap() + shift;
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.coords.norm()));
    }
}

fn helix_point(phi: f64) -> Point3<f64> {
    Point3::new(10.0 * phi.cos(), 10.0 * phi.sin(), 20.0 * phi / TAU)
}

fn helix_samples(n: usize) -> Vec<Point3<f64>> {
    (0..n).map(|k| helix_point(2.0 * TAU * k as f64 / (n - 1) as f64)).collect()
}

fn helix_curve() -> SplineCurve3 {
    fit_curve(&helix_samples(500), 19).unwrap()
}

#[test]
fn collinear_points_fit_exactly() {
    let a = Point3::new(1.0, -2.0, 3.0);
    let d = Vector3::new(0.3, 0.5, -0.2);
    let pts: Vec<_> = (0..100).map(|k| a + d * k as f64).collect();
    let c = fit_curve(&pts, 5).unwrap();
    let params: Vec<_> = (0..100).map(|k| k as f64 / 99.0).collect();
    for (p, &t) in pts.iter().zip(&params) {
        assert!((c.point(t).unwrap() - p).norm() < 1e-9);
    }
    let v0 = c.eval(0.0, 1).unwrap();
    for s in 0..50 {
        assert!((c.eval(s as f64 / 49.0, 1).unwrap() - v0).norm() < 1e-9);
    }
}

#[test]
fn helix_fit_within_tolerance() {
    // samples are equally spaced in arc length, so chord parameters track phi linearly
    let c = helix_curve();
    let mut worst = 0.0f64;
    for s in 0..=2000 {
        let t = s as f64 / 2000.0;
        let p = c.point(t).unwrap();
        // distance to the analytic helix via dense search plus local refinement
        let mut best = f64::INFINITY;
        let mut best_phi = 0.0;
        for k in 0..=4000 {
            let phi = 2.0 * TAU * k as f64 / 4000.0;
            let d = (helix_point(phi) - p).norm();
            if d < best {
                best = d;
                best_phi = phi;
            }
        }
        let mut lo = (best_phi - 0.01).max(0.0);
        let mut hi = (best_phi + 0.01).min(2.0 * TAU);
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if (helix_point(m1) - p).norm() < (helix_point(m2) - p).norm() {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        worst = worst.max((helix_point(0.5 * (lo + hi)) - p).norm());
    }
    assert!(worst < 0.05, "max deviation {worst}");
}

#[test]
fn first_derivative_matches_finite_differences() {
    let c = helix_curve();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for s in 0..100 {
        let t = 0.005 + 0.99 * s as f64 / 99.0;
        let fd = (c.eval(t + h, 0).unwrap() - c.eval(t - h, 0).unwrap()) / (2.0 * h);
        let d = c.eval(t, 1).unwrap();
        worst = worst.max((fd - d).norm() / d.norm());
    }
    assert!(worst < 1e-5, "relative error {worst}");
}

#[test]
fn second_derivative_matches_finite_differences() {
    let c = helix_curve();
    let h = 1e-5;
    for s in 0..100 {
        let t = 0.005 + 0.99 * s as f64 / 99.0;
        let fd = (c.eval(t + h, 1).unwrap() - c.eval(t - h, 1).unwrap()) / (2.0 * h);
        let d = c.eval(t, 2).unwrap();
        assert!((fd - d).norm() / d.norm() < 1e-5);
    }
}

#[test]
fn circle_arc_acceleration_points_to_center() {
    let center = Point3::new(5.0, -3.0, 2.0);
    let r = 30.0;
    let pts: Vec<_> = (0..300)
        .map(|k| {
            let phi = 0.5 * PI * k as f64 / 299.0;
            center + Vector3::new(r * phi.cos(), 0.0, r * phi.sin())
        })
        .collect();
    let c = fit_curve(&pts, 9).unwrap();
    for s in 1..20 {
        let t = s as f64 / 20.0;
        let [p, d1, d2] = c.eval_all(t);
        // normal component of the acceleration
        let tangent = d1.normalize();
        let normal_acc = d2 - tangent * d2.dot(&tangent);
        let to_center = (center.coords - p).normalize();
        let cos = normal_acc.normalize().dot(&to_center);
        assert!(cos > 1.0 - 1e-6, "t={t}: cos={cos}");
        // curvature close to 1/r
        assert!((c.curvature(t) * r - 1.0).abs() < 1e-2);
    }
}

#[test]
fn refit_at_own_parameters_is_stable() {
    let c = helix_curve();
    let params: Vec<_> = (0..800).map(|k| k as f64 / 799.0).collect();
    let pts: Vec<_> = params.iter().map(|&t| c.point(t).unwrap()).collect();
    let again = fit_curve_with_params(&pts, &params, c.knot_count()).unwrap();
    let scale = c.coefficients().iter().map(|p| p.coords.norm()).fold(0.0, f64::max);
    for (a, b) in c.coefficients().iter().zip(again.coefficients()) {
        assert!((a - b).norm() < 1e-6 * scale);
    }
}

#[test]
fn refit_of_uniform_speed_resample_is_stable() {
    let pts: Vec<_> = (0..200).map(|k| Point3::new(2.0 * k as f64, -(k as f64), 0.5 * k as f64)).collect();
    let c = fit_curve(&pts, 7).unwrap();
    let resampled: Vec<_> = (0..300).map(|k| c.point(k as f64 / 299.0).unwrap()).collect();
    let again = fit_curve(&resampled, 7).unwrap();
    for (a, b) in c.coefficients().iter().zip(again.coefficients()) {
        assert!((a - b).norm() <= 1e-6 * a.coords.norm().max(1.0));
    }
}

fn grid_samples(n_tau: usize, n_theta: usize, f: impl Fn(f64, f64) -> f64) -> Vec<SurfaceSample> {
    let mut v = Vec::with_capacity(n_tau * n_theta);
    for i in 0..n_tau {
        for j in 0..n_theta {
            let tau = i as f64 / (n_tau - 1) as f64;
            let theta = TAU * (j as f64 + 0.37) / n_theta as f64;
            v.push(SurfaceSample { tau, theta, rho: f(tau, theta) });
        }
    }
    v
}

#[test]
fn constant_surface_is_reproduced() {
    let s = fit_surface(&grid_samples(80, 60, |_, _| 10.0), 9, 7).unwrap();
    for i in 0..=50 {
        for j in 0..=50 {
            let v = s.eval(i as f64 / 50.0, TAU * j as f64 / 50.0).unwrap();
            assert!((v - 10.0).abs() < 1e-9);
        }
    }
}

#[test]
fn sinusoidal_surface_rms_residual() {
    let f = |tau: f64, theta: f64| 10.0 + 2.0 * (TAU * tau).sin() * theta.cos();
    let samples = grid_samples(100, 100, f);
    let s = fit_surface(&samples, 19, 15).unwrap();
    let ss: f64 = samples.iter().map(|p| (s.eval(p.tau, p.theta).unwrap() - p.rho).powi(2)).sum();
    let rms = (ss / samples.len() as f64).sqrt();
    assert!(rms < 0.02, "rms {rms}");
}

#[test]
fn seam_is_continuous() {
    let f = |tau: f64, theta: f64| 10.0 + (3.0 * tau).cos() * (theta + 0.3).sin() + 0.5 * (2.0 * theta).cos();
    let s = fit_surface(&grid_samples(60, 50, f), 7, 9).unwrap();
    for i in 0..=20 {
        let tau = i as f64 / 20.0;
        let a = s.eval_derivatives(tau, 0.0).unwrap();
        let b = s.eval_derivatives(tau, TAU).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        assert!((a.d_theta - b.d_theta).abs() < 1e-12);
        assert!((a.d_tau - b.d_tau).abs() < 1e-12);
    }
}

#[test]
fn surface_theta_derivative_matches_finite_differences() {
    let coeffs: Vec<f64> = (0..7 * 6).map(|k| 8.0 + ((k * 37) % 11) as f64 * 0.3).collect();
    let s = BivariateSpline::new(5, 7, coeffs).unwrap();
    let h = 1e-6;
    for i in 1..10 {
        for j in 0..12 {
            let (tau, theta) = (i as f64 / 10.0, TAU * j as f64 / 12.0 + 0.01);
            let d = s.eval_derivatives(tau, theta).unwrap();
            let fd_theta = (s.eval(tau, theta + h).unwrap() - s.eval(tau, theta - h).unwrap()) / (2.0 * h);
            let fd_tau = (s.eval(tau + h, theta).unwrap() - s.eval(tau - h, theta).unwrap()) / (2.0 * h);
            assert!((d.d_theta - fd_theta).abs() < 1e-6);
            assert!((d.d_tau - fd_tau).abs() < 1e-6);
        }
    }
}
