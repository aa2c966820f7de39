//! Cartesian ⇄ vessel coordinates `(τ, θ, ρ)`.
//!
//! `τ` is the parameter of the closest centerline point, `ρ` the distance to
//! it and `θ` the angle of the offset measured from the transported `v1`,
//! counterclockwise about the tangent.

use std::f64::consts::TAU;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centerline::{parallel_transport, Frame, FrameField, DEFAULT_STEP};
use crate::error::{Result, VcsError};
use crate::splines::{BivariateSpline, SplineCurve3};

pub const DEFAULT_COARSE_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VesselCoordinates {
    pub tau: f64,
    pub theta: f64,
    pub rho: f64,
    /// `ρ κ(τ) < 1`: the point is closer to the centerline than its radius of curvature.
    pub valid: bool,
    /// The closest point is a centerline end and the orthogonality condition was waived.
    pub boundary: bool,
    /// The point sits on the centerline, so `θ` is set to 0 by convention.
    pub degenerate: bool,
}

impl VesselCoordinates {
    pub fn new(tau: f64, theta: f64, rho: f64) -> Self {
        Self { tau, theta, rho, valid: true, boundary: false, degenerate: false }
    }
}

/// Centerline plus transported frames, with the coarse samples used to seed
/// closest-point searches.
#[derive(Debug, Clone)]
pub struct VcsContext {
    frames: FrameField,
    coarse_t: Vec<f64>,
    coarse_p: Vec<Point3<f64>>,
}

impl VcsContext {
    pub fn new(curve: &SplineCurve3, v1_0: &Vector3<f64>) -> Result<Self> {
        Self::from_frames(parallel_transport(curve, v1_0, DEFAULT_STEP)?)
    }

    pub fn from_frames(frames: FrameField) -> Result<Self> {
        Self::with_samples(frames, DEFAULT_COARSE_SAMPLES)
    }

    pub fn with_samples(frames: FrameField, samples: usize) -> Result<Self> {
        if samples < 128 {
            return Err(VcsError::Parameter(format!("at least 128 coarse samples required, got {samples}")));
        }
        let curve = frames.curve();
        for i in 0..=64 {
            let t = i as f64 / 64.0;
            if !(curve.eval_all(t)[1].norm() > 0.0) {
                return Err(VcsError::DegenerateGeometry(format!("centerline is not regular at t = {t}")));
            }
        }
        let coarse_t: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
        let coarse_p = coarse_t.iter().map(|&t| curve.point(t)).collect::<Result<_>>()?;
        Ok(Self { frames, coarse_t, coarse_p })
    }

    pub fn curve(&self) -> &SplineCurve3 {
        self.frames.curve()
    }

    pub fn frames(&self) -> &FrameField {
        &self.frames
    }

    pub fn v1_0(&self) -> Vector3<f64> {
        self.frames.initial().v1
    }

    pub fn frame_at(&self, tau: f64) -> Result<Frame> {
        self.frames.frame_at(tau)
    }

    /// `‖c′ × c″‖ / ‖c′‖³` from exact spline derivatives.
    pub fn curvature(&self, tau: f64) -> f64 {
        self.curve().curvature(tau)
    }

    /// Local minima of the sampled distance profile, as index ranges `[lo, hi]`
    /// bracketing each basin.
    fn basins(&self, x: &Point3<f64>) -> Vec<(usize, usize)> {
        let d: Vec<f64> = self.coarse_p.iter().map(|p| (p - x).norm_squared()).collect();
        let n = d.len();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            // plateaus count once
            let mut j = i;
            while j + 1 < n && d[j + 1] == d[i] {
                j += 1;
            }
            let left_ok = i == 0 || d[i - 1] > d[i];
            let right_ok = j == n - 1 || d[j + 1] > d[j];
            if left_ok && right_ok {
                out.push((i.saturating_sub(1), (j + 1).min(n - 1)));
            }
            i = j + 1;
        }
        out
    }

    /// Half the derivative of `‖x − c(t)‖²` and its derivative.
    fn stationarity(&self, x: &Point3<f64>, t: f64) -> (f64, f64) {
        let [c, d1, d2] = self.curve().eval_all(t);
        let r = c - x.coords;
        (d1.dot(&r), d2.dot(&r) + d1.norm_squared())
    }

    /// Minimizer of the distance within `[a, b]`, with a flag set when the
    /// answer is pinned at a domain end.
    fn refine(&self, x: &Point3<f64>, a: f64, b: f64) -> (f64, bool) {
        let (ga, _) = self.stationarity(x, a);
        let (gb, _) = self.stationarity(x, b);
        if ga >= 0.0 {
            return (a, a == 0.0 && ga > 0.0);
        }
        if gb <= 0.0 {
            return (b, b == 1.0 && gb < 0.0);
        }
        // safeguarded Newton on the bracket [lo, hi] with g(lo) < 0 < g(hi)
        let (mut lo, mut hi) = (a, b);
        let mut t = 0.5 * (a + b);
        for _ in 0..100 {
            let (g, dg) = self.stationarity(x, t);
            if g == 0.0 {
                return (t, false);
            }
            if g < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = t - g / dg;
            let next = if dg > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) || hi - lo <= 1e-15 {
                return (next, false);
            }
            t = next;
        }
        (t, false)
    }

    fn closest(&self, x: &Point3<f64>) -> (f64, bool) {
        let mut best: Option<(f64, f64, bool)> = None;
        for (lo, hi) in self.basins(x) {
            let (t, pinned) = self.refine(x, self.coarse_t[lo], self.coarse_t[hi]);
            let d = (self.curve().eval_all(t)[0] - x.coords).norm();
            let better = match best {
                None => true,
                Some((bd, bt, _)) => d < bd - 1e-12 * bd.max(1.0) || (d <= bd + 1e-12 * bd.max(1.0) && t < bt),
            };
            if better {
                best = Some((d, t, pinned));
            }
        }
        best.map_or((0.0, false), |(_, t, pinned)| (t, pinned))
    }

    /// Cartesian point to vessel coordinates.
    pub fn to_vcs(&self, x: &Point3<f64>) -> Result<VesselCoordinates> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(VcsError::Input(format!("non-finite point {x}")));
        }
        let (tau, boundary) = self.closest(x);
        let c = self.curve().eval_all(tau)[0];
        let d = x.coords - c;
        let rho = d.norm();
        let frame = self.frame_at(tau)?;
        let degenerate = rho < 1e-12;
        let theta = if degenerate { 0.0 } else { wrap_angle(d.dot(&frame.v2).atan2(d.dot(&frame.v1))) };
        let valid = rho * self.curvature(tau) < 1.0;
        Ok(VesselCoordinates { tau, theta, rho, valid, boundary, degenerate })
    }

    pub fn to_vcs_many(&self, points: &[Point3<f64>]) -> Result<Vec<VesselCoordinates>> {
        points.par_iter().map(|p| self.to_vcs(p)).collect()
    }

    /// `c(τ) + ρ (v1 cos θ + v2 sin θ)`.
    pub fn from_vcs(&self, c: &VesselCoordinates) -> Result<Point3<f64>> {
        self.point_at(c.tau, c.theta, c.rho)
    }

    pub fn point_at(&self, tau: f64, theta: f64, rho: f64) -> Result<Point3<f64>> {
        let frame = self.frame_at(tau)?;
        let base = self.curve().point(tau)?;
        if rho == 0.0 {
            return Ok(base);
        }
        let (s, c) = theta.sin_cos();
        Ok(base + (frame.v1 * c + frame.v2 * s) * rho)
    }

    pub fn from_vcs_many(&self, coords: &[VesselCoordinates]) -> Result<Vec<Point3<f64>>> {
        coords.par_iter().map(|c| self.from_vcs(c)).collect()
    }

    /// True when the distance profile along the centerline has a single basin
    /// and the point lies within the local radius of curvature.
    pub fn validity_region(&self, x: &Point3<f64>) -> bool {
        if self.basins(x).len() != 1 {
            return false;
        }
        self.to_vcs(x).is_ok_and(|c| c.valid)
    }
}

/// `ρ / ρ_w(τ, θ)`.
pub fn normalize_rho(c: &VesselCoordinates, wall: &BivariateSpline) -> Result<f64> {
    let rw = wall.eval(c.tau, c.theta)?;
    if !(rw > 0.0) {
        return Err(VcsError::Model(format!("nonpositive wall radius {rw} at tau = {}, theta = {}", c.tau, c.theta)));
    }
    Ok(c.rho / rw)
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splines::fit_curve;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn straight() -> VcsContext {
        let pts: Vec<_> = (0..=200).map(|i| Point3::new(0.0, 0.0, i as f64 * 0.5)).collect();
        VcsContext::new(&fit_curve(&pts, 5).unwrap(), &Vector3::x()).unwrap()
    }

    #[test]
    fn straight_tube_examples() {
        let ctx = straight();
        let c = ctx.to_vcs(&Point3::new(5.0, 0.0, 50.0)).unwrap();
        assert!((c.tau - 0.5).abs() < 1e-12 && c.theta.abs() < 1e-12 && (c.rho - 5.0).abs() < 1e-12);
        assert!(c.valid && !c.boundary && !c.degenerate);
        let c = ctx.to_vcs(&Point3::new(0.0, 5.0, 50.0)).unwrap();
        assert!((c.theta - FRAC_PI_2).abs() < 1e-12);
        let p = ctx.from_vcs(&VesselCoordinates::new(0.5, 0.0, 5.0)).unwrap();
        assert!((p - Point3::new(5.0, 0.0, 50.0)).norm() < 1e-12);
    }

    #[test]
    fn beyond_the_ends_is_clamped() {
        let ctx = straight();
        let c = ctx.to_vcs(&Point3::new(1.0, 0.0, -4.0)).unwrap();
        assert_eq!(c.tau, 0.0);
        assert!(c.boundary);
        let c = ctx.to_vcs(&Point3::new(1.0, 0.0, 104.0)).unwrap();
        assert_eq!(c.tau, 1.0);
        assert!(c.boundary);
    }

    #[test]
    fn centerline_point_is_degenerate() {
        let ctx = straight();
        let x = ctx.curve().point(0.3).unwrap();
        let c = ctx.to_vcs(&x).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.theta, 0.0);
        assert_eq!(ctx.from_vcs(&VesselCoordinates::new(0.3, 1.234, 0.0)).unwrap(), x);
    }

    #[test]
    fn arc_center_is_outside_validity_region() {
        let pts: Vec<_> = (0..500)
            .map(|i| {
                let a = PI * i as f64 / 499.0;
                Point3::new(30.0 * a.cos(), 0.0, 30.0 * a.sin())
            })
            .collect();
        let curve = fit_curve(&pts, 15).unwrap();
        let ctx = VcsContext::new(&curve, &Vector3::y()).unwrap();
        assert!(!ctx.validity_region(&Point3::origin()));
        assert!(ctx.validity_region(&Point3::new(0.0, 3.0, 28.0)));
    }

    #[test]
    fn normalized_radius() {
        let wall = BivariateSpline::new(5, 5, vec![4.0; 7 * 4]).unwrap();
        let c = VesselCoordinates::new(0.4, 1.0, 2.0);
        assert!((normalize_rho(&c, &wall).unwrap() - 0.5).abs() < 1e-12);
        let bad = BivariateSpline::new(5, 5, vec![-1.0; 7 * 4]).unwrap();
        assert!(matches!(normalize_rho(&c, &bad), Err(VcsError::Model(_))));
    }
}
