use nalgebra::{Point3, Vector3};

use crate::error::{Result, VcsError};
use crate::splines::SplineCurve3;

pub const DEFAULT_STEP: f64 = 1e-3;

/// Right-handed orthonormal triad `{t, v1, v2}` with `v2 = t × v1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: Vector3<f64>,
    pub v1: Vector3<f64>,
    pub v2: Vector3<f64>,
}

impl Frame {
    /// Builds a frame from a tangent and a first normal, projecting `v1` onto
    /// the normal plane.
    pub fn from_tangent(t: Vector3<f64>, v1: Vector3<f64>) -> Self {
        let t = t.normalize();
        let v1 = (v1 - t * t.dot(&v1)).normalize();
        Self { t, v1, v2: t.cross(&v1) }
    }

    /// Moves the frame onto tangent `t_next` by the minimal rotation about
    /// `t × t_next`.
    pub fn advance(&self, t_next: &Vector3<f64>) -> Self {
        let t_next = t_next.normalize();
        let axis = self.t.cross(&t_next);
        let sin = axis.norm();
        let v1 = if sin < 1e-12 {
            self.v1
        } else {
            let k = axis / sin;
            let alpha = sin.atan2(self.t.dot(&t_next));
            let (s, c) = alpha.sin_cos();
            self.v1 * c + k.cross(&self.v1) * s + k * (k.dot(&self.v1) * (1.0 - c))
        };
        Self::from_tangent(t_next, v1)
    }

    /// Largest angle between corresponding axes of two frames.
    pub fn angle_to(&self, other: &Frame) -> f64 {
        [(self.t, other.t), (self.v1, other.v1), (self.v2, other.v2)]
            .iter()
            .map(|(a, b)| a.cross(b).norm().atan2(a.dot(b)))
            .fold(0.0, f64::max)
    }

    pub fn orthonormality_error(&self) -> f64 {
        let n = [self.t.norm() - 1.0, self.v1.norm() - 1.0, self.v2.norm() - 1.0];
        let d = [self.t.dot(&self.v1), self.t.dot(&self.v2), self.v1.dot(&self.v2)];
        let hand = (self.t.cross(&self.v1) - self.v2).norm();
        n.iter().chain(d.iter()).map(|x| x.abs()).fold(hand, f64::max)
    }
}

/// Parallel-transported frames sampled on `s_k = k h` along a centerline.
#[derive(Debug, Clone)]
pub struct FrameField {
    curve: SplineCurve3,
    step: f64,
    params: Vec<f64>,
    frames: Vec<Frame>,
}

impl FrameField {
    pub fn curve(&self) -> &SplineCurve3 {
        &self.curve
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn initial(&self) -> &Frame {
        &self.frames[0]
    }

    /// Frame at `tau`: the stored sample at or below `tau`, advanced by one
    /// more rotation onto the exact tangent at `tau`.
    pub fn frame_at(&self, tau: f64) -> Result<Frame> {
        let tau = self.curve.knots().check(tau)?;
        let mut k = ((tau / self.step).floor() as usize).min(self.params.len() - 1);
        while k > 0 && self.params[k] > tau {
            k -= 1;
        }
        while k + 1 < self.params.len() && self.params[k + 1] <= tau {
            k += 1;
        }
        if self.params[k] == tau {
            return Ok(self.frames[k]);
        }
        Ok(self.frames[k].advance(&self.curve.tangent(tau)))
    }
}

/// First normal at `c(0)`: the direction from the centerline start toward the
/// wall centroid, projected onto the normal plane.
pub fn initial_frame(curve: &SplineCurve3, wall_points: &[Point3<f64>]) -> Result<Frame> {
    if wall_points.is_empty() {
        return Err(VcsError::DegenerateFrame("no wall points".into()));
    }
    let centroid = wall_points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / wall_points.len() as f64;
    initial_frame_toward(curve, &Point3::from(centroid))
}

pub fn initial_frame_toward(curve: &SplineCurve3, target: &Point3<f64>) -> Result<Frame> {
    let c0 = curve.point(0.0)?;
    let t0 = curve.tangent(0.0);
    let d = target - c0;
    let w = d - t0 * t0.dot(&d);
    if w.norm() < 1e-9 {
        return Err(VcsError::DegenerateFrame(
            "wall centroid lies on the tangent line at the start; supply v1 explicitly".into(),
        ));
    }
    Ok(Frame::from_tangent(t0, w))
}

/// Transports `v1_0` along `curve` with step `h`.
pub fn parallel_transport(curve: &SplineCurve3, v1_0: &Vector3<f64>, h: f64) -> Result<FrameField> {
    if !(h > 0.0 && h <= 1e-2) {
        return Err(VcsError::Parameter(format!("transport step must lie in (0, 0.01], got {h}")));
    }
    let t0 = curve.tangent(0.0);
    if !t0.iter().all(|x| x.is_finite()) || t0.norm() == 0.0 {
        return Err(VcsError::DegenerateFrame("centerline has zero speed at the start".into()));
    }
    if (v1_0.norm() - 1.0).abs() > 1e-9 || v1_0.dot(&t0).abs() > 1e-9 {
        return Err(VcsError::Precondition("v1 must be a unit vector orthogonal to the start tangent".into()));
    }
    let n = (1.0 / h - 1e-9).ceil() as usize;
    let mut params = Vec::with_capacity(n + 1);
    let mut frames = Vec::with_capacity(n + 1);
    let mut frame = Frame::from_tangent(t0, *v1_0);
    params.push(0.0);
    frames.push(frame);
    for k in 1..=n {
        let s = if k == n { 1.0 } else { k as f64 * h };
        frame = frame.advance(&curve.tangent(s));
        params.push(s);
        frames.push(frame);
    }
    Ok(FrameField { curve: curve.clone(), step: h, params, frames })
}
