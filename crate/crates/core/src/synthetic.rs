//! Analytic tube generator with exact coordinate answers for every vertex.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::centerline::Frame;
use crate::coords::VesselCoordinates;
use crate::error::{Result, VcsError};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CenterlineShape {
    /// Along +z from the origin.
    Line { length: f64 },
    /// Circular arc in the xz-plane starting at the origin along +z and bending toward +x.
    Arc { radius: f64, angle: f64 },
    /// Helix about +z with radius, pitch (rise per turn) and number of turns.
    Helix { radius: f64, pitch: f64, turns: f64 },
    /// Ascending leg along +z, semicircular arch toward +x, descending leg along −z.
    AortaLike { arch_radius: f64, leg_length: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadiusTerm {
    Constant { radius: f64 },
    /// `a sin(2π m_tau τ) cos(m_theta θ)`
    Sinusoidal { amplitude: f64, m_tau: f64, m_theta: f64 },
    /// `A exp(−½((τ − center)/width)²) (1 + cos 3θ)/2`: three sinus-like bulges.
    ValsalvaBump { amplitude: f64, center: f64, width: f64 },
}

impl RadiusTerm {
    fn eval(&self, tau: f64, theta: f64) -> f64 {
        match *self {
            RadiusTerm::Constant { radius } => radius,
            RadiusTerm::Sinusoidal { amplitude, m_tau, m_theta } => {
                amplitude * (TAU * m_tau * tau).sin() * (m_theta * theta).cos()
            }
            RadiusTerm::ValsalvaBump { amplitude, center, width } => {
                let z = (tau - center) / width;
                amplitude * (-0.5 * z * z).exp() * 0.5 * (1.0 + (3.0 * theta).cos())
            }
        }
    }

    fn bound(&self) -> f64 {
        match *self {
            RadiusTerm::Constant { radius } => radius,
            RadiusTerm::Sinusoidal { amplitude, .. } | RadiusTerm::ValsalvaBump { amplitude, .. } => amplitude.abs(),
        }
    }
}

fn default_n_tau() -> usize {
    200
}

fn default_n_theta() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub centerline: CenterlineShape,
    /// Summed to give the wall radius (mm).
    pub radius: Vec<RadiusTerm>,
    #[serde(default = "default_n_tau")]
    pub n_tau: usize,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    /// Standard deviation of Gaussian radial noise (mm).
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(centerline: CenterlineShape, radius: Vec<RadiusTerm>) -> Self {
        Self { centerline, radius, n_tau: default_n_tau(), n_theta: default_n_theta(), noise: 0.0, seed: 0 }
    }

    pub fn tube(centerline: CenterlineShape, radius: f64) -> Self {
        Self::new(centerline, vec![RadiusTerm::Constant { radius }])
    }

    /// Arch with legs, radius `10 + 2 sin(2πτ) cos θ` and a root bulge.
    pub fn aorta() -> Self {
        Self::new(
            CenterlineShape::AortaLike { arch_radius: 30.0, leg_length: 60.0 },
            vec![
                RadiusTerm::Constant { radius: 10.0 },
                RadiusTerm::Sinusoidal { amplitude: 2.0, m_tau: 1.0, m_theta: 1.0 },
                RadiusTerm::ValsalvaBump { amplitude: 2.0, center: 0.08, width: 0.04 },
            ],
        )
    }

    pub fn with_density(mut self, n_tau: usize, n_theta: usize) -> Self {
        self.n_tau = n_tau;
        self.n_theta = n_theta;
        self
    }

    pub fn with_noise(mut self, noise: f64, seed: u64) -> Self {
        self.noise = noise;
        self.seed = seed;
        self
    }

    pub fn radius_at(&self, tau: f64, theta: f64) -> f64 {
        self.radius.iter().map(|r| r.eval(tau, theta)).sum()
    }

    /// Checks dimensions, positivity of the radius and that the tube stays
    /// inside the curvature radius of its centerline.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(VcsError::Spec(format!("{what} must be positive, got {v}")))
            }
        };
        match self.centerline {
            CenterlineShape::Line { length } => positive(length, "line length")?,
            CenterlineShape::Arc { radius, angle } => {
                positive(radius, "arc radius")?;
                positive(angle, "arc angle")?;
                if angle >= TAU {
                    return Err(VcsError::Spec("arc angle must be below 2π".into()));
                }
            }
            CenterlineShape::Helix { radius, pitch, turns } => {
                positive(radius, "helix radius")?;
                positive(pitch, "helix pitch")?;
                positive(turns, "helix turns")?;
            }
            CenterlineShape::AortaLike { arch_radius, leg_length } => {
                positive(arch_radius, "arch radius")?;
                if !(leg_length >= 0.0) {
                    return Err(VcsError::Spec(format!("leg length must be nonnegative, got {leg_length}")));
                }
            }
        }
        if self.radius.is_empty() {
            return Err(VcsError::Spec("no radius terms".into()));
        }
        if self.n_tau < 2 || self.n_theta < 3 {
            return Err(VcsError::Spec("tessellation needs n_tau >= 2 and n_theta >= 3".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(VcsError::Spec(format!("noise must be nonnegative, got {}", self.noise)));
        }
        let base: f64 = self.radius.iter().filter(|&r| matches!(r, RadiusTerm::Constant { .. })).map(|r| r.bound()).sum();
        let swing: f64 = self.radius.iter().filter(|r| !matches!(r, RadiusTerm::Constant { .. })).map(|r| r.bound()).sum();
        if base - swing <= 0.0 {
            return Err(VcsError::Spec(format!("radius may reach {} <= 0", base - swing)));
        }
        let kappa = self.max_curvature();
        let rmax = base + swing;
        if rmax * kappa >= 1.0 {
            return Err(VcsError::Spec(format!(
                "tube radius up to {rmax} mm exceeds the centerline curvature radius {} mm",
                1.0 / kappa
            )));
        }
        Ok(())
    }

    pub fn max_curvature(&self) -> f64 {
        match self.centerline {
            CenterlineShape::Line { .. } => 0.0,
            CenterlineShape::Arc { radius, .. } => 1.0 / radius,
            CenterlineShape::Helix { radius, pitch, .. } => {
                let b = pitch / TAU;
                radius / (radius * radius + b * b)
            }
            CenterlineShape::AortaLike { arch_radius, .. } => 1.0 / arch_radius,
        }
    }

    pub fn centerline_length(&self) -> f64 {
        match self.centerline {
            CenterlineShape::Line { length } => length,
            CenterlineShape::Arc { radius, angle } => radius * angle,
            CenterlineShape::Helix { radius, pitch, turns } => turns * (TAU * radius).hypot(pitch),
            CenterlineShape::AortaLike { arch_radius, leg_length } => 2.0 * leg_length + PI * arch_radius,
        }
    }

    /// Arc-length parametrized centerline point at `tau`.
    pub fn centerline_point(&self, tau: f64) -> Point3<f64> {
        let s = tau * self.centerline_length();
        match self.centerline {
            CenterlineShape::Line { .. } => Point3::new(0.0, 0.0, s),
            CenterlineShape::Arc { radius, .. } => {
                let phi = s / radius;
                Point3::new(radius * (1.0 - phi.cos()), 0.0, radius * phi.sin())
            }
            CenterlineShape::Helix { radius, pitch, .. } => {
                let b = pitch / TAU;
                let phi = s / radius.hypot(b);
                Point3::new(radius * phi.cos(), radius * phi.sin(), b * phi)
            }
            CenterlineShape::AortaLike { arch_radius: r, leg_length: l } => {
                if s <= l {
                    Point3::new(0.0, 0.0, s)
                } else if s <= l + PI * r {
                    let phi = (s - l) / r;
                    Point3::new(r * (1.0 - phi.cos()), 0.0, l + r * phi.sin())
                } else {
                    Point3::new(2.0 * r, 0.0, l - (s - l - PI * r))
                }
            }
        }
    }

    /// Exact parallel-transported frame at `tau`.
    pub fn frame(&self, tau: f64) -> Frame {
        let s = tau * self.centerline_length();
        let planar = |phi: f64| Frame {
            t: Vector3::new(phi.sin(), 0.0, phi.cos()),
            v1: Vector3::new(phi.cos(), 0.0, -phi.sin()),
            v2: Vector3::y(),
        };
        match self.centerline {
            CenterlineShape::Line { .. } => Frame { t: Vector3::z(), v1: Vector3::x(), v2: Vector3::y() },
            CenterlineShape::Arc { radius, .. } => planar(s / radius),
            CenterlineShape::AortaLike { arch_radius: r, leg_length: l } => planar(((s - l) / r).clamp(0.0, PI)),
            CenterlineShape::Helix { radius, pitch, .. } => {
                let b = pitch / TAU;
                let w = radius.hypot(b);
                let phi = s / w;
                let t = Vector3::new(-radius * phi.sin(), radius * phi.cos(), b) / w;
                let n = Vector3::new(-phi.cos(), -phi.sin(), 0.0);
                let bin = t.cross(&n);
                // the normal plane turns against the torsion
                let psi = -b * phi / w;
                let (sp, cp) = psi.sin_cos();
                let v1 = n * cp + bin * sp;
                Frame { t, v1, v2: t.cross(&v1) }
            }
        }
    }

    /// `c(τ) + ρ (v1 cos θ + v2 sin θ)` on the analytic centerline.
    pub fn point(&self, tau: f64, theta: f64, rho: f64) -> Point3<f64> {
        let f = self.frame(tau);
        let (s, c) = theta.sin_cos();
        self.centerline_point(tau) + (f.v1 * c + f.v2 * s) * rho
    }

    /// Builds the open tube mesh and its oracle.
    pub fn generate(&self) -> Result<(TriMesh, SyntheticOracle)> {
        self.validate()?;
        let noise = if self.noise > 0.0 {
            Some(Normal::new(0.0, self.noise).map_err(|e| VcsError::Spec(e.to_string()))?)
        } else {
            None
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut vertices = Vec::with_capacity(self.n_tau * self.n_theta);
        let mut coords = Vec::with_capacity(self.n_tau * self.n_theta);
        for i in 0..self.n_tau {
            let tau = i as f64 / (self.n_tau - 1) as f64;
            for j in 0..self.n_theta {
                let theta = TAU * j as f64 / self.n_theta as f64;
                let mut rho = self.radius_at(tau, theta);
                if let Some(n) = &noise {
                    rho += n.sample(&mut rng);
                }
                vertices.push(self.point(tau, theta, rho));
                coords.push(VesselCoordinates::new(tau, theta, rho));
            }
        }
        let faces = grid_faces(self.n_tau, self.n_theta);
        let mesh = TriMesh::new(vertices, faces)?;
        Ok((mesh, SyntheticOracle { spec: self.clone(), coords }))
    }
}

/// Outward-facing triangles of a `n_tau × n_theta` tube grid, closed in θ.
pub fn grid_faces(n_tau: usize, n_theta: usize) -> Vec<[u32; 3]> {
    let idx = |i: usize, j: usize| (i * n_theta + j % n_theta) as u32;
    let mut faces = Vec::with_capacity(2 * (n_tau - 1) * n_theta);
    for i in 0..n_tau - 1 {
        for j in 0..n_theta {
            faces.push([idx(i, j), idx(i, j + 1), idx(i + 1, j)]);
            faces.push([idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)]);
        }
    }
    faces
}

/// Exact answers for a generated vessel.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    pub spec: SyntheticSpec,
    coords: Vec<VesselCoordinates>,
}

impl SyntheticOracle {
    /// Exact `(τ, θ, ρ)` of generated vertex `idx`.
    pub fn vertex_coords(&self, idx: usize) -> Option<VesselCoordinates> {
        self.coords.get(idx).copied()
    }

    pub fn vertex_coords_all(&self) -> &[VesselCoordinates] {
        &self.coords
    }

    /// Initial transported normal of the analytic frame.
    pub fn v1_0(&self) -> Vector3<f64> {
        self.spec.frame(0.0).v1
    }

    /// Dense samples of the analytic centerline.
    pub fn centerline_samples(&self, n: usize) -> Vec<Point3<f64>> {
        (0..n).map(|i| self.spec.centerline_point(i as f64 / (n - 1) as f64)).collect()
    }

    /// Exact closest centerline parameter for line and arc centerlines.
    pub fn closest_tau(&self, x: &Point3<f64>) -> Result<f64> {
        match self.spec.centerline {
            CenterlineShape::Line { length } => Ok((x.z / length).clamp(0.0, 1.0)),
            CenterlineShape::Arc { radius, angle } => {
                let rel = x - Point3::new(radius, 0.0, 0.0);
                let phi = rel.z.atan2(-rel.x);
                if (0.0..=angle).contains(&phi) {
                    return Ok(phi / angle);
                }
                let d0 = (x - self.spec.centerline_point(0.0)).norm();
                let d1 = (x - self.spec.centerline_point(1.0)).norm();
                Ok(if d0 <= d1 { 0.0 } else { 1.0 })
            }
            _ => Err(VcsError::Spec("closest-point oracle exists only for line and arc centerlines".into())),
        }
    }

    /// Exact coordinates of an arbitrary point for line and arc centerlines.
    pub fn coords_of(&self, x: &Point3<f64>) -> Result<VesselCoordinates> {
        let tau = self.closest_tau(x)?;
        let f = self.spec.frame(tau);
        let d = x - self.spec.centerline_point(tau);
        let theta = crate::coords::wrap_angle(d.dot(&f.v2).atan2(d.dot(&f.v1)));
        Ok(VesselCoordinates::new(tau, theta, d.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_frames_are_transported() {
        let specs = [
            SyntheticSpec::tube(CenterlineShape::Line { length: 50.0 }, 5.0),
            SyntheticSpec::tube(CenterlineShape::Arc { radius: 30.0, angle: 2.0 }, 5.0),
            SyntheticSpec::tube(CenterlineShape::Helix { radius: 10.0, pitch: 20.0, turns: 2.0 }, 3.0),
            SyntheticSpec::aorta(),
        ];
        for spec in &specs {
            let h = 1e-5;
            for k in 1..99 {
                let tau = k as f64 / 100.0;
                let f = spec.frame(tau);
                assert!(f.orthonormality_error() < 1e-12);
                // tangent is the derivative of the position
                let dc = (spec.centerline_point(tau + h) - spec.centerline_point(tau - h)) / (2.0 * h);
                assert!((dc.normalize() - f.t).norm() < 1e-6);
                // v1 changes only along the tangent
                let dv = (spec.frame(tau + h).v1 - spec.frame(tau - h).v1) / (2.0 * h);
                assert!((dv - f.t * f.t.dot(&dv)).norm() < 1e-6 * spec.centerline_length());
            }
        }
    }

    #[test]
    fn arc_validity() {
        let ok = SyntheticSpec::tube(CenterlineShape::Arc { radius: 30.0, angle: 1.0 }, 10.0);
        assert!(ok.validate().is_ok());
        let bad = SyntheticSpec::tube(CenterlineShape::Arc { radius: 30.0, angle: 1.0 }, 31.0);
        assert!(matches!(bad.validate(), Err(VcsError::Spec(_))));
    }

    #[test]
    fn line_tube_is_a_cylinder() {
        let spec = SyntheticSpec::tube(CenterlineShape::Line { length: 40.0 }, 6.0).with_density(20, 24);
        let (mesh, oracle) = spec.generate().unwrap();
        assert_eq!(mesh.vertices.len(), 480);
        assert_eq!(mesh.euler_characteristic(), 0);
        for (k, v) in mesh.vertices.iter().enumerate() {
            assert!((v.x.hypot(v.y) - 6.0).abs() < 1e-12);
            let c = oracle.coords_of(v).unwrap();
            let e = oracle.vertex_coords(k).unwrap();
            assert!((c.tau - e.tau).abs() < 1e-12 && (c.rho - e.rho).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SyntheticSpec::aorta().with_noise(0.2, 7);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SyntheticSpec>(&s).unwrap(), spec);
        assert!(serde_json::from_str::<SyntheticSpec>(r#"{"centerline":{"kind":"line","length":1},"radius":[],"bogus":1}"#).is_err());
    }
}
