//! Patient-specific vessel model: centerline spline, wall radius surface and
//! initial frame, with its fixed-layout feature vector.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centerline::initial_frame;
use crate::coords::{VcsContext, VesselCoordinates};
use crate::error::{Result, VcsError};
use crate::mesh::{TriMesh, TriangleBvh};
use crate::splines::{fit_surface, BivariateSpline, SplineCurve3, SurfaceSample};
use crate::synthetic::grid_faces;

/// Probe grid used to check the wall radius stays positive.
pub const PROBE_GRID: (usize, usize) = (200, 100);
/// Fraction of `τ` at each end whose vertices are left out of the wall fit.
pub const END_MARGIN: f64 = 1e-3;
/// Largest tolerated fraction of vertices outside the validity region.
pub const MAX_INVALID_FRACTION: f64 = 0.01;

/// Knot counts `(L, K, R)`: centerline, wall along `τ`, wall around `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    pub l: usize,
    pub k: usize,
    pub r: usize,
}

impl ModelDims {
    pub const DEFAULT: ModelDims = ModelDims { l: 9, k: 19, r: 15 };

    pub fn new(l: usize, k: usize, r: usize) -> Self {
        Self { l, k, r }
    }

    /// Rejects counts below the cubic minimum of five knots.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("L", self.l), ("K", self.k), ("R", self.r)] {
            if v < 5 {
                return Err(VcsError::Parameter(format!("{name} = {v} is below the minimum of 5 knots")));
            }
        }
        Ok(())
    }

    pub fn centerline_coefficients(&self) -> usize {
        self.l + 2
    }

    /// `(rows, columns)` of the wall coefficient matrix.
    pub fn wall_shape(&self) -> (usize, usize) {
        (self.k + 2, self.r - 1)
    }

    pub fn feature_len(&self) -> usize {
        let (a, b) = self.wall_shape();
        3 * self.centerline_coefficients() + a * b
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    pub id: String,
    pub units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
}

impl ModelMetadata {
    pub fn named(id: impl Into<String>) -> Self {
        Self { id: id.into(), units: "mm".into(), source_hash: None }
    }
}

#[derive(Debug, Clone)]
pub struct VesselModel {
    centerline: SplineCurve3,
    wall: BivariateSpline,
    v1_0: Vector3<f64>,
    pub metadata: ModelMetadata,
    context: VcsContext,
}

impl PartialEq for VesselModel {
    fn eq(&self, o: &Self) -> bool {
        self.centerline == o.centerline && self.wall == o.wall && self.v1_0 == o.v1_0 && self.metadata == o.metadata
    }
}

impl VesselModel {
    /// `v1_0` must be a unit vector orthogonal to the start tangent.
    pub fn new(
        centerline: SplineCurve3,
        wall: BivariateSpline,
        v1_0: Vector3<f64>,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        let context = VcsContext::new(&centerline, &v1_0)?;
        Ok(Self { centerline, wall, v1_0, metadata, context })
    }

    /// Like [`VesselModel::new`], but first projects `v1` onto the normal plane at
    /// the start of the centerline. Used after coefficient arithmetic, which
    /// moves the start tangent.
    pub fn with_projected_frame(
        centerline: SplineCurve3,
        wall: BivariateSpline,
        v1: Vector3<f64>,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        let t0 = centerline.tangent(0.0);
        let w = v1 - t0 * t0.dot(&v1);
        if !(w.norm() > 1e-9) {
            return Err(VcsError::DegenerateFrame("v1 is parallel to the start tangent".into()));
        }
        Self::new(centerline, wall, w.normalize(), metadata)
    }

    pub fn centerline(&self) -> &SplineCurve3 {
        &self.centerline
    }

    pub fn wall(&self) -> &BivariateSpline {
        &self.wall
    }

    pub fn v1_0(&self) -> Vector3<f64> {
        self.v1_0
    }

    pub fn context(&self) -> &VcsContext {
        &self.context
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            l: self.centerline.knot_count(),
            k: self.wall.tau_knots().count(),
            r: self.wall.theta_knots().count(),
        }
    }

    pub fn radius(&self, tau: f64, theta: f64) -> Result<f64> {
        self.wall.eval(tau, theta)
    }

    /// Wall point `x(τ, θ)`.
    pub fn surface_point(&self, tau: f64, theta: f64) -> Result<Point3<f64>> {
        self.context.point_at(tau, theta, self.wall.eval(tau, theta)?)
    }

    /// Smallest wall radius on the probe grid: `(radius, τ, θ)`.
    pub fn min_radius(&self) -> (f64, f64, f64) {
        self.wall.min_on_grid(PROBE_GRID.0, PROBE_GRID.1)
    }

    pub fn check_star_convex(&self) -> Result<()> {
        let (radius, tau, theta) = self.min_radius();
        if !(radius > 0.0) {
            return Err(VcsError::StarConvexity { tau, theta, radius });
        }
        Ok(())
    }

    /// Applies `x ↦ R x + t` to the control points and `R` to `v1_0`. The wall
    /// coefficients are radii and do not change.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<Self> {
        let centerline = self.centerline.map_coefficients(|p| Point3::from(rotation * p.coords + translation));
        let v1 = rotation * self.v1_0;
        Self::with_projected_frame(centerline, self.wall.clone(), v1, self.metadata.clone())
    }

    pub fn to_feature_vector(&self) -> FeatureVector {
        let dims = self.dims();
        let mut values = Vec::with_capacity(dims.feature_len());
        for c in self.centerline.coefficients() {
            values.extend_from_slice(&[c.x, c.y, c.z]);
        }
        values.extend_from_slice(self.wall.coefficients());
        FeatureVector { values, dims }
    }

    pub fn from_feature_vector(fv: &FeatureVector, v1_0: &Vector3<f64>, metadata: ModelMetadata) -> Result<Self> {
        let dims = fv.dims;
        dims.validate()?;
        if fv.values.len() != dims.feature_len() {
            return Err(VcsError::Layout(format!(
                "dims {dims:?} need {} values, got {}",
                dims.feature_len(),
                fv.values.len()
            )));
        }
        let nc = dims.centerline_coefficients();
        let pts = fv.values[..3 * nc].chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        let centerline = SplineCurve3::new(dims.l, pts)?;
        let wall = BivariateSpline::new(dims.k, dims.r, fv.values[3 * nc..].to_vec())?;
        Self::with_projected_frame(centerline, wall, *v1_0, metadata)
    }

    /// Regular triangle mesh of the wall, closed in `θ` and open at both ends.
    pub fn tessellate(&self, n_tau: usize, n_theta: usize) -> Result<TriMesh> {
        if n_tau < 2 || n_theta < 3 {
            return Err(VcsError::Parameter(format!("tessellation needs n_tau >= 2 and n_theta >= 3, got {n_tau} x {n_theta}")));
        }
        let vertices = (0..n_tau * n_theta)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n_theta, k % n_theta);
                self.surface_point(i as f64 / (n_tau - 1) as f64, TAU * j as f64 / n_theta as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        TriMesh::new(vertices, grid_faces(n_tau, n_theta))
    }
}

/// Flat model encoding: `[c_0.x, c_0.y, c_0.z, …, c_n.z, b_00, b_01, …]` with the
/// wall coefficients in `τ`-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub dims: ModelDims,
}

/// Fits the wall of `mesh` in the coordinates of `ctx`.
pub fn fit_model(mesh: &TriMesh, ctx: &VcsContext, dims: ModelDims) -> Result<VesselModel> {
    fit_model_from_points(&mesh.vertices, ctx, dims)
}

pub fn fit_model_from_points(points: &[Point3<f64>], ctx: &VcsContext, dims: ModelDims) -> Result<VesselModel> {
    dims.validate()?;
    if ctx.curve().knot_count() != dims.l {
        return Err(VcsError::Parameter(format!(
            "centerline has {} knots but L = {}",
            ctx.curve().knot_count(),
            dims.l
        )));
    }
    let coords = ctx.to_vcs_many(points)?;
    let invalid = coords.iter().filter(|c| !c.valid || c.degenerate).count();
    if invalid as f64 > MAX_INVALID_FRACTION * coords.len() as f64 {
        return Err(VcsError::Validity { invalid, total: coords.len() });
    }
    let samples: Vec<SurfaceSample> = coords
        .iter()
        .filter(|c| c.valid && !c.degenerate && c.tau >= END_MARGIN && c.tau <= 1.0 - END_MARGIN)
        .map(|c| SurfaceSample { tau: c.tau, theta: c.theta, rho: c.rho })
        .collect();
    let wall = fit_surface(&samples, dims.k, dims.r)?;
    let model = VesselModel {
        centerline: ctx.curve().clone(),
        wall,
        v1_0: ctx.v1_0(),
        metadata: ModelMetadata::named("model"),
        context: ctx.clone(),
    };
    model.check_star_convex()?;
    Ok(model)
}

/// Builds the coordinate context from a centerline and the wall vertices,
/// pointing `v1_0` at the wall centroid.
pub fn context_for_mesh(centerline: &SplineCurve3, mesh: &TriMesh) -> Result<VcsContext> {
    let frame = initial_frame(centerline, &mesh.vertices)?;
    VcsContext::new(centerline, &frame.v1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub mean: f64,
    pub p75: f64,
    pub max: f64,
    pub histogram: Histogram,
}

impl ResidualSummary {
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, p75: 0.0, max: 0.0, histogram: Histogram { edges: vec![0.0], counts: vec![] } };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        let max = *sorted.last().unwrap();
        let bins = bins.max(1);
        let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|b| b as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &v in &sorted {
            counts[((v / width) as usize).min(bins - 1)] += 1;
        }
        Self { mean, p75: quantile(&sorted, 0.75), max, histogram: Histogram { edges, counts } }
    }
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `|p − x(τ(p), θ(p))|` per vertex, `NaN` where the coordinates failed.
    pub residuals: Vec<f64>,
    /// Vertices whose closest centerline point is an end, so that `(τ, θ)` do
    /// not satisfy the orthogonality condition. They lie beyond the cut planes.
    pub clamped: Vec<bool>,
    /// Statistics over vertices with regular coordinates.
    pub summary: ResidualSummary,
    /// Statistics over every vertex with coordinates, clamped ones included.
    pub summary_all: ResidualSummary,
    pub excluded: usize,
    pub clamped_count: usize,
    /// Distance from each vertex to the nearest point of a fine tessellation of the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nearest_surface: Option<ResidualSummary>,
}

const HISTOGRAM_BINS: usize = 20;

/// Per-vertex distance to the model point with the same `(τ, θ)`.
pub fn residuals(mesh: &TriMesh, model: &VesselModel) -> ResidualReport {
    let ctx = model.context();
    let per_vertex: Vec<(f64, bool)> = mesh
        .vertices
        .par_iter()
        .map(|p| {
            let c: Result<VesselCoordinates> = ctx.to_vcs(p);
            match c {
                Ok(c) => (model.surface_point(c.tau, c.theta).map_or(f64::NAN, |x| (p - x).norm()), c.boundary),
                Err(_) => (f64::NAN, false),
            }
        })
        .collect();
    let (residuals, clamped): (Vec<f64>, Vec<bool>) = per_vertex.into_iter().unzip();
    let all: Vec<f64> = residuals.iter().copied().filter(|r| r.is_finite()).collect();
    let regular: Vec<f64> =
        residuals.iter().zip(&clamped).filter(|(r, &b)| r.is_finite() && !b).map(|(&r, _)| r).collect();
    ResidualReport {
        summary: ResidualSummary::from_values(&regular, HISTOGRAM_BINS),
        summary_all: ResidualSummary::from_values(&all, HISTOGRAM_BINS),
        excluded: residuals.len() - all.len(),
        clamped_count: all.len() - regular.len(),
        residuals,
        clamped,
        nearest_surface: None,
    }
}

/// [`residuals`] plus the nearest-surface distance to an `n_tau × n_theta`
/// tessellation.
pub fn residuals_with_nearest(mesh: &TriMesh, model: &VesselModel, n_tau: usize, n_theta: usize) -> Result<ResidualReport> {
    let mut report = residuals(mesh, model);
    let surface = model.tessellate(n_tau, n_theta)?;
    let bvh = TriangleBvh::build(&surface, 0..surface.faces.len());
    let nearest: Vec<f64> = mesh.vertices.par_iter().map(|p| bvh.distance(p)).collect();
    report.nearest_surface = Some(ResidualSummary::from_values(&nearest, HISTOGRAM_BINS));
    Ok(report)
}
