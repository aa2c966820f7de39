//! Cohort coregistration and statistical shape modelling on feature vectors.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VcsError};
use crate::model::{FeatureVector, ModelDims, ModelMetadata, VesselModel, PROBE_GRID};
use crate::splines::{BivariateSpline, SplineCurve3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        Self { rotation: self.rotation * other.rotation, translation: self.rotation * other.translation + self.translation }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Largest entry of `|RᵀR − I|` plus the distance of `det R` from 1.
    pub fn orthogonality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max() + (self.rotation.determinant() - 1.0).abs()
    }

    /// Least-squares rotation and translation taking `src` onto `dst`.
    pub fn kabsch(src: &[Point3<f64>], dst: &[Point3<f64>]) -> Result<Self> {
        if src.len() != dst.len() || src.is_empty() {
            return Err(VcsError::Cardinality { needed: src.len().max(1), got: dst.len() });
        }
        let n = src.len() as f64;
        let cs = src.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
        let cd = dst.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
        let mut h = Matrix3::zeros();
        for (s, d) in src.iter().zip(dst) {
            h += (s.coords - cs) * (d.coords - cd).transpose();
        }
        let svd = h
            .try_svd(true, true, f64::EPSILON, 0)
            .ok_or_else(|| VcsError::DegenerateGeometry("rotation fit did not converge".into()))?;
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let v = vt.transpose();
        let d = (v * u.transpose()).determinant().signum();
        let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
        Ok(Self { rotation, translation: cd - rotation * cs })
    }
}

/// Wall points `x(τ_i, θ_j)` with `τ_i = i/(n_tau − 1)` and `θ_j = 2πj/n_theta`, row-major.
pub fn correspondence_points(model: &VesselModel, n_tau: usize, n_theta: usize) -> Result<Vec<Point3<f64>>> {
    if n_tau < 2 || n_theta < 3 {
        return Err(VcsError::Parameter(format!("correspondence grid needs n_tau >= 2 and n_theta >= 3, got {n_tau} x {n_theta}")));
    }
    (0..n_tau * n_theta)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n_theta, k % n_theta);
            model.surface_point(i as f64 / (n_tau - 1) as f64, TAU * j as f64 / n_theta as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoregisterOptions {
    pub n_tau: usize,
    pub n_theta: usize,
    pub max_iter: usize,
    /// Stop once the RMS movement of the mean shape falls below this (mm).
    pub tol: f64,
}

impl Default for CoregisterOptions {
    fn default() -> Self {
        Self { n_tau: 64, n_theta: 32, max_iter: 100, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct Coregistration {
    /// Maps each input model into the common frame.
    pub transforms: Vec<RigidTransform>,
    pub models: Vec<VesselModel>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared distances to the mean after each alignment pass.
    pub objective: Vec<f64>,
}

fn sq_dist(a: &[Point3<f64>], b: &[Point3<f64>]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum()
}

fn mean_shape(shapes: &[Vec<Point3<f64>>]) -> Vec<Point3<f64>> {
    let m = shapes.len() as f64;
    (0..shapes[0].len())
        .map(|i| Point3::from(shapes.iter().fold(Vector3::zeros(), |a, s| a + s[i].coords) / m))
        .collect()
}

/// Generalized Procrustes alignment without scaling. The mean is kept in the
/// frame of the first model.
pub fn coregister(models: &[VesselModel], opts: &CoregisterOptions) -> Result<Coregistration> {
    if models.len() < 2 {
        return Err(VcsError::Cardinality { needed: 2, got: models.len() });
    }
    check_dims(models)?;
    let shapes = models
        .iter()
        .map(|m| correspondence_points(m, opts.n_tau, opts.n_theta))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = shapes[0].clone();
    let mut transforms = vec![RigidTransform::identity(); models.len()];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        transforms = shapes.iter().map(|s| RigidTransform::kabsch(s, &mean)).collect::<Result<_>>()?;
        let aligned: Vec<Vec<Point3<f64>>> =
            shapes.iter().zip(&transforms).map(|(s, t)| s.iter().map(|p| t.apply(p)).collect()).collect();
        objective.push(aligned.iter().map(|a| sq_dist(a, &mean)).sum());
        let new_mean = mean_shape(&aligned);
        let gauge = RigidTransform::kabsch(&new_mean, &shapes[0])?;
        let new_mean: Vec<_> = new_mean.iter().map(|p| gauge.apply(p)).collect();
        let movement = (sq_dist(&new_mean, &mean) / mean.len() as f64).sqrt();
        mean = new_mean;
        if movement < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "coregistration stopped after {iterations} iterations without reaching tol {}; objective history {:?}",
            opts.tol,
            objective
        );
    }
    let aligned = models
        .iter()
        .zip(&transforms)
        .map(|(m, t)| m.transformed(&t.rotation, &t.translation))
        .collect::<Result<Vec<_>>>()?;
    Ok(Coregistration { transforms, models: aligned, iterations, converged, objective })
}

fn check_dims(models: &[VesselModel]) -> Result<ModelDims> {
    let dims = models[0].dims();
    if let Some(m) = models.iter().find(|m| m.dims() != dims) {
        return Err(VcsError::Layout(format!("model dims {:?} differ from {:?}", m.dims(), dims)));
    }
    Ok(dims)
}

/// Principal components of a set of equal-length vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Orthonormal directions, by decreasing variance.
    pub modes: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    pub n_samples: usize,
}

impl Pca {
    /// SVD of the centered data. Directions whose singular value is below
    /// `1e-9` of the largest are dropped.
    pub fn fit(data: &[Vec<f64>]) -> Result<Self> {
        let m = data.len();
        if m < 2 {
            return Err(VcsError::Cardinality { needed: 2, got: m });
        }
        let n = data[0].len();
        if let Some(v) = data.iter().find(|v| v.len() != n) {
            return Err(VcsError::Layout(format!("vector of length {} among vectors of length {n}", v.len())));
        }
        let mut mean = vec![0.0; n];
        for v in data {
            for (a, b) in mean.iter_mut().zip(v) {
                *a += b;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        // columns are centered samples
        let x = DMatrix::from_fn(n, m, |i, k| data[k][i] - mean[i]);
        let svd = x.svd(true, false);
        let u = svd.u.unwrap();
        let s = svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        let smax = order.first().map_or(0.0, |&i| s[i]);
        let mut modes = Vec::new();
        let mut variances = Vec::new();
        for &i in order.iter().take(m - 1) {
            if !(s[i] > 1e-9 * smax) {
                break;
            }
            let mut col: Vec<f64> = u.column(i).iter().copied().collect();
            let big = col.iter().enumerate().fold((0, 0.0f64), |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc }).0;
            if col[big] < 0.0 {
                col.iter_mut().for_each(|v| *v = -*v);
            }
            modes.push(col);
            variances.push(s[i] * s[i] / (m - 1) as f64);
        }
        Ok(Self { mean, modes, variances, n_samples: m })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.variances.iter().sum()
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(VcsError::Layout(format!("vector of length {} for a model of length {}", v.len(), self.dim())));
        }
        Ok(self.modes.iter().map(|u| u.iter().zip(v).zip(&self.mean).map(|((a, b), c)| a * (b - c)).sum()).collect())
    }

    /// `μ + Σ α_i u_i`.
    pub fn reconstruct(&self, alphas: &[f64]) -> Result<Vec<f64>> {
        if alphas.len() > self.modes.len() {
            return Err(VcsError::Parameter(format!("{} coefficients for {} modes", alphas.len(), self.modes.len())));
        }
        let mut out = self.mean.clone();
        for (a, u) in alphas.iter().zip(&self.modes) {
            for (o, x) in out.iter_mut().zip(u) {
                *o += a * x;
            }
        }
        Ok(out)
    }
}

/// Shape model over feature vectors, plus the shared initial normal used to
/// rebuild models from synthesized vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortModel {
    pub dims: ModelDims,
    pub pca: Pca,
    pub v1_0: Vector3<f64>,
}

impl CohortModel {
    pub fn mean(&self) -> FeatureVector {
        FeatureVector { values: self.pca.mean.clone(), dims: self.dims }
    }

    pub fn n_modes(&self) -> usize {
        self.pca.modes.len()
    }

    pub fn std_dev(&self, i: usize) -> f64 {
        self.pca.variances[i].sqrt()
    }

    pub fn project(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        if fv.dims != self.dims {
            return Err(VcsError::Layout(format!("dims {:?} differ from the cohort's {:?}", fv.dims, self.dims)));
        }
        self.pca.project(&fv.values)
    }
}

/// PCA over feature vectors. `v1_0` becomes the cohort's initial normal.
pub fn shape_pca(vectors: &[FeatureVector], v1_0: Vector3<f64>) -> Result<CohortModel> {
    let dims = vectors.first().ok_or(VcsError::Cardinality { needed: 2, got: 0 })?.dims;
    if let Some(v) = vectors.iter().find(|v| v.dims != dims) {
        return Err(VcsError::Layout(format!("dims {:?} differ from {:?}", v.dims, dims)));
    }
    let data: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    Ok(CohortModel { dims, pca: Pca::fit(&data)?, v1_0 })
}

/// PCA over models; the cohort normal is the normalized mean of the models' `v1_0`.
pub fn shape_pca_models(models: &[VesselModel]) -> Result<CohortModel> {
    if models.len() < 2 {
        return Err(VcsError::Cardinality { needed: 2, got: models.len() });
    }
    check_dims(models)?;
    let sum = models.iter().fold(Vector3::zeros(), |a, m| a + m.v1_0());
    if !(sum.norm() > 1e-9) {
        return Err(VcsError::DegenerateFrame("initial normals of the cohort cancel out".into()));
    }
    let vectors: Vec<_> = models.iter().map(|m| m.to_feature_vector()).collect();
    shape_pca(&vectors, sum.normalize())
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub model: VesselModel,
    /// Set when the wall radius is not positive somewhere on the probe grid.
    pub warning: Option<String>,
}

/// Model for `μ + Σ α_i u_i`.
pub fn synthesize(cohort: &CohortModel, alphas: &[f64]) -> Result<Synthesized> {
    let values = cohort.pca.reconstruct(alphas)?;
    let fv = FeatureVector { values, dims: cohort.dims };
    let model = VesselModel::from_feature_vector(&fv, &cohort.v1_0, ModelMetadata::named("synthesized"))?;
    let (radius, tau, theta) = model.min_radius();
    let warning = (!(radius > 0.0)).then(|| {
        let msg = format!(
            "synthesized wall radius {radius} at tau = {tau}, theta = {theta} on the {}x{} probe grid: shape leaves the valid manifold",
            PROBE_GRID.0, PROBE_GRID.1
        );
        log::warn!("{msg}");
        msg
    });
    Ok(Synthesized { model, warning })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDecomposition {
    pub mode: usize,
    pub scale: f64,
    pub tau: Vec<f64>,
    pub theta: Vec<f64>,
    /// `‖c_mean(τ) − c_def(τ)‖` per `τ`.
    pub displacement: Vec<f64>,
    /// `ρ_def − ρ_mean`, `τ`-major over `tau × theta`.
    pub radius_difference: Vec<f64>,
}

/// Splits mode `i` scaled to `scale` standard deviations into its centerline
/// displacement and wall radius change.
pub fn mode_decomposition(
    cohort: &CohortModel,
    mode: usize,
    scale: f64,
    n_tau: usize,
    n_theta: usize,
) -> Result<ModeDecomposition> {
    if mode >= cohort.n_modes() {
        return Err(VcsError::Parameter(format!("mode {mode} out of range: cohort has {} modes", cohort.n_modes())));
    }
    if n_tau < 2 || n_theta < 1 {
        return Err(VcsError::Parameter("decomposition grid needs n_tau >= 2 and n_theta >= 1".into()));
    }
    let mut alphas = vec![0.0; mode + 1];
    alphas[mode] = scale * cohort.std_dev(mode);
    let dims = cohort.dims;
    let split = |v: &[f64]| -> Result<(SplineCurve3, BivariateSpline)> {
        let nc = dims.centerline_coefficients();
        let pts = v[..3 * nc].chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        // radius differences may be negative, so skip model validation here
        Ok((SplineCurve3::new(dims.l, pts)?, BivariateSpline::new(dims.k, dims.r, v[3 * nc..].to_vec())?))
    };
    let (c0, w0) = split(&cohort.pca.mean)?;
    let (c1, w1) = split(&cohort.pca.reconstruct(&alphas)?)?;
    let tau: Vec<f64> = (0..n_tau).map(|i| i as f64 / (n_tau - 1) as f64).collect();
    let theta: Vec<f64> = (0..n_theta).map(|j| TAU * j as f64 / n_theta as f64).collect();
    let displacement = tau.iter().map(|&t| Ok((c0.point(t)? - c1.point(t)?).norm())).collect::<Result<_>>()?;
    let mut radius_difference = Vec::with_capacity(n_tau * n_theta);
    for &t in &tau {
        for &h in &theta {
            radius_difference.push(w1.eval(t, h)? - w0.eval(t, h)?);
        }
    }
    Ok(ModeDecomposition { mode, scale, tau, theta, displacement, radius_difference })
}
