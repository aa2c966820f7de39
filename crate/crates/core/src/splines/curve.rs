use nalgebra::{Point3, Vector3};

use super::basis::span_basis;
use super::knots::KnotVector;
use super::lsq::GivensLsq;
use crate::error::{Result, VcsError};

/// Cubic B-spline curve in R^3 on a clamped uniform knot vector over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCurve3 {
    knots: KnotVector,
    coefficients: Vec<Point3<f64>>,
}

impl SplineCurve3 {
    /// Builds a curve with `count` uniform knots from its control points.
    pub fn new(count: usize, coefficients: Vec<Point3<f64>>) -> Result<Self> {
        let knots = KnotVector::clamped_unit(count)?;
        if coefficients.len() != knots.n_coefficients() {
            return Err(VcsError::Layout(format!(
                "{} knots need {} control points, got {}",
                count,
                knots.n_coefficients(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.coords.iter().all(|v| v.is_finite())) {
            return Err(VcsError::Model("non-finite control point".into()));
        }
        Ok(Self { knots, coefficients })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn knot_count(&self) -> usize {
        self.knots.count()
    }

    pub fn coefficients(&self) -> &[Point3<f64>] {
        &self.coefficients
    }

    /// Same knots, new control points.
    pub fn with_coefficients(&self, coefficients: Vec<Point3<f64>>) -> Result<Self> {
        Self::new(self.knots.count(), coefficients)
    }

    /// Position (`order == 0`), velocity (1) or acceleration (2) at `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<Vector3<f64>> {
        if order > 2 {
            return Err(VcsError::Parameter(format!("derivative order {order} not supported")));
        }
        let t = self.knots.check(t)?;
        Ok(self.eval_unchecked(t)[order])
    }

    pub fn point(&self, t: f64) -> Result<Point3<f64>> {
        self.eval(t, 0).map(Point3::from)
    }

    /// Position and first two derivatives; `t` is clamped into `[0, 1]`.
    pub fn eval_all(&self, t: f64) -> [Vector3<f64>; 3] {
        self.eval_unchecked(t.clamp(0.0, 1.0))
    }

    fn eval_unchecked(&self, t: f64) -> [Vector3<f64>; 3] {
        let sb = span_basis(&self.knots, t);
        let mut out = [Vector3::zeros(); 3];
        for k in 0..4 {
            let c = self.coefficients[sb.first + k].coords;
            for (d, o) in out.iter_mut().enumerate() {
                *o += c * sb.values[d][k];
            }
        }
        out
    }

    /// Unit tangent at `t` (clamped into the domain).
    pub fn tangent(&self, t: f64) -> Vector3<f64> {
        self.eval_all(t)[1].normalize()
    }

    /// Curvature `|c' x c''| / |c'|^3` from the analytic derivatives.
    pub fn curvature(&self, t: f64) -> f64 {
        let [_, d1, d2] = self.eval_all(t);
        let speed = d1.norm();
        d1.cross(&d2).norm() / (speed * speed * speed)
    }

    /// Polyline length estimate from `samples` uniform parameter steps.
    pub fn length(&self, samples: usize) -> f64 {
        let samples = samples.max(1);
        let pts: Vec<_> = (0..=samples).map(|k| self.eval_all(k as f64 / samples as f64)[0]).collect();
        pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Applies `f` to every control point.
    pub fn map_coefficients(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Self {
        Self { knots: self.knots.clone(), coefficients: self.coefficients.iter().map(f).collect() }
    }
}

/// Normalized cumulative chord length of an ordered point sequence.
pub fn chord_length_params(points: &[Point3<f64>]) -> Result<Vec<f64>> {
    let mut acc = Vec::with_capacity(points.len());
    let mut total = 0.0;
    acc.push(0.0);
    for w in points.windows(2) {
        total += (w[1] - w[0]).norm();
        acc.push(total);
    }
    if !(total > 0.0) {
        return Err(VcsError::DegenerateGeometry("all samples coincide".into()));
    }
    for a in acc.iter_mut() {
        *a /= total;
    }
    if let Some(last) = acc.last_mut() {
        *last = 1.0;
    }
    Ok(acc)
}

/// Least-squares cubic fit with `count` uniform knots, parameters by chord length.
pub fn fit_curve(points: &[Point3<f64>], count: usize) -> Result<SplineCurve3> {
    let needed = count + 4;
    if points.len() < needed {
        return Err(VcsError::InsufficientSamples { needed, got: points.len() });
    }
    let params = chord_length_params(points)?;
    fit_curve_with_params(points, &params, count)
}

/// Least-squares cubic fit at caller-supplied parameters in `[0, 1]`.
pub fn fit_curve_with_params(points: &[Point3<f64>], params: &[f64], count: usize) -> Result<SplineCurve3> {
    let knots = KnotVector::clamped_unit(count)?;
    let n = knots.n_coefficients();
    if points.len() != params.len() {
        return Err(VcsError::Layout("one parameter per sample required".into()));
    }
    if points.len() < n {
        return Err(VcsError::InsufficientSamples { needed: n, got: points.len() });
    }
    let mut lsq = GivensLsq::new(n, 3);
    for (p, &t) in points.iter().zip(params) {
        let t = knots.check(t)?;
        let sb = span_basis(&knots, t);
        let row: [(usize, f64); 4] = std::array::from_fn(|k| (sb.first + k, sb.values[0][k]));
        lsq.add_row(&row, &[p.x, p.y, p.z]);
    }
    let sol = lsq.solve()?;
    let coefficients = (0..n).map(|i| Point3::new(sol[0][i], sol[1][i], sol[2][i])).collect();
    SplineCurve3::new(count, coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_control_point_count_is_a_layout_error() {
        let err = SplineCurve3::new(5, vec![Point3::origin(); 3]).unwrap_err();
        assert!(matches!(err, VcsError::Layout(_)));
    }

    #[test]
    fn too_few_samples() {
        let pts: Vec<_> = (0..8).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(fit_curve(&pts, 5), Err(VcsError::InsufficientSamples { needed: 9, got: 8 })));
    }

    #[test]
    fn coincident_samples_are_degenerate() {
        let pts = vec![Point3::new(1.0, 2.0, 3.0); 20];
        assert!(matches!(fit_curve(&pts, 5), Err(VcsError::DegenerateGeometry(_))));
    }

    #[test]
    fn clustered_parameters_are_rank_deficient() {
        // every sample in the first span leaves later coefficients unconstrained
        let pts: Vec<_> = (0..30).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let params: Vec<_> = (0..30).map(|i| 0.1 * i as f64 / 29.0).collect();
        assert!(matches!(fit_curve_with_params(&pts, &params, 6), Err(VcsError::DegenerateGeometry(_))));
    }

    #[test]
    fn order_out_of_range() {
        let c = SplineCurve3::new(2, (0..4).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect()).unwrap();
        assert!(c.eval(0.5, 3).is_err());
        assert!(c.eval(1.2, 0).is_err());
    }
}
