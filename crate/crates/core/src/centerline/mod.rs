//! Centerline extraction and the parallel-transport frame field.

mod astar;
mod frames;
mod voxel;

pub use astar::{edge_cost, extract_path, extract_path_with, path_cost, path_from_voxels, search, DiscretePath, PathOptions};
pub use frames::{initial_frame, initial_frame_toward, parallel_transport, Frame, FrameField, DEFAULT_STEP};
pub use voxel::{voxelize, voxelize_capped, DistanceVolume};

use nalgebra::Point3;

use crate::error::{Result, VcsError};
use crate::mesh::{cap_boundaries, TriMesh};
use crate::splines::{fit_curve, SplineCurve3};

pub const DEFAULT_VOXEL: f64 = 0.5;

/// Fits a cubic spline with `knot_count` knots to a discrete path.
pub fn build_centerline(path: &DiscretePath, knot_count: usize) -> Result<SplineCurve3> {
    fit_curve(&path.points, knot_count)
}

/// Everything produced on the way from a wall mesh to its centerline.
#[derive(Debug, Clone)]
pub struct CenterlineResult {
    pub volume: DistanceVolume,
    pub path: DiscretePath,
    pub curve: SplineCurve3,
    pub seeds: [Point3<f64>; 2],
}

/// Default seeds: the centers of the two boundary loops of an open tube,
/// ordered so the first has the smaller lowest vertex index.
pub fn default_seeds(mesh: &TriMesh) -> Result<[Point3<f64>; 2]> {
    let capped = cap_boundaries(mesh)?;
    match capped.cap_centers.as_slice() {
        [a, b] => Ok([*a, *b]),
        other => Err(VcsError::Input(format!(
            "expected an open tube with two boundary loops, found {}; pass seed points explicitly",
            other.len()
        ))),
    }
}

/// Voxelizes, searches and fits in one call.
pub fn extract_centerline(
    mesh: &TriMesh,
    spacing: f64,
    seeds: Option<[Point3<f64>; 2]>,
    knot_count: usize,
) -> Result<CenterlineResult> {
    let seeds = match seeds {
        Some(s) => s,
        None => default_seeds(mesh)?,
    };
    let volume = voxelize(mesh, spacing)?;
    let path = extract_path(&volume, &seeds[0], &seeds[1])?;
    if path.len() < knot_count + 4 {
        return Err(VcsError::InsufficientSamples { needed: knot_count + 4, got: path.len() });
    }
    let curve = build_centerline(&path, knot_count)?;
    Ok(CenterlineResult { volume, path, curve, seeds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::open_cylinder;

    #[test]
    fn cylinder_axis_clearance() {
        let mesh = open_cylinder(41, 64, 10.0, 40.0);
        let vol = voxelize(&mesh, 0.5).unwrap();
        let axis = vol.voxel_at(&Point3::new(0.0, 0.0, 20.0)).unwrap();
        let d = vol.distance[axis];
        assert!((9.5..=10.0).contains(&d), "{d}");
        let outside = vol.voxel_at(&Point3::new(10.5, 0.0, 20.0)).unwrap();
        assert!(!vol.inside[outside]);
        assert_eq!(vol.distance[outside], 0.0);
    }

    #[test]
    fn cylinder_path_follows_axis() {
        let mesh = open_cylinder(21, 48, 5.0, 30.0);
        let res = extract_centerline(&mesh, 0.5, None, 9).unwrap();
        for p in &res.path.points {
            assert!(p.x.hypot(p.y) <= 0.5 + 1e-9, "{p}");
        }
        for i in 0..=50 {
            let q = res.curve.point(i as f64 / 50.0).unwrap();
            assert!(q.x.hypot(q.y) < 0.25);
        }
    }

    #[test]
    fn coincident_seeds_give_single_point() {
        let mesh = open_cylinder(11, 32, 4.0, 20.0);
        let vol = voxelize(&mesh, 0.5).unwrap();
        let p = Point3::new(0.0, 0.0, 10.0);
        let path = extract_path(&vol, &p, &p).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path.cost, 0.0);
    }

    #[test]
    fn astar_matches_dijkstra() {
        let mesh = open_cylinder(11, 32, 4.0, 12.0);
        let vol = voxelize(&mesh, 0.75).unwrap();
        let a = Point3::new(0.0, 0.0, 0.5);
        let b = Point3::new(0.0, 0.0, 11.5);
        let fast = extract_path(&vol, &a, &b).unwrap();
        let opts = PathOptions { use_heuristic: false, ..Default::default() };
        let slow = extract_path_with(&vol, &a, &b, &opts).unwrap();
        assert!((fast.cost - slow.cost).abs() <= 1e-12 * slow.cost);
    }
}
