use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Result, VcsError};
use crate::mesh::{cap_boundaries, CappedMesh, TriMesh, TriangleBvh};

/// Voxel grid over the lumen holding, for every voxel inside the vessel, the
/// exact distance from its center to the wall surface.
///
/// Voxel `(i, j, k)` is centered at `origin + spacing * (i, j, k)`.
#[derive(Debug, Clone)]
pub struct DistanceVolume {
    pub origin: Point3<f64>,
    pub spacing: f64,
    pub dims: [usize; 3],
    pub inside: Vec<bool>,
    pub distance: Vec<f64>,
}

impl DistanceVolume {
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    #[inline]
    pub fn center(&self, idx: usize) -> Point3<f64> {
        let [i, j, k] = self.coords(idx);
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn max_distance(&self) -> f64 {
        self.distance.iter().copied().fold(0.0, f64::max)
    }

    /// Voxel containing `p`, if it lies within the grid.
    pub fn voxel_at(&self, p: &Point3<f64>) -> Option<usize> {
        let rel = (p - self.origin) / self.spacing;
        let mut c = [0usize; 3];
        for a in 0..3 {
            let v = rel[a].round();
            if v < 0.0 || v >= self.dims[a] as f64 {
                return None;
            }
            c[a] = v as usize;
        }
        Some(self.index(c[0], c[1], c[2]))
    }
}

/// Voxelizes a vessel surface at `spacing` (mm).
///
/// Open boundary loops are closed with fan caps first; the caps bound the
/// lumen for the inside test but are not wall, so distances ignore them.
pub fn voxelize(mesh: &TriMesh, spacing: f64) -> Result<DistanceVolume> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(VcsError::Parameter(format!("voxel spacing must be positive, got {spacing}")));
    }
    let capped = cap_boundaries(mesh)?;
    voxelize_capped(&capped, spacing)
}

pub fn voxelize_capped(capped: &CappedMesh, spacing: f64) -> Result<DistanceVolume> {
    let mesh = &capped.mesh;
    let (lo, hi) = mesh.bounding_box().ok_or_else(|| VcsError::Input("empty mesh".into()))?;
    let origin = lo - Vector3::repeat(spacing);
    let mut dims = [0usize; 3];
    for a in 0..3 {
        dims[a] = ((hi[a] - lo[a]) / spacing).ceil() as usize + 3;
    }
    let total = dims.iter().product::<usize>();
    if total > 400_000_000 {
        return Err(VcsError::Parameter(format!("voxel grid {dims:?} too large for spacing {spacing}")));
    }

    let inside = inside_by_ray_parity(mesh, origin, spacing, dims);
    let bvh = TriangleBvh::build(mesh, 0..capped.wall_faces);
    let distance: Vec<f64> = inside
        .par_iter()
        .enumerate()
        .map(|(idx, &ins)| {
            if !ins {
                return 0.0;
            }
            let i = idx % dims[0];
            let j = (idx / dims[0]) % dims[1];
            let k = idx / (dims[0] * dims[1]);
            let p = origin + Vector3::new(i as f64, j as f64, k as f64) * spacing;
            bvh.distance(&p)
        })
        .collect();
    let mut vol = DistanceVolume { origin, spacing, dims, inside, distance };
    // a center lying exactly on the wall has no clearance; treat it as outside
    for idx in 0..vol.len() {
        if vol.inside[idx] && !(vol.distance[idx] > 0.0) {
            vol.inside[idx] = false;
            vol.distance[idx] = 0.0;
        }
    }
    Ok(vol)
}

/// Inside test by counting crossings of a +z ray per voxel column. Columns are
/// nudged off the lattice by an irrational offset so rays miss mesh edges.
fn inside_by_ray_parity(mesh: &TriMesh, origin: Point3<f64>, spacing: f64, dims: [usize; 3]) -> Vec<bool> {
    let nudge = [spacing * 1e-7 * std::f64::consts::SQRT_2, spacing * 1e-7 * 3f64.sqrt()];
    let mut hits: Vec<Vec<f64>> = vec![Vec::new(); dims[0] * dims[1]];
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        if det.abs() < 1e-300 {
            continue;
        }
        let xmin = a.x.min(b.x).min(c.x);
        let xmax = a.x.max(b.x).max(c.x);
        let ymin = a.y.min(b.y).min(c.y);
        let ymax = a.y.max(b.y).max(c.y);
        let i0 = (((xmin - origin.x) / spacing).floor().max(0.0)) as usize;
        let i1 = ((((xmax - origin.x) / spacing).ceil()) as usize).min(dims[0] - 1);
        let j0 = (((ymin - origin.y) / spacing).floor().max(0.0)) as usize;
        let j1 = ((((ymax - origin.y) / spacing).ceil()) as usize).min(dims[1] - 1);
        for j in j0..=j1 {
            let y = origin.y + j as f64 * spacing + nudge[1];
            for i in i0..=i1 {
                let x = origin.x + i as f64 * spacing + nudge[0];
                let l1 = ((b.x - x) * (c.y - y) - (c.x - x) * (b.y - y)) / det;
                let l2 = ((c.x - x) * (a.y - y) - (a.x - x) * (c.y - y)) / det;
                let l3 = 1.0 - l1 - l2;
                if l1 >= 0.0 && l2 >= 0.0 && l3 >= 0.0 {
                    hits[i + dims[0] * j].push(l1 * a.z + l2 * b.z + l3 * c.z);
                }
            }
        }
    }

    let plane = dims[0] * dims[1];
    let mut inside = vec![false; plane * dims[2]];
    let columns: Vec<Vec<bool>> = hits
        .into_par_iter()
        .map(|mut zs| {
            zs.sort_by(f64::total_cmp);
            let mut col = vec![false; dims[2]];
            let mut crossed = 0;
            for (k, cell) in col.iter_mut().enumerate() {
                let z = origin.z + k as f64 * spacing;
                while crossed < zs.len() && zs[crossed] < z {
                    crossed += 1;
                }
                *cell = crossed % 2 == 1;
            }
            col
        })
        .collect();
    for (c, col) in columns.into_iter().enumerate() {
        for (k, v) in col.into_iter().enumerate() {
            inside[c + plane * k] = v;
        }
    }
    inside
}
