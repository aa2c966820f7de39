//! Indexed triangle meshes: topology queries, end-capping, and file formats.

mod bvh;
mod io;

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::error::{Result, VcsError};

pub use bvh::{closest_point_on_triangle, TriangleBvh};
pub use io::{read_mesh, read_obj, read_stl, write_mesh, write_obj, write_stl, StlFormat};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(VcsError::Input(format!("face {f:?} references a missing vertex")));
        }
        if vertices.iter().any(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(VcsError::Input("non-finite vertex coordinate".into()));
        }
        Ok(Self { vertices, faces })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn bounding_box(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.vertices.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.vertices.iter().map(|v| v.coords).sum();
        Some(Point3::from(sum / self.vertices.len() as f64))
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Undirected edges with the number of faces using each.
    pub fn edge_counts(&self) -> HashMap<[u32; 2], usize> {
        let mut counts = HashMap::with_capacity(self.faces.len() * 3 / 2);
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *counts.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Edges used by exactly one face, as directed by that face.
    pub fn boundary_edges(&self) -> Vec<[u32; 2]> {
        let counts = self.edge_counts();
        let mut out: Vec<[u32; 2]> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| [f[k], f[(k + 1) % 3]]))
            .filter(|[a, b]| counts[&[(*a).min(*b), (*a).max(*b)]] == 1)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_watertight(&self) -> bool {
        !self.faces.is_empty() && self.edge_counts().values().all(|&c| c == 2)
    }

    /// V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        let used: std::collections::HashSet<u32> = self.faces.iter().flatten().copied().collect();
        used.len() as i64 - self.edge_counts().len() as i64 + self.faces.len() as i64
    }

    /// Closed boundary loops, each ordered along the boundary and starting at its
    /// smallest vertex index; loops are sorted by that index.
    pub fn boundary_loops(&self) -> Result<Vec<Vec<u32>>> {
        let edges = self.boundary_edges();
        let mut next: HashMap<u32, u32> = HashMap::with_capacity(edges.len());
        for &[a, b] in &edges {
            if next.insert(a, b).is_some() {
                return Err(VcsError::Topology { edges });
            }
        }
        let mut visited = std::collections::HashSet::new();
        let mut loops = Vec::new();
        let mut starts: Vec<u32> = next.keys().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if visited.contains(&start) {
                continue;
            }
            let mut lp = vec![start];
            visited.insert(start);
            let mut cur = start;
            loop {
                let Some(&nxt) = next.get(&cur) else {
                    return Err(VcsError::Topology { edges });
                };
                if nxt == start {
                    break;
                }
                if !visited.insert(nxt) {
                    return Err(VcsError::Topology { edges });
                }
                lp.push(nxt);
                cur = nxt;
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    /// Merges vertices closer than `tol` and drops faces that collapse.
    pub fn welded(&self, tol: f64) -> TriMesh {
        let (vertices, remap) = weld_points(&self.vertices, tol);
        let faces = self
            .faces
            .iter()
            .map(|f| f.map(|i| remap[i as usize]))
            .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
            .collect();
        TriMesh { vertices, faces }
    }

    pub fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> TriMesh {
        TriMesh { vertices: self.vertices.iter().map(f).collect(), faces: self.faces.clone() }
    }
}

/// Deduplicates points on a `tol` lattice, checking neighbouring cells so
/// that near-coincident points straddling a cell boundary still merge.
pub(crate) fn weld_points(points: &[Point3<f64>], tol: f64) -> (Vec<Point3<f64>>, Vec<u32>) {
    let key = |p: &Point3<f64>| p.coords.map(|c| (c / tol).floor() as i64);
    let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut unique: Vec<Point3<f64>> = Vec::new();
    let mut remap = Vec::with_capacity(points.len());
    for p in points {
        let k = key(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = cells.get(&[k.x + dx, k.y + dy, k.z + dz]) {
                        if let Some(&id) = ids.iter().find(|&&id| (unique[id as usize] - p).norm() <= tol) {
                            found = Some(id);
                            break 'search;
                        }
                    }
                }
            }
        }
        let id = found.unwrap_or_else(|| {
            let id = unique.len() as u32;
            unique.push(*p);
            cells.entry([k.x, k.y, k.z]).or_default().push(id);
            id
        });
        remap.push(id);
    }
    (unique, remap)
}

/// A mesh closed by fan caps over its boundary loops.
///
/// Faces `0..wall_faces` are the original surface; the remainder are caps.
#[derive(Debug, Clone)]
pub struct CappedMesh {
    pub mesh: TriMesh,
    pub wall_faces: usize,
    /// Centroid of each capped boundary loop, in loop order.
    pub cap_centers: Vec<Point3<f64>>,
}

impl CappedMesh {
    pub fn wall(&self) -> TriMesh {
        TriMesh { vertices: self.mesh.vertices.clone(), faces: self.mesh.faces[..self.wall_faces].to_vec() }
    }
}

/// Closes every boundary loop with a triangle fan around the loop centroid and
/// verifies the result is watertight.
pub fn cap_boundaries(mesh: &TriMesh) -> Result<CappedMesh> {
    if mesh.is_empty() {
        return Err(VcsError::Input("empty mesh".into()));
    }
    let loops = mesh.boundary_loops()?;
    let mut capped = mesh.clone();
    let mut centers = Vec::with_capacity(loops.len());
    for lp in &loops {
        let sum: Vector3<f64> = lp.iter().map(|&i| mesh.vertices[i as usize].coords).sum();
        let c = Point3::from(sum / lp.len() as f64);
        let ci = capped.vertices.len() as u32;
        capped.vertices.push(c);
        centers.push(c);
        // boundary edges run a -> b in their face, so the cap uses b -> a
        for k in 0..lp.len() {
            let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
            capped.faces.push([b, a, ci]);
        }
    }
    if !capped.is_watertight() {
        let counts = capped.edge_counts();
        let mut bad: Vec<[u32; 2]> = counts.into_iter().filter(|(_, c)| *c != 2).map(|(e, _)| e).collect();
        bad.sort_unstable();
        return Err(VcsError::Topology { edges: bad });
    }
    Ok(CappedMesh { mesh: capped, wall_faces: mesh.faces.len(), cap_centers: centers })
}
