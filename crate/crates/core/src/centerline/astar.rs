//! Maximum-clearance paths through a distance volume.
//!
//! The lumen voxels form a 26-connected graph. An edge `u -> v` costs its
//! length times `2 / (d(u) + d(v))`, so the cheapest route stays as far from
//! the wall as it can.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Point3;

use super::voxel::DistanceVolume;
use crate::error::{Result, VcsError};

/// Ordered voxel-center path between the two seed points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub voxels: Vec<usize>,
    pub points: Vec<Point3<f64>>,
    /// Wall distance at each point (mm).
    pub clearance: Vec<f64>,
    /// Sum of edge costs along the path.
    pub cost: f64,
}

impl DiscretePath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_clearance(&self) -> f64 {
        self.clearance.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Voxels closer to the wall than this many voxel spacings are left out of the graph.
    pub clearance_floor: f64,
    /// Reject steps whose clearance exceeds the radius of curvature of the path
    /// so far, keeping the route inside the region where coordinates are unique.
    pub enforce_curvature_validity: bool,
    /// Use the distance heuristic; `false` gives plain Dijkstra.
    pub use_heuristic: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { clearance_floor: 1.0, enforce_curvature_validity: false, use_heuristic: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, ties broken by the smaller voxel index
        other.f.total_cmp(&self.f).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn neighbour_offsets() -> Vec<([isize; 3], f64)> {
    let mut out = Vec::with_capacity(26);
    for dz in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let len = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                out.push(([dx, dy, dz], len));
            }
        }
    }
    out
}

/// Edge cost between two voxels at `length` (mm) apart.
#[inline]
pub fn edge_cost(length: f64, du: f64, dv: f64) -> f64 {
    length * 2.0 / (du + dv)
}

impl DistanceVolume {
    fn in_graph(&self, idx: usize, floor: f64) -> bool {
        self.inside[idx] && self.distance[idx] >= floor
    }

    /// Nearest graph voxel to `p`.
    pub fn snap(&self, p: &Point3<f64>, options: &PathOptions) -> Option<usize> {
        let floor = options.clearance_floor * self.spacing;
        if let Some(v) = self.voxel_at(p) {
            if self.in_graph(v, floor) {
                return Some(v);
            }
        }
        (0..self.len())
            .filter(|&v| self.in_graph(v, floor))
            .min_by(|&a, &b| {
                (self.center(a) - p).norm_squared().total_cmp(&(self.center(b) - p).norm_squared()).then(a.cmp(&b))
            })
    }
}

/// Cheapest lumen path from the voxel nearest `start` to the voxel nearest `goal`.
pub fn extract_path(vol: &DistanceVolume, start: &Point3<f64>, goal: &Point3<f64>) -> Result<DiscretePath> {
    extract_path_with(vol, start, goal, &PathOptions::default())
}

pub fn extract_path_with(
    vol: &DistanceVolume,
    start: &Point3<f64>,
    goal: &Point3<f64>,
    options: &PathOptions,
) -> Result<DiscretePath> {
    let s = vol.snap(start, options).ok_or(VcsError::DisconnectedLumen)?;
    let g = vol.snap(goal, options).ok_or(VcsError::DisconnectedLumen)?;
    search(vol, s, g, options)
}

/// Runs the search between two voxel indices.
pub fn search(vol: &DistanceVolume, start: usize, goal: usize, options: &PathOptions) -> Result<DiscretePath> {
    let floor = options.clearance_floor * vol.spacing;
    if !vol.in_graph(start, floor) || !vol.in_graph(goal, floor) {
        return Err(VcsError::Precondition("seed voxel outside the lumen graph".into()));
    }
    let n = vol.len();
    let goal_p = vol.center(goal);
    let inv_dmax = 1.0 / vol.max_distance();
    let heuristic = |v: usize| {
        if options.use_heuristic {
            (vol.center(v) - goal_p).norm() * inv_dmax
        } else {
            0.0
        }
    };

    let offsets = neighbour_offsets();
    let mut g_cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g_cost[start] = 0.0;
    heap.push(Open { f: heuristic(start), node: start });

    while let Some(Open { node: u, .. }) = heap.pop() {
        if closed[u] {
            continue;
        }
        if u == goal {
            break;
        }
        closed[u] = true;
        let [ui, uj, uk] = vol.coords(u);
        let du = vol.distance[u];
        for &(off, len) in &offsets {
            let ni = ui as isize + off[0];
            let nj = uj as isize + off[1];
            let nk = uk as isize + off[2];
            if ni < 0
                || nj < 0
                || nk < 0
                || ni >= vol.dims[0] as isize
                || nj >= vol.dims[1] as isize
                || nk >= vol.dims[2] as isize
            {
                continue;
            }
            let v = vol.index(ni as usize, nj as usize, nk as usize);
            if closed[v] || !vol.in_graph(v, floor) {
                continue;
            }
            if options.enforce_curvature_validity && violates_curvature(vol, &parent, u, v) {
                continue;
            }
            let cand = g_cost[u] + edge_cost(len * vol.spacing, du, vol.distance[v]);
            if cand < g_cost[v] {
                g_cost[v] = cand;
                parent[v] = u;
                heap.push(Open { f: cand + heuristic(v), node: v });
            }
        }
    }
    if !g_cost[goal].is_finite() {
        return Err(VcsError::DisconnectedLumen);
    }

    let mut voxels = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = parent[cur];
        voxels.push(cur);
    }
    voxels.reverse();
    Ok(path_from_voxels(vol, voxels))
}

/// Builds a path record, recomputing the cost edge by edge in path order.
pub fn path_from_voxels(vol: &DistanceVolume, voxels: Vec<usize>) -> DiscretePath {
    let points: Vec<_> = voxels.iter().map(|&v| vol.center(v)).collect();
    let clearance: Vec<_> = voxels.iter().map(|&v| vol.distance[v]).collect();
    let cost = path_cost(vol, &voxels);
    DiscretePath { voxels, points, clearance, cost }
}

pub fn path_cost(vol: &DistanceVolume, voxels: &[usize]) -> f64 {
    voxels
        .windows(2)
        .map(|w| {
            let [a, b] = [vol.coords(w[0]), vol.coords(w[1])];
            let sq: usize = (0..3).map(|k| a[k].abs_diff(b[k]).pow(2)).sum();
            edge_cost((sq as f64).sqrt() * vol.spacing, vol.distance[w[0]], vol.distance[w[1]])
        })
        .sum()
}

/// Curvature of the circle through a point four steps back, `u` and `v`,
/// compared against the clearance at `v`.
fn violates_curvature(vol: &DistanceVolume, parent: &[usize], u: usize, v: usize) -> bool {
    let mut w = u;
    for _ in 0..4 {
        match parent[w] {
            usize::MAX => return false,
            p => w = p,
        }
    }
    let (a, b, c) = (vol.center(w), vol.center(u), vol.center(v));
    let ab = b - a;
    let bc = c - b;
    let ca = a - c;
    let twice_area = ab.cross(&bc).norm();
    if twice_area == 0.0 {
        return false;
    }
    let kappa = 2.0 * twice_area / (ab.norm() * bc.norm() * ca.norm());
    vol.distance[v] * kappa >= 1.0
}
