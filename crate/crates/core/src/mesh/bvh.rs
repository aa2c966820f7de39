use nalgebra::{Point3, Vector3};

use super::TriMesh;

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Point3<f64>,
    hi: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Self { lo: Point3::from(Vector3::repeat(f64::INFINITY)), hi: Point3::from(Vector3::repeat(f64::NEG_INFINITY)) }
    }

    fn grow(&mut self, p: &Point3<f64>) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn merge(&self, o: &Aabb) -> Aabb {
        Aabb { lo: self.lo.inf(&o.lo), hi: self.hi.sup(&o.hi) }
    }

    fn dist2(&self, p: &Point3<f64>) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.lo[k] {
                self.lo[k] - p[k]
            } else if p[k] > self.hi[k] {
                p[k] - self.hi[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, len: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Bounding-volume hierarchy over a subset of a mesh's triangles, for exact
/// point-to-surface distance queries.
#[derive(Debug, Clone)]
pub struct TriangleBvh {
    triangles: Vec<[Point3<f64>; 3]>,
    face_ids: Vec<usize>,
    nodes: Vec<Node>,
}

const LEAF_SIZE: usize = 4;

impl TriangleBvh {
    /// Builds over the faces selected by `faces` (indices into `mesh.faces`).
    pub fn build(mesh: &TriMesh, faces: impl IntoIterator<Item = usize>) -> Self {
        let mut face_ids: Vec<usize> = faces.into_iter().collect();
        let centers: Vec<Point3<f64>> = (0..mesh.faces.len())
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                Point3::from((a.coords + b.coords + c.coords) / 3.0)
            })
            .collect();
        let mut nodes = Vec::new();
        if !face_ids.is_empty() {
            let n = face_ids.len();
            build_node(mesh, &centers, &mut face_ids, 0, n, &mut nodes);
        }
        let triangles = face_ids.iter().map(|&f| mesh.triangle(f)).collect();
        Self { triangles, face_ids, nodes }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Nearest surface point to `p`: `(distance, face index, point)`.
    pub fn closest(&self, p: &Point3<f64>) -> Option<(f64, usize, Point3<f64>)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX, *p);
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if node.bounds().dist2(p) >= best.0 {
                continue;
            }
            match node {
                Node::Leaf { start, len, .. } => {
                    for k in *start..start + len {
                        let [a, b, c] = &self.triangles[k];
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d2 = (q - p).norm_squared();
                        if d2 < best.0 {
                            best = (d2, self.face_ids[k], q);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().dist2(p);
                    let dr = self.nodes[*right].bounds().dist2(p);
                    // visit the nearer child first
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        Some((best.0.sqrt(), best.1, best.2))
    }

    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        self.closest(p).map_or(f64::INFINITY, |c| c.0)
    }
}

fn build_node(
    mesh: &TriMesh,
    centers: &[Point3<f64>],
    ids: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let slice = &mut ids[start..end];
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &f in slice.iter() {
        for v in mesh.triangle(f) {
            bounds.grow(&v);
        }
        cbounds.grow(&centers[f]);
    }
    let idx = nodes.len();
    if slice.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, len: slice.len() });
        return idx;
    }
    let extent = cbounds.hi - cbounds.lo;
    let axis = extent.imax();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| centers[a][axis].total_cmp(&centers[b][axis]));
    nodes.push(Node::Leaf { bounds, start, len: 0 });
    let left = build_node(mesh, centers, ids, start, start + mid, nodes);
    let right = build_node(mesh, centers, ids, start + mid, end, nodes);
    let merged = nodes[left].bounds().merge(nodes[right].bounds());
    nodes[idx] = Node::Inner { bounds: merged, left, right };
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_regions() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let q = closest_point_on_triangle(&Point3::new(0.2, 0.2, 3.0), &a, &b, &c);
        assert!((q - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        let q = closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(q, a);
        let q = closest_point_on_triangle(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bvh_agrees_with_brute_force() {
        let mesh = crate::mesh::tests::open_cylinder(9, 17, 3.0, 12.0);
        let bvh = TriangleBvh::build(&mesh, 0..mesh.faces.len());
        for k in 0..200 {
            let p = Point3::new((k as f64 * 0.37).sin() * 5.0, (k as f64 * 0.91).cos() * 5.0, (k % 17) as f64 - 2.0);
            let brute = (0..mesh.faces.len())
                .map(|f| {
                    let [a, b, c] = mesh.triangle(f);
                    (closest_point_on_triangle(&p, &a, &b, &c) - p).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((bvh.distance(&p) - brute).abs() < 1e-12);
        }
    }
}
