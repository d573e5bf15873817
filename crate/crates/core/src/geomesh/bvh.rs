use super::{Aabb, GeomError, Point, TriangleMesh, Vec3, GEOM_EPS};

const MAX_LEAF: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// `start..start + count` indexes the permuted triangle array.
    Leaf { start: usize, count: usize },
    Internal { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

/// Nearest ray/triangle intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    /// Index into the source mesh's triangle list.
    pub triangle: usize,
    /// Weights of the triangle's three vertices.
    pub barycentric: [f64; 3],
}

/// Binary BVH over a triangle mesh, median split on the longest centroid axis,
/// at most four triangles per leaf. Immutable once built and safe to query
/// from many threads.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<u32>,
    tris: Vec<[Point; 3]>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Result<Bvh, GeomError> {
        if mesh.is_empty() {
            return Err(GeomError::EmptyMesh);
        }
        let n = mesh.triangle_count();
        let source: Vec<[Point; 3]> = mesh.triangle_points().collect();
        let centroids: Vec<Point> = source
            .iter()
            .map(|t| Point::from((t[0].coords + t[1].coords + t[2].coords) / 3.0))
            .collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / MAX_LEAF + 1);
        build_node(&source, &centroids, &mut order, 0, &mut nodes);
        let tris = order.iter().map(|&i| source[i as usize]).collect();
        Ok(Bvh { nodes, order, tris })
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Permuted position -> source triangle index.
    pub fn triangle_order(&self) -> &[u32] {
        &self.order
    }

    /// Triangle at a permuted position.
    pub fn permuted_triangle(&self, pos: usize) -> &[Point; 3] {
        &self.tris[pos]
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Nearest hit with `t` in `[0, t_max]`.
    pub fn ray_cast(&self, origin: &Point, direction: &Vec3, t_max: f64) -> Option<RayHit> {
        let inv_dir = direction.map(|c| 1.0 / c);
        let mut best: Option<(f64, usize, f64, f64)> = None;
        let mut limit = t_max;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        self.nodes[0].bounds.ray_entry(origin, &inv_dir, limit)?;
        stack.push(0);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for pos in start..start + count {
                        if let Some((t, u, v)) = intersect_triangle(origin, direction, &self.tris[pos], limit) {
                            // equal-t ties go to the lower source index so the
                            // answer does not depend on tree layout
                            let better = match best {
                                None => true,
                                Some((bt, bpos, _, _)) => {
                                    t < bt || (t == bt && self.order[pos] < self.order[bpos])
                                }
                            };
                            if better {
                                best = Some((t, pos, u, v));
                                limit = t;
                            }
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    let el = self.nodes[left].bounds.ray_entry(origin, &inv_dir, limit);
                    let er = self.nodes[right].bounds.ray_entry(origin, &inv_dir, limit);
                    match (el, er) {
                        (Some(a), Some(b)) => {
                            // nearer child popped first
                            if a <= b {
                                stack.push(right);
                                stack.push(left);
                            } else {
                                stack.push(left);
                                stack.push(right);
                            }
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, pos, u, v)| RayHit {
            t,
            triangle: self.order[pos] as usize,
            barycentric: [(1.0 - u - v).max(0.0), u, v],
        })
    }
}

fn build_node(
    source: &[[Point; 3]],
    centroids: &[Point],
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<BvhNode>,
) -> usize {
    let bounds = Aabb::from_points(order.iter().flat_map(|&i| source[i as usize].iter()));
    let idx = nodes.len();
    nodes.push(BvhNode {
        bounds,
        kind: NodeKind::Leaf {
            start: offset,
            count: order.len(),
        },
    });
    if order.len() <= MAX_LEAF {
        return idx;
    }
    let cbounds = Aabb::from_points(order.iter().map(|&i| &centroids[i as usize]));
    let axis = cbounds.longest_axis();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(source, centroids, lo, offset, nodes);
    let right = build_node(source, centroids, hi, offset + mid, nodes);
    nodes[idx].kind = NodeKind::Internal { left, right };
    idx
}

/// Möller–Trumbore with closed edges. Returns `(t, u, v)` where `u`, `v` weight
/// the second and third vertices. Rays nearly parallel to the plane
/// (`|det| < GEOM_EPS`) miss.
pub fn intersect_triangle(origin: &Point, dir: &Vec3, tri: &[Point; 3], t_max: f64) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < GEOM_EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    if t < 0.0 || t > t_max {
        return None;
    }
    Some((t, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle_at(z: f64) -> TriangleMesh {
        TriangleMesh::new(
            "t",
            vec![Point::new(-1.0, -1.0, z), Point::new(2.0, -1.0, z), Point::new(-1.0, 2.0, z)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_is_one_leaf() {
        let m = unit_triangle_at(1.0);
        let bvh = Bvh::build(&m).unwrap();
        assert_eq!(bvh.nodes().len(), 1);
        assert_eq!(bvh.nodes()[0].kind, NodeKind::Leaf { start: 0, count: 1 });
        assert_eq!(bvh.bounds(), m.bounds());
    }

    #[test]
    fn empty_mesh_rejected() {
        assert_eq!(Bvh::build(&TriangleMesh::empty("e")).unwrap_err(), GeomError::EmptyMesh);
    }

    #[test]
    fn analytic_hit_distance() {
        let bvh = Bvh::build(&unit_triangle_at(1.0)).unwrap();
        let hit = bvh
            .ray_cast(&Point::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 0.0, 1.0), 10.0)
            .unwrap();
        assert_eq!(hit.t, 2.0);
        assert_eq!(hit.triangle, 0);
        let s: f64 = hit.barycentric.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(bvh
            .ray_cast(&Point::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 0.0, -1.0), 10.0)
            .is_none());
        assert!(bvh
            .ray_cast(&Point::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 0.0, 1.0), 1.5)
            .is_none());
    }
}
